"""Run-configuration files: TOML with nested tables, strictly validated.

Unknown keys are rejected so a typo cannot silently fall back to a
default; referenced files must exist at load time.  See README.md for the
full schema.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib as _toml  # Python >= 3.11
except ImportError:  # pragma: no cover
    import tomli as _toml

from . import geometry, thermo
from .errors import ConfigError
from .upstream import Profile, UpstreamData

_SCHEMA = {
    "gas": {"kind", "gamma", "law", "kappa", "table"},
    "nozzle": {"geometry", "kind", "amplitude", "center", "width", "wall_file"},
    "upstream": {"bernoulli", "entropy"},
    "upstream.bernoulli": {"kind", "value", "base", "coeff", "path"},
    "upstream.entropy": {"kind", "value", "base", "coeff", "path"},
    "solver": {"nx", "ns", "x1_min", "x1_max", "tol", "max_iter", "relax",
               "mach_cap", "cg_tol", "tol_far"},
    "sweep": {"m_start", "m_tol", "mach_target"},
    "output": {"directory", "dump_fields"},
}


@dataclass
class RunConfig:
    raw: dict
    base_dir: str

    # parsed blocks
    gas: thermo.GasModel = None
    nozzle: object = None
    upstream: UpstreamData = None
    nx: int = 64
    ns: int = 32
    x1_min: float = -20.0
    x1_max: float = 20.0
    tol: float = 1e-8
    max_iter: int = 200
    relax: float = 0.5
    mach_cap: float = 0.999
    cg_tol: float = 1e-10
    tol_far: float = 1e-6
    m_start: float = None
    m_tol: float = 1e-4
    mach_target: float = 0.99
    output_dir: str = None
    dump_fields: bool = True

    def build_grid(self) -> geometry.Grid:
        return geometry.build_grid(self.nozzle, self.nx, self.ns,
                                   self.x1_min, self.x1_max)

    def solver_options(self):
        from .solver import SolverOptions
        return SolverOptions(relax=self.relax, tol=self.tol,
                             max_iter=self.max_iter, mach_cap=self.mach_cap,
                             cg_tol=self.cg_tol)


def _check_keys(table: dict, where: str):
    allowed = _SCHEMA.get(where)
    if allowed is None:
        raise ConfigError(f"unknown configuration table [{where}]")
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{where}]")


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    return table[key]


def _resolve(base_dir: str, path: str) -> str:
    full = path if os.path.isabs(path) else os.path.join(base_dir, path)
    if not os.path.exists(full):
        raise ConfigError(f"referenced file does not exist: {path!r}")
    return full


def _load_two_columns(path: str):
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigError(f"expected a two-column table in {path!r}")
    return data[:, 0], data[:, 1]


def _parse_gas(table: dict) -> thermo.GasModel:
    _check_keys(table, "gas")
    kind = _need(table, "kind", "gas")
    if kind == "full_euler":
        gamma = float(_need(table, "gamma", "gas"))
        if not gamma > 1.0:
            raise ConfigError(f"gas.gamma must exceed 1, got {gamma}")
        return thermo.GasModel(kind="full_euler", gamma=gamma)
    if kind == "homentropic":
        law_kind = _need(table, "law", "gas")
        if law_kind == "gamma_law":
            law = thermo.GammaLaw(float(_need(table, "kappa", "gas")),
                                  float(_need(table, "gamma", "gas")))
            return thermo.GasModel(kind="homentropic", gamma=law.gamma, law=law)
        if law_kind == "isothermal":
            law = thermo.Isothermal(float(_need(table, "kappa", "gas")))
            return thermo.GasModel(kind="homentropic", gamma=2.0, law=law)
        raise ConfigError(f"unknown gas.law {law_kind!r}")
    raise ConfigError(f"unknown gas.kind {kind!r}")


def _parse_profile(table: dict, where: str) -> Profile:
    _check_keys(table, where)
    kind = _need(table, "kind", where)
    if kind == "constant":
        return Profile.constant(float(_need(table, "value", where)))
    if kind == "quadratic":
        return Profile.quadratic(float(_need(table, "base", where)),
                                 float(_need(table, "coeff", where)))
    if kind == "table":
        raise ConfigError("profile tables handled by caller")
    raise ConfigError(f"unknown profile kind {kind!r} in [{where}]")


def load_config(path: str) -> RunConfig:
    """Parse and validate a run configuration."""
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path!r}") from None
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"configuration syntax error: {exc}") from None

    base_dir = os.path.dirname(os.path.abspath(path))
    for section in raw:
        if section not in ("gas", "nozzle", "upstream", "solver", "sweep", "output"):
            raise ConfigError(f"unknown configuration table [{section}]")
    cfg = RunConfig(raw=raw, base_dir=base_dir)

    # gas
    gas_tbl = raw.get("gas")
    if gas_tbl is None:
        raise ConfigError("missing [gas] table")
    _check_keys(gas_tbl, "gas")
    if gas_tbl.get("kind") == "homentropic" and gas_tbl.get("law") == "tabulated":
        rho, p = _load_two_columns(_resolve(base_dir, _need(gas_tbl, "table", "gas")))
        law = thermo.TabulatedLaw(rho, p)
        cfg.gas = thermo.GasModel(kind="homentropic", gamma=2.0, law=law)
    else:
        cfg.gas = _parse_gas(gas_tbl)

    # nozzle
    noz_tbl = raw.get("nozzle")
    if noz_tbl is None:
        raise ConfigError("missing [nozzle] table")
    _check_keys(noz_tbl, "nozzle")
    geom = noz_tbl.get("geometry", "planar")
    if geom not in ("planar", "axisymmetric"):
        raise ConfigError(f"unknown nozzle.geometry {geom!r}")
    nkind = _need(noz_tbl, "kind", "nozzle")
    if nkind == "straight":
        cfg.nozzle = geometry.straight_pipe() if geom == "axisymmetric" \
            else geometry.straight_nozzle_2d()
    elif nkind == "tanh_contraction":
        amp = float(_need(noz_tbl, "amplitude", "nozzle"))
        center = float(noz_tbl.get("center", 0.0))
        width = float(noz_tbl.get("width", 1.0))
        cfg.nozzle = geometry.tanh_pipe(amp, center, width) if geom == "axisymmetric" \
            else geometry.tanh_nozzle_2d(amp, center, width)
    elif nkind == "table":
        x, f = _load_two_columns(_resolve(base_dir, _need(noz_tbl, "wall_file", "nozzle")))
        wall = geometry.TableWall(x, f)
        cfg.nozzle = geometry.NozzleAxi(f=wall) if geom == "axisymmetric" \
            else geometry.Nozzle2D(f1=geometry.StraightWall(0.0), f2=wall)
    else:
        raise ConfigError(f"unknown nozzle.kind {nkind!r}")

    # upstream
    up_tbl = raw.get("upstream")
    if up_tbl is None:
        raise ConfigError("missing [upstream] table")
    _check_keys(up_tbl, "upstream")
    b_tbl = _need(up_tbl, "bernoulli", "upstream")

    def profile_of(tbl, where):
        _check_keys(tbl, where)
        if tbl.get("kind") == "table":
            s, v = _load_two_columns(_resolve(base_dir, _need(tbl, "path", where)))
            return Profile.from_table(s, v)
        return _parse_profile(tbl, where)

    B = profile_of(b_tbl, "upstream.bernoulli")
    S = None
    if cfg.gas.is_full_euler:
        e_tbl = up_tbl.get("entropy")
        if e_tbl is None:
            raise ConfigError("missing [upstream.entropy] for the full_euler gas")
        S = profile_of(e_tbl, "upstream.entropy")
    elif "entropy" in up_tbl:
        raise ConfigError("[upstream.entropy] is meaningless for a homentropic gas")
    cfg.upstream = UpstreamData(B=B, S=S)

    # solver
    sol_tbl = raw.get("solver", {})
    _check_keys(sol_tbl, "solver")
    cfg.nx = int(sol_tbl.get("nx", cfg.nx))
    cfg.ns = int(sol_tbl.get("ns", cfg.ns))
    cfg.x1_min = float(sol_tbl.get("x1_min", cfg.x1_min))
    cfg.x1_max = float(sol_tbl.get("x1_max", cfg.x1_max))
    cfg.tol = float(sol_tbl.get("tol", cfg.tol))
    cfg.max_iter = int(sol_tbl.get("max_iter", cfg.max_iter))
    cfg.relax = float(sol_tbl.get("relax", cfg.relax))
    cfg.mach_cap = float(sol_tbl.get("mach_cap", cfg.mach_cap))
    cfg.cg_tol = float(sol_tbl.get("cg_tol", cfg.cg_tol))
    cfg.tol_far = float(sol_tbl.get("tol_far", cfg.tol_far))
    if cfg.nx < 8 or cfg.ns < 8:
        raise ConfigError("solver.nx and solver.ns must be at least 8")
    if cfg.ns % 2:
        raise ConfigError("solver.ns must be even")
    if not cfg.x1_max > cfg.x1_min:
        raise ConfigError("solver.x1_max must exceed solver.x1_min")
    if not 0.0 < cfg.relax <= 1.0:
        raise ConfigError("solver.relax must lie in (0, 1]")
    if not 0.0 < cfg.mach_cap < 1.0:
        raise ConfigError("solver.mach_cap must lie in (0, 1)")
    if cfg.tol <= 0.0 or cfg.cg_tol <= 0.0 or cfg.tol_far <= 0.0:
        raise ConfigError("tolerances must be positive")
    if cfg.max_iter < 1:
        raise ConfigError("solver.max_iter must be at least 1")

    # sweep
    sw_tbl = raw.get("sweep")
    if sw_tbl is not None:
        _check_keys(sw_tbl, "sweep")
        cfg.m_start = float(_need(sw_tbl, "m_start", "sweep"))
        cfg.m_tol = float(sw_tbl.get("m_tol", cfg.m_tol))
        cfg.mach_target = float(sw_tbl.get("mach_target", cfg.mach_target))
        if cfg.m_start <= 0.0 or cfg.m_tol <= 0.0:
            raise ConfigError("sweep.m_start and sweep.m_tol must be positive")
        if not 0.0 < cfg.mach_target < 1.0:
            raise ConfigError("sweep.mach_target must lie in (0, 1)")

    # output
    out_tbl = raw.get("output", {})
    _check_keys(out_tbl, "output")
    if "directory" in out_tbl:
        cfg.output_dir = str(out_tbl["directory"])
    cfg.dump_fields = bool(out_tbl.get("dump_fields", True))
    return cfg
