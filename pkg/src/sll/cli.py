"""Command-line entry point.

Subcommands: ``solve`` (one flux), ``sweep`` (bisect onto the critical
flux), ``diagnose`` (weak-form diagnostics on field dumps), ``upstream``
(far-field state for a flux), and ``oracle`` (brute-force reference
values).  Exit codes: 0 success, 1 configuration or schema error, 2 sonic
blockage or infeasible flux, 3 solver non-convergence.

Artifacts: field dumps (whitespace tables) and JSON summaries in the
output directory (``--output-dir``, else $SLL_OUTPUT_DIR, else the
working directory).  All printed floats carry 17 significant digits so
runs diff cleanly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels, limits, oracles, thermo
from .config import load_config
from .errors import (ConfigError, ConvergenceError, DomainError,
                     GeometryError, LinearSolverError, SchemaError,
                     SllError, SonicExceeded, SolverStateError)
from .fields import dump_filename, read_dump, write_dump
from .geometry import validate_nozzle
from .solver import picard_solve
from .upstream import upstream_state

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SONIC = 2
EXIT_DIVERGED = 3


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _json_dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _output_dir(args) -> str:
    for candidate in (args.output_dir, os.environ.get("SLL_OUTPUT_DIR")):
        if candidate:
            os.makedirs(candidate, exist_ok=True)
            return candidate
    return os.getcwd()


def _prepare(args):
    cfg = load_config(args.config)
    report = validate_nozzle(cfg.nozzle, cfg.x1_min, cfg.x1_max,
                             tol_far=cfg.tol_far)
    if not report.passed:
        failing = [c.name for c in report.checks if not c.passed]
        raise ConfigError(f"nozzle validation failed: {', '.join(failing)}")
    grid = cfg.build_grid()
    return cfg, grid, report


def _truncation_flatness(sol) -> dict:
    """Measured streamwise variation of the state at both truncations.

    The infinite-nozzle asymptotics cannot be certified on a finite
    domain; the recorded numbers let reports show how flat the computed
    fields already are where the domain was cut.
    """
    drho_dx, _ = sol.grid.gradient(sol.flow.rho)
    dq_dx, _ = sol.grid.gradient(sol.flow.q)
    return {
        "inlet": max(float(np.max(np.abs(drho_dx[0, :]))),
                     float(np.max(np.abs(dq_dx[0, :])))),
        "outlet": max(float(np.max(np.abs(drho_dx[-1, :]))),
                      float(np.max(np.abs(dq_dx[-1, :])))),
    }


def cmd_solve(args) -> int:
    cfg, grid, _ = _prepare(args)
    out_dir = args.output_dir or cfg.output_dir or None
    args.output_dir = out_dir
    out_dir = _output_dir(args)
    sol = picard_solve(cfg.nozzle, cfg.upstream, cfg.gas, args.mass_flux,
                       grid, options=cfg.solver_options())
    summary = {
        "m": sol.mass_flux,
        "grid": [cfg.nx, cfg.ns],
        "iterations": sol.iterations,
        "converged": sol.converged,
        "finalResidual": sol.residual_history[-1],
        "maxMach": float(np.max(sol.flow.mach)),
        "conservationDefect": sol.conservation_defect,
        "labelClamps": sol.label_clamps,
        "cgIterations": sol.cg_iterations,
        "wallTime": sol.wall_time,
        "kernelBackend": _kernels.backend(),
        "admissibility": cfg.upstream.admissibility(grid.kind, cfg.gas.gamma),
        "outletCondition": "zero streamwise stream-function gradient at the "
                           "downstream truncation",
        "truncationFlatness": _truncation_flatness(sol),
    }
    if cfg.dump_fields:
        name = dump_filename(sol.mass_flux, cfg.nx, cfg.ns)
        write_dump(sol.flow, os.path.join(out_dir, name))
        summary["dump"] = name
    base = dump_filename(sol.mass_flux, cfg.nx, cfg.ns).rsplit(".", 1)[0]
    _json_dump(summary, os.path.join(out_dir, base + ".json"))
    print(f"converged m={_fmt(sol.mass_flux)} iterations={sol.iterations} "
          f"maxMach={_fmt(summary['maxMach'])} "
          f"conservationDefect={_fmt(sol.conservation_defect)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, grid, _ = _prepare(args)
    if cfg.m_start is None:
        raise ConfigError("sweep command needs a [sweep] table with m_start")
    out_dir = args.output_dir or cfg.output_dir or None
    args.output_dir = out_dir
    out_dir = _output_dir(args)
    dumps = {}

    def on_accept(m, sol):
        if cfg.dump_fields:
            name = dump_filename(m, cfg.nx, cfg.ns)
            write_dump(sol.flow, os.path.join(out_dir, name))
            dumps[m] = name

    report = limits.sweep_to_sonic(cfg.nozzle, cfg.upstream, cfg.gas, grid,
                                   m_start=cfg.m_start, mach_target=cfg.mach_target,
                                   m_tol=cfg.m_tol, solver_options=cfg.solver_options(),
                                   on_accept=on_accept)
    doc = report.as_dict()
    for entry in doc["entries"]:
        if entry["m"] in dumps:
            entry["dump"] = dumps[entry["m"]]
    doc["kernelBackend"] = _kernels.backend()
    _json_dump(doc, os.path.join(out_dir, "sweep_report.json"))
    lo, hi = report.m_hat_bracket
    print(f"critical-flux bracket [{_fmt(lo)}, {_fmt(hi)}] "
          f"width={_fmt(hi - lo)} accepted={len(report.accepted)}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    cfg = load_config(args.config)
    args.output_dir = args.output_dir or cfg.output_dir or None
    out_dir = _output_dir(args)
    kind = "axisymmetric" if cfg.nozzle.kind == "axisymmetric" else "planar"

    def one(path):
        field = read_dump(path, kind=kind)
        bundle = limits.diagnostics_bundle(field, cfg.gas)
        return path, field, bundle

    if args.jobs > 1 and len(args.dumps) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(one, args.dumps))
    else:
        results = [one(p) for p in args.dumps]

    doc = {"entries": []}
    for path, _, bundle in results:
        entry = {"dump": os.path.basename(path)}
        entry.update(bundle.as_dict())
        doc["entries"].append(entry)
    if len(results) > 1:
        doc["crossSequenceConcentration"] = limits.cross_sequence_concentration(
            [f for _, f, _ in results], cfg.gas)
    out_path = os.path.join(out_dir, "diagnostics.json")
    _json_dump(doc, out_path)
    worst_mass = max(e["weakResiduals"]["mass"] for e in doc["entries"])
    print(f"diagnosed {len(results)} dump(s); worst mass residual "
          f"{_fmt(worst_mass)}; wrote {out_path}")
    return EXIT_OK


def cmd_upstream(args) -> int:
    cfg, grid, _ = _prepare(args)
    out_dir = args.output_dir or cfg.output_dir or None
    args.output_dir = out_dir
    out_dir = _output_dir(args)
    state = upstream_state(args.mass_flux, cfg.upstream, cfg.gas,
                           axisymmetric=grid.is_axi,
                           panels=max(4 * cfg.ns, 256))
    doc = {
        "m": state.m,
        "axisymmetric": state.axisymmetric,
        "pMinus": state.p_minus,
        "rhoRange": [float(state.rho.min()), float(state.rho.max())],
        "speedRange": [float(state.u.min()), float(state.u.max())],
        "fluxMax": state.flux_max,
        "atCap": state.at_cap,
        "admissibility": cfg.upstream.admissibility(grid.kind, cfg.gas.gamma),
    }
    if not cfg.gas.is_full_euler:
        doc["rhoMinus"] = state.rho_minus_const
        doc["bMin"] = cfg.gas.law.b_min()
        if doc["bMin"] == -np.inf:
            doc["bMin"] = "-inf"
            doc["bMinUnbounded"] = True
    _json_dump(doc, os.path.join(out_dir, "upstream.json"))
    print(f"pMinus={_fmt(state.p_minus)} fluxMax={_fmt(state.flux_max)} "
          f"atCap={state.at_cap}")
    return EXIT_OK


def _oracle_params(tokens):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"oracle parameters are name=value, got {tok!r}")
        key, _, val = tok.partition("=")
        out[key] = val
    return out


def cmd_oracle(args) -> int:
    p = _oracle_params(args.params)

    def fnum(key, default=None):
        if key not in p:
            if default is None:
                raise ConfigError(f"oracle subtask {args.subtask!r} needs {key}=")
            return default
        return float(p[key])

    task = args.subtask
    if task == "j_max":
        B, S, g = fnum("B"), fnum("S"), fnum("gamma")
        qp, jm = oracles.scan_peak_flux(B, S, g)
        print(f"inputs B={_fmt(B)} S={_fmt(S)} gamma={_fmt(g)}")
        print(f"j_max={_fmt(jm)} q_peak={_fmt(qp)}")
    elif task == "speed_from_flux":
        j, B, S, g = fnum("j"), fnum("B"), fnum("S"), fnum("gamma")
        q = oracles.speed_from_flux(j, B, S, g)
        print(f"inputs j={_fmt(j)} B={_fmt(B)} S={_fmt(S)} gamma={_fmt(g)}")
        print(f"q={_fmt(q)}")
    elif task == "critical_state":
        law_kind = p.get("law", "gamma_law")
        B = fnum("B")
        if law_kind == "gamma_law":
            law = thermo.GammaLaw(fnum("kappa"), fnum("gamma"))
        elif law_kind == "isothermal":
            law = thermo.Isothermal(fnum("kappa"))
        else:
            raise ConfigError(f"unknown oracle law {law_kind!r}")
        rho, q, jm = oracles.critical_state_hom(law, B)
        print(f"inputs law={law_kind} B={_fmt(B)}")
        print(f"rho_cr={_fmt(rho)} q_cr={_fmt(q)} j_max={_fmt(jm)}")
    elif task == "upstream":
        m, B, S, g = fnum("m"), fnum("B"), fnum("S"), fnum("gamma")
        axi = p.get("axisymmetric", "0") in ("1", "true", "yes")
        pm, fm = oracles.upstream_pressure(m, lambda s: B, lambda s: S, g,
                                           axisymmetric=axi)
        print(f"inputs m={_fmt(m)} B={_fmt(B)} S={_fmt(S)} gamma={_fmt(g)} "
              f"axisymmetric={axi}")
        print(f"p_minus={_fmt(pm)} flux_max={_fmt(fm)}")
    elif task == "quasi1d_mhat":
        B, S, g = fnum("B"), fnum("S"), fnum("gamma")
        amp = fnum("amplitude")
        width = fnum("width", 1.0)
        center = fnum("center", 0.0)
        x_lo, x_hi = fnum("x1_min", -20.0), fnum("x1_max", 20.0)
        axi = p.get("axisymmetric", "0") in ("1", "true", "yes")

        def gap(x):
            return 1.0 - 0.5 * amp * (1.0 + np.tanh((x - center) / width))

        est = oracles.quasi1d_critical_flux(gap, x_lo, x_hi, B, S, g,
                                            axisymmetric=axi)
        print(f"inputs amplitude={_fmt(amp)} width={_fmt(width)} "
              f"B={_fmt(B)} S={_fmt(S)} gamma={_fmt(g)} axisymmetric={axi}")
        print(f"m_hat_quasi1d={_fmt(est)}")
    else:
        raise ConfigError(f"unknown oracle subtask {task!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sll",
        description="steady subsonic nozzle-flow solver and sonic-limit diagnostics")
    ap.add_argument("--output-dir", default=None,
                    help="artifact directory (default $SLL_OUTPUT_DIR or cwd)")
    ap.add_argument("--jobs", type=int, default=1,
                    help="concurrent workers for multi-dump diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one mass flux")
    s.add_argument("--config", required=True)
    s.add_argument("--mass-flux", type=float, required=True)
    s.set_defaults(fn=cmd_solve)

    s = sub.add_parser("sweep", help="bisect the mass flux onto the critical value")
    s.add_argument("--config", required=True)
    s.set_defaults(fn=cmd_sweep)

    s = sub.add_parser("diagnose", help="weak-form diagnostics on field dumps")
    s.add_argument("dumps", nargs="+")
    s.add_argument("--config", required=True)
    s.set_defaults(fn=cmd_diagnose)

    s = sub.add_parser("upstream", help="far-field state for a mass flux")
    s.add_argument("--config", required=True)
    s.add_argument("--mass-flux", type=float, required=True)
    s.set_defaults(fn=cmd_upstream)

    s = sub.add_parser("oracle", help="brute-force reference values")
    s.add_argument("subtask",
                   choices=["speed_from_flux", "j_max", "critical_state",
                            "upstream", "quasi1d_mhat"])
    s.add_argument("params", nargs="*")
    s.set_defaults(fn=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SonicExceeded as exc:
        extra = f" (largest subsonic flux {_fmt(exc.j_max)})" if exc.j_max else ""
        print(f"error: {exc}{extra}", file=sys.stderr)
        return EXIT_SONIC
    except (ConvergenceError, LinearSolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except SchemaError as exc:
        loc = ""
        if exc.line is not None:
            loc = f" at line {exc.line}" + \
                (f", column {exc.column}" if exc.column is not None else "")
        print(f"error: {exc}{loc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, GeometryError, DomainError, SolverStateError,
            SllError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
