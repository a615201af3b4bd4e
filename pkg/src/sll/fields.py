"""Discrete flow fields, their reconstruction from a stream function,
field-dump files, and the measured conservation defect.

A flow field is a full nodal state (rho, velocity, p, derived q, M, B, S)
plus the stream function, streamline labels and a vorticity column, on the
structured grid of :mod:`sll.geometry`.  Dumps are plain whitespace tables
with one header line, every float printed with 17 significant digits so a
reload is bit-identical; the grid (including metric terms) reconstructs
from the two coordinate columns alone, which keeps all diagnostics
equally applicable to freshly computed and reloaded fields.

Mass conservation is structural for stream-function fields.  The measured
per-station flux used for the conservation check samples the reconstructed
mass-flux component on every other transverse node, where the centred
stencils telescope exactly back to wall values of psi: any inconsistency
between (rho, u) and psi, such as an externally perturbed density, shows
up at full size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError
from .geometry import Grid, dparam
from . import thermo

_PLANAR_HEADER = ("x1", "x2", "rho", "u1", "u2", "p", "q", "M", "B", "S",
                  "psi", "label", "omega")
_AXI_HEADER = ("x1", "r", "rho", "U", "V", "p", "q", "M", "B", "S",
               "psi", "label", "omega")


@dataclass
class FlowField:
    """Nodal flow state on a structured nozzle grid."""

    kind: str             # "planar" | "axisymmetric"
    x1: np.ndarray        # (ni,)
    trans: np.ndarray     # (ni, nj) physical transverse coordinate
    rho: np.ndarray
    u1: np.ndarray        # axial velocity
    u2: np.ndarray        # transverse (radial) velocity
    p: np.ndarray
    q: np.ndarray
    mach: np.ndarray
    bernoulli: np.ndarray
    entropy: np.ndarray
    psi: np.ndarray
    label: np.ndarray
    omega: np.ndarray
    mass_flux: float = 0.0

    @property
    def ni(self) -> int:
        return self.x1.size

    @property
    def nj(self) -> int:
        return self.trans.shape[1]

    def grid(self) -> Grid:
        return grid_from_coords(self.kind, self.x1, self.trans)


def grid_from_coords(kind: str, x1: np.ndarray, trans: np.ndarray) -> Grid:
    """Rebuild the structured grid (metrics included) from coordinates."""
    ni, nj = trans.shape
    nx = ni - 1
    if kind == "planar":
        ns = nj - 1
        sigma = np.linspace(0.0, 1.0, nj)
        low = "onesided"
        wall_lo = trans[:, 0].copy()
        wall_hi = trans[:, -1].copy()
    elif kind == "axisymmetric":
        ns = nj
        sigma = (np.arange(nj) + 0.5) / nj
        low = "mirror_odd"
        wall_lo = np.zeros(ni)
        wall_hi = trans[:, -1] / sigma[-1]
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    dx1 = float(x1[1] - x1[0])
    dsig = 1.0 / ns
    t_x1 = dparam(trans, dx1, axis=0)
    t_sig = dparam(trans, dsig, axis=1, low=low)
    return Grid(kind=kind, nx=nx, ns=ns, x1=np.asarray(x1, dtype=float),
                sigma=sigma, trans=np.asarray(trans, dtype=float),
                t_x1=t_x1, t_sig=t_sig, wall_lo=wall_lo, wall_hi=wall_hi)


def velocity_from_psi(grid: Grid, psi: np.ndarray, rho: np.ndarray):
    """Reconstruct (u1, u2) from the stream function.

    Plane flow:        rho u1 = d(psi)/dy,      rho u2 = -d(psi)/dx1
    Axisymmetric flow: r rho U = d(psi)/dr,     r rho V = -d(psi)/dx1
    """
    px, pt = grid.gradient(psi, parity=+1.0)
    if grid.is_axi:
        w = grid.trans * rho
    else:
        w = rho
    return pt / w, -px / w


def flux_magnitude_from_psi(grid: Grid, psi: np.ndarray):
    """Nodal |mass-flux| j = |grad psi| (plane) or |grad psi| / r (axi)."""
    px, pt = grid.gradient(psi, parity=+1.0)
    mag = np.hypot(px, pt)
    if grid.is_axi:
        return mag / grid.trans
    return mag


def station_flux(field: FlowField, grid: Grid | None = None) -> np.ndarray:
    """Measured mass flux through every station.

    Samples g = (d trans/d sigma) * (rho u1) (times r for the axisymmetric
    case) on alternating transverse nodes with weight 2*dsigma; for a field
    reconstructed from a stream function this telescopes exactly to the
    wall-to-wall psi difference.  Axisymmetric grids close the two half-cell
    strips next to the axis and the wall with the dumped psi values.
    """
    if grid is None:
        grid = field.grid()
    ds = grid.dsig
    if grid.is_axi:
        g = grid.t_sig * grid.trans * field.rho * field.u1
        core = 2.0 * ds * g[:, 0:grid.nj - 1:2].sum(axis=1)
        axis_strip = field.psi[:, 0]
        wall_strip = field.mass_flux - field.psi[:, -1]
        return core + axis_strip + wall_strip
    g = grid.t_sig * field.rho * field.u1
    return 2.0 * ds * g[:, 1::2].sum(axis=1)


def conservation_defect(field: FlowField, grid: Grid | None = None) -> float:
    """max over stations of |measured flux - nominal mass flux|."""
    return float(np.max(np.abs(station_flux(field, grid) - field.mass_flux)))


def station_flux_spread(field: FlowField, grid: Grid | None = None) -> float:
    """max - min of the measured station fluxes (independent of the nominal m)."""
    phi = station_flux(field, grid)
    return float(phi.max() - phi.min())


def derived_state(gas: thermo.GasModel, rho, p, q):
    """(c, M, B, S) columns for a nodal state under the given closure."""
    if gas.is_full_euler:
        c = thermo.sound_speed(rho, p, gas.gamma)
        B = thermo.bernoulli(rho, p, q, gas.gamma)
        S = thermo.entropy(rho, p, gas.gamma)
    else:
        c = gas.law.sound_speed(rho)
        B = 0.5 * np.asarray(q) ** 2 + gas.law.enthalpy(rho)
        S = np.zeros_like(np.asarray(rho, dtype=float))
    M = np.asarray(q) / c
    return c, M, B, S


# ---------------------------------------------------------------------------
# Dump files
# ---------------------------------------------------------------------------

def dump_filename(m: float, nx: int, ns: int) -> str:
    return f"solve_m{m:.10g}_{nx}x{ns}.dat"


def write_dump(field: FlowField, path) -> None:
    header = _AXI_HEADER if field.kind == "axisymmetric" else _PLANAR_HEADER
    cols = (field.trans, field.rho, field.u1, field.u2, field.p, field.q,
            field.mach, field.bernoulli, field.entropy, field.psi,
            field.label, field.omega)
    with open(path, "w") as fh:
        fh.write(" ".join(header) + "\n")
        for i in range(field.ni):
            x = field.x1[i]
            for j in range(field.trans.shape[1]):
                row = [x] + [c[i, j] for c in cols]
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_dump(path, kind: str | None = None, mass_flux: float | None = None) -> FlowField:
    """Parse a field dump; schema violations report line and column."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError("empty dump file", line=1)
    header = tuple(lines[0].split())
    if header == _PLANAR_HEADER:
        file_kind = "planar"
    elif header == _AXI_HEADER:
        file_kind = "axisymmetric"
    else:
        raise SchemaError(
            f"unrecognised dump header {' '.join(header)!r}", line=1, column=1)
    if kind is not None and kind != file_kind:
        raise SchemaError(
            f"dump holds a {file_kind} field, expected {kind}", line=1)
    ncol = len(header)
    data = np.empty((len(lines) - 1, ncol))
    for ln, text in enumerate(lines[1:], start=2):
        parts = text.split()
        if len(parts) != ncol:
            raise SchemaError(
                f"expected {ncol} columns, found {len(parts)}",
                line=ln, column=len(parts) + 1)
        for kcol, tok in enumerate(parts):
            try:
                data[ln - 2, kcol] = float(tok)
            except ValueError:
                raise SchemaError(f"not a number: {tok!r}",
                                  line=ln, column=kcol + 1) from None

    x1col = data[:, 0]
    nj = max(np.count_nonzero(x1col == x1col[0]), 1)
    if data.shape[0] % nj != 0:
        raise SchemaError("row count is not a multiple of the station size",
                          line=len(lines))
    ni = data.shape[0] // nj
    x1 = x1col.reshape(ni, nj)[:, 0]

    def col(k):
        return np.ascontiguousarray(data[:, k].reshape(ni, nj))

    ff = FlowField(kind=file_kind, x1=x1, trans=col(1), rho=col(2),
                   u1=col(3), u2=col(4), p=col(5), q=col(6), mach=col(7),
                   bernoulli=col(8), entropy=col(9), psi=col(10),
                   label=col(11), omega=col(12))
    if mass_flux is not None:
        ff.mass_flux = float(mass_flux)
    elif file_kind == "planar":
        # upper wall carries psi = m exactly
        ff.mass_flux = float(ff.psi[0, -1])
    else:
        # no node on the wall face: quadratic extrapolation of psi to it
        g = ff.grid()
        s = g.sigma
        p0, p1, p2 = ff.psi[0, -3], ff.psi[0, -2], ff.psi[0, -1]
        ff.mass_flux = float(np.polyval(
            np.polyfit(s[-3:], [p0, p1, p2], 2), 1.0))
    return ff
