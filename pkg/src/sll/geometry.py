"""Nozzle geometry, admissibility checks, and body-fitted structured grids.

Nozzles are infinitely long channels (plane case, two walls f1 < f2 with
far-field limits (0, 1) upstream and (a, b) downstream) or axisymmetric
ducts (radius f with limits 1 upstream, r0 downstream, inf f > 0).  The
computational domain truncates the axis to [x1_min, x1_max]; validation
measures how flat the walls already are at the truncations.

Grids are tensor products in (x1, sigma) with the transverse mapping

    plane:        y = f1(x1) + sigma * (f2(x1) - f1(x1)),  sigma in [0, 1]
    axisymmetric: r = sigma * f(x1)

Plane grids place nodes on the walls (sigma = j/ns); axisymmetric grids
are cell-centred transversely (sigma = (j+1/2)/ns) so no node sits on the
axis, and symmetry ghosts close the stencils there.  Metric terms come
from the same second-order differences everywhere, so a field dump
(coordinates included) reproduces them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GeometryError


# ---------------------------------------------------------------------------
# Wall shapes
# ---------------------------------------------------------------------------

class StraightWall:
    """Constant wall y = level."""

    kind = "straight"

    def __init__(self, level: float):
        self.level = float(level)

    def value(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.level)

    def deriv(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def deriv2(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def far_limits(self):
        return self.level, self.level


class TanhStepWall:
    """Smooth monotone step: far_value upstream, far_value - amplitude downstream.

    y(x) = far_value - amplitude * (1 + tanh((x - center)/width)) / 2
    """

    kind = "tanh_contraction"

    def __init__(self, far_value: float, amplitude: float, center: float = 0.0,
                 width: float = 1.0):
        if width <= 0.0:
            raise GeometryError("tanh wall needs width > 0")
        self.far_value = float(far_value)
        self.amplitude = float(amplitude)
        self.center = float(center)
        self.width = float(width)

    def value(self, x):
        t = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.far_value - 0.5 * self.amplitude * (1.0 + np.tanh(t))

    def deriv(self, x):
        t = (np.asarray(x, dtype=float) - self.center) / self.width
        return -0.5 * self.amplitude / self.width / np.cosh(t) ** 2

    def deriv2(self, x):
        t = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.amplitude / self.width ** 2 * np.tanh(t) / np.cosh(t) ** 2

    def far_limits(self):
        return self.far_value, self.far_value - self.amplitude


class TableWall:
    """Twice-differentiable spline through tabulated (x1, y) samples."""

    kind = "table"

    def __init__(self, x_samples, y_samples):
        x_samples = np.asarray(x_samples, dtype=float)
        y_samples = np.asarray(y_samples, dtype=float)
        if x_samples.ndim != 1 or x_samples.size < 4:
            raise GeometryError("wall table needs at least 4 samples")
        if np.any(np.diff(x_samples) <= 0.0):
            raise GeometryError("wall table abscissae must increase strictly")
        self.x_min = float(x_samples[0])
        self.x_max = float(x_samples[-1])
        self._s = CubicSpline(x_samples, y_samples)
        self._d1 = self._s.derivative()
        self._d2 = self._d1.derivative()
        self._ends = (float(y_samples[0]), float(y_samples[-1]))

    def value(self, x):
        return self._s(np.asarray(x, dtype=float))

    def deriv(self, x):
        return self._d1(np.asarray(x, dtype=float))

    def deriv2(self, x):
        return self._d2(np.asarray(x, dtype=float))

    def far_limits(self):
        return self._ends


@dataclass(frozen=True)
class Nozzle2D:
    """Plane nozzle between walls f1 < f2, asymptotically the unit channel."""

    f1: object
    f2: object

    kind = "planar"

    def width(self, x):
        return self.f2.value(x) - self.f1.value(x)

    def far_limits(self):
        up1, down1 = self.f1.far_limits()
        up2, down2 = self.f2.far_limits()
        return (up1, up2), (down1, down2)


@dataclass(frozen=True)
class NozzleAxi:
    """Axisymmetric nozzle of radius f, asymptotically the unit pipe."""

    f: object

    kind = "axisymmetric"

    def width(self, x):
        return self.f.value(x)

    def far_limits(self):
        up, down = self.f.far_limits()
        return (0.0, up), (0.0, down)


def straight_nozzle_2d() -> Nozzle2D:
    return Nozzle2D(f1=StraightWall(0.0), f2=StraightWall(1.0))


def tanh_nozzle_2d(amplitude: float, center: float = 0.0, width: float = 1.0) -> Nozzle2D:
    """Upper-wall contraction from gap 1 down to gap 1 - amplitude."""
    return Nozzle2D(f1=StraightWall(0.0),
                    f2=TanhStepWall(1.0, amplitude, center, width))


def straight_pipe() -> NozzleAxi:
    return NozzleAxi(f=StraightWall(1.0))


def tanh_pipe(amplitude: float, center: float = 0.0, width: float = 1.0) -> NozzleAxi:
    return NozzleAxi(f=TanhStepWall(1.0, amplitude, center, width))


# ---------------------------------------------------------------------------
# Validation against the admissibility hypotheses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: object
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed,
                        "value": c.value, "detail": c.detail}
                       for c in self.checks],
        }

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_nozzle(nozzle, x1_min: float, x1_max: float,
                    tol_far: float = 1e-6, deriv_bound: float = 1e3,
                    samples: int = 2001) -> ValidationReport:
    """Measure the wall hypotheses over the truncated domain.

    Checks: positive wall gap (with the violating location on failure),
    far-field flatness at both truncations against the declared limits,
    sampled bounds on |f|, |f'|, |f''| as the smoothness proxy, and the
    implied exterior-sphere radius 1/max|f''| (recorded, no contract).
    """
    x = np.linspace(x1_min, x1_max, samples)
    checks = []
    if isinstance(nozzle, Nozzle2D):
        w1, w2 = nozzle.f1, nozzle.f2
        v1, v2 = w1.value(x), w2.value(x)
        gap = v2 - v1
        k = int(np.argmin(gap))
        checks.append(CheckResult(
            "wall_gap", bool(gap[k] > 0.0), float(gap[k]),
            f"min gap at x1 = {x[k]:.6g}"))
        (u1, u2), (d1, d2) = nozzle.far_limits()
        up_dev = max(abs(float(v1[0]) - 0.0), abs(float(v2[0]) - 1.0))
        checks.append(CheckResult(
            "upstream_flatness", up_dev <= tol_far, up_dev,
            f"limits ({u1:.6g}, {u2:.6g}), tol {tol_far:g}"))
        down_dev = max(abs(float(v1[-1]) - d1), abs(float(v2[-1]) - d2))
        checks.append(CheckResult(
            "downstream_flatness", down_dev <= tol_far, down_dev,
            f"limits ({d1:.6g}, {d2:.6g}), tol {tol_far:g}"))
        sup = 0.0
        for w in (w1, w2):
            sup = max(sup, float(np.max(np.abs(w.value(x)))),
                      float(np.max(np.abs(w.deriv(x)))),
                      float(np.max(np.abs(w.deriv2(x)))))
        checks.append(CheckResult(
            "derivative_bounds", np.isfinite(sup) and sup <= deriv_bound, sup,
            f"sup of |f|, |f'|, |f''| over {samples} samples"))
        max_curv = max(float(np.max(np.abs(w1.deriv2(x)))),
                       float(np.max(np.abs(w2.deriv2(x)))))
    elif isinstance(nozzle, NozzleAxi):
        w = nozzle.f
        v = w.value(x)
        k = int(np.argmin(v))
        checks.append(CheckResult(
            "positive_radius", bool(v[k] > 0.0), float(v[k]),
            f"min radius at x1 = {x[k]:.6g}"))
        (_, up), (_, down) = nozzle.far_limits()
        checks.append(CheckResult(
            "upstream_flatness", abs(float(v[0]) - 1.0) <= tol_far,
            abs(float(v[0]) - 1.0), f"upstream limit 1, tol {tol_far:g}"))
        checks.append(CheckResult(
            "downstream_flatness", abs(float(v[-1]) - down) <= tol_far,
            abs(float(v[-1]) - down), f"downstream limit {down:.6g}, tol {tol_far:g}"))
        sup = max(float(np.max(np.abs(v))), float(np.max(np.abs(w.deriv(x)))),
                  float(np.max(np.abs(w.deriv2(x)))))
        checks.append(CheckResult(
            "derivative_bounds", np.isfinite(sup) and sup <= deriv_bound, sup,
            f"sup of |f|, |f'|, |f''| over {samples} samples"))
        max_curv = float(np.max(np.abs(w.deriv2(x))))
    else:
        raise GeometryError(f"unknown nozzle type {type(nozzle).__name__}")

    radius = float("inf") if max_curv == 0.0 else 1.0 / max_curv
    checks.append(CheckResult(
        "exterior_sphere_radius", True, radius, "recorded only, no contract"))
    return ValidationReport(kind=nozzle.kind, checks=tuple(checks))


# ---------------------------------------------------------------------------
# Parameter-space difference stencils (shared by grids and diagnostics)
# ---------------------------------------------------------------------------

def dparam(F, h: float, axis: int, low: str = "onesided", high: str = "onesided"):
    """Second-order derivative of samples along one grid axis.

    Centered in the interior, 3-point one-sided at the ends, or a symmetry
    ghost at the low end: ``mirror_even`` for fields even across the axis,
    ``mirror_odd`` for odd ones (the ghost sits one spacing below node 0,
    mirroring node 0 itself, as cell-centred layouts require).
    """
    F = np.asarray(F, dtype=float)
    out = np.empty_like(F)
    Fm = np.moveaxis(F, axis, 0)
    om = np.moveaxis(out, axis, 0)
    om[1:-1] = (Fm[2:] - Fm[:-2]) / (2.0 * h)
    if low == "onesided":
        om[0] = (-3.0 * Fm[0] + 4.0 * Fm[1] - Fm[2]) / (2.0 * h)
    elif low == "mirror_even":
        om[0] = (Fm[1] - Fm[0]) / (2.0 * h)
    elif low == "mirror_odd":
        om[0] = (Fm[1] + Fm[0]) / (2.0 * h)
    else:
        raise ValueError(f"unknown low-end stencil {low!r}")
    if high == "onesided":
        om[-1] = (3.0 * Fm[-1] - 4.0 * Fm[-2] + Fm[-3]) / (2.0 * h)
    else:
        raise ValueError(f"unknown high-end stencil {high!r}")
    return out


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Immutable body-fitted tensor grid with cached metric terms."""

    kind: str            # "planar" | "axisymmetric"
    nx: int              # streamwise cells
    ns: int              # transverse cells
    x1: np.ndarray       # (nx+1,)
    sigma: np.ndarray    # (nj,) parameter values
    trans: np.ndarray    # (ni, nj) physical transverse coordinate
    t_x1: np.ndarray     # (ni, nj) d(trans)/dx1 at fixed sigma
    t_sig: np.ndarray    # (ni, nj) d(trans)/dsigma at fixed x1
    wall_lo: np.ndarray  # (ni,) lower wall / axis transverse coordinate
    wall_hi: np.ndarray  # (ni,) upper wall transverse coordinate
    nozzle: object = field(repr=False, default=None)

    @property
    def ni(self) -> int:
        return self.x1.size

    @property
    def nj(self) -> int:
        return self.sigma.size

    @property
    def dx1(self) -> float:
        return float(self.x1[1] - self.x1[0])

    @property
    def dsig(self) -> float:
        return float(1.0 / self.ns)

    @property
    def is_axi(self) -> bool:
        return self.kind == "axisymmetric"

    def gradient(self, F, parity: float = 1.0):
        """Physical (d/dx1, d/dtransverse) of a nodal field.

        ``parity`` selects the symmetry ghost across the axis for
        axisymmetric grids (+1 even, -1 odd); plane grids ignore it.
        """
        if self.is_axi:
            low = "mirror_even" if parity > 0 else "mirror_odd"
        else:
            low = "onesided"
        a = dparam(F, self.dx1, axis=0)
        b = dparam(F, self.dsig, axis=1, low=low)
        d_trans = b / self.t_sig
        d_x1 = a - (self.t_x1 / self.t_sig) * b
        return d_x1, d_trans

    def node_weights(self) -> np.ndarray:
        """Quadrature weights: physical area represented by each node."""
        wx = np.full(self.ni, self.dx1)
        wx[0] *= 0.5
        wx[-1] *= 0.5
        ws = np.full(self.nj, self.dsig)
        if not self.is_axi:
            ws[0] *= 0.5
            ws[-1] *= 0.5
        return wx[:, None] * ws[None, :] * self.t_sig

    def interior_mask(self, margin: int = 2) -> np.ndarray:
        """Nodes at least ``margin`` stencil layers from every boundary."""
        m = np.zeros((self.ni, self.nj), dtype=bool)
        m[margin:self.ni - margin, margin:self.nj - margin] = True
        return m

    def window_mask(self, frac: float = 0.5) -> np.ndarray:
        """Central window covering ``frac`` of both directions."""
        lo = 0.5 - 0.5 * frac
        hi = 0.5 + 0.5 * frac
        xin = (self.x1 >= self.x1[0] + lo * (self.x1[-1] - self.x1[0])) & \
              (self.x1 <= self.x1[0] + hi * (self.x1[-1] - self.x1[0]))
        sin = (self.sigma >= lo) & (self.sigma <= hi)
        return xin[:, None] & sin[None, :]

    def locate(self, x1: float, trans: float):
        """Nearest node to a physical point (parameter recovery)."""
        i = int(np.argmin(np.abs(self.x1 - x1)))
        j = int(np.argmin(np.abs(self.trans[i] - trans)))
        return i, j


def build_grid(nozzle, nx: int, ns: int, x1_min: float, x1_max: float) -> Grid:
    """Tensor-product grid over the truncated nozzle.

    ``nx`` and ``ns`` are cell counts; ``ns`` must be even (the telescoping
    station-flux rule pairs transverse nodes) and both at least 8.
    """
    if nx < 8 or ns < 8:
        raise GeometryError("grid needs nx >= 8 and ns >= 8 cells")
    if ns % 2 != 0:
        raise GeometryError("transverse cell count must be even")
    if not x1_max > x1_min:
        raise GeometryError("empty streamwise interval")
    x1 = np.linspace(x1_min, x1_max, nx + 1)
    if isinstance(nozzle, Nozzle2D):
        kind = "planar"
        sigma = np.linspace(0.0, 1.0, ns + 1)
        lo = np.asarray(nozzle.f1.value(x1), dtype=float)
        hi = np.asarray(nozzle.f2.value(x1), dtype=float)
        if np.any(hi - lo <= 0.0):
            raise GeometryError("wall gap vanishes inside the domain")
        trans = lo[:, None] + sigma[None, :] * (hi - lo)[:, None]
        low_stencil = "onesided"
    elif isinstance(nozzle, NozzleAxi):
        kind = "axisymmetric"
        sigma = (np.arange(ns) + 0.5) / ns
        f = np.asarray(nozzle.f.value(x1), dtype=float)
        if np.any(f <= 0.0):
            raise GeometryError("radius vanishes inside the domain")
        lo = np.zeros_like(f)
        hi = f
        trans = sigma[None, :] * f[:, None]
        low_stencil = "mirror_odd"  # r(-sigma) = -r(sigma)
    else:
        raise GeometryError(f"unknown nozzle type {type(nozzle).__name__}")

    dx1 = float(x1[1] - x1[0])
    dsig = 1.0 / ns
    t_x1 = dparam(trans, dx1, axis=0)
    t_sig = dparam(trans, dsig, axis=1, low=low_stencil)
    if np.any(t_sig <= 0.0):
        raise GeometryError("mapping Jacobian is not positive everywhere")
    return Grid(kind=kind, nx=nx, ns=ns, x1=x1, sigma=sigma, trans=trans,
                t_x1=t_x1, t_sig=t_sig, wall_lo=lo, wall_hi=hi, nozzle=nozzle)
