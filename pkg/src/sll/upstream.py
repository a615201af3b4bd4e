"""Far-field (upstream) data and the state it determines for a mass flux.

The upstream flow is parallel: pressure must be transversely constant, and
with the head profile B(s) and entropy profile S(s) given on the unit span
s in [0, 1] the full state follows from one scalar, the pressure p_minus.
That scalar is pinned by the mass flux,

    integral_0^1 rho(s; p) u(s; p) ds             = m   (plane)
    integral_0^1 s rho(s; p) u(s; p) ds           = m   (axisymmetric)

with rho = (gamma p / ((gamma-1) S(s)))**(1/gamma) and u the subsonic root
of u^2/2 + gamma p/((gamma-1) rho) = B(s).  The integrand decreases
strictly in p on the subsonic branch, so bisection between the pointwise
sonic pressure (largest over the span) and the stagnation pressure
(smallest over the span) is well posed.  Barotropic gases carry the same
structure with the density rho_minus as the scalar.

The cumulative stream function psi(s) orders streamlines: the solver
inverts it to pull head and entropy values onto interior nodes (transport
along streamlines by the backward label map).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from . import thermo
from .errors import DomainError, SolverStateError, SonicExceeded

_BISECT_ITERS = 200


# ---------------------------------------------------------------------------
# Transverse profiles on [0, 1]
# ---------------------------------------------------------------------------

class Profile:
    """Scalar profile on the unit span with an analytic derivative.

    Closed forms: ``constant`` and ``quadratic`` (base + coeff * s^2, whose
    derivative vanishes at s = 0 as the axisymmetric hypotheses require).
    Tabulated profiles interpolate with a twice-differentiable spline.
    """

    def __init__(self, kind, value=None, base=None, coeff=None,
                 s_samples=None, v_samples=None):
        self.kind = kind
        if kind == "constant":
            self._v = float(value)
        elif kind == "quadratic":
            self._base = float(base)
            self._coeff = float(coeff)
        elif kind == "table":
            s_samples = np.asarray(s_samples, dtype=float)
            v_samples = np.asarray(v_samples, dtype=float)
            if s_samples.ndim != 1 or s_samples.size < 4:
                raise DomainError("profile table needs at least 4 samples")
            if abs(s_samples[0]) > 1e-12 or abs(s_samples[-1] - 1.0) > 1e-12:
                raise DomainError("profile table must span [0, 1]")
            self._spl = CubicSpline(s_samples, v_samples)
            self._dspl = self._spl.derivative()
        else:
            raise DomainError(f"unknown profile kind {kind!r}")

    @classmethod
    def constant(cls, value):
        return cls("constant", value=value)

    @classmethod
    def quadratic(cls, base, coeff):
        return cls("quadratic", base=base, coeff=coeff)

    @classmethod
    def from_table(cls, s_samples, v_samples):
        return cls("table", s_samples=s_samples, v_samples=v_samples)

    def value(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self._v)
        if self.kind == "quadratic":
            return self._base + self._coeff * s * s
        return self._spl(s)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(s)
        if self.kind == "quadratic":
            return 2.0 * self._coeff * s
        return self._dspl(s)

    def derivative_over_s(self, s):
        """d(profile)/ds divided by s, finite at s = 0 when the derivative
        vanishes there (quadratic profiles give exactly 2 * coeff)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(s)
        if self.kind == "quadratic":
            return np.full_like(s, 2.0 * self._coeff)
        return self._dspl(s) / np.maximum(s, 1e-12)


@dataclass(frozen=True)
class UpstreamData:
    """Head and entropy profiles prescribed at the upstream far field."""

    B: Profile
    S: Profile = None  # barotropic runs carry no entropy profile

    def admissibility(self, kind: str, gamma: float, samples: int = 2001) -> dict:
        """Hypothesis flags for the chosen geometry (recorded, not enforced)."""
        s = np.linspace(0.0, 1.0, samples)
        B = self.B.value(s)
        out = {"inf_B_positive": bool(B.min() > 0.0)}
        if self.S is not None:
            S = self.S.value(s)
            out["inf_S_positive"] = bool(S.min() > 0.0)
        if kind == "planar" and self.S is not None:
            # d/ds [S B^-gamma] = B^-gamma (S' - gamma S B'/B), from the
            # analytic profile derivatives
            S = self.S.value(s)
            dB = self.B.derivative(s)
            dS = self.S.derivative(s)
            dg = B ** (-gamma) * (dS - gamma * S * dB / B)
            out["edge_slope_lo"] = bool(dg[0] >= -1e-10)
            out["edge_slope_hi"] = bool(dg[-1] <= 1e-10)
        if kind == "axisymmetric":
            dB = self.B.derivative(s)
            out["B_slope_zero_on_axis"] = bool(abs(float(dB[0])) <= 1e-10)
            out["B_nondecreasing"] = bool(dB.min() >= -1e-10)
            if self.S is not None:
                dS = self.S.derivative(s)
                out["S_slope_zero_on_axis"] = bool(abs(float(dS[0])) <= 1e-10)
                out["S_nonincreasing"] = bool(dS.max() <= 1e-10)
        return out


@dataclass
class UpstreamState:
    """Parallel far-field flow carrying mass flux m."""

    m: float
    gamma: float
    axisymmetric: bool
    p_minus: float            # transversely constant pressure
    rho_minus_const: float    # barotropic density (equals sample for full Euler)
    s_grid: np.ndarray        # dense span samples
    rho: np.ndarray
    u: np.ndarray
    psi: np.ndarray           # cumulative stream function, psi[-1] = m
    at_cap: bool = False
    flux_max: float = 0.0
    _label_interp: object = field(default=None, repr=False)
    _u_interp: object = field(default=None, repr=False)
    _rho_interp: object = field(default=None, repr=False)
    _psi_interp: object = field(default=None, repr=False)

    def __post_init__(self):
        self._psi_interp = PchipInterpolator(self.s_grid, self.psi)
        self._label_interp = PchipInterpolator(self.psi, self.s_grid)
        self._u_interp = PchipInterpolator(self.s_grid, self.u)
        self._rho_interp = PchipInterpolator(self.s_grid, self.rho)

    def psi_at(self, s):
        return self._psi_interp(np.asarray(s, dtype=float))

    def u_at(self, s):
        return self._u_interp(np.asarray(s, dtype=float))

    def rho_at(self, s):
        return self._rho_interp(np.asarray(s, dtype=float))

    def label_from_psi(self, psi, clamp_tol: float = 1e-6, warn_counter=None):
        """Invert the cumulative stream function to streamline labels.

        Values outside [0, m] within rounding are clamped silently; up to
        ``clamp_tol * m`` they are clamped and counted; beyond that the
        solver state is declared broken.
        """
        psi = np.asarray(psi, dtype=float)
        lo_exc = np.maximum(-psi, 0.0)
        hi_exc = np.maximum(psi - self.m, 0.0)
        worst = max(float(lo_exc.max(initial=0.0)), float(hi_exc.max(initial=0.0)))
        scale = max(self.m, 1e-300)
        if worst > clamp_tol * scale:
            raise SolverStateError(
                f"stream-function value outside [0, m] by {worst!r} "
                f"(tolerance {clamp_tol * scale!r})")
        if worst > 1e-9 * scale and warn_counter is not None:
            warn_counter["label_clamps"] = warn_counter.get("label_clamps", 0) + \
                int(np.count_nonzero((lo_exc > 1e-9 * scale) | (hi_exc > 1e-9 * scale)))
        return self._label_interp(np.clip(psi, 0.0, self.m))


def transport_eval(label, data: UpstreamData):
    """(B, S, B', S') pulled back along streamlines to the given labels."""
    label = np.asarray(label, dtype=float)
    if np.any(label < -1e-9) or np.any(label > 1.0 + 1e-9):
        raise SolverStateError("streamline label outside [0, 1]")
    lab = np.clip(label, 0.0, 1.0)
    B = data.B.value(lab)
    dB = data.B.derivative(lab)
    if data.S is None:
        S = np.zeros_like(B)
        dS = np.zeros_like(B)
    else:
        S = data.S.value(lab)
        dS = data.S.derivative(lab)
    return B, S, dB, dS


# ---------------------------------------------------------------------------
# State determination from the mass flux
# ---------------------------------------------------------------------------

def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-2:2] = 2.0
    return w * (h / 3.0)


def upstream_state(m: float, data: UpstreamData, gas: thermo.GasModel,
                   axisymmetric: bool = False, panels: int = 512) -> UpstreamState:
    """Determine the far-field state carrying mass flux m.

    Bisection on the scalar (pressure for the polytropic closure, density
    for a barotropic law) against composite-Simpson quadrature of the span
    flux.  Raises SonicExceeded, carrying the largest subsonic flux, when m
    is out of reach; a flux within rounding of that maximum returns the
    pointwise-critical state flagged ``at_cap``.
    """
    if m <= 0.0:
        raise DomainError(f"mass flux must be positive, got {m!r}")
    if panels % 2 != 0:
        panels += 1
    s = np.linspace(0.0, 1.0, panels + 1)
    wq = _simpson_weights(panels, 1.0 / panels)
    if axisymmetric:
        wq = wq * s

    B = data.B.value(s)
    if np.any(B <= 0.0):
        raise DomainError("head profile must be positive")

    if gas.is_full_euler:
        if data.S is None:
            raise DomainError("polytropic closure needs an entropy profile")
        gamma = gas.gamma
        S = data.S.value(s)
        if np.any(S <= 0.0):
            raise DomainError("entropy profile must be positive")

        def state_at(p):
            rho = (gamma * p / ((gamma - 1.0) * S)) ** (1.0 / gamma)
            h = gamma * p / ((gamma - 1.0) * rho)
            u2 = 2.0 * (B - h)
            u = np.sqrt(np.maximum(u2, 0.0))
            return rho, u

        rho_stag = (B / S) ** (1.0 / (gamma - 1.0))
        p_stag = (gamma - 1.0) / gamma * S * rho_stag ** gamma
        rho_son = (2.0 * B / ((gamma + 1.0) * S)) ** (1.0 / (gamma - 1.0))
        p_son = (gamma - 1.0) / gamma * S * rho_son ** gamma
        hi = float(p_stag.min())
        lo = float(p_son.max())
    else:
        law = gas.law
        gamma = gas.gamma

        def state_at(rho_scalar):
            rho = np.full_like(s, rho_scalar)
            u2 = 2.0 * (B - float(law.enthalpy(rho_scalar)))
            u = np.sqrt(np.maximum(u2, 0.0))
            return rho, u

        # stagnation on the poorest streamline, pointwise sonic on the richest
        hi = float(law.enthalpy_inverse(float(B.min())))
        lo = thermo.critical_state_hom(law, float(B.max())).rho_cr

    def flux_at(scalar):
        rho, u = state_at(scalar)
        return float(np.dot(wq, rho * u)), rho, u

    flux_max, rho_cap, u_cap = flux_at(lo)
    if m > flux_max * (1.0 + 1e-12):
        raise SonicExceeded(
            f"mass flux {m!r} above the largest subsonic upstream flux {flux_max!r}",
            j_max=flux_max, j=m)
    # sheared profiles bound the flux from below too: at the stagnation
    # pressure of the poorest streamline the richer ones still move
    flux_min = flux_at(hi)[0]
    if m < flux_min * (1.0 - 1e-12):
        raise DomainError(
            f"mass flux {m!r} below the smallest flux {flux_min!r} the "
            "parallel upstream state supports (profile shear keeps faster "
            "streamlines moving at the poorest streamline's stagnation "
            "pressure); no subsonic root exists")

    at_cap = m >= flux_max * (1.0 - 1e-10)
    if at_cap:
        scalar, rho, u = lo, rho_cap, u_cap
    else:
        a, b = lo, hi
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (a + b)
            if flux_at(mid)[0] > m:
                a = mid
            else:
                b = mid
        scalar = 0.5 * (a + b)
        _, rho, u = flux_at(scalar)

    # cumulative stream function, normalised so psi(1) matches m exactly
    integrand = (s * rho * u) if axisymmetric else (rho * u)
    psi = _cumulative_simpson(integrand, 1.0 / panels)
    if psi[-1] <= 0.0:
        raise DomainError("degenerate upstream stream function")
    psi *= m / psi[-1]
    psi = np.maximum.accumulate(psi)

    if gas.is_full_euler:
        p_minus = scalar
        rho_const = float(rho[0])
    else:
        rho_const = scalar
        p_minus = float(law.pressure(scalar))

    state = UpstreamState(m=m, gamma=gamma, axisymmetric=axisymmetric,
                          p_minus=p_minus, rho_minus_const=rho_const,
                          s_grid=s, rho=rho, u=u, psi=psi,
                          at_cap=at_cap, flux_max=flux_max)
    _check_subsonic(state, data, gas)
    return state


def _cumulative_simpson(f: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral on a uniform grid, 4th order, monotone for f > 0."""
    n = f.size
    out = np.zeros(n)
    # pairwise Simpson steps; odd intermediate nodes by cubic half-panels
    for k in range(2, n, 2):
        out[k] = out[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k])
    for k in range(1, n, 2):
        if k + 2 < n:
            # integral over [k-1, k] from the cubic through k-1..k+2
            out[k] = out[k - 1] + h * (9.0 * f[k - 1] + 19.0 * f[k]
                                       - 5.0 * f[k + 1] + f[k + 2]) / 24.0
        else:
            out[k] = out[k - 1] + 0.5 * h * (f[k - 1] + f[k])
    return out


def _check_subsonic(state: UpstreamState, data: UpstreamData, gas: thermo.GasModel):
    if gas.is_full_euler:
        p = state.p_minus
        c = np.sqrt(gas.gamma * p / state.rho)
    else:
        c = gas.law.sound_speed(state.rho)
    mach = state.u / c
    if not state.at_cap and np.any(mach > 1.0 + 1e-10):
        raise DomainError("upstream state left the subsonic branch")
