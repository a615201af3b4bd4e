"""State algebra for steady compressible flow.

Two thermodynamic closures are supported.

Ideal polytropic gas (``full_euler``), adiabatic exponent gamma > 1, with
the streamline invariants

    B = q**2 / 2 + gamma * p / ((gamma - 1) * rho)        (energy head)
    S = gamma * p / ((gamma - 1) * rho**gamma)            (entropy measure)

which combine into  q**2 / 2 + S * rho**(gamma - 1) = B,  so density and
pressure follow from the speed:

    rho(q) = ((2B - q**2) / (2S)) ** (1 / (gamma - 1))
    p(q)   = (gamma - 1) / (2 gamma) * (2B - q**2) ** (gamma / (gamma - 1))
             / (2S) ** (1 / (gamma - 1))

Sound speed c = sqrt(gamma p / rho), Mach M = q / c, and the flow is
subsonic-sonic exactly when q <= q_cr = sqrt(2 (gamma-1) B / (gamma+1)).
The mass-flux density j = rho(q) q rises to j_max at q_cr and falls
beyond (dj/dq = rho (1 - M^2)), so the subsonic branch inverts uniquely.

Barotropic gas (``homentropic``): pressure is a function of density alone
with p'(rho) > 0 and 2 p'(rho) + rho p''(rho) > 0.  The enthalpy is
normalised as h(rho) = integral_1^rho p'(s)/s ds, the sonic relation reads
f(rho) = p'(rho)/2 + h(rho) = B with f strictly increasing, and
B_min = lim_{rho->0+} f(rho) (possibly -inf) bounds admissible heads from
below.

All scalar inversions use bisection on the monotone branch: a fixed 100
halvings collapse the bracket below double precision, so results carry no
tolerance knob.  Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, SonicExceeded, VacuumError

_BISECT_ITERS = 100


# ---------------------------------------------------------------------------
# Ideal polytropic closure
# ---------------------------------------------------------------------------

def bernoulli(rho, p, q, gamma):
    """Energy head B = q^2/2 + gamma p / ((gamma-1) rho)."""
    return 0.5 * np.asarray(q) ** 2 + gamma * np.asarray(p) / ((gamma - 1.0) * np.asarray(rho))


def entropy(rho, p, gamma):
    """Entropy measure S = gamma p / ((gamma-1) rho^gamma)."""
    return gamma * np.asarray(p) / ((gamma - 1.0) * np.asarray(rho) ** gamma)


def critical_speed(B, gamma):
    """Speed at which M = 1 for energy head B: sqrt(2 (gamma-1) B / (gamma+1))."""
    if np.any(np.asarray(B) <= 0.0):
        raise DomainError(f"critical speed needs B > 0, got {B!r}")
    return np.sqrt(2.0 * (gamma - 1.0) / (gamma + 1.0) * np.asarray(B))


def density_from_speed(q, B, S, gamma):
    """rho(q; B, S) on the branch q^2 <= 2B.  Vacuum endpoint q^2 = 2B gives 0."""
    q = np.asarray(q, dtype=float)
    arg = 2.0 * np.asarray(B) - q * q
    if np.any(arg < -1e-14 * np.asarray(B)):
        raise DomainError("speed exceeds the cavitation limit q^2 <= 2B")
    if np.any(np.asarray(S) <= 0.0):
        raise DomainError(f"entropy measure must be positive, got {S!r}")
    return (np.maximum(arg, 0.0) / (2.0 * np.asarray(S))) ** (1.0 / (gamma - 1.0))


def pressure_from_speed(q, B, S, gamma):
    """p(q; B, S) consistent with p = (gamma-1)/gamma * S * rho^gamma."""
    q = np.asarray(q, dtype=float)
    arg = 2.0 * np.asarray(B) - q * q
    if np.any(arg < -1e-14 * np.asarray(B)):
        raise DomainError("speed exceeds the cavitation limit q^2 <= 2B")
    if np.any(np.asarray(S) <= 0.0):
        raise DomainError(f"entropy measure must be positive, got {S!r}")
    arg = np.maximum(arg, 0.0)
    return (gamma - 1.0) / (2.0 * gamma) * arg ** (gamma / (gamma - 1.0)) \
        / (2.0 * np.asarray(S)) ** (1.0 / (gamma - 1.0))


def sound_speed(rho, p, gamma):
    """c = sqrt(gamma p / rho)."""
    if np.any(np.asarray(rho) <= 0.0):
        raise DomainError("sound speed undefined at rho <= 0")
    return np.sqrt(gamma * np.asarray(p) / np.asarray(rho))


def mach_number(q, c):
    """M = q / c."""
    if np.any(np.asarray(c) <= 0.0):
        raise DomainError("Mach number undefined for c <= 0")
    return np.asarray(q) / np.asarray(c)


def stagnation_density(B, S, gamma):
    """Density at q = 0: (B / S) ** (1 / (gamma - 1))."""
    return (np.asarray(B) / np.asarray(S)) ** (1.0 / (gamma - 1.0))


@dataclass(frozen=True)
class ThermoState:
    """Primitive state (rho, p, q); the invariants derive from it."""

    rho: float
    p: float
    q: float

    def __post_init__(self):
        if self.rho < 0.0 or self.p < 0.0 or self.q < 0.0:
            raise DomainError("state components must be nonnegative")

    def sound_speed(self, gamma):
        return float(sound_speed(self.rho, self.p, gamma))

    def bernoulli(self, gamma):
        return float(bernoulli(self.rho, self.p, self.q, gamma))

    def entropy(self, gamma):
        return float(entropy(self.rho, self.p, gamma))

    def mach(self, gamma):
        return self.q / self.sound_speed(gamma)


@dataclass(frozen=True)
class BernoulliEntropy:
    """Streamline invariants; entropy is absent for barotropic gases."""

    B: float
    S: float = None

    def validate(self, gas: "GasModel"):
        if gas.kind == "full_euler":
            if not (self.B > 0.0 and self.S is not None and self.S > 0.0):
                raise DomainError("polytropic invariants need B > 0 and S > 0")
        else:
            if not self.B > gas.law.b_min():
                raise DomainError("head at or below the vacuum-critical bound")
        return self


@dataclass(frozen=True)
class CriticalState:
    """Sonic state for a given head: M = 1 at (rho_cr, q_cr), j_max = rho_cr q_cr."""

    q_cr: float
    rho_cr: float
    j_max: float


def critical_state(B, S, gamma) -> CriticalState:
    """Sonic state of the polytropic closure for head B and entropy S."""
    q_cr = float(critical_speed(B, gamma))
    if S <= 0.0:
        raise DomainError(f"entropy measure must be positive, got {S!r}")
    rho_cr = (2.0 * B / ((gamma + 1.0) * S)) ** (1.0 / (gamma - 1.0))
    return CriticalState(q_cr=q_cr, rho_cr=rho_cr, j_max=rho_cr * q_cr)


def mass_flux_density(q, B, S, gamma):
    """Return (j, dj/dq) with j = rho(q) q and dj/dq = rho (1 - M^2)."""
    rho = density_from_speed(q, B, S, gamma)
    q = np.asarray(q, dtype=float)
    c2 = (gamma - 1.0) * (np.asarray(B) - 0.5 * q * q)
    m2 = np.where(c2 > 0.0, q * q / np.where(c2 > 0.0, c2, 1.0), np.inf)
    return rho * q, rho * (1.0 - m2)


def speed_from_mass_flux(j, B, S, gamma):
    """Unique q in [0, q_cr] with rho(q) q = j, by bisection.

    Raises SonicExceeded (carrying j_max) when j exceeds the sonic maximum;
    at j == j_max the critical speed is returned directly, since within
    rounding of the flat flux peak it is the only defensible root.
    """
    if j < 0.0:
        raise DomainError(f"mass-flux density must be nonnegative, got {j!r}")
    cs = critical_state(B, S, gamma)
    if j > cs.j_max * (1.0 + 1e-12):
        raise SonicExceeded(
            f"mass-flux density {j!r} exceeds sonic maximum {cs.j_max!r}",
            j_max=cs.j_max, j=j)
    if j == 0.0:
        return 0.0
    if j >= cs.j_max * (1.0 - 1e-15):
        # within rounding of the flat flux peak
        return cs.q_cr
    lo, hi = 0.0, cs.q_cr
    ex = 1.0 / (gamma - 1.0)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        f = ((2.0 * B - mid * mid) / (2.0 * S)) ** ex * mid - j
        if f < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pairing(u1, u2, B, S, gamma):
    """Monotone-flux pairing form between two subsonic velocity vectors.

    I(u1, u2) = sum_i (rho(q1) u1_i - rho(q2) u2_i) (u1_i - u2_i).

    Nonnegative whenever both speeds sit on the subsonic branch; it vanishes
    only when the velocities agree (strictly inside the branch), which is
    what makes it usable as a concentration detector for velocity samples.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    q1 = math.sqrt(float(np.dot(u1, u1)))
    q2 = math.sqrt(float(np.dot(u2, u2)))
    q_cr = float(critical_speed(B, gamma))
    if q1 > q_cr * (1.0 + 1e-12) or q2 > q_cr * (1.0 + 1e-12):
        raise DomainError("pairing form is defined for subsonic-sonic speeds only")
    r1 = float(density_from_speed(q1, B, S, gamma))
    r2 = float(density_from_speed(q2, B, S, gamma))
    return float(np.dot(r1 * u1 - r2 * u2, u1 - u2))


# ---------------------------------------------------------------------------
# Barotropic (homentropic) pressure laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaLaw:
    """p = kappa rho^gamma with kappa > 0, gamma > 1."""

    kappa: float
    gamma: float

    def __post_init__(self):
        if self.kappa <= 0.0 or self.gamma <= 1.0:
            raise DomainError("gamma-law needs kappa > 0 and gamma > 1")

    def pressure(self, rho):
        return self.kappa * np.asarray(rho) ** self.gamma

    def dp_drho(self, rho):
        return self.kappa * self.gamma * np.asarray(rho) ** (self.gamma - 1.0)

    def sound_speed(self, rho):
        if np.any(np.asarray(rho) <= 0.0):
            raise DomainError("sound speed undefined at rho <= 0")
        return np.sqrt(self.dp_drho(rho))

    def enthalpy(self, rho):
        if np.any(np.asarray(rho) <= 0.0):
            raise DomainError("enthalpy undefined at rho <= 0")
        g = self.gamma
        return self.kappa * g / (g - 1.0) * (np.asarray(rho) ** (g - 1.0) - 1.0)

    def enthalpy_inverse(self, h):
        g = self.gamma
        arg = np.asarray(h) * (g - 1.0) / (self.kappa * g) + 1.0
        if np.any(arg < 0.0):
            raise VacuumError("head below the vacuum limit of the gamma law")
        return np.maximum(arg, 0.0) ** (1.0 / (g - 1.0))

    def f(self, rho):
        """Sonic head f(rho) = p'(rho)/2 + h(rho), strictly increasing."""
        return 0.5 * self.dp_drho(rho) + self.enthalpy(rho)

    def b_min(self):
        g = self.gamma
        return -self.kappa * g / (g - 1.0)


@dataclass(frozen=True)
class Isothermal:
    """p = kappa rho; constant sound speed sqrt(kappa), B_min = -inf."""

    kappa: float

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise DomainError("isothermal law needs kappa > 0")

    def pressure(self, rho):
        return self.kappa * np.asarray(rho)

    def dp_drho(self, rho):
        return self.kappa * np.ones_like(np.asarray(rho, dtype=float))

    def sound_speed(self, rho):
        if np.any(np.asarray(rho) <= 0.0):
            raise DomainError("sound speed undefined at rho <= 0")
        return math.sqrt(self.kappa) * np.ones_like(np.asarray(rho, dtype=float))

    def enthalpy(self, rho):
        if np.any(np.asarray(rho) <= 0.0):
            raise DomainError("enthalpy undefined at rho <= 0")
        return self.kappa * np.log(np.asarray(rho, dtype=float))

    def enthalpy_inverse(self, h):
        return np.exp(np.asarray(h) / self.kappa)

    def f(self, rho):
        return 0.5 * self.kappa + self.enthalpy(rho)

    def b_min(self):
        return -math.inf


class TabulatedLaw:
    """Monotone-cubic interpolation of sampled p(rho).

    Admissibility (p' > 0 and 2 p' + rho p'' > 0) is verified on 10^4
    points across the tabulated range at construction.  The law is only
    defined on [rho_min, rho_max] of the table; the reported b_min is the
    sonic head at the lower table edge, the tightest bound the data allows.
    """

    def __init__(self, rho_samples, p_samples):
        rho_samples = np.asarray(rho_samples, dtype=float)
        p_samples = np.asarray(p_samples, dtype=float)
        if rho_samples.ndim != 1 or rho_samples.size < 4:
            raise DomainError("tabulated law needs at least 4 density samples")
        if np.any(np.diff(rho_samples) <= 0.0):
            raise DomainError("tabulated densities must be strictly increasing")
        if np.any(rho_samples <= 0.0):
            raise DomainError("tabulated densities must be positive")
        if np.any(np.diff(p_samples) <= 0.0):
            raise DomainError("tabulated pressures must be strictly increasing")
        self.rho_min = float(rho_samples[0])
        self.rho_max = float(rho_samples[-1])
        self._p = PchipInterpolator(rho_samples, p_samples)
        self._dp = self._p.derivative()
        self._ddp = self._dp.derivative()
        grid = np.linspace(self.rho_min, self.rho_max, 10_000)
        dp = self._dp(grid)
        if np.any(dp <= 0.0):
            raise DomainError("tabulated law violates p'(rho) > 0 on the sample grid")
        if np.any(2.0 * dp + grid * self._ddp(grid) <= 0.0):
            raise DomainError("tabulated law violates 2p' + rho p'' > 0 on the sample grid")
        if not (self.rho_min <= 1.0 <= self.rho_max):
            raise DomainError("tabulated range must contain the reference density 1")
        # cumulative enthalpy on the knots: p'(s)/s is smooth per interval,
        # so fixed 8-point Gauss per interval is accurate to machine level
        self._gauss_x, self._gauss_w = np.polynomial.legendre.leggauss(8)
        knots = self._dp.x
        segs = np.array([self._gauss_segment(knots[k], knots[k + 1])
                         for k in range(knots.size - 1)])
        cum = np.concatenate([[0.0], np.cumsum(segs)])
        k1 = int(np.searchsorted(knots, 1.0, side="right") - 1)
        h_at_1 = cum[k1] + self._gauss_segment(knots[k1], 1.0)
        self._knots = knots
        self._h_knots = cum - h_at_1
        self._h_inv = None
        self._h_range = None

    def _gauss_segment(self, a, b):
        if b == a:
            return 0.0
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        s = mid + half * self._gauss_x
        return float(half * np.dot(self._gauss_w, self._dp(s) / s))

    def _check(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < self.rho_min * (1.0 - 1e-12)) or np.any(rho > self.rho_max * (1.0 + 1e-12)):
            raise DomainError("density outside the tabulated range")
        return np.clip(rho, self.rho_min, self.rho_max)

    def pressure(self, rho):
        return self._p(self._check(rho))

    def dp_drho(self, rho):
        return self._dp(self._check(rho))

    def sound_speed(self, rho):
        return np.sqrt(self.dp_drho(rho))

    def enthalpy(self, rho):
        rho = self._check(rho)
        scalar = np.ndim(rho) == 0
        vals = np.atleast_1d(rho)
        out = np.empty_like(vals)
        for k, r in enumerate(vals):
            i = int(np.searchsorted(self._knots, r, side="right") - 1)
            i = min(max(i, 0), self._knots.size - 2)
            out[k] = self._h_knots[i] + self._gauss_segment(self._knots[i], r)
        return float(out[0]) if scalar else out

    def enthalpy_inverse(self, h):
        if self._h_inv is None:
            # dense monotone inverse, built once; interpolation error is
            # far below the table's own resolution
            rho_dense = np.linspace(self.rho_min, self.rho_max, 4000)
            h_dense = self.enthalpy(rho_dense)
            self._h_inv = PchipInterpolator(h_dense, rho_dense)
            self._h_range = (float(h_dense[0]), float(h_dense[-1]))
        h = np.asarray(h, dtype=float)
        h_lo, h_hi = self._h_range
        span = max(h_hi - h_lo, 1.0)
        if np.any(h < h_lo - 1e-12 * span):
            raise VacuumError("head below the tabulated enthalpy range")
        if np.any(h > h_hi + 1e-12 * span):
            raise DomainError("head above the tabulated enthalpy range")
        out = self._h_inv(np.clip(h, h_lo, h_hi))
        return float(out) if np.ndim(h) == 0 else out

    def f(self, rho):
        return 0.5 * self.dp_drho(rho) + self.enthalpy(rho)

    def b_min(self):
        return float(self.f(self.rho_min))


def enthalpy_hom(law, rho):
    """h(rho) = integral_1^rho p'(s)/s ds; h(1) = 0 by construction."""
    return law.enthalpy(rho)


def b_min(law):
    """Lower head bound lim_{rho->0+} f(rho); -inf is an admissible value."""
    return law.b_min()


def critical_state_hom(law, B) -> CriticalState:
    """Sonic state of a barotropic law: f(rho_cr) = B, q_cr = sqrt(p'(rho_cr))."""
    bm = law.b_min()
    if not B > bm:
        raise DomainError(
            f"head {B!r} at or below the vacuum-critical bound B_min = {bm!r}")
    lo = getattr(law, "rho_min", None)
    hi = getattr(law, "rho_max", None)
    if lo is None:
        # expand a bracket on (0, inf); f is strictly increasing
        lo, hi = 1.0, 1.0
        while law.f(lo) > B:
            lo *= 0.5
            if lo < 1e-300:
                raise DomainError("failed to bracket the sonic density from below")
        while law.f(hi) < B:
            hi *= 2.0
            if hi > 1e300:
                raise DomainError("failed to bracket the sonic density from above")
    else:
        if law.f(hi) < B:
            raise DomainError("head above the sonic range of the tabulated law")
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if law.f(mid) < B:
            lo = mid
        else:
            hi = mid
    rho_cr = 0.5 * (lo + hi)
    q_cr = float(law.sound_speed(rho_cr))
    return CriticalState(q_cr=q_cr, rho_cr=rho_cr, j_max=rho_cr * q_cr)


def density_from_bernoulli_hom(law, q, B):
    """rho = h^{-1}(B - q^2/2); decreasing in q, vacuum error below inf h."""
    return law.enthalpy_inverse(np.asarray(B) - 0.5 * np.asarray(q, dtype=float) ** 2)


def speed_from_mass_flux_hom(law, j, B, mach_cap=1.0, crit=None):
    """Invert rho(q; B) q = j on the subsonic branch of a barotropic law.

    Vectorised over j.  Returns (q, flag) with the same flag convention as
    the polytropic kernel; scalar j with an over-sonic value raises.
    """
    scalar = np.ndim(j) == 0
    j = np.atleast_1d(np.asarray(j, dtype=float))
    if crit is None:
        crit = critical_state_hom(law, B)
    flags = np.zeros(j.shape, dtype=np.int8)
    flags[j < 0.0] = 3
    over = j > crit.j_max * (1.0 + 1e-12)
    flags[over] = 2
    lo = np.zeros_like(j)
    hi = np.full_like(j, crit.q_cr)
    jj = np.where((flags != 0), 0.0, j)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        f = law.enthalpy_inverse(B - 0.5 * mid * mid) * mid - jj
        take_lo = f < 0.0
        lo = np.where(take_lo, mid, lo)
        hi = np.where(take_lo, hi, mid)
    q = 0.5 * (lo + hi)
    q[jj == 0.0] = 0.0
    q[over] = crit.q_cr
    # within rounding of the flat flux peak the critical speed is the root
    q[(flags == 0) & (j >= crit.j_max * (1.0 - 1e-15))] = crit.q_cr
    if mach_cap < 1.0:
        q_cap = _hom_speed_at_mach(law, B, mach_cap, crit)
        hit = (flags == 0) & (q > q_cap)
        q[hit] = q_cap
        flags[hit] = 1
    if scalar:
        if flags[0] == 3:
            raise DomainError(f"mass-flux density must be nonnegative, got {float(j[0])!r}")
        if flags[0] == 2:
            raise SonicExceeded(
                f"mass-flux density {float(j[0])!r} exceeds sonic maximum {crit.j_max!r}",
                j_max=crit.j_max, j=float(j[0]))
        return float(q[0])
    return q, flags


def _hom_speed_at_mach(law, B, mach, crit):
    """Speed where q / c(rho(q; B)) = mach on the subsonic branch."""
    lo, hi = 0.0, crit.q_cr
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        c = float(law.sound_speed(law.enthalpy_inverse(B - 0.5 * mid * mid)))
        if mid - mach * c < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hom_critical_batch(law, B):
    """Vectorised sonic state of a barotropic law over an array of heads."""
    B = np.asarray(B, dtype=float)
    bm = law.b_min()
    if np.any(B <= bm):
        raise DomainError("head at or below the vacuum-critical bound B_min")
    lo_edge = getattr(law, "rho_min", None)
    if lo_edge is not None:
        lo = np.full(B.shape, lo_edge)
        hi = np.full(B.shape, law.rho_max)
        if np.any(np.asarray(law.f(hi)) < B):
            raise DomainError("head above the sonic range of the tabulated law")
    else:
        lo = np.full(B.shape, 1.0)
        hi = np.full(B.shape, 1.0)
        for _ in range(600):
            mask = np.asarray(law.f(lo)) > B
            if not mask.any():
                break
            lo[mask] *= 0.5
        for _ in range(600):
            mask = np.asarray(law.f(hi)) < B
            if not mask.any():
                break
            hi[mask] *= 2.0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        take_lo = np.asarray(law.f(mid)) < B
        lo = np.where(take_lo, mid, lo)
        hi = np.where(take_lo, hi, mid)
    rho_cr = 0.5 * (lo + hi)
    q_cr = np.sqrt(law.dp_drho(rho_cr))
    return rho_cr, q_cr, rho_cr * q_cr


def hom_speed_batch(law, j, B, mach_cap=1.0):
    """Nodewise subsonic inversion rho(q; B) q = j for a barotropic law.

    Broadcasts over j and B; returns (q, flag) with the shared flag
    convention (0 ok, 1 capped, 2 sonic exceeded, 3 invalid).
    """
    j = np.asarray(j, dtype=float)
    B = np.broadcast_to(np.asarray(B, dtype=float), j.shape)
    rho_cr, q_cr, j_max = hom_critical_batch(law, B)
    flags = np.zeros(j.shape, dtype=np.int8)
    flags[j < 0.0] = 3
    over = (flags == 0) & (j > j_max * (1.0 + 1e-12))
    flags[over] = 2
    lo = np.zeros_like(j)
    hi = np.where(flags == 0, q_cr, 0.0)
    jj = np.where(flags != 0, 0.0, j)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        f = law.enthalpy_inverse(B - 0.5 * mid * mid) * mid - jj
        take_lo = f < 0.0
        lo = np.where(take_lo, mid, lo)
        hi = np.where(take_lo, hi, mid)
    q = 0.5 * (lo + hi)
    q[jj == 0.0] = 0.0
    q[over] = q_cr[over]
    q = np.where((flags == 0) & (j >= j_max * (1.0 - 1e-15)), q_cr, q)
    if mach_cap < 1.0:
        # cap speed where q / c exceeds mach_cap
        c = np.asarray(law.sound_speed(law.enthalpy_inverse(B - 0.5 * q * q)))
        hit = (flags == 0) & (q > mach_cap * c)
        if hit.any():
            lo = np.zeros_like(j)
            hi = q_cr.copy()
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                cm = np.asarray(law.sound_speed(
                    law.enthalpy_inverse(B - 0.5 * mid * mid)))
                take_lo = mid - mach_cap * cm < 0.0
                lo = np.where(take_lo, mid, lo)
                hi = np.where(take_lo, hi, mid)
            q_capv = 0.5 * (lo + hi)
            q[hit] = q_capv[hit]
            flags[hit] = 1
    return q, flags


# ---------------------------------------------------------------------------
# Gas model wrapper
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GasModel:
    """Thermodynamic closure tag: polytropic exponent or barotropic law."""

    kind: str  # "full_euler" | "homentropic"
    gamma: float = 1.4
    law: object = None

    def __post_init__(self):
        if self.kind == "full_euler":
            if not self.gamma > 1.0:
                raise DomainError(f"polytropic exponent must exceed 1, got {self.gamma!r}")
        elif self.kind == "homentropic":
            if self.law is None:
                raise DomainError("homentropic gas model needs a pressure law")
        else:
            raise DomainError(f"unknown gas model kind {self.kind!r}")

    @property
    def is_full_euler(self) -> bool:
        return self.kind == "full_euler"
