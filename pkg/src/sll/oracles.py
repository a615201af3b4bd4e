"""Brute-force reference calculations.

Every frozen constant in the test suite traces back to one of these:
dense scans plus bisection for the state algebra, high-panel Simpson
quadrature for the upstream integrals.  They deliberately avoid the
analytic shortcuts of :mod:`sll.thermo` (no closed-form critical speed,
no derivative formulas) so the two routes stay independent.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, SonicExceeded

_SCAN_POINTS = 1_000_000


def _rho_of_q(q, B, S, gamma):
    # rounding can push 2B - q^2 a hair negative at the vacuum endpoint
    return (np.maximum(2.0 * B - q * q, 0.0) / (2.0 * S)) ** (1.0 / (gamma - 1.0))


def scan_peak_flux(B, S, gamma):
    """(q_peak, j_max) from a dense scan of rho(q) q with parabolic refinement."""
    q_hi = math.sqrt(2.0 * B)
    q = np.linspace(0.0, q_hi, _SCAN_POINTS)
    j = _rho_of_q(q, B, S, gamma) * q
    k = int(np.argmax(j))
    if 0 < k < q.size - 1:
        # vertex of the parabola through the three samples around the peak
        y0, y1, y2 = j[k - 1], j[k], j[k + 1]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.0 if denom == 0.0 else 0.5 * (y0 - y2) / denom
        q_peak = q[k] + shift * (q[1] - q[0])
    else:
        q_peak = q[k]
    j_max = float(_rho_of_q(q_peak, B, S, gamma) * q_peak)
    return float(q_peak), j_max


def speed_from_flux(j, B, S, gamma):
    """Subsonic speed with rho(q) q = j by scan-bracketed bisection."""
    if j < 0.0:
        raise DomainError(f"flux must be nonnegative, got {j!r}")
    q_peak, j_max = scan_peak_flux(B, S, gamma)
    if j > j_max:
        raise SonicExceeded(f"flux {j!r} above the scanned maximum {j_max!r}",
                            j_max=j_max, j=j)
    if j == 0.0:
        return 0.0
    if j >= j_max * (1.0 - 1e-15):
        return q_peak
    lo, hi = 0.0, q_peak
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _rho_of_q(mid, B, S, gamma) * mid < j:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 * max(1.0, q_peak):
            break
    return 0.5 * (lo + hi)


def critical_state_hom(law, B):
    """(rho_cr, q_cr, j_max) of a barotropic law by scan plus bisection on f."""
    lo_edge = getattr(law, "rho_min", 1e-9)
    hi_edge = getattr(law, "rho_max", None)
    if hi_edge is None:
        hi_edge = 1.0
        while law.f(hi_edge) < B:
            hi_edge *= 2.0
            if hi_edge > 1e12:
                raise DomainError("sonic density bracket blew up")
    grid = np.linspace(lo_edge, hi_edge, 100_000)
    sub = np.append(grid[:: max(1, grid.size // 2000)], grid[-1])
    fvals = np.asarray([float(law.f(r)) for r in sub])
    idx = int(np.searchsorted(fvals, B))
    if idx == 0 or idx >= sub.size:
        raise DomainError("head outside the scanned sonic range")
    lo, hi = float(sub[idx - 1]), float(sub[idx])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(law.f(mid)) < B:
            lo = mid
        else:
            hi = mid
    rho_cr = 0.5 * (lo + hi)
    q_cr = math.sqrt(float(law.dp_drho(rho_cr)))
    return rho_cr, q_cr, rho_cr * q_cr


def _simpson(vals, h):
    n = vals.size - 1
    if n % 2 != 0:
        raise ValueError("simpson needs an even panel count")
    return h / 3.0 * (vals[0] + vals[-1]
                      + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-2:2].sum())


def upstream_flux(p_minus, B_fn, S_fn, gamma, axisymmetric=False, panels=10_000):
    """Far-field mass flux for constant pressure p_minus by Simpson quadrature.

    Integrand rho u (planar) or r rho u (axisymmetric) over the unit span,
    with rho = (gamma p / ((gamma-1) S))**(1/gamma) and
    u = sqrt(2 (B - gamma p / ((gamma-1) rho))).
    """
    t = np.linspace(0.0, 1.0, panels + 1)
    S = np.asarray([S_fn(x) for x in t])
    B = np.asarray([B_fn(x) for x in t])
    rho = (gamma * p_minus / ((gamma - 1.0) * S)) ** (1.0 / gamma)
    h = gamma * p_minus / ((gamma - 1.0) * rho)
    u2 = 2.0 * (B - h)
    if np.any(u2 < -1e-13):
        raise DomainError("pressure above the stagnation limit of the profile")
    u = np.sqrt(np.maximum(u2, 0.0))
    w = t * rho * u if axisymmetric else rho * u
    return float(_simpson(w, 1.0 / panels))


def upstream_pressure(m, B_fn, S_fn, gamma, axisymmetric=False, panels=10_000):
    """Far-field pressure delivering mass flux m, by scan plus bisection.

    Returns (p_minus, flux_max).  The admissible pressure interval runs from
    the largest pointwise-sonic pressure up to the smallest stagnation
    pressure; the flux is strictly decreasing across it.
    """
    t = np.linspace(0.0, 1.0, panels + 1)
    S = np.asarray([S_fn(x) for x in t])
    B = np.asarray([B_fn(x) for x in t])
    # stagnation: u = 0 -> h = B -> rho = (B (gamma-1) S^... ) via S rho^(g-1) = B
    rho_stag = (B / S) ** (1.0 / (gamma - 1.0))
    p_stag = (gamma - 1.0) / gamma * S * rho_stag ** gamma
    # pointwise sonic pressure: h = 2B/(gamma+1)
    rho_son = (2.0 * B / ((gamma + 1.0) * S)) ** (1.0 / (gamma - 1.0))
    p_son = (gamma - 1.0) / gamma * S * rho_son ** gamma
    p_hi = float(p_stag.min())
    p_lo = float(p_son.max())
    flux_max = upstream_flux(p_lo, B_fn, S_fn, gamma, axisymmetric, panels)
    if m > flux_max:
        raise SonicExceeded(
            f"target flux {m!r} above the subsonic maximum {flux_max!r}",
            j_max=flux_max, j=m)
    lo, hi = p_lo, p_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if upstream_flux(mid, B_fn, S_fn, gamma, axisymmetric, panels) > m:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * p_hi:
            break
    return 0.5 * (lo + hi), flux_max


def quasi1d_critical_flux(width_fn, x1_min, x1_max, B, S, gamma,
                          axisymmetric=False, points=10_000):
    """Throat-controlled estimate of the critical nozzle flux.

    The narrowest station chokes first; for uniform upstream data the flux
    there cannot exceed (width) * j_max in the plane or (radius^2 / 2) * j_max
    for a circular section.
    """
    x = np.linspace(x1_min, x1_max, points)
    w = np.asarray([width_fn(v) for v in x])
    _, j_max = scan_peak_flux(B, S, gamma)
    if axisymmetric:
        return float(0.5 * (w ** 2).min() * j_max)
    return float(w.min() * j_max)
