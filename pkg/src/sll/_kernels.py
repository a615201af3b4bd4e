"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

Two inner loops dominate solver runtime: the per-node inversion of the
subsonic mass-flux relation (a bisection per grid node per outer iteration)
and the 5-point stencil matvec inside the conjugate-gradient solve.  Both
exist here twice: an ``@njit`` version and a vectorised numpy version that
produce bit-identical results (same fixed halving count, same arithmetic
per element).

Backend selection: environment variable ``SLL_NUMBA`` set to ``0``/``off``
forces the numpy path, ``1``/``on`` demands numba (falls back with a
warning if numba is missing), anything else ("auto", unset) uses numba
when importable.  ``benchmarks/bench_kernels.py`` times the two paths
against each other.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

# Node status flags returned by the speed inversion kernels.
FLAG_OK = 0
FLAG_CAPPED = 1
FLAG_SONIC = 2
FLAG_DOMAIN = 3

# Fixed halving count: collapses the bracket far below double precision so
# the returned root does not depend on a tolerance branch.
_BISECT_ITERS = 100


def _env_choice() -> str:
    raw = os.environ.get("SLL_NUMBA", "auto").strip().lower()
    if raw in ("0", "off", "false", "no", "numpy"):
        return "numpy"
    if raw in ("1", "on", "true", "yes", "numba"):
        return "numba"
    return "auto"


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_choice = _env_choice()
if _choice == "numba" and not HAVE_NUMBA:  # pragma: no cover
    warnings.warn("SLL_NUMBA=1 requested but numba is not importable; "
                  "using the numpy fallback", RuntimeWarning)
USE_NUMBA = HAVE_NUMBA and _choice != "numpy"


def backend() -> str:
    """Name of the kernel backend selected at import time."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Subsonic speed from mass-flux density, ideal polytropic closure.
#
# Solves rho(q) * q = j on the monotone branch q in [0, q_cr], with
# rho(q) = ((2B - q^2) / (2S)) ** (1/(gamma-1)) and
# q_cr = sqrt(2 (gamma-1) B / (gamma+1)).
# ---------------------------------------------------------------------------

def _speed_batch_numpy(j, B, S, gamma, mach_cap):
    ex = 1.0 / (gamma - 1.0)
    with np.errstate(invalid="ignore"):
        q_cr = np.sqrt(np.maximum(2.0 * (gamma - 1.0) / (gamma + 1.0) * B, 0.0))
        rho_cr = np.where(S > 0.0,
                          (np.maximum(B, 0.0) / ((gamma + 1.0) * 0.5 *
                                                 np.where(S > 0.0, S, 1.0))) ** ex,
                          0.0)
    j_max = rho_cr * q_cr

    flag = np.zeros(j.shape, dtype=np.int8)
    bad = ~((B > 0.0) & (S > 0.0) & (j >= 0.0))
    flag[bad] = FLAG_DOMAIN

    over = (~bad) & (j > j_max * (1.0 + 1e-12))
    flag[over] = FLAG_SONIC
    at_peak = (~bad) & (~over) & (j >= j_max * (1.0 - 1e-15))

    lo = np.zeros_like(j)
    hi = np.where(bad, 0.0, q_cr)
    jj = np.where(bad | over, 0.0, j)
    Bs = np.where(bad, 1.0, B)
    Ss = np.where(bad, 1.0, S)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        f = ((2.0 * Bs - mid * mid) * (0.5 / Ss)) ** ex * mid - jj
        take_lo = f < 0.0
        lo = np.where(take_lo, mid, lo)
        hi = np.where(take_lo, hi, mid)
    q = 0.5 * (lo + hi)
    q[jj == 0.0] = 0.0
    q[over] = q_cr[over]
    q[at_peak] = q_cr[at_peak]

    if mach_cap < 1.0:
        cap2 = mach_cap * mach_cap * (gamma - 1.0)
        q_cap = np.sqrt(cap2 * np.maximum(B, 0.0) / (1.0 + 0.5 * cap2))
        hit = (flag == FLAG_OK) & (q > q_cap)
        q[hit] = q_cap[hit]
        flag[hit] = FLAG_CAPPED
    return q, flag


@njit(cache=True)
def _speed_batch_numba(j, B, S, gamma, mach_cap):  # pragma: no cover - jitted
    n = j.size
    q = np.empty(n, dtype=np.float64)
    flag = np.zeros(n, dtype=np.int8)
    ex = 1.0 / (gamma - 1.0)
    for k in range(n):
        bk = B[k]
        sk = S[k]
        jk = j[k]
        if not (bk > 0.0 and sk > 0.0 and jk >= 0.0):
            q[k] = 0.0
            flag[k] = FLAG_DOMAIN
            continue
        q_cr = np.sqrt(2.0 * (gamma - 1.0) / (gamma + 1.0) * bk)
        rho_cr = (bk / ((gamma + 1.0) * 0.5 * sk)) ** ex
        j_max = rho_cr * q_cr
        if jk > j_max * (1.0 + 1e-12):
            q[k] = q_cr
            flag[k] = FLAG_SONIC
            continue
        if jk >= j_max * (1.0 - 1e-15):
            q[k] = q_cr
            continue
        if jk == 0.0:
            q[k] = 0.0
            continue
        lo = 0.0
        hi = q_cr
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            f = ((2.0 * bk - mid * mid) * (0.5 / sk)) ** ex * mid - jk
            if f < 0.0:
                lo = mid
            else:
                hi = mid
        qk = 0.5 * (lo + hi)
        if mach_cap < 1.0:
            cap2 = mach_cap * mach_cap * (gamma - 1.0)
            q_cap = np.sqrt(cap2 * bk / (1.0 + 0.5 * cap2))
            if qk > q_cap:
                qk = q_cap
                flag[k] = FLAG_CAPPED
        q[k] = qk
    return q, flag


def subsonic_speed_batch(j, B, S, gamma, mach_cap=1.0):
    """Invert rho(q)*q = j nodewise on the subsonic branch.

    Returns ``(q, flag)`` with flags: 0 ok, 1 speed capped at ``mach_cap``,
    2 flux exceeds the sonic maximum (q set to q_cr), 3 invalid inputs.
    Never raises; callers decide policy from the flags.
    """
    j = np.ascontiguousarray(j, dtype=np.float64)
    B = np.ascontiguousarray(np.broadcast_to(B, j.shape), dtype=np.float64)
    S = np.ascontiguousarray(np.broadcast_to(S, j.shape), dtype=np.float64)
    shape = j.shape
    if USE_NUMBA:
        q, flag = _speed_batch_numba(j.ravel(), B.ravel(), S.ravel(),
                                     float(gamma), float(mach_cap))
    else:
        q, flag = _speed_batch_numpy(j.ravel(), B.ravel(), S.ravel(),
                                     float(gamma), float(mach_cap))
    return q.reshape(shape), flag.reshape(shape)


# ---------------------------------------------------------------------------
# 5-point stencil matvec for the conjugate-gradient solve.
#
# Unknowns live on a (ni, nj) logical grid; fx couples (i,j)-(i+1,j),
# fy couples (i,j)-(i,j+1); diag carries the accumulated conductances
# (including Dirichlet boundary faces folded into the right-hand side).
# ---------------------------------------------------------------------------

def _matvec5_numpy(fx, fy, diag, x, out):
    np.multiply(diag, x, out=out)
    out[:-1, :] -= fx * x[1:, :]
    out[1:, :] -= fx * x[:-1, :]
    out[:, :-1] -= fy * x[:, 1:]
    out[:, 1:] -= fy * x[:, :-1]
    return out


@njit(cache=True)
def _matvec5_numba(fx, fy, diag, x, out):  # pragma: no cover - jitted
    ni, nj = x.shape
    for i in range(ni):
        for j in range(nj):
            v = diag[i, j] * x[i, j]
            if i + 1 < ni:
                v -= fx[i, j] * x[i + 1, j]
            if i > 0:
                v -= fx[i - 1, j] * x[i - 1, j]
            if j + 1 < nj:
                v -= fy[i, j] * x[i, j + 1]
            if j > 0:
                v -= fy[i, j - 1] * x[i, j - 1]
            out[i, j] = v
    return out


def matvec5(fx, fy, diag, x, out=None):
    """Apply the SPD 5-point operator defined by face conductances."""
    if out is None:
        out = np.empty_like(x)
    if USE_NUMBA:
        return _matvec5_numba(fx, fy, diag, x, out)
    return _matvec5_numpy(fx, fy, diag, x, out)


# ---------------------------------------------------------------------------
# Cross-flux cell operator (the skew part of the mapped-coordinate tensor).
#
# Energy form per parameter cell: c * psi_xi * psi_sigma with bilinear cell
# gradients; its gradient couples the four cell corners symmetrically and
# vanishes identically where the walls are straight (c = 0 there).
# ---------------------------------------------------------------------------

def _cross_apply_numpy(c, x, dxi, dsig, out):
    gx = (x[1:, :-1] + x[1:, 1:] - x[:-1, :-1] - x[:-1, 1:]) / (2.0 * dxi)
    gs = (x[:-1, 1:] + x[1:, 1:] - x[:-1, :-1] - x[1:, :-1]) / (2.0 * dsig)
    a = c * gs * (0.5 / dxi) * (dxi * dsig)
    b = c * gx * (0.5 / dsig) * (dxi * dsig)
    out[:] = 0.0
    out[:-1, :-1] += -a - b
    out[1:, :-1] += a - b
    out[:-1, 1:] += -a + b
    out[1:, 1:] += a + b
    return out


@njit(cache=True)
def _cross_apply_numba(c, x, dxi, dsig, out):  # pragma: no cover - jitted
    ni, nj = x.shape
    for i in range(ni):
        for j in range(nj):
            out[i, j] = 0.0
    scale = dxi * dsig
    for i in range(ni - 1):
        for j in range(nj - 1):
            gx = (x[i + 1, j] + x[i + 1, j + 1] - x[i, j] - x[i, j + 1]) \
                / (2.0 * dxi)
            gs = (x[i, j + 1] + x[i + 1, j + 1] - x[i, j] - x[i + 1, j]) \
                / (2.0 * dsig)
            a = c[i, j] * gs * (0.5 / dxi) * scale
            b = c[i, j] * gx * (0.5 / dsig) * scale
            out[i, j] += -a - b
            out[i + 1, j] += a - b
            out[i, j + 1] += -a + b
            out[i + 1, j + 1] += a + b
    return out


def cross_apply(c, x, dxi, dsig, out=None):
    """Apply the symmetric cross-flux operator on the full node lattice."""
    if out is None:
        out = np.empty_like(x)
    if USE_NUMBA:
        return _cross_apply_numba(c, x, float(dxi), float(dsig), out)
    return _cross_apply_numpy(c, x, float(dxi), float(dsig), out)


def warmup():
    """Trigger jit compilation so timed sections never pay for it."""
    if not USE_NUMBA:
        return
    j = np.array([0.1, 0.2])
    one = np.ones(2)
    subsonic_speed_batch(j, one, one, 2.0, 0.999)
    z = np.zeros((3, 3))
    matvec5(np.ones((2, 3)), np.ones((3, 2)), np.full((3, 3), 4.0), z)
    cross_apply(np.ones((2, 2)), z, 0.1, 0.1)
