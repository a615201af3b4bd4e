"""Sonic-limit experiments and weak-form diagnostics.

Two sequences of flows probe the subsonic-sonic limit numerically:

* grid refinement at a fixed mass flux, which must drive the weak
  conservation residuals to zero and concentrate the sampled velocity
  distribution (strong convergence of the discrete family), and
* mass flux rising toward the critical value at a fixed grid, along which
  the admissibility surrogates are monitored: Mach bounded by the target,
  head/entropy bounds on a fixed interior window, and the total variation
  of the discrete curl staying uniformly bounded.

Weak residuals test the discrete divergence of each conservation-law flux
against a family of smooth interior bumps (summation-by-parts pairing, so
a stream-function field registers a mass residual at rounding level and a
tampered field at full size).  The boundary-trace check integrates the
mass flux against test functions supported up to the walls: with interior
mass balance and wall slip both holding, the integral is a pure boundary
term and measures the normal-trace defect.

The velocity-concentration statistic applies the monotone-flux pairing
form to weighted velocity samples: it is nonnegative by the subsonic
monotonicity of the flux and vanishes only when the sample collapses to a
single velocity, so its decay across a sequence certifies concentration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import thermo
from .errors import ConvergenceError, DomainError, LinearSolverError, SonicExceeded
from .fields import FlowField
from .geometry import Grid, dparam
from .solver import SolverOptions, picard_solve
from .upstream import UpstreamData


# ---------------------------------------------------------------------------
# Mapped-coordinate divergence and test functions
# ---------------------------------------------------------------------------

def mapped_divergence(grid: Grid, F1, F2, parity1: float = 1.0,
                      parity2: float = 1.0):
    """Discrete divergence of a flux (F1, F2) in mapped coordinates.

    Uses the identity J div F = d/dxi (J F.grad xi) + d/dsigma (J F.grad
    sigma); for the shear mapping the two flux components reduce to
    t_sig*F1 and F2 - t_x1*F1, so stream-function mass fluxes cancel to
    rounding.  Parities select the axis ghosts of the two components.
    """
    G_xi = grid.t_sig * F1
    G_sg = F2 - grid.t_x1 * F1
    low2 = "onesided"
    if grid.is_axi:
        low2 = "mirror_even" if parity2 > 0 else "mirror_odd"
    d1 = dparam(G_xi, grid.dx1, axis=0)
    d2 = dparam(G_sg, grid.dsig, axis=1, low=low2)
    return (d1 + d2) / grid.t_sig


def _bump(t):
    """C-infinity bump on (-1, 1), peak value 1."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    tt = np.where(inside, t, 0.0)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - tt * tt))[inside]
    return out


def _bump_deriv(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    tt = np.where(inside, t, 0.0)
    denom = (1.0 - tt * tt) ** 2
    out[inside] = (np.exp(1.0 - 1.0 / (1.0 - tt * tt)) *
                   (-2.0 * tt / denom))[inside]
    return out


def bump_family(grid: Grid, centers=(0.3, 0.5, 0.7), widths=(0.18, 0.10)):
    """Tensor-product smooth bumps compactly supported in the interior.

    Bumps live in the (x1-fraction, sigma) parameter rectangle; each entry
    carries nodal values, the physical gradient (chain rule through the
    grid metrics), and its L1 gradient norm.
    """
    xf = (grid.x1 - grid.x1[0]) / (grid.x1[-1] - grid.x1[0])
    w = grid.node_weights()
    out = []
    for width in widths:
        for cx in centers:
            for cs in centers:
                tx = (xf - cx) / width
                ts = (grid.sigma - cs) / width
                phi = _bump(tx)[:, None] * _bump(ts)[None, :]
                dphi_dxf = (_bump_deriv(tx) / width)[:, None] * _bump(ts)[None, :]
                dphi_ds = _bump(tx)[:, None] * (_bump_deriv(ts) / width)[None, :]
                dphi_dxi = dphi_dxf / (grid.x1[-1] - grid.x1[0])
                # physical gradient through the shear mapping
                gy = dphi_ds / grid.t_sig
                gx = dphi_dxi - (grid.t_x1 / grid.t_sig) * dphi_ds
                norm = float(np.sum(np.hypot(gx, gy) * w))
                out.append({"phi": phi, "grad_x": gx, "grad_t": gy,
                            "norm": norm, "center": (cx, cs), "width": width})
    return out


# ---------------------------------------------------------------------------
# Weak residuals of the conservation laws
# ---------------------------------------------------------------------------

def _flux_tables(field: FlowField, gas: thermo.GasModel):
    """(name, F1, F2, source, parity1, parity2) per conservation law."""
    rho, u1, u2, p, q = field.rho, field.u1, field.u2, field.p, field.q
    if gas.is_full_euler:
        g = gas.gamma
        rhoB = 0.5 * rho * q * q + g * p / (g - 1.0)
    else:
        rhoB = None
    laws = []
    if field.kind == "axisymmetric":
        r = field.trans
        laws.append(("mass", r * rho * u1, r * rho * u2, None, -1.0, +1.0))
        laws.append(("momentum_x1", r * (rho * u1 * u1 + p), r * rho * u1 * u2,
                     None, -1.0, +1.0))
        laws.append(("momentum_r", r * rho * u1 * u2, r * (rho * u2 * u2 + p),
                     p, +1.0, -1.0))
        if rhoB is not None:
            laws.append(("energy", r * rhoB * u1, r * rhoB * u2, None, -1.0, +1.0))
    else:
        laws.append(("mass", rho * u1, rho * u2, None, +1.0, +1.0))
        laws.append(("momentum_x1", rho * u1 * u1 + p, rho * u1 * u2,
                     None, +1.0, +1.0))
        laws.append(("momentum_x2", rho * u1 * u2, rho * u2 * u2 + p,
                     None, +1.0, +1.0))
        if rhoB is not None:
            laws.append(("energy", rhoB * u1, rhoB * u2, None, +1.0, +1.0))
    return laws


def weak_residuals(field: FlowField, gas: thermo.GasModel,
                   test_family=None, grid: Grid | None = None) -> dict:
    """Distributional residual of each conservation law.

    residual = max over test bumps of |sum div_h(F) phi dA| / ||grad phi||_L1
    (midpoint quadrature over the grid; the radial momentum law in the
    axisymmetric case carries its pressure source).
    """
    if grid is None:
        grid = field.grid()
    if test_family is None:
        test_family = bump_family(grid)
    for tf in test_family:
        phi = tf["phi"]
        nz = np.argwhere(phi != 0.0)
        if nz.size and (nz[:, 0].min() < 2 or nz[:, 0].max() > grid.ni - 3
                        or nz[:, 1].min() < 2 or nz[:, 1].max() > grid.nj - 3):
            raise DomainError("test-function support reaches the boundary layer")
    w = grid.node_weights()
    out = {}
    for name, F1, F2, src, p1, p2 in _flux_tables(field, gas):
        div = mapped_divergence(grid, F1, F2, p1, p2)
        if src is not None:
            div = div - src
        best = 0.0
        for tf in test_family:
            val = abs(float(np.sum(div * tf["phi"] * w))) / tf["norm"]
            best = max(best, val)
        out[name] = best
    return out


# ---------------------------------------------------------------------------
# Curl diagnostics
# ---------------------------------------------------------------------------

def discrete_curl(field: FlowField, grid: Grid | None = None):
    """curl u = d(u2)/dx1 - d(u1)/dtransverse at the nodes."""
    if grid is None:
        grid = field.grid()
    dv_dx, _ = grid.gradient(field.u2, parity=-1.0)
    _, du_dt = grid.gradient(field.u1, parity=+1.0)
    return dv_dx - du_dt


def curl_tv(field: FlowField, gas=None, window: np.ndarray | None = None,
            grid: Grid | None = None) -> float:
    """Total variation of the discrete curl over an interior window."""
    if grid is None:
        grid = field.grid()
    if window is None:
        window = grid.window_mask(0.5)
    if not window.any():
        raise DomainError("empty diagnostic window")
    if window[0, :].any() or window[-1, :].any() or window[:, -1].any() \
            or (not grid.is_axi and window[:, 0].any()):
        raise DomainError("diagnostic window must be strictly interior")
    omega = discrete_curl(field, grid)
    return float(np.sum(np.abs(omega)[window] * grid.node_weights()[window]))


# ---------------------------------------------------------------------------
# Velocity-distribution concentration
# ---------------------------------------------------------------------------

def concentration(samples, weights, B: float, S: float,
                  gas: thermo.GasModel) -> dict:
    """Pairing statistic and speed variance of a weighted velocity sample.

    pairing_stat = sum_ab w_a w_b I(u_a, u_b) >= 0, zero only for a point
    mass (strictly inside the subsonic branch); speed_variance is the
    weighted variance of the speeds.
    """
    u = np.asarray(samples, dtype=float)
    w = np.asarray(weights, dtype=float)
    if u.ndim != 2:
        raise DomainError("samples must be an (n, dim) array")
    if np.any(w < 0.0) or abs(float(w.sum()) - 1.0) > 1e-10:
        raise DomainError("weights must be nonnegative and sum to 1")
    q = np.linalg.norm(u, axis=1)
    if gas.is_full_euler:
        q_cr = float(thermo.critical_speed(B, gas.gamma))
        if np.any(q > q_cr * (1.0 + 1e-12)):
            raise DomainError("supersonic velocity sample")
        rho = thermo.density_from_speed(q, B, S, gas.gamma)
    else:
        cs = thermo.critical_state_hom(gas.law, B)
        if np.any(q > cs.q_cr * (1.0 + 1e-12)):
            raise DomainError("supersonic velocity sample")
        rho = thermo.density_from_bernoulli_hom(gas.law, q, B)
    ru = rho[:, None] * u
    # I_ab = (rho_a u_a - rho_b u_b) . (u_a - u_b)
    dot_ru_u = ru @ u.T
    diag_ruu = np.einsum("ij,ij->i", ru, u)
    I = diag_ruu[:, None] + diag_ruu[None, :] - dot_ru_u - dot_ru_u.T
    pairing_stat = float(w @ I @ w)
    qbar = float(w @ q)
    return {"pairing_stat": pairing_stat,
            "speed_variance": float(w @ (q - qbar) ** 2)}


def sample_velocity(field: FlowField, stations):
    """Bilinear velocity samples at fixed (x1, sigma) stations."""
    grid = field.grid()
    out = np.empty((len(stations), 2))
    for k, (x, s) in enumerate(stations):
        fi = (x - grid.x1[0]) / grid.dx1
        i0 = int(np.clip(math.floor(fi), 0, grid.ni - 2))
        ax = fi - i0
        fj = (s - grid.sigma[0]) / grid.dsig
        j0 = int(np.clip(math.floor(fj), 0, grid.nj - 2))
        aj = fj - j0
        for c, comp in enumerate((field.u1, field.u2)):
            out[k, c] = ((1 - ax) * (1 - aj) * comp[i0, j0]
                         + ax * (1 - aj) * comp[i0 + 1, j0]
                         + (1 - ax) * aj * comp[i0, j0 + 1]
                         + ax * aj * comp[i0 + 1, j0 + 1])
    return out


DEFAULT_STATIONS = tuple((fx, fs) for fx in (0.35, 0.5, 0.65)
                         for fs in (0.3, 0.5, 0.7))


def _absolute_stations(grid: Grid, stations=DEFAULT_STATIONS):
    span = grid.x1[-1] - grid.x1[0]
    return [(grid.x1[0] + fx * span, fs) for fx, fs in stations]


def station_concentration(field: FlowField, gas: thermo.GasModel,
                          stations=None) -> dict:
    """Single-flow concentration statistic over the default station set."""
    grid = field.grid()
    pts = stations or _absolute_stations(grid)
    u = sample_velocity(field, pts)
    w = np.full(len(pts), 1.0 / len(pts))
    B, S = _reference_head(field, gas)
    return concentration(u, w, B, S, gas)


def cross_sequence_concentration(fields, gas: thermo.GasModel,
                                 stations=None) -> dict:
    """Concentration of velocity samples across a flow sequence.

    At each fixed station the sequence contributes one velocity per flow;
    the reported pairing statistic is the worst station (zero exactly when
    every station's velocities coincide across the sequence).
    """
    grid = fields[-1].grid()
    pts = stations or _absolute_stations(grid)
    B, S = _reference_head(fields[-1], gas)
    n = len(fields)
    w = np.full(n, 1.0 / n)
    worst = {"pairing_stat": 0.0, "speed_variance": 0.0}
    for k in range(len(pts)):
        u = np.vstack([sample_velocity(f, [pts[k]])[0] for f in fields])
        stat = concentration(u, w, B, S, gas)
        if stat["pairing_stat"] >= worst["pairing_stat"]:
            worst = stat
    return worst


def _reference_head(field: FlowField, gas: thermo.GasModel):
    win = field.grid().window_mask(0.5)
    B = float(np.mean(field.bernoulli[win]))
    S = float(np.mean(field.entropy[win])) if gas.is_full_euler else 0.0
    return B, S


# ---------------------------------------------------------------------------
# Head-gradient (Crocco) identity
# ---------------------------------------------------------------------------

def bernoulli_gradient_check(field: FlowField, gas: thermo.GasModel,
                             grid: Grid | None = None) -> float:
    """L1 defect of grad B = u x curl u + (rho^(gamma-1)/gamma) grad S.

    All derivatives discrete and centered; the entropy term drops for
    barotropic runs.  Decays at least first order under refinement for a
    consistent solve.
    """
    if grid is None:
        grid = field.grid()
    omega = discrete_curl(field, grid)
    dB_dx, dB_dt = grid.gradient(field.bernoulli, parity=+1.0)
    r1 = dB_dx - field.u2 * omega
    r2 = dB_dt + field.u1 * omega
    if gas.is_full_euler:
        dS_dx, dS_dt = grid.gradient(field.entropy, parity=+1.0)
        coef = field.rho ** (gas.gamma - 1.0) / gas.gamma
        r1 = r1 - coef * dS_dx
        r2 = r2 - coef * dS_dt
    mask = grid.interior_mask(2)
    w = grid.node_weights()
    return float(np.sum((np.abs(r1) + np.abs(r2))[mask] * w[mask]))


# ---------------------------------------------------------------------------
# Boundary trace (normal-flux defect at the walls)
# ---------------------------------------------------------------------------

def _wall_cutoff(sigma, at_top: bool):
    # smooth profile equal to 1 on the wall, vanishing by mid-channel
    s = np.asarray(sigma, dtype=float)
    t = (1.0 - s) / 0.45 if at_top else s / 0.45
    val = np.where(t < 1.0, _bump(t), 0.0)
    dval = np.where(t < 1.0, _bump_deriv(t), 0.0) * (-1.0 / 0.45 if at_top else 1.0 / 0.45)
    return val, dval


def wall_test_family(grid: Grid) -> list:
    """Wall-hugging test functions, smooth up to one wall each.

    Each entry is a dict with nodal values and the physical gradient.  The
    streamwise envelopes vanish at the truncations so the inlet/outlet
    faces contribute nothing and the functional isolates the wall trace.
    """
    span = grid.x1[-1] - grid.x1[0]
    xf = (grid.x1 - grid.x1[0]) / span
    gx_env = _bump((xf - 0.5) / 0.42)
    dgx_env = _bump_deriv((xf - 0.5) / 0.42) / (0.42 * span)
    ripple = np.sin(2.0 * np.pi * xf)
    dripple = 2.0 * np.pi * np.cos(2.0 * np.pi * xf) / span
    envelopes = [("", gx_env, dgx_env),
                 ("_ripple", gx_env * ripple,
                  dgx_env * ripple + gx_env * dripple)]
    walls = [("upper_wall", True)]
    if not grid.is_axi:
        walls.append(("lower_wall", False))
    family = []
    for wall, at_top in walls:
        cut, dcut = _wall_cutoff(grid.sigma, at_top)
        for tag, gval, dgval in envelopes:
            phi = gval[:, None] * cut[None, :]
            grad_x = dgval[:, None] * cut[None, :] \
                + gval[:, None] * dcut[None, :] * (-grid.t_x1 / grid.t_sig)
            grad_t = gval[:, None] * dcut[None, :] / grid.t_sig
            family.append({"name": wall + tag, "group": wall, "phi": phi,
                           "grad_x": grad_x, "grad_t": grad_t})
    return family


def transverse_test_family(grid: Grid, at_top: bool = True) -> list:
    """Test function depending on the transverse parameter only."""
    cut, dcut = _wall_cutoff(grid.sigma, at_top)
    ones = np.ones(grid.ni)
    phi = ones[:, None] * cut[None, :]
    grad_x = ones[:, None] * dcut[None, :] * (-grid.t_x1 / grid.t_sig)
    grad_t = ones[:, None] * dcut[None, :] / grid.t_sig
    name = "transverse_upper" if at_top else "transverse_lower"
    return [{"name": name, "group": name, "phi": phi,
             "grad_x": grad_x, "grad_t": grad_t}]


def boundary_trace(field: FlowField, test_family=None,
                   grid: Grid | None = None) -> dict:
    """Gauss-Green mass-flux defect against wall-supported test functions.

    With interior mass balance holding, integral of (rho u) . grad(phi)
    reduces to the boundary flux of rho u against phi; for the default
    family (wall-hugging, vanishing at the truncations) a nonzero value
    measures the normal-trace defect on the walls.  Values are grouped by
    the family's ``group`` tags and normalised by ||grad phi||_L1.
    """
    if grid is None:
        grid = field.grid()
    if test_family is None:
        test_family = wall_test_family(grid)
    w = grid.node_weights()
    F1 = field.rho * field.u1
    F2 = field.rho * field.u2
    if grid.is_axi:
        F1 = F1 * field.trans
        F2 = F2 * field.trans
    out = {}
    for tf in test_family:
        norm = float(np.sum(np.hypot(tf["grad_x"], tf["grad_t"]) * w))
        val = abs(float(np.sum((F1 * tf["grad_x"] + F2 * tf["grad_t"]) * w))) / norm
        group = tf.get("group", tf.get("name", "test"))
        out[group] = max(out.get(group, 0.0), val)
    out["max"] = max(out.values())
    return out


# ---------------------------------------------------------------------------
# Diagnostics bundle and the critical-flux sweep
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticsBundle:
    weak: dict
    curl_tv: float
    bounds: dict
    concentration: dict
    boundary: dict

    def as_dict(self) -> dict:
        return {"weakResiduals": self.weak, "curlTV": self.curl_tv,
                "bounds": self.bounds, "concentration": self.concentration,
                "boundaryTrace": self.boundary}

    def finite(self) -> bool:
        vals = [self.curl_tv, *self.weak.values(), *self.bounds.values(),
                *self.concentration.values(), *self.boundary.values()]
        return all(np.isfinite(v) for v in vals)


def diagnostics_bundle(field: FlowField, gas: thermo.GasModel,
                       window_frac: float = 0.5) -> DiagnosticsBundle:
    grid = field.grid()
    window = grid.window_mask(window_frac)
    weak = weak_residuals(field, gas, grid=grid)
    tv = curl_tv(field, window=window, grid=grid)
    bounds = {
        "max_mach": float(np.max(field.mach)),
        "window_inf_S": float(np.min(field.entropy[window])),
        "window_sup_S": float(np.max(field.entropy[window])),
        "window_inf_B": float(np.min(field.bernoulli[window])),
        "window_sup_B": float(np.max(field.bernoulli[window])),
        "min_rho": float(np.min(field.rho)),
    }
    conc = station_concentration(field, gas)
    btrace = boundary_trace(field, grid=grid)
    return DiagnosticsBundle(weak=weak, curl_tv=tv, bounds=bounds,
                             concentration=conc, boundary=btrace)


@dataclass
class SweepEntry:
    m: float
    status: str          # accepted | rejected_mach | rejected_sonic | rejected_diverged
    max_mach: float | None = None
    detail: str = ""
    diagnostics: DiagnosticsBundle | None = None

    def as_dict(self) -> dict:
        d = {"m": self.m, "status": self.status, "maxMach": self.max_mach,
             "detail": self.detail}
        if self.diagnostics is not None:
            d.update(self.diagnostics.as_dict())
        return d


@dataclass
class SweepReport:
    entries: list
    m_hat_bracket: tuple
    mach_target: float
    m_tol: float
    grid_shape: tuple
    sequence: str = "mass_flux"

    @property
    def accepted(self):
        return [e for e in self.entries if e.status == "accepted"]

    def max_mach_monotone(self) -> bool:
        ms = sorted(self.accepted, key=lambda e: e.m)
        vals = [e.max_mach for e in ms]
        return all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def as_dict(self) -> dict:
        acc = sorted(self.accepted, key=lambda e: e.m)
        return {
            "sequence": self.sequence,
            "machTarget": self.mach_target,
            "mTol": self.m_tol,
            "grid": list(self.grid_shape),
            "mHatBracket": list(self.m_hat_bracket),
            "maxMachMonotone": self.max_mach_monotone(),
            # the bracket pins the critical flux; whether the limit is a
            # sonic flow or a loss of existence is not decidable from a
            # failed solve, so only the last subsonic record is stated
            "lastAcceptedMaxMach": acc[-1].max_mach if acc else None,
            "outletCondition": "zero streamwise stream-function gradient "
                               "at the downstream truncation",
            "entries": [e.as_dict() for e in sorted(self.entries, key=lambda e: e.m)],
        }


def sweep_to_sonic(nozzle, data: UpstreamData, gas: thermo.GasModel,
                   grid: Grid, m_start: float, mach_target: float = 0.99,
                   m_tol: float = 1e-4, solver_options: SolverOptions | None = None,
                   growth: float = 1.3, on_accept=None) -> SweepReport:
    """Bisect the mass flux onto the critical value.

    Accepted solves converge with max Mach at or below ``mach_target``;
    anything else (local sonic excess, Mach-capped convergence, or outer
    divergence) rejects the flux.  The bracket shrinks until its width is
    at most ``m_tol``.  Each accepted solve carries a full diagnostics
    bundle; ``on_accept(m, solution)`` lets callers persist fields as the
    sweep runs.  Solves warm-start from the last accepted state.
    """
    opts = solver_options or SolverOptions()
    entries = []
    warm = None

    def attempt(m):
        nonlocal warm
        try:
            sol = picard_solve(nozzle, data, gas, m, grid,
                               options=opts, init=warm)
        except SonicExceeded as exc:
            entries.append(SweepEntry(m=m, status="rejected_sonic",
                                      detail=str(exc)))
            return False
        except (ConvergenceError, LinearSolverError) as exc:
            entries.append(SweepEntry(m=m, status="rejected_diverged",
                                      detail=str(exc)))
            return False
        mx = float(np.max(sol.flow.mach))
        if mx > mach_target:
            entries.append(SweepEntry(m=m, status="rejected_mach", max_mach=mx,
                                      detail=f"max Mach {mx:.6f} above target"))
            return False
        entries.append(SweepEntry(m=m, status="accepted", max_mach=mx,
                                  diagnostics=diagnostics_bundle(sol.flow, gas)))
        warm = (sol.flow.psi, sol.flow.rho, m)
        if on_accept is not None:
            on_accept(m, sol)
        return True

    if not attempt(m_start):
        raise DomainError(f"sweep start m = {m_start!r} is not feasible")

    m_lo = m_start
    m_hi = None
    m = m_start
    for _ in range(60):
        m = m * growth
        if attempt(m):
            m_lo = m
        else:
            m_hi = m
            break
    if m_hi is None:
        raise DomainError("no sonic blockage found within the growth budget")

    while m_hi - m_lo > m_tol:
        mid = 0.5 * (m_lo + m_hi)
        if attempt(mid):
            m_lo = mid
        else:
            m_hi = mid

    return SweepReport(entries=entries, m_hat_bracket=(m_lo, m_hi),
                       mach_target=mach_target, m_tol=m_tol,
                       grid_shape=(grid.nx, grid.ns))
