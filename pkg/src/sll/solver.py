"""Stream-function Picard solver for steady subsonic nozzle flow.

The flow is reconstructed from one scalar field.  Each outer sweep:

1. invert the upstream cumulative stream function to get streamline
   labels at every node (the backward label map),
2. pull the head and entropy profiles onto the nodes along streamlines,
3. form the nodal mass-flux magnitude j = |grad psi| (divided by r in the
   axisymmetric case) from mapped-coordinate gradients,
4. invert the subsonic flux relation for the speed, q = q(j; B, S), and
   set rho = j / q (stagnation nodes take the analytic q -> 0 density),
5. evaluate the shear-induced vorticity from the upstream profiles,
6. refresh the density under-relaxed and re-solve the elliptic stream-
   function equation with the new coefficients and source.

Convergence is measured on the relative density update.  A node whose
flux demands a supersonic state aborts the solve with the local excess
(this is the sonic detector the critical-flux sweep relies on); a node
pinned at the Mach cap through convergence is reported the same way,
since the subsonic branch cannot carry the requested flux there either.

Vorticity source (curl u = d(u2)/dx1 - d(u1)/dy orientation, consistent
with u = (psi_y, -psi_x1) / rho):

    plane:  omega   = (rho^gamma S' / gamma - rho B') / (rho_- u_-)
    axi:    omega   = r (rho^gamma (S'/s) / gamma - rho (B'/s)) / (rho_- u_-)

with the profile derivatives taken at the node's label s and rho_- u_-
the upstream flux density on the same streamline.  Barotropic runs drop
the entropy term.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels, thermo
from .elliptic import elliptic_solve
from .errors import ConvergenceError, SolverStateError, SonicExceeded
from .fields import (FlowField, conservation_defect, derived_state,
                     flux_magnitude_from_psi, velocity_from_psi)
from .geometry import Grid
from .upstream import UpstreamData, UpstreamState, transport_eval, upstream_state

_STAGNATION_FLUX = 1e-13


@dataclass
class SolverOptions:
    relax: float = 0.5
    tol: float = 1e-8
    max_iter: int = 200
    mach_cap: float = 0.999
    cg_tol: float = 1e-10
    cg_maxiter: int | None = None
    min_relax: float = 1.0 / 16.0


@dataclass
class StreamSolution:
    """Converged stream-function solve with flow field and metadata."""

    flow: FlowField
    grid: Grid
    upstream: UpstreamState
    mass_flux: float
    iterations: int
    residual_history: list
    converged: bool
    cap_count: int
    conservation_defect: float
    label_clamps: int
    cg_iterations: int
    wall_time: float


def vorticity_source(rho, label, state: UpstreamState, data: UpstreamData,
                     gas: thermo.GasModel, grid: Grid):
    """Nodal vorticity implied by upstream head/entropy shear.

    The upstream flux density rho_-(s) u_-(s) on each streamline scales the
    source; values below 1e-14 mean a degenerate upstream state.
    """
    lab = np.clip(np.asarray(label, dtype=float), 0.0, 1.0)
    flux_minus = state.rho_at(lab) * state.u_at(lab)
    if np.any(np.abs(flux_minus) < 1e-14):
        raise SolverStateError("degenerate upstream flux density on a streamline")
    if grid.is_axi:
        dB_s = data.B.derivative_over_s(lab)
        dS_s = data.S.derivative_over_s(lab) if data.S is not None else 0.0
        if gas.is_full_euler:
            core = rho ** gas.gamma * dS_s / gas.gamma - rho * dB_s
        else:
            core = -rho * dB_s
        return grid.trans * core / flux_minus
    _, _, dB, dS = transport_eval(lab, data)
    if gas.is_full_euler:
        core = rho ** gas.gamma * dS / gas.gamma - rho * dB
    else:
        core = -rho * dB
    return core / flux_minus


def _speeds(gas: thermo.GasModel, j, B, S, mach_cap):
    if gas.is_full_euler:
        return _kernels.subsonic_speed_batch(j, B, S, gas.gamma, mach_cap)
    return thermo.hom_speed_batch(gas.law, j, B, mach_cap)


def _stagnation_rho(gas: thermo.GasModel, B, S):
    if gas.is_full_euler:
        return thermo.stagnation_density(B, S, gas.gamma)
    return gas.law.enthalpy_inverse(B)


def _raise_sonic(grid: Grid, gas: thermo.GasModel, j, B, S, flags):
    nodes = np.argwhere(flags == _kernels.FLAG_SONIC)
    worst = None
    worst_ratio = 0.0
    for i, jn in nodes:
        if gas.is_full_euler:
            loc = thermo.critical_state(float(B[i, jn]), float(S[i, jn]), gas.gamma)
            jmx = loc.j_max
        else:
            _, _, jmx = thermo.hom_critical_batch(gas.law, float(B[i, jn]))
            jmx = float(jmx)
        ratio = float(j[i, jn]) / jmx
        if ratio > worst_ratio:
            worst_ratio = ratio
            worst = (int(i), int(jn), jmx, float(j[i, jn]))
    i, jn, jmx, jval = worst
    raise SonicExceeded(
        f"flux demands a supersonic state at node ({i}, {jn}): "
        f"j = {jval:.6g}, local maximum {jmx:.6g} (ratio {worst_ratio:.4f})",
        j_max=jmx, j=jval, node=(i, jn))


def picard_solve(nozzle, data: UpstreamData, gas: thermo.GasModel, m: float,
                 grid: Grid, options: SolverOptions | None = None,
                 init: tuple | None = None) -> StreamSolution:
    """Construct the subsonic flow carrying mass flux m through the nozzle.

    ``init`` may carry (psi, rho) from a nearby solve to warm-start the
    iteration (the critical-flux sweep leans on this near the limit).
    """
    opts = options or SolverOptions()
    t0 = time.perf_counter()

    state = upstream_state(m, data, gas, axisymmetric=grid.is_axi,
                           panels=max(4 * grid.ns, 256))
    if state.at_cap:
        raise SonicExceeded(
            f"mass flux {m!r} sits at the upstream sonic limit {state.flux_max!r}",
            j_max=state.flux_max, j=m)

    inlet_psi = np.asarray(state.psi_at(grid.sigma), dtype=float)
    if not grid.is_axi:
        inlet_psi[0] = 0.0
        inlet_psi[-1] = m

    warn = {}
    if init is not None:
        psi0, rho0, m_prev = init
        psi = np.asarray(psi0, dtype=float) * (m / m_prev)
        rho = np.asarray(rho0, dtype=float).copy()
        label = state.label_from_psi(psi, warn_counter=warn)
    else:
        psi = np.broadcast_to(inlet_psi, (grid.ni, grid.nj)).copy()
        label = state.label_from_psi(psi, warn_counter=warn)
        rho = np.asarray(state.rho_at(label), dtype=float)
    B, S, _, _ = transport_eval(label, data)

    relax = opts.relax
    residuals = []
    cg_total = 0
    cap_count = 0
    flags = np.zeros_like(rho, dtype=np.int8)
    converged = False

    for it in range(1, opts.max_iter + 1):
        omega = vorticity_source(rho, label, state, data, gas, grid)
        psi, cg_it, _ = elliptic_solve(grid, rho, omega, m, inlet_psi,
                                       psi0=psi, tol=opts.cg_tol,
                                       maxiter=opts.cg_maxiter)
        cg_total += cg_it

        # early iterates may overshoot the wall value while the density
        # settles; give them a wide clamp band and re-check strictly at
        # convergence
        label = state.label_from_psi(psi, clamp_tol=5e-3, warn_counter=warn)
        B, S, _, _ = transport_eval(label, data)
        j = flux_magnitude_from_psi(grid, psi)
        q, flags = _speeds(gas, j, B, S, opts.mach_cap)
        if np.any(flags == _kernels.FLAG_DOMAIN):
            raise SolverStateError("invalid state reached in the flux inversion")
        if np.any(flags == _kernels.FLAG_SONIC):
            _raise_sonic(grid, gas, j, B, S, flags)
        cap_count = int(np.count_nonzero(flags == _kernels.FLAG_CAPPED))

        stag = j < _STAGNATION_FLUX
        with np.errstate(divide="ignore", invalid="ignore"):
            rho_new = np.where(stag, _stagnation_rho(gas, B, S),
                               j / np.where(stag, 1.0, q))

        rho_next = (1.0 - relax) * rho + relax * rho_new
        res = float(np.max(np.abs(rho_next - rho) / rho_next))
        if residuals and res > residuals[-1]:
            relax = max(0.5 * relax, opts.min_relax)
        residuals.append(res)
        rho = rho_next
        if res <= opts.tol:
            converged = True
            break

    if not converged:
        raise ConvergenceError(
            f"no convergence in {opts.max_iter} sweeps "
            f"(last residual {residuals[-1]:.3e})", residual_history=residuals)
    if cap_count:
        # converged onto the cap: the subsonic branch cannot carry this flux
        i, jn = map(int, np.argwhere(flags == _kernels.FLAG_CAPPED)[0])
        raise SonicExceeded(
            f"converged with {cap_count} node(s) held at the Mach cap "
            f"{opts.mach_cap}, first at ({i}, {jn})",
            j_max=None, node=(i, jn))
    # the converged field must honour the wall values strictly
    label = state.label_from_psi(psi, clamp_tol=1e-6, warn_counter=warn)

    u1, u2 = velocity_from_psi(grid, psi, rho)
    if gas.is_full_euler:
        p = (gas.gamma - 1.0) / gas.gamma * S * rho ** gas.gamma
    else:
        p = np.asarray(gas.law.pressure(rho), dtype=float)
    omega = vorticity_source(rho, label, state, data, gas, grid)
    _, mach, B_out, S_out = derived_state(gas, rho, p, q)

    flow = FlowField(kind=grid.kind, x1=grid.x1.copy(), trans=grid.trans.copy(),
                     rho=rho, u1=u1, u2=u2, p=p, q=q, mach=np.asarray(mach),
                     bernoulli=np.asarray(B_out), entropy=np.asarray(S_out),
                     psi=psi, label=np.asarray(label), omega=np.asarray(omega),
                     mass_flux=m)
    defect = conservation_defect(flow, grid)
    return StreamSolution(flow=flow, grid=grid, upstream=state, mass_flux=m,
                          iterations=it, residual_history=residuals,
                          converged=True, cap_count=0,
                          conservation_defect=defect,
                          label_clamps=warn.get("label_clamps", 0),
                          cg_iterations=cg_total,
                          wall_time=time.perf_counter() - t0)
