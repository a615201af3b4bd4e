"""Acceptance suite: one test per exit criterion, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the one-line
PASS/FAIL report per criterion.  Every tolerance is pinned here; nothing
defers to later calibration.
"""

import copy
import time

import numpy as np
import pytest

from sll import elliptic, limits, oracles, thermo
from sll.fields import conservation_defect
from sll.geometry import (build_grid, straight_nozzle_2d, straight_pipe,
                          tanh_nozzle_2d)
from sll.solver import SolverOptions, picard_solve
from sll.upstream import Profile, UpstreamData, upstream_state

GAS2 = thermo.GasModel(kind="full_euler", gamma=2.0)
UNIFORM = UpstreamData(B=Profile.constant(1.0), S=Profile.constant(1.0))
SHEARED = UpstreamData(B=Profile.quadratic(1.0, 0.05),
                       S=Profile.quadratic(1.0, -0.03))
J_MAX = thermo.critical_state(1.0, 1.0, 2.0).j_max
Q_REF = 0.3157380436470593  # scan+bisection oracle for j = 0.3, B = S = 1, gamma = 2


def _verdict(num, desc, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    extra = f"  [{detail}]" if detail else ""
    print(f"ACCEPTANCE {num:02d} {tag} - {desc}{extra}")
    assert ok, f"criterion {num}: {desc} {extra}"


def test_criterion_01_state_algebra_round_trip():
    rng = np.random.default_rng(101)
    n = 10_000
    B = rng.uniform(0.1, 10.0, n)
    S = rng.uniform(0.1, 10.0, n)
    gam = rng.uniform(1.05, 3.0, n)
    q = rng.uniform(0.0, 1.0, n) * np.sqrt(2.0 * (gam - 1.0) / (gam + 1.0) * B)
    t0 = time.perf_counter()
    rho = ((2.0 * B - q * q) / (2.0 * S)) ** (1.0 / (gam - 1.0))
    p = (gam - 1.0) / (2.0 * gam) * (2.0 * B - q * q) ** (gam / (gam - 1.0)) \
        / (2.0 * S) ** (1.0 / (gam - 1.0))
    B_back = thermo.bernoulli(rho, p, q, gam)
    S_back = thermo.entropy(rho, p, gam)
    elapsed = time.perf_counter() - t0
    errB = float(np.max(np.abs(B_back - B) / B))
    errS = float(np.max(np.abs(S_back - S) / S))
    _verdict(1, "state-algebra round trip (10,000 samples, rel 1e-10, < 1 s)",
             errB <= 1e-10 and errS <= 1e-10 and elapsed < 1.0,
             f"errB={errB:.2e} errS={errS:.2e} t={elapsed:.3f}s")


def test_criterion_02_inversion_vs_oracle():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(10):
        B = rng.uniform(0.3, 4.0)
        S = rng.uniform(0.3, 4.0)
        gam = rng.uniform(1.2, 2.5)
        q_peak, j_max = oracles.scan_peak_flux(B, S, gam)
        fluxes = list(rng.uniform(0.0, j_max, 100)) + [0.0, j_max]
        for j in fluxes:
            q_lib = thermo.speed_from_mass_flux(float(j), B, S, gam)
            q_orc = oracles.speed_from_flux(float(j), B, S, gam)
            worst = max(worst, abs(q_lib - q_orc))
    _verdict(2, "subsonic inversion matches scan+bisection oracle "
                "(1,020 fluxes incl. endpoints, 1e-9)",
             worst <= 1e-9, f"worst |dq|={worst:.2e}")


def test_criterion_03_monotonicity_derivative():
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(100):
        B = rng.uniform(0.5, 2.0)
        S = rng.uniform(0.5, 2.0)
        gam = rng.uniform(1.2, 3.0)
        q_cr = float(thermo.critical_speed(B, gam))
        for q in rng.uniform(0.0, q_cr, 5):
            h = 1e-6
            qm, qp = max(q - h, 0.0), min(q + h, q_cr)
            jm, _ = thermo.mass_flux_density(qm, B, S, gam)
            jp, _ = thermo.mass_flux_density(qp, B, S, gam)
            _, d = thermo.mass_flux_density(q, B, S, gam)
            worst = max(worst, abs(float(d) - (float(jp) - float(jm)) / (qp - qm)))
    _verdict(3, "flux derivative rho(1 - M^2) matches centered differences "
                "(abs 1e-5)", worst <= 1e-5, f"worst={worst:.2e}")


def test_criterion_04_pairing_positivity():
    rng = np.random.default_rng(104)
    B, S, gam = 1.0, 1.0, 2.0
    q_cr = float(thermo.critical_speed(B, gam))
    ok_nonneg = True
    forced = True
    for dim in (2, 3):
        n = 100_000
        u1 = rng.standard_normal((n, dim))
        u2 = rng.standard_normal((n, dim))
        u1 *= (rng.uniform(0.0, q_cr, n) / np.linalg.norm(u1, axis=1))[:, None]
        u2 *= (rng.uniform(0.0, q_cr, n) / np.linalg.norm(u2, axis=1))[:, None]
        q1 = np.linalg.norm(u1, axis=1)
        q2 = np.linalg.norm(u2, axis=1)
        r1 = thermo.density_from_speed(q1, B, S, gam)
        r2 = thermo.density_from_speed(q2, B, S, gam)
        I = np.einsum("ij,ij->i", r1[:, None] * u1 - r2[:, None] * u2, u1 - u2)
        ok_nonneg &= bool(np.all(I >= 0.0))
        tight = (I <= 1e-12) & (q1 <= 0.99 * q_cr) & (q2 <= 0.99 * q_cr)
        if tight.any():
            forced &= bool(np.all(np.abs(q1[tight] - q2[tight]) <= 1e-6))
    # spot-check the vectorised form against the library operator
    for _ in range(100):
        a = rng.standard_normal(2)
        b = rng.standard_normal(2)
        a *= rng.uniform(0.0, q_cr) / np.linalg.norm(a)
        b *= rng.uniform(0.0, q_cr) / np.linalg.norm(b)
        qa, qb = np.linalg.norm(a), np.linalg.norm(b)
        ra = float(thermo.density_from_speed(qa, B, S, gam))
        rb = float(thermo.density_from_speed(qb, B, S, gam))
        direct = float(np.dot(ra * a - rb * b, a - b))
        assert thermo.pairing(a, b, B, S, gam) == pytest.approx(direct, rel=1e-12, abs=1e-15)
    _verdict(4, "pairing form nonnegative on 2x100,000 subsonic pairs; "
                "near-zero value forces equal speeds",
             ok_nonneg and forced)


@pytest.fixture(scope="module")
def uniform_64x32():
    grid = build_grid(straight_nozzle_2d(), 64, 32, -20.0, 20.0)
    t0 = time.perf_counter()
    sol = picard_solve(None, UNIFORM, GAS2, 0.3, grid)
    return sol, time.perf_counter() - t0


def test_criterion_05_exact_uniform_flow(uniform_64x32):
    sol, elapsed = uniform_64x32
    state = upstream_state(0.3, UNIFORM, GAS2)
    err_q = float(np.max(np.abs(sol.flow.q - state.u[0])))
    err_rho = float(np.max(np.abs(sol.flow.rho - state.rho[0])))
    err_p = float(np.max(np.abs(sol.flow.p - state.p_minus)))
    ok = sol.iterations <= 5 and err_q <= 1e-10 and err_rho <= 1e-10 \
        and err_p <= 1e-10 and elapsed < 5.0 \
        and abs(state.u[0] - Q_REF) <= 1e-9
    _verdict(5, "uniform straight-nozzle flow exact in <= 5 sweeps at 64x32",
             ok, f"iters={sol.iterations} err_q={err_q:.2e} t={elapsed:.2f}s")


def test_criterion_06_manufactured_order():
    t0 = time.perf_counter()
    errs = []
    hs = []
    for n in (32, 64, 128):
        grid = build_grid(straight_nozzle_2d(), n, n, 0.0, 1.0)
        X = np.broadcast_to(grid.x1[:, None], (grid.ni, grid.nj))
        Sg = np.broadcast_to(grid.sigma[None, :], (grid.ni, grid.nj))
        gx = 1.0 - (1.0 - X) ** 3
        gxx = -6.0 * (1.0 - X)
        psi_exact = 0.3 * Sg + np.sin(np.pi * Sg) * gx
        omega = -(np.sin(np.pi * Sg) * gxx - np.pi ** 2 * np.sin(np.pi * Sg) * gx)
        rho = np.ones((grid.ni, grid.nj))
        psi, _, _ = elliptic.elliptic_solve(grid, rho, omega, 0.3,
                                            psi_exact[0, :], tol=1e-12)
        errs.append(float(np.max(np.abs(psi - psi_exact))))
        hs.append(1.0 / n)
    elapsed = time.perf_counter() - t0
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    _verdict(6, "manufactured-solution order in [1.8, 2.2] over 32/64/128 grids",
             1.8 <= order <= 2.2 and elapsed < 60.0,
             f"order={order:.3f} errs={[f'{e:.1e}' for e in errs]} t={elapsed:.1f}s")


@pytest.fixture(scope="module")
def tanh_solve_48():
    grid = build_grid(tanh_nozzle_2d(0.3, width=3.0), 48, 24, -20.0, 20.0)
    return picard_solve(None, UNIFORM, GAS2, 0.25, grid)


def test_criterion_07_conservation(uniform_64x32, tanh_solve_48):
    sols = [uniform_64x32[0], tanh_solve_48]
    worst = max(s.conservation_defect / s.mass_flux for s in sols)
    pert = copy.deepcopy(tanh_solve_48.flow)
    pert.rho = pert.rho * (1.0 + 0.01 * np.sin(3.0 * pert.trans))
    detected = conservation_defect(pert, tanh_solve_48.grid)
    _verdict(7, "station flux within 1e-8 m on converged solves; 0.01 "
                "density tampering detected above 1e-4",
             worst <= 1e-8 and detected > 1e-4,
             f"worst={worst:.2e} detected={detected:.2e}")


def _shear_curl_l1(grid_shape, data, gas, nozzle, m):
    grid = build_grid(nozzle, *grid_shape, -10.0, 10.0)
    sol = picard_solve(None, data, gas, m, grid)
    win = grid.window_mask(0.5)
    w = grid.node_weights()
    curl = limits.discrete_curl(sol.flow, grid)
    return float(np.sum(np.abs(curl - sol.flow.omega)[win] * w[win])), sol, grid


def test_criterion_08_rotational_consistency():
    e1, _, _ = _shear_curl_l1((32, 16), SHEARED, GAS2, straight_nozzle_2d(), 0.2)
    e2, _, _ = _shear_curl_l1((64, 32), SHEARED, GAS2, straight_nozzle_2d(), 0.2)
    _verdict(8, "discrete curl matches the shear vorticity formula, L1 error "
                "ratio >= 1.8 from h to h/2",
             e1 / e2 >= 1.8, f"e(h)={e1:.2e} e(h/2)={e2:.2e} ratio={e1 / e2:.2f}")


def test_criterion_09_bernoulli_vortex_identity():
    def defect_fe(shape):
        grid = build_grid(straight_nozzle_2d(), *shape, -10.0, 10.0)
        sol = picard_solve(None, SHEARED, GAS2, 0.2, grid)
        return limits.bernoulli_gradient_check(sol.flow, GAS2, grid)

    law = thermo.GammaLaw(1.0, 2.0)
    gas_h = thermo.GasModel(kind="homentropic", gamma=2.0, law=law)
    data_h = UpstreamData(B=Profile.quadratic(1.0, 0.05), S=None)

    def defect_h(shape):
        grid = build_grid(straight_nozzle_2d(), *shape, -10.0, 10.0)
        sol = picard_solve(None, data_h, gas_h, 0.25, grid)
        return limits.bernoulli_gradient_check(sol.flow, gas_h, grid)

    r_fe = defect_fe((32, 16)) / defect_fe((64, 32))
    r_h = defect_h((32, 16)) / defect_h((64, 32))
    _verdict(9, "head-gradient identity defect drops by >= 1.8 per refinement "
                "(polytropic and barotropic)",
             r_fe >= 1.8 and r_h >= 1.8,
             f"ratio_fe={r_fe:.2f} ratio_hom={r_h:.2f}")


def test_criterion_10_critical_flux_recovery():
    grid = build_grid(straight_nozzle_2d(), 64, 32, -20.0, 20.0)
    t0 = time.perf_counter()
    rep = limits.sweep_to_sonic(None, UNIFORM, GAS2, grid, m_start=0.3,
                                mach_target=0.99, m_tol=1e-4)
    elapsed = time.perf_counter() - t0
    lo, hi = rep.m_hat_bracket
    dist = max(abs(lo - J_MAX), abs(hi - J_MAX))
    _verdict(10, "straight-nozzle sweep brackets the critical flux within "
                 "1e-4 of j_max in under 10 min",
             hi - lo <= 1e-4 and dist <= 1e-4 and elapsed < 600.0,
             f"bracket=[{lo:.6f}, {hi:.6f}] jmax={J_MAX:.6f} t={elapsed:.1f}s")


@pytest.fixture(scope="module")
def tanh_sweep():
    grid = build_grid(tanh_nozzle_2d(0.3, width=3.0), 48, 24, -20.0, 20.0)
    return limits.sweep_to_sonic(None, UNIFORM, GAS2, grid, m_start=0.2,
                                 mach_target=0.99, m_tol=1e-3,
                                 solver_options=SolverOptions(max_iter=400))


def test_criterion_11_framework_condition_surrogates(tanh_sweep):
    acc = tanh_sweep.accepted
    a1 = all(e.max_mach <= 0.99 for e in acc)
    inf_S = min(e.diagnostics.bounds["window_inf_S"] for e in acc)
    sup_B = max(e.diagnostics.bounds["window_sup_B"] for e in acc)
    a2 = inf_S >= 0.5 * 1.0 and np.isfinite(sup_B) and sup_B <= 2.0
    tvs = [e.diagnostics.curl_tv for e in acc]
    mass = max(e.diagnostics.weak["mass"] for e in acc)
    a3 = max(tvs) <= max(2.0 * tvs[0], 0.05) and mass <= 1e-8
    _verdict(11, "contraction sweep: Mach bound, interior head/entropy "
                 "bounds, curl TV and mass residual uniformly bounded",
             a1 and a2 and a3,
             f"maxM<=0.99:{a1} infS={inf_S:.3f} supB={sup_B:.3f} "
             f"maxTV={max(tvs):.3e} mass={mass:.1e}")


def test_criterion_12_concentration_under_refinement():
    flows = []
    for nx, ns in [(16, 8), (32, 16), (64, 32)]:
        grid = build_grid(tanh_nozzle_2d(0.2, width=3.0), nx, ns, -15.0, 15.0)
        flows.append(picard_solve(None, UNIFORM, GAS2, 0.2, grid).flow)
    p01 = limits.cross_sequence_concentration(flows[:2], GAS2)["pairing_stat"]
    p12 = limits.cross_sequence_concentration(flows[1:], GAS2)["pairing_stat"]
    _verdict(12, "velocity samples at fixed stations concentrate under "
                 "refinement (decreasing, final <= 1e-6)",
             p12 < p01 and p12 <= 1e-6,
             f"pair(1,2)={p01:.2e} pair(2,3)={p12:.2e}")


def test_criterion_13_boundary_trace(tanh_solve_48):
    def trace(shape):
        grid = build_grid(tanh_nozzle_2d(0.3, width=3.0), *shape, -20.0, 20.0)
        sol = picard_solve(None, UNIFORM, GAS2, 0.25, grid)
        return limits.boundary_trace(sol.flow, grid=grid)["max"]

    t1, t2 = trace((48, 24)), trace((96, 48))
    pert = copy.deepcopy(tanh_solve_48.flow)
    pert.u2 = pert.u2 + 0.01
    detected = limits.boundary_trace(pert, grid=tanh_solve_48.grid)["max"]
    _verdict(13, "wall-trace defect decays at second order; injected slip "
                 "violation detected above 1e-3",
             t1 / t2 >= 3.5 and detected > 1e-3,
             f"ratio={t1 / t2:.1f} detected={detected:.2e}")


def test_criterion_14_axisymmetric_variant():
    # straight-pipe uniform flow: exact state and quadratic stream function
    grid = build_grid(straight_pipe(), 64, 32, -20.0, 20.0)
    sol = picard_solve(None, UNIFORM, GAS2, 0.2, grid)
    exact_psi = 0.2 * np.broadcast_to(grid.sigma ** 2, sol.flow.psi.shape)
    uniform_ok = float(np.max(np.abs(sol.flow.rho * sol.flow.u1 - 0.4))) <= 1e-10 \
        and float(np.max(np.abs(sol.flow.psi - exact_psi))) <= 1e-10

    # sheared pipe flow: conservation, curl and head-identity refinement
    data = UpstreamData(B=Profile.quadratic(1.0, 0.05),
                        S=Profile.quadratic(1.0, -0.03))

    def axi_case(shape):
        g = build_grid(straight_pipe(), *shape, -10.0, 10.0)
        s = picard_solve(None, data, GAS2, 0.15, g)
        win = g.window_mask(0.5)
        w = g.node_weights()
        curl = limits.discrete_curl(s.flow, g)
        l1 = float(np.sum(np.abs(curl - s.flow.omega)[win] * w[win]))
        bg = limits.bernoulli_gradient_check(s.flow, GAS2, g)
        return l1, bg, s.conservation_defect / s.mass_flux

    l1a, bga, cons_a = axi_case((32, 16))
    l1b, bgb, cons_b = axi_case((64, 32))
    sheared_ok = max(cons_a, cons_b) <= 1e-8 and l1a / l1b >= 1.8 \
        and bga / bgb >= 1.8
    _verdict(14, "axisymmetric: uniform pipe exact to 1e-10; sheared pipe "
                 "passes conservation and both refinement ratios",
             uniform_ok and sheared_ok,
             f"curl_ratio={l1a / l1b:.2f} head_ratio={bga / bgb:.2f} "
             f"cons={max(cons_a, cons_b):.1e}")
