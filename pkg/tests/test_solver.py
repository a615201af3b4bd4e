"""Picard solver behavior: exact cases, transport, failure modes."""

import numpy as np
import pytest

from sll import thermo
from sll.errors import ConvergenceError, SonicExceeded
from sll.geometry import build_grid, straight_nozzle_2d, straight_pipe, tanh_nozzle_2d
from sll.solver import SolverOptions, picard_solve, vorticity_source
from sll.upstream import Profile, UpstreamData, upstream_state

GAS = thermo.GasModel(kind="full_euler", gamma=2.0)
UNIFORM = UpstreamData(B=Profile.constant(1.0), S=Profile.constant(1.0))
SHEARED = UpstreamData(B=Profile.quadratic(1.0, 0.05), S=Profile.constant(1.0))


def test_uniform_flow_exact_and_fast(uniform_solution):
    sol = uniform_solution
    assert sol.iterations <= 5
    q_ref = 0.3157380436470593
    rho_ref = (2.0 - q_ref ** 2) / 2.0
    assert float(np.max(np.abs(sol.flow.q - q_ref))) <= 1e-10
    assert float(np.max(np.abs(sol.flow.rho - rho_ref))) <= 1e-10
    assert float(np.max(np.abs(sol.flow.u2))) <= 1e-12
    assert sol.conservation_defect <= 1e-8 * 0.3
    # Mach of the uniform state: q / sqrt(2 p / rho)
    assert float(np.max(sol.flow.mach)) == pytest.approx(0.3239140178818998, abs=1e-10)


def test_uniform_flow_matches_upstream_state(uniform_solution):
    st = upstream_state(0.3, UNIFORM, GAS)
    assert float(np.max(np.abs(uniform_solution.flow.q - st.u[0]))) <= 1e-10
    assert float(np.max(np.abs(uniform_solution.flow.p - st.p_minus))) <= 1e-10


def test_contraction_accelerates_through_throat(gas2, uniform_data):
    grid = build_grid(tanh_nozzle_2d(0.3, width=3.0), 48, 24, -20.0, 20.0)
    sol = picard_solve(None, uniform_data, gas2, 0.2, grid)
    inlet_m = float(sol.flow.mach[0].max())
    peak_m = float(sol.flow.mach.max())
    assert peak_m > inlet_m * 1.2
    assert sol.conservation_defect <= 1e-8 * 0.2
    # downstream column approaches the narrow-section uniform state
    assert float(sol.flow.mach[-1].min()) > inlet_m


def test_labels_monotone_across_each_station(gas2, sheared_data):
    grid = build_grid(tanh_nozzle_2d(0.2, width=3.0), 32, 16, -15.0, 15.0)
    sol = picard_solve(None, sheared_data, gas2, 0.2, grid)
    assert np.all(np.diff(sol.flow.label, axis=1) > 0.0)


def test_sheared_solve_transport_consistency(gas2, sheared_data):
    grid = build_grid(straight_nozzle_2d(), 32, 16, -10.0, 10.0)
    sol = picard_solve(None, sheared_data, gas2, 0.2, grid)
    B_target = sheared_data.B.value(sol.flow.label)
    S_target = sheared_data.S.value(sol.flow.label)
    tol = 10.0 * 1e-8 + 10.0 / 16.0 ** 2
    assert float(np.max(np.abs(sol.flow.bernoulli - B_target))) <= tol
    assert float(np.max(np.abs(sol.flow.entropy - S_target))) <= tol
    # actually far tighter: the state algebra closes the loop exactly
    assert float(np.max(np.abs(sol.flow.entropy - S_target))) <= 1e-10


def test_irrotational_reduction_under_refinement(gas2, uniform_data):
    # uniform upstream: discrete curl of the solution shrinks at order ~2
    from sll.limits import discrete_curl

    def max_curl(nx, ns):
        grid = build_grid(tanh_nozzle_2d(0.2, width=3.0), nx, ns, -15.0, 15.0)
        sol = picard_solve(None, uniform_data, gas2, 0.2, grid)
        win = grid.window_mask(0.5)
        return float(np.max(np.abs(discrete_curl(sol.flow, grid)[win])))

    c1, c2 = max_curl(24, 12), max_curl(48, 24)
    assert c2 < c1 / 2.2


def test_vorticity_source_formula_and_sign():
    # parallel shear oracle: u = (u(y), 0), B' = u u', source must equal
    # the signed curl -u'(y)
    grid = build_grid(straight_nozzle_2d(), 32, 16, -10.0, 10.0)
    data = SHEARED
    sol = picard_solve(None, data, GAS, 0.2, grid)
    omega = vorticity_source(sol.flow.rho, sol.flow.label, sol.upstream,
                             data, GAS, grid)
    _, du_dy = grid.gradient(sol.flow.u1)
    # interior nodes: wall stencils are one order weaker
    inner = grid.interior_mask(2)
    np.testing.assert_allclose(omega[inner], -du_dy[inner], atol=5e-3)
    # frozen magnitude check of the plane formula
    lab = np.array([[0.5]])
    rho = np.array([[1.0]])
    st = sol.upstream
    val = vorticity_source(rho, lab, st, data, GAS, grid)
    expect = -(1.0 * data.B.derivative(0.5)) / \
        (float(st.rho_at(0.5)) * float(st.u_at(0.5)))
    assert float(val[0, 0]) == pytest.approx(float(expect), rel=1e-9)


def test_vorticity_source_uniform_is_zero(uniform_solution):
    assert float(np.max(np.abs(uniform_solution.flow.omega))) == 0.0


def test_sonic_exceeded_carries_node_and_ratio(gas2, uniform_data):
    grid = build_grid(tanh_nozzle_2d(0.3, width=3.0), 32, 16, -15.0, 15.0)
    with pytest.raises(SonicExceeded) as exc:
        picard_solve(None, uniform_data, gas2, 0.5, grid)
    assert exc.value.node is not None
    assert exc.value.j_max > 0.0
    assert exc.value.j > exc.value.j_max


def test_divergence_error_carries_history(gas2, uniform_data):
    grid = build_grid(tanh_nozzle_2d(0.3, width=3.0), 16, 16, -15.0, 15.0)
    with pytest.raises(ConvergenceError) as exc:
        picard_solve(None, uniform_data, gas2, 0.2, grid,
                     options=SolverOptions(max_iter=2, tol=1e-14))
    assert len(exc.value.residual_history) == 2


def test_axisymmetric_uniform_pipe_exact(gas2, uniform_data):
    grid = build_grid(straight_pipe(), 32, 16, -10.0, 10.0)
    sol = picard_solve(None, uniform_data, gas2, 0.2, grid)
    # rho U = 2 m exactly for the uniform profile
    np.testing.assert_allclose(sol.flow.rho * sol.flow.u1, 0.4, atol=1e-10)
    np.testing.assert_allclose(sol.flow.u2, 0.0, atol=1e-12)
    exact_psi = 0.2 * np.broadcast_to(grid.sigma ** 2, sol.flow.psi.shape)
    np.testing.assert_allclose(sol.flow.psi, exact_psi, atol=1e-12)


def test_axisymmetric_sheared_admissible_profiles(gas2):
    data = UpstreamData(B=Profile.quadratic(1.0, 0.05),
                        S=Profile.quadratic(1.0, -0.03))
    grid = build_grid(straight_pipe(), 32, 16, -10.0, 10.0)
    sol = picard_solve(None, data, gas2, 0.15, grid)
    assert sol.converged
    assert sol.conservation_defect <= 1e-8 * 0.15
    assert np.all(np.diff(sol.flow.label, axis=1) > 0.0)
    # the inlet pin carries an O(h^2) adjustment layer; the flow is
    # parallel once it has relaxed downstream
    assert float(np.max(np.abs(sol.flow.u2[grid.ni // 2:, :]))) < 1e-10


def test_homentropic_gamma_law_equals_polytropic_twin():
    # kappa gamma/(gamma-1) plays the constant entropy measure; heads shift
    law = thermo.GammaLaw(1.0, 2.0)
    gas_h = thermo.GasModel(kind="homentropic", gamma=2.0, law=law)
    S_c = 2.0
    data_h = UpstreamData(B=Profile.constant(1.0), S=None)
    data_f = UpstreamData(B=Profile.constant(3.0), S=Profile.constant(S_c))
    grid = build_grid(tanh_nozzle_2d(0.2, width=3.0), 32, 16, -15.0, 15.0)
    sol_h = picard_solve(None, data_h, gas_h, 0.3, grid)
    sol_f = picard_solve(None, data_f, GAS, 0.3, grid)
    np.testing.assert_allclose(sol_h.flow.rho, sol_f.flow.rho, atol=1e-12)
    np.testing.assert_allclose(sol_h.flow.q, sol_f.flow.q, atol=1e-12)
    np.testing.assert_allclose(sol_h.flow.p, sol_f.flow.p, atol=1e-12)


def test_homentropic_sheared_solve(gas2):
    law = thermo.GammaLaw(1.0, 2.0)
    gas_h = thermo.GasModel(kind="homentropic", gamma=2.0, law=law)
    data = UpstreamData(B=Profile.quadratic(1.0, 0.05), S=None)
    grid = build_grid(straight_nozzle_2d(), 32, 16, -10.0, 10.0)
    sol = picard_solve(None, data, gas_h, 0.25, grid)
    assert sol.converged
    # head transported along streamlines
    B_target = data.B.value(sol.flow.label)
    assert float(np.max(np.abs(sol.flow.bernoulli - B_target))) <= 1e-6


def test_isothermal_solve_unbounded_head_law():
    # isothermal gas: constant sound speed, B_min = -inf sentinel
    iso = thermo.GasModel(kind="homentropic", law=thermo.Isothermal(1.0))
    assert iso.law.b_min() == -np.inf
    data = UpstreamData(B=Profile.constant(2.0), S=None)
    grid = build_grid(straight_nozzle_2d(), 32, 16, -10.0, 10.0)
    sol = picard_solve(None, data, iso, 1.0, grid)
    assert sol.converged
    assert float(sol.flow.mach.max()) < 1.0
    # head relation: q^2/2 + ln(rho) = 2 pointwise
    head = 0.5 * sol.flow.q ** 2 + np.log(sol.flow.rho)
    np.testing.assert_allclose(head, 2.0, atol=1e-9)


def test_upstream_cap_rejected_before_iterating(gas2, uniform_data):
    grid = build_grid(straight_nozzle_2d(), 16, 16, -5.0, 5.0)
    jmax = thermo.critical_state(1.0, 1.0, 2.0).j_max
    with pytest.raises(SonicExceeded):
        picard_solve(None, uniform_data, gas2, jmax, grid)


def test_warm_start_accelerates(gas2, uniform_data):
    grid = build_grid(tanh_nozzle_2d(0.3, width=3.0), 32, 16, -15.0, 15.0)
    cold = picard_solve(None, uniform_data, gas2, 0.3, grid)
    warm = picard_solve(None, uniform_data, gas2, 0.305, grid,
                        init=(cold.flow.psi, cold.flow.rho, 0.3))
    assert warm.iterations <= cold.iterations
