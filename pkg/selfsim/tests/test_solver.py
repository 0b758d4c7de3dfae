"""
Tests for the explicit conservative integrator.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfsim import diagnostics, kernel, solver
from selfsim.kernel import Solution, SteadyParams, SuperposedParams
from selfsim.solver import (
    BoundaryCondition,
    FieldState,
    Grid1D,
    RunMonitor,
    StabilityError,
    StepControl,
    StepLimitExceeded,
)


@pytest.fixture
def gaussian_state():
    grid = solver.make_grid(20.0, 400)
    return solver.gaussian_ic(grid, amplitude=1.0, width=1.0)


def test_grid_validation():
    grid = Grid1D(30.0, 600)
    assert grid.h == pytest.approx(0.05)
    assert grid.nodes.shape == (601,)
    assert grid.nodes[-1] == 30.0
    with pytest.raises(ValueError):
        Grid1D(30.0, 15)
    with pytest.raises(ValueError):
        Grid1D(-1.0, 100)
    with pytest.raises(ValueError):
        Grid1D(10.0, 20.5)


def test_field_state_validation(gaussian_state):
    grid = gaussian_state.grid
    with pytest.raises(ValueError):
        FieldState(grid, np.zeros(grid.cells))
    with pytest.raises(ValueError):
        FieldState(grid, -np.ones(grid.cells + 1))
    with pytest.raises(ValueError):
        FieldState(grid, np.full(grid.cells + 1, np.nan))
    with pytest.raises(ValueError):
        gaussian_state.theta[0] = 2.0


def test_gamma_dirichlet_needs_params():
    with pytest.raises(ValueError):
        BoundaryCondition("gamma_dirichlet")
    p = SuperposedParams.create(1.0, gamma0=0.5, tau_shift=1.0)
    bc = BoundaryCondition.gamma_dirichlet(p)
    assert bc.left_value(2.0) == kernel.boundary_value(p, 2.0)
    assert BoundaryCondition.absorbing_zero().left_value(2.0) == 0.0
    assert BoundaryCondition.neumann_zero().left_value(2.0) is None


def test_stability_bound(gaussian_state):
    limit = solver.stability_limit(gaussian_state, 1.0)
    assert limit == pytest.approx(gaussian_state.grid.h ** 2 / 4.0)
    with pytest.raises(StabilityError):
        solver.step_explicit(gaussian_state, BoundaryCondition.neumann_zero(), 1.0, 1.01 * limit)
    c = StepControl(safety=0.5)
    assert solver.stable_dt(gaussian_state, 1.0, c) == pytest.approx(0.5 * limit)


def test_dry_state_step_size():
    grid = solver.make_grid(10.0, 100)
    dry = FieldState(grid, np.zeros(grid.cells + 1))
    c = StepControl(safety=0.4)
    assert solver.stable_dt(dry, 2.0, c) == pytest.approx(0.4 * grid.h ** 2 / 2.0)
    assert solver.stability_limit(dry, 2.0) == np.inf


@given(st.sampled_from([0.0, 0.5, 1.0, 7.0 / 3.0]), st.floats(min_value=0.1, max_value=1.0))
@settings(max_examples=20, deadline=None)
def test_neumann_step_conserves_mass(n, safety):
    """
    **Property: an insulated step preserves the trapezoidal mass while the right edge is dry**
    """
    grid = solver.make_grid(20.0, 200)
    state = solver.gaussian_ic(grid, amplitude=1.0, width=1.0)
    before = diagnostics.total_mass(state)
    bc = BoundaryCondition.neumann_zero()
    c = StepControl(safety=safety)
    for _ in range(50):
        state = solver.step_explicit(state, bc, n, solver.stable_dt(state, n, c))
    assert diagnostics.total_mass(state) == pytest.approx(before, rel=1e-12)
    assert np.all(state.theta >= 0.0)


def test_monitor_ledger_closes_with_imposed_boundary():
    p = SuperposedParams.create(7.0 / 3.0, gamma0=0.1, phi0=1.0, tau_shift=1.0)
    grid = solver.make_grid(10.0, 200)
    state = solver.project_analytic(grid, p, 0.0, Solution.SUPERPOSED)
    monitor = RunMonitor()
    final, _ = solver.integrate(state, BoundaryCondition.gamma_dirichlet(p), p.n, 0.5,
                                StepControl(), monitor=monitor)
    change = diagnostics.total_mass(final) - diagnostics.total_mass(state)
    budget = monitor.left_inflow - monitor.right_outflow + monitor.clipped_mass
    assert monitor.steps > 0
    assert change == pytest.approx(budget, rel=1e-9, abs=1e-13)
    assert monitor.to_dict()["steps"] == monitor.steps


def test_steady_state_is_a_fixed_point():
    grid = solver.make_grid(10.0, 100)
    steady = SteadyParams(gamma=0.0, phi=-1.0, n=1.0)
    state = FieldState(grid, kernel.eval_steady(steady, grid.nodes))
    dt = 0.4 * solver.stability_limit(state, 1.0)
    after = solver.step_explicit(state, BoundaryCondition.absorbing_zero(), 1.0, dt)
    np.testing.assert_allclose(after.theta[:-2], state.theta[:-2], rtol=0.0, atol=1e-12)
    assert after.theta[-1] == 0.0


def test_integrate_lands_on_snapshot_times(gaussian_state):
    snaps = [0.0, 0.05, 0.1, 0.3]
    final, snapshots = solver.integrate(gaussian_state, BoundaryCondition.neumann_zero(), 1.0,
                                        0.3, StepControl(), snaps)
    assert [s.tau for s in snapshots] == snaps
    assert final.tau == 0.3
    assert snapshots[0] is gaussian_state


def test_integrate_rejects_bad_snapshots(gaussian_state):
    bc = BoundaryCondition.neumann_zero()
    with pytest.raises(ValueError):
        solver.integrate(gaussian_state, bc, 1.0, 1.0, StepControl(), [0.5, 0.2])
    with pytest.raises(ValueError):
        solver.integrate(gaussian_state, bc, 1.0, 1.0, StepControl(), [0.5, 2.0])


def test_step_limit_keeps_partial_results(gaussian_state):
    with pytest.raises(StepLimitExceeded) as info:
        solver.integrate(gaussian_state, BoundaryCondition.neumann_zero(), 1.0, 10.0,
                         StepControl(max_steps=3), [0.0, 5.0])
    assert info.value.partial is True
    assert info.value.state.tau > 0.0
    assert [s.tau for s in info.value.snapshots] == [0.0]


def test_gamma_dirichlet_imposes_boundary_value():
    p = SuperposedParams.create(7.0 / 3.0, gamma0=0.1, phi0=1.0, tau_shift=1.0)
    grid = solver.make_grid(10.0, 100)
    state = solver.project_analytic(grid, p, 0.0, Solution.SUPERPOSED)
    _, snapshots = solver.integrate(state, BoundaryCondition.gamma_dirichlet(p), p.n, 0.4,
                                    StepControl(), [0.2, 0.4])
    for snap in snapshots:
        assert snap.theta[0] == kernel.boundary_value(p, snap.tau)
        assert snap.theta[-1] == 0.0


def test_exact_neumann_solution_is_tracked():
    p = SuperposedParams.create(1.0, gamma0=1.0, tau_shift=1.0)
    grid = solver.make_grid(10.0, 400)
    state = solver.project_analytic(grid, p, 0.0, Solution.NEUMANN)
    final, _ = solver.integrate(state, BoundaryCondition.neumann_zero(), 1.0, 2.0, StepControl())
    exact = solver.project_analytic(grid, p, final.tau, Solution.NEUMANN)
    front = kernel.front_position(p, final.tau)
    report = diagnostics.rel_error(final, exact, front=front)
    assert report.l2_rel < 2e-2


def test_gaussian_ic_shape(gaussian_state):
    assert gaussian_state.theta[0] == 1.0
    wide = solver.gaussian_ic(gaussian_state.grid, amplitude=2.0, width=1.5)
    assert wide.theta[0] == 2.0
    assert diagnostics.total_mass(wide) == pytest.approx(2.0 * 1.5 * np.sqrt(np.pi / 2.0),
                                                         rel=1e-3)
    shifted = solver.gaussian_ic(gaussian_state.grid, amplitude=1.0, center=5.0)
    assert shifted.theta[100] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        solver.gaussian_ic(gaussian_state.grid, amplitude=0.0)
    with pytest.raises(ValueError):
        solver.gaussian_ic(gaussian_state.grid, amplitude=1.0, width=-1.0)


def test_clipped_mass_counts_boundary_node_only_when_insulated():
    clipped = np.array([1.0, 2.0, 3.0, 4.0])
    assert solver.clipped_mass(clipped, 0.5, insulated=True) == pytest.approx(2.75)
    assert solver.clipped_mass(clipped, 0.5, insulated=False) == pytest.approx(2.5)


def test_insulated_run_has_no_boundary_inflow(gaussian_state):
    monitor = RunMonitor()
    final, _ = solver.integrate(gaussian_state, BoundaryCondition.neumann_zero(), 7.0 / 3.0, 0.5,
                                StepControl(), monitor=monitor)
    assert monitor.left_inflow == 0.0
    change = diagnostics.total_mass(final) - diagnostics.total_mass(gaussian_state)
    budget = monitor.left_inflow - monitor.right_outflow + monitor.clipped_mass
    assert change == pytest.approx(budget, rel=1e-9, abs=1e-12)


def test_ordered_initial_states_stay_ordered():
    """
    **Property: a pointwise smaller start stays below under the same steps**
    """
    grid = solver.make_grid(20.0, 200)
    low = solver.gaussian_ic(grid, amplitude=0.8, width=1.0)
    high = solver.gaussian_ic(grid, amplitude=1.0, width=1.2)
    assert np.all(low.theta <= high.theta)
    bc = BoundaryCondition.neumann_zero()
    dt = 0.4 * solver.stability_limit(high, 1.0)
    for _ in range(400):
        low = solver.step_explicit(low, bc, 1.0, dt)
        high = solver.step_explicit(high, bc, 1.0, dt)
        assert np.all(low.theta <= high.theta + 1e-10)


def test_neumann_grid_convergence_order():
    p = SuperposedParams.create(1.0, gamma0=1.0, tau_shift=1.0)
    errors = []
    for cells in (100, 200, 400):
        grid = solver.make_grid(10.0, cells)
        state = solver.project_analytic(grid, p, 0.0, Solution.NEUMANN)
        final, _ = solver.integrate(state, BoundaryCondition.neumann_zero(), 1.0, 1.0,
                                    StepControl())
        exact = solver.project_analytic(grid, p, final.tau, Solution.NEUMANN)
        front = kernel.front_position(p, final.tau)
        errors.append(diagnostics.rel_error(final, exact, front=front).l2_rel)
    assert errors[2] < errors[1] < errors[0]
    overall = np.log(errors[0] / errors[2]) / np.log(4.0)
    assert 1.0 <= overall <= 2.2
