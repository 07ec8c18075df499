import itertools
import logging

import numpy as np
import pytest

from config.run_config import DiagnosticsConfig, StepConfig, Tolerances
from core.error_handler import CFLViolation, ContainerFormatError, NonfiniteState, SpacelikeVelocity
from diagnostics.report import MonitorSuite
from evolution.checkpoint import load_checkpoint, save_checkpoint
from evolution.closures import apply_closures, extend_velocity, theta_hat_with_rate
from evolution.state import EvolutionState, StateLayout
from evolution.stepper import Stepper, cfl_ratio, wave_speed
from grid.domain import DomainGrid
from initial_data.container import Container, write_container
from initial_data.pipeline import build_initial_state
from initial_data.presets import compatible_ball_data, gauge_check_data, pressure_ball_data


def pressure_ball_state(grid):
    initial = build_initial_state(pressure_ball_data(grid), grid, mode='test-fluid')
    state = EvolutionState.from_initial(initial, grid)
    return apply_closures(state, grid, StateLayout(grid.n_nodes), Tolerances(c0=0.5))


def compatible_ball_state(grid):
    initial = build_initial_state(compatible_ball_data(grid), grid, mode='test-fluid')
    state = EvolutionState.from_initial(initial, grid)
    return apply_closures(state, grid, StateLayout(grid.n_nodes), Tolerances(c0=0.5))


class TestLayout:
    def test_pack_unpack(self, static_state):
        layout = StateLayout(static_state.n_nodes)
        y = static_state.pack(layout)
        assert y.size == layout.size
        fields = layout.unpack(y)
        assert np.array_equal(fields['sigma2'], static_state.fluid.sigma2)
        fields['sigma2'][0] = 7.0
        assert y[layout.slices['sigma2']][0] == 7.0

    def test_with_vector_copies(self, static_state):
        layout = StateLayout(static_state.n_nodes)
        y = static_state.pack(layout)
        other = static_state.with_vector(y, layout, 0.5)
        y[:] = 0.0
        assert other.t == 0.5
        assert np.allclose(other.fluid.sigma2, 1.0)


class TestClosures:
    def test_closures_are_idempotent(self, grid_1d):
        state = pressure_ball_state(grid_1d)
        layout = StateLayout(grid_1d.n_nodes)
        again = apply_closures(state, grid_1d, layout, Tolerances(c0=0.5))
        assert np.allclose(again.pack(layout), state.pack(layout), rtol=0.0, atol=1e-14)

    def test_boundary_and_exterior_pins(self, grid_1d, static_state):
        layout = StateLayout(grid_1d.n_nodes)
        y = static_state.pack(layout)
        fields = layout.unpack(y)
        fields['sigma2'][:] = 1.3
        fields['lam'][:] = 0.2
        closed = apply_closures(static_state.with_vector(y, layout, 0.0), grid_1d, layout, Tolerances(c0=0.0))
        pinned = grid_1d.boundary | grid_1d.exterior
        assert np.allclose(closed.fluid.sigma2[pinned], 1.0)
        assert np.allclose(closed.fluid.lam[pinned], 0.0)
        assert np.allclose(closed.fluid.sigma2[grid_1d.interior], 1.3)

    def test_collapsed_sigma_raises(self, static_state):
        f = {
            'theta': static_state.fluid.theta,
            'theta_t': static_state.fluid.theta_t,
            'sigma2': np.zeros(static_state.n_nodes),
            'lam': static_state.fluid.lam,
        }
        with pytest.raises(SpacelikeVelocity):
            theta_hat_with_rate(f)

    def test_exterior_velocity_on_band_is_anchored(self, grid_1d, static_state):
        anchors = static_state.anchors
        shifted = anchors.boundary0 + np.array([0.0, 0.2, 0.0, 0.0])
        theta_hat, rate = extend_velocity(shifted, np.zeros_like(shifted), anchors)
        assert np.allclose(theta_hat[grid_1d.band], anchors.theta_hat0[grid_1d.band])
        assert np.allclose(rate, 0.0)
        inside = grid_1d.fluid
        assert not np.allclose(theta_hat[inside], anchors.theta_hat0[inside])


class TestStepper:
    def test_static_state_is_stationary(self, grid_1d, static_state, test_fluid_tolerances):
        stepper = Stepper(grid_1d, StepConfig(dt=0.01, tolerances=test_fluid_tolerances), static_state)
        layout = stepper.layout
        state = static_state
        for _ in range(20):
            state = stepper.step(state)
        assert state.t == pytest.approx(0.2)
        assert np.allclose(state.pack(layout), static_state.pack(layout), atol=1e-12)

    def test_picard_sweeps_agree_with_rk4_on_static_data(self, grid_1d, static_state, test_fluid_tolerances):
        cfg = StepConfig(dt=0.01, picard_iters=3, tolerances=test_fluid_tolerances)
        stepper = Stepper(grid_1d, cfg, static_state)
        stepped = stepper.step(static_state)
        assert stepper.last_report.picard_distances
        assert stepper.last_report.picard_distances[-1] <= cfg.picard_tol
        assert np.allclose(stepped.pack(stepper.layout), static_state.pack(stepper.layout), atol=1e-12)

    def test_cfl_violation(self, grid_1d, static_state, test_fluid_tolerances):
        stepper = Stepper(grid_1d, StepConfig(dt=0.1, tolerances=test_fluid_tolerances), static_state)
        assert stepper.cfl(static_state) == pytest.approx(1.6)
        with pytest.raises(CFLViolation):
            stepper.step(static_state)

    def test_nonfinite_state(self, grid_1d, static_state, test_fluid_tolerances):
        stepper = Stepper(grid_1d, StepConfig(tolerances=test_fluid_tolerances), static_state)
        y = static_state.pack(stepper.layout)
        y[stepper.layout.slices['lam']][3] = np.nan
        with pytest.raises(NonfiniteState):
            stepper.check_finite(y, 0.0)

    def test_flat_wave_speed(self):
        ginv = np.diag([-1.0, 1.0, 1.0, 1.0])[None]
        assert np.allclose(wave_speed(ginv), 1.0)
        assert cfl_ratio(0.05, 1.0, 0.1) == pytest.approx(0.5)

    @pytest.mark.integration
    def test_pressure_ball_keeps_surface_pinned(self, grid_1d):
        state = pressure_ball_state(grid_1d)
        stepper = Stepper(grid_1d, StepConfig(dt=0.005, tolerances=Tolerances(c0=0.5)), state)
        for _ in range(4):
            state = stepper.step(state)
        assert np.all(np.isfinite(state.pack(stepper.layout)))
        assert np.allclose(state.fluid.sigma2[grid_1d.boundary], 1.0)
        assert np.all(state.fluid.sigma2[grid_1d.interior] > 1.0)
        assert state.t == pytest.approx(0.02)

    @pytest.mark.slow
    def test_static_state_is_exact_over_long_runs(self, grid_1d, static_state, test_fluid_tolerances):
        stepper = Stepper(grid_1d, StepConfig(dt=0.01, tolerances=test_fluid_tolerances), static_state)
        layout = stepper.layout
        start = static_state.pack(layout)
        state = static_state
        for _ in range(1000):
            state = stepper.step(state)
        assert state.t == pytest.approx(10.0)
        assert np.max(np.abs(state.pack(layout) - start)) <= 1e-12

    def test_picard_sweeps_contract(self, grid_1d):
        state = compatible_ball_state(grid_1d)
        cfg = StepConfig(dt=0.005, picard_iters=2, picard_tol=0.0, tolerances=Tolerances(c0=0.5))
        stepper = Stepper(grid_1d, cfg, state)
        stepper.step(state)
        first, second = stepper.last_report.picard_distances
        assert first > 0.0
        assert second <= 0.5 * first

    def test_exhausted_picard_budget_is_reported(self, grid_1d, caplog):
        state = compatible_ball_state(grid_1d)
        cfg = StepConfig(dt=0.005, picard_iters=1, picard_tol=0.0, tolerances=Tolerances(c0=0.5))
        stepper = Stepper(grid_1d, cfg, state)
        with caplog.at_level(logging.WARNING, logger='evolution.stepper'):
            stepper.step(state)
        assert stepper.last_report.picard_exhausted
        assert any('Picard budget' in record.getMessage() for record in caplog.records)

    def test_converged_picard_sweeps_are_not_flagged(self, grid_1d, static_state, test_fluid_tolerances):
        cfg = StepConfig(dt=0.01, picard_iters=3, tolerances=test_fluid_tolerances)
        stepper = Stepper(grid_1d, cfg, static_state)
        stepper.step(static_state)
        assert not stepper.last_report.picard_exhausted

    @pytest.mark.integration
    def test_coupled_step_and_monitors(self):
        grid = DomainGrid.build(nr=16, dim=1, r_far=1.375, band_width=0.125, order=4)
        tolerances = Tolerances(c0=1.0)
        initial = build_initial_state(gauge_check_data(grid), grid, mode='coupled')
        state = EvolutionState.from_initial(initial, grid)
        stepper = Stepper(grid, StepConfig(dt=0.005, tolerances=tolerances), state)
        state = stepper.step(state)
        assert state.coupled
        assert np.all(np.isfinite(state.pack(stepper.layout)))
        suite = MonitorSuite(stepper.rhs, DiagnosticsConfig(), tolerances.c0)
        report = suite.evaluate(state, step=1, cfl=stepper.last_report.cfl)
        assert not [flag for flag in report.flags if flag.startswith('nonfinite')]
        assert np.isfinite(report.kappa)
        assert np.isfinite(report.energies[0]['curvature'])


class TestCheckpoint:
    def test_restart_is_bitwise(self, grid_1d, tmp_path):
        state = pressure_ball_state(grid_1d)
        stepper = Stepper(grid_1d, StepConfig(dt=0.005, tolerances=Tolerances(c0=0.5)), state)
        state = stepper.step(state)
        path = save_checkpoint(tmp_path / 'step_000001.hpfc', state, grid_1d)
        restored = load_checkpoint(path, grid_1d)
        assert restored.t == state.t
        assert restored.mode == state.mode
        assert np.array_equal(restored.pack(stepper.layout), state.pack(stepper.layout))

        resumed = Stepper(grid_1d, StepConfig(dt=0.005, tolerances=Tolerances(c0=0.5)), restored)
        assert np.array_equal(
            resumed.step(restored).pack(stepper.layout),
            stepper.step(state).pack(stepper.layout),
        )

    def test_checkpoint_on_other_grid(self, grid_1d, static_state, tmp_path):
        path = save_checkpoint(tmp_path / 'state.hpfc', static_state, grid_1d)
        with pytest.raises(ContainerFormatError):
            load_checkpoint(path, DomainGrid.build(nr=8, dim=1))

    def test_wrong_kind(self, grid_1d, tmp_path):
        path = write_container(
            tmp_path / 'other.hpfc',
            Container(arrays={'x': np.zeros(3)}, dim=1, nr=16, order=4, metadata={'kind': 'constraint-data'}),
        )
        with pytest.raises(ContainerFormatError):
            load_checkpoint(path, grid_1d)


def spherical_grid():
    """The compatible ball's 3D grid: isolated staircase nodes need full-line rows."""
    return DomainGrid.build(nr=4, dim=3, r_far=1.5, band_width=0.125, order=4, allow_straddle_fallback=True)


class TestSphericalBall:
    def test_staircase_rows_straddle_with_a_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger='grid.stencils'):
            grid = spherical_grid()
        assert grid.straddled > 0
        assert any('straddle' in record.getMessage() for record in caplog.records)

    @pytest.mark.integration
    def test_ball_keeps_its_axis_symmetry(self):
        grid = spherical_grid()
        tolerances = Tolerances(c0=0.0)
        initial = build_initial_state(compatible_ball_data(grid), grid, mode='test-fluid')
        state = apply_closures(EvolutionState.from_initial(initial, grid), grid, StateLayout(grid.n_nodes), tolerances)
        stepper = Stepper(grid, StepConfig(dt=0.01, tolerances=tolerances), state)
        for _ in range(3):
            state = stepper.step(state)

        assert np.all(np.isfinite(state.pack(stepper.layout)))
        assert np.allclose(state.fluid.sigma2[grid.boundary], 1.0)
        assert np.all(state.fluid.sigma2[grid.interior] > 1.0)
        sigma2 = state.fluid.sigma2.reshape(grid.shape)
        for axes in itertools.permutations(range(3)):
            assert np.allclose(sigma2.transpose(axes), sigma2, rtol=0.0, atol=1e-10)
