import math

import numpy as np
import pytest

from config.run_config import DiagnosticsConfig, Tolerances
from core.error_handler import OrderUnavailable
from diagnostics.balance import BalanceTerms, BalanceTracker
from diagnostics.context import MonitorContext
from diagnostics.energy import EnergyAccumulator, EnergySummands, energies, energy
from diagnostics.flow import TimeDerivativeStack, flow_derivative
from diagnostics.identities import identity_audit, manufactured_commutator_fields
from diagnostics.refinement import convergence_table, diverging_quantities, observed_order, refinement_levels
from diagnostics.report import REPORT_SCHEMA_VERSION, MonitorSuite
from diagnostics.taylor import state_taylor_monitor, taylor_monitor
from diagnostics.vanishing import FLUID_QUANTITIES, GEOMETRY_QUANTITIES, vanishing_fluid, vanishing_geometry, worst
from evolution.rhs import SystemRHS
from evolution.state import EvolutionState, StateLayout
from grid.domain import DomainGrid
from initial_data.pipeline import build_initial_state
from initial_data.presets import compatible_ball_data, pressure_ball_data
from tests.conftest import make_static_state
from tests.manufactured import pressure_ball_taylor, pressure_ball_theta_energy


def context(grid, state, tolerances, order=1):
    rhs = SystemRHS(grid, StateLayout(grid.n_nodes), state.anchors, state.coupling, state.coupled, tolerances)
    return MonitorContext(rhs, state, order)


@pytest.fixture
def pressure_ball(grid_1d):
    initial = build_initial_state(pressure_ball_data(grid_1d), grid_1d, mode='test-fluid')
    return EvolutionState.from_initial(initial, grid_1d)


class TestVanishingQuantities:
    def test_static_state_has_no_residuals(self, grid_1d, static_state, test_fluid_tolerances):
        ctx = context(grid_1d, static_state, test_fluid_tolerances)
        fluid = vanishing_fluid(ctx)
        geometry = vanishing_geometry(ctx)
        assert set(fluid) == set(FLUID_QUANTITIES)
        assert set(geometry) == set(GEOMETRY_QUANTITIES)
        assert 'boundary' in fluid['y']
        assert max(worst(fluid).values()) < 1e-10
        assert max(worst(geometry).values()) < 1e-10

    def test_broken_normalization_is_detected(self, grid_1d, test_fluid_tolerances):
        sigma2 = np.where(grid_1d.interior, 1.1, 1.0)
        state = make_static_state(grid_1d, test_fluid_tolerances, sigma2=sigma2)
        ctx = context(grid_1d, state, test_fluid_tolerances)
        norms = vanishing_fluid(ctx)['normalization']['fluid']
        assert norms['sup'] == pytest.approx(0.1)
        assert norms['l2'] > 0.0

    def test_pressure_ball_is_at_rest_initially(self, grid_1d, pressure_ball):
        ctx = context(grid_1d, pressure_ball, Tolerances(c0=0.5))
        fluid = worst(vanishing_fluid(ctx))
        assert fluid['normalization'] < 1e-12
        assert fluid['vorticity'] < 1e-3
        assert fluid['acceleration'] < 1e-9


class TestTaylorMonitor:
    def test_pressure_ball_coefficient(self, grid_1d, pressure_ball):
        ctx = context(grid_1d, pressure_ball, Tolerances(c0=0.5))
        report = state_taylor_monitor(ctx, 0.5)
        assert report.minimum == pytest.approx(pressure_ball_taylor())
        assert not report.flagged
        assert abs(report.location[0]) == pytest.approx(1.0)

    def test_flat_surface_is_flagged(self, grid_1d, static_state, test_fluid_tolerances):
        ctx = context(grid_1d, static_state, test_fluid_tolerances)
        report = state_taylor_monitor(ctx, 0.0)
        assert report.minimum == pytest.approx(0.0, abs=1e-14)
        assert report.flagged

    def test_threshold(self):
        dsigma2 = np.array([[0.0, 0.3, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]])
        coords = np.array([[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        report = taylor_monitor(dsigma2, np.array([True, True]), coords, c0=0.5)
        assert report.flagged
        assert report.node == 0
        assert report.minimum == pytest.approx(0.09)
        assert not taylor_monitor(dsigma2, np.array([False, True]), coords, c0=0.5).flagged

    def test_no_boundary_nodes(self):
        report = taylor_monitor(np.zeros((2, 4)), np.zeros(2, dtype=bool), np.zeros((2, 3)), c0=0.1)
        assert report.flagged
        assert math.isnan(report.minimum)


class TestEnergies:
    def test_static_energies_vanish(self, grid_1d, static_state, test_fluid_tolerances):
        ctx = context(grid_1d, static_state, test_fluid_tolerances)
        for summands in energies(ctx):
            assert summands.instantaneous == pytest.approx(0.0, abs=1e-16)
            assert summands.curvature == 0.0

    def test_pressure_ball_theta_energy(self, grid_1d, pressure_ball):
        ctx = context(grid_1d, pressure_ball, Tolerances(c0=0.5), order=0)
        summands = energy(ctx, 0)
        assert summands.theta_gradient == pytest.approx(pressure_ball_theta_energy(), rel=2e-2)
        assert summands.theta_boundary == pytest.approx(2.0)

    def test_reference_theta_energy_is_real(self):
        value = pressure_ball_theta_energy()
        assert isinstance(value, float)
        assert value == pytest.approx(4.0 * math.sqrt(2.0) * math.log(1.0 + math.sqrt(2.0)) - 4.0, rel=1e-12)

    def test_order_above_stack(self, grid_1d, static_state, test_fluid_tolerances):
        ctx = context(grid_1d, static_state, test_fluid_tolerances, order=1)
        with pytest.raises(OrderUnavailable):
            energy(ctx, 2)

    def test_accumulator(self):
        acc = EnergyAccumulator(order=0)
        acc.add(0.0, [EnergySummands(0, 1.0, 0.0, 0.0, 0.0, sigma_boundary=1.0, sigma_boundary_weighted=0.5)])
        acc.add(1.0, [EnergySummands(0, 3.0, 0.0, 0.0, 0.0, sigma_boundary=3.0, sigma_boundary_weighted=0.5)])
        acc.add(2.0, [EnergySummands(0, 2.0, 0.0, 0.0, 0.0, sigma_boundary=3.0, sigma_boundary_weighted=0.5)])
        totals = acc.totals()
        assert acc.sup == [3.0]
        assert acc.boundary_integral == [pytest.approx(5.0)]
        assert totals['unweighted'] == [pytest.approx(8.0)]
        assert totals['weighted'] == [pytest.approx(4.0)]


class TestBalances:
    def test_tracker_residual(self):
        tracker = BalanceTracker('theta')
        tracker.add(0.0, BalanceTerms(energy=1.0, production=2.0))
        tracker.add(1.0, BalanceTerms(energy=3.0, production=2.0))
        assert tracker.integral == pytest.approx(2.0)
        assert tracker.residual == pytest.approx(0.0)
        assert tracker.summary() == {'energy': 3.0, 'residual': pytest.approx(0.0)}

    def test_empty_tracker(self):
        assert BalanceTracker('lambda').residual == 0.0


class TestFlowDerivatives:
    def test_state_derivative_is_the_rhs(self, grid_1d, static_state, test_fluid_tolerances):
        ctx = context(grid_1d, static_state, test_fluid_tolerances, order=2)
        stack = TimeDerivativeStack(ctx.rhs, ctx.y, 2)
        assert np.allclose(stack.levels[1], ctx.rhs(ctx.y))
        assert np.allclose(stack.level(2)['theta'], 0.0)
        with pytest.raises(OrderUnavailable):
            stack.level(3)

    def test_functional_derivative(self, grid_1d, static_state, test_fluid_tolerances):
        ctx = context(grid_1d, static_state, test_fluid_tolerances)
        value = flow_derivative(lambda y: np.array([np.sum(y ** 2)]), ctx.y, ctx.rhs, 1)
        assert np.allclose(value, 0.0)
        with pytest.raises(OrderUnavailable):
            flow_derivative(lambda y: y, ctx.y, ctx.rhs, 9)


class TestMonitorSuite:
    def test_static_report(self, grid_1d, static_state, test_fluid_tolerances):
        ctx_rhs = SystemRHS(
            grid_1d, StateLayout(grid_1d.n_nodes), static_state.anchors,
            static_state.coupling, False, test_fluid_tolerances,
        )
        suite = MonitorSuite(ctx_rhs, DiagnosticsConfig(), c0=0.0)
        report = suite.evaluate(static_state, step=0, cfl=0.16)
        assert report.schema_version == REPORT_SCHEMA_VERSION
        assert report.taylor_flagged
        assert 'taylor' in report.flags
        assert not any(flag.startswith('nonfinite') for flag in report.flags)
        assert report.divcurl == {}
        assert report.kappa == pytest.approx(1.0)
        scalars = report.scalars()
        assert scalars['E0'] == pytest.approx(0.0, abs=1e-16)
        assert scalars['cfl'] == pytest.approx(0.16)
        assert len(suite.reports) == 1


class TestRefinement:
    def test_observed_order(self):
        assert observed_order(1e-2, 2.5e-3, 0.1, 0.05) == pytest.approx(2.0)
        assert observed_order(1e-2, 1e-15, 0.1, 0.05) == math.inf
        assert math.isnan(observed_order(0.0, 1e-3, 0.1, 0.05))

    def test_fourth_order_table(self):
        spacings = [1 / 16, 1 / 32, 1 / 64]
        errors = {'normalization': [h ** 4 for h in spacings]}
        table = convergence_table(spacings, errors)
        assert table.orders['normalization'] == [pytest.approx(4.0), pytest.approx(4.0)]
        assert table.min_order('normalization') == pytest.approx(4.0)
        rows = table.rows()
        assert rows[0]['level'] == 0
        assert 'normalization_order' in rows[1]

    def test_level_mismatch(self):
        with pytest.raises(ValueError):
            convergence_table([0.1, 0.05], {'x': [1.0]})

    def test_levels_double(self):
        assert refinement_levels(16, 3) == [16, 32, 64]

    def test_diverging_quantities(self):
        spacings = [1 / 16, 1 / 32, 1 / 64]
        errors = {
            'fluid_sigma_wave': [8.0, 8.0, 8.0],
            'fluid_normalization': [h ** 4 for h in spacings],
            'fluid_y': [1e-14, 1e-14, 1e-14],
            'fluid_divergence': [1e-2, 2e-2, 4e-2],
        }
        table = convergence_table(spacings, errors)
        assert diverging_quantities(table, tol=1e-10) == ['fluid_sigma_wave', 'fluid_divergence']
        assert diverging_quantities(table, tol=10.0) == []


def pressure_and_compatible_sigma_wave(nr):
    grid = DomainGrid.build(nr=nr, dim=1, r_far=1.5, band_width=0.125, order=4)
    out = {}
    for name, builder in (('pressure', pressure_ball_data), ('compatible', compatible_ball_data)):
        initial = build_initial_state(builder(grid), grid, mode='test-fluid')
        state = EvolutionState.from_initial(initial, grid)
        out[name] = worst(vanishing_fluid(context(grid, state, Tolerances(c0=0.5))))['sigma_wave']
    return out


class TestCompatibleData:
    def test_pressure_ball_wave_defect_does_not_refine(self):
        coarse = pressure_and_compatible_sigma_wave(16)['pressure']
        fine = pressure_and_compatible_sigma_wave(32)['pressure']
        # Δσ² − (3/2)|∇σ²|²/σ² = −8 on the surface at every resolution
        assert coarse > 4.0
        assert fine > 4.0
        assert fine == pytest.approx(coarse, rel=0.1)

    def test_compatible_ball_wave_defect_refines(self):
        coarse = pressure_and_compatible_sigma_wave(16)['compatible']
        fine = pressure_and_compatible_sigma_wave(32)['compatible']
        assert coarse < 1e-2
        assert fine < 0.25 * coarse or fine < 1e-10

    def test_compatible_ball_starts_at_rest(self, grid_1d):
        initial = build_initial_state(compatible_ball_data(grid_1d), grid_1d, mode='test-fluid')
        state = EvolutionState.from_initial(initial, grid_1d)
        fluid = worst(vanishing_fluid(context(grid_1d, state, Tolerances(c0=0.5))))
        assert fluid['normalization'] < 1e-12
        assert fluid['acceleration'] < 1e-9


class TestIdentityAudit:
    def test_frame_is_transported(self, grid_1d):
        fields = manufactured_commutator_fields(grid_1d)
        # ∂t e by central differences of the closed-form frame
        dt = 1e-5
        ahead = manufactured_commutator_fields(grid_1d, t=0.3 + dt).e
        behind = manufactured_commutator_fields(grid_1d, t=0.3 - dt).e
        assert np.allclose((ahead - behind) / (2 * dt), fields.e_t, atol=1e-8)

    def test_exact_identities_hold_to_roundoff(self, grid_1d):
        audit = identity_audit(grid_1d)
        assert set(audit) == {'transport', 'box', 'boundary', 'decomposition'}
        assert audit['transport'] < 1e-10
        assert audit['boundary'] < 1e-10
        assert audit['decomposition'] < 1e-10

    def test_box_residual_converges_at_stencil_order(self):
        nrs = [8, 16, 32]
        grids = [DomainGrid.build(nr=nr, dim=1, r_far=1.5, band_width=0.125, order=4) for nr in nrs]
        errors = [identity_audit(grid)['box'] for grid in grids]
        table = convergence_table([1 / nr for nr in nrs], {'box': errors})
        assert errors[-1] < errors[0]
        assert table.orders['box'][-1] > 2.5

    def test_zero_amplitude_is_trivial(self, grid_1d):
        audit = identity_audit(grid_1d, amplitude=0.0)
        assert audit['transport'] == pytest.approx(0.0, abs=1e-14)
