import numpy as np
import pytest

from core.error_handler import HyperbolicityLoss
from curvature.checked_system import checked_geometry, checked_source, initial_w
from curvature.coordinate_em import coordinate_em, divcurl_residuals, residual_norms
from curvature.maxwell import A_MATS, assemble_hyperbolic, curvature_rhs, matter_current, spectral_floor
from diagnostics.refinement import convergence_table
from frames.algebra import ricci_contraction, transform_lower
from frames.checked import checked_gram
from frames.curvature import random_algebraic_curvature, recover_curvature
from grid.domain import DomainGrid


def boosted_legs(velocity):
    legs = np.tile(np.eye(4), (1, 1, 1))
    legs[0, 1:, 0] = velocity
    return legs


class TestPrincipalPart:
    def test_a_matrices_are_symmetric(self):
        assert A_MATS.shape == (3, 6, 6)
        assert np.allclose(A_MATS, np.swapaxes(A_MATS, 1, 2))

    def test_a_matrices_entry_by_entry(self):
        # (Ĩ, row, col) → value; rows/cols are (E₁, E₂, E₃, H¹, H², H³)
        entries = {
            (0, 1, 5): -1.0, (0, 5, 1): -1.0, (0, 2, 4): 1.0, (0, 4, 2): 1.0,
            (1, 0, 5): 1.0, (1, 5, 0): 1.0, (1, 2, 3): -1.0, (1, 3, 2): -1.0,
            (2, 0, 4): -1.0, (2, 4, 0): -1.0, (2, 1, 3): 1.0, (2, 3, 1): 1.0,
        }
        expected = np.zeros((3, 6, 6))
        for index, value in entries.items():
            expected[index] = value
        assert np.array_equal(A_MATS, expected)

    def test_a_matrices_are_read_only(self):
        with pytest.raises(ValueError):
            A_MATS[0, 0, 0] = 1.0

    def test_time_matrix_spectrum(self):
        legs = boosted_legs([0.3, 0.4, 0.0])
        system = assemble_hyperbolic(legs, np.zeros((1, 3, 6)), kappa_min=0.1)
        eig = np.linalg.eigvalsh(system.b0[0])
        assert np.allclose(eig, [0.5, 0.5, 1.0, 1.0, 1.5, 1.5])
        assert system.kappa[0] == pytest.approx(0.5)
        assert np.allclose(spectral_floor(legs), eig.min())

    def test_spectral_floor_loss_raises(self):
        legs = boosted_legs([0.95, 0.0, 0.0])
        with pytest.raises(HyperbolicityLoss):
            assemble_hyperbolic(legs, np.zeros((1, 3, 6)), kappa_min=0.1)

    def test_zero_data_has_zero_rate(self, grid_1d):
        n = grid_1d.n_nodes
        legs = np.tile(np.eye(4), (n, 1, 1))
        system = assemble_hyperbolic(legs, np.zeros((n, 3, 6)))
        assert np.allclose(curvature_rhs(system, np.zeros((n, 3, 6)), grid_1d), 0.0)

    def test_source_drives_the_rate(self, grid_1d):
        n = grid_1d.n_nodes
        legs = np.tile(np.eye(4), (n, 1, 1))
        source = np.zeros((n, 3, 6))
        source[:, 1, 2] = 0.7
        system = assemble_hyperbolic(legs, source)
        rate = curvature_rhs(system, np.zeros((n, 3, 6)), grid_1d)
        assert np.allclose(rate, source)


class TestCheckedGeometry:
    def _geometry(self, count):
        theta_hat = np.tile([1.2, 0.3, 0.1, 0.0], (count, 1))
        e = np.tile(np.eye(4), (count, 1, 1))
        covector = np.tile([1.0, 0.0, 0.0], (count, 1))
        return checked_geometry(e, np.zeros_like(e), theta_hat, np.zeros_like(theta_hat), covector), theta_hat

    def test_time_leg_is_velocity(self):
        geo, theta_hat = self._geometry(2)
        assert np.allclose(geo.che[:, 0], theta_hat)
        gram = checked_gram(geo.c)
        assert np.allclose(gram[:, 1:, 1:], np.broadcast_to(np.eye(3), (2, 3, 3)))
        assert np.allclose(geo.c_t, 0.0)

    def test_w_round_trip_through_checked_frame(self, rng):
        geo, _ = self._geometry(3)
        riemann = random_algebraic_curvature(rng, 3)
        checked = transform_lower(riemann, geo.c, 4)
        w = initial_w(riemann, geo)
        recovered = recover_curvature(w, geo.xa, geo.n, ricci_contraction(checked))
        assert np.allclose(recovered, checked, atol=1e-9)
        back = transform_lower(recovered, geo.c_inv, 4)
        assert np.allclose(back, riemann, atol=1e-9)

    def test_w_round_trips_for_random_velocities(self, rng):
        count = 100
        v = 0.3 * rng.uniform(-1.0, 1.0, size=(count, 3))
        theta_hat = np.concatenate([np.sqrt(1.0 + np.sum(v ** 2, axis=1))[:, None], v], axis=1)
        e = np.tile(np.eye(4), (count, 1, 1))
        covector = rng.normal(size=(count, 3))
        covector /= np.linalg.norm(covector, axis=1)[:, None]
        geo = checked_geometry(e, np.zeros_like(e), theta_hat, np.zeros_like(theta_hat), covector)
        riemann = random_algebraic_curvature(rng, count)
        checked = transform_lower(riemann, geo.c, 4)
        w = initial_w(riemann, geo)
        recovered = recover_curvature(w, geo.xa, geo.n, ricci_contraction(checked))
        back = transform_lower(recovered, geo.c_inv, 4)
        scale = max(1.0, float(np.max(np.abs(riemann))))
        assert np.max(np.abs(back - riemann)) <= 1e-9 * scale

    def test_matter_current_moves_to_the_checked_frame(self, grid_1d, rng):
        count = grid_1d.n_nodes
        geo, _ = self._geometry(count)
        e = np.tile(np.eye(4), (count, 1, 1))
        gamma = np.zeros((count, 4, 4, 4))
        riemann_chk = random_algebraic_curvature(rng, count)
        theta = rng.normal(size=(count, 4))
        nabla_theta = rng.normal(size=(count, 4, 4))

        coupled, _ = checked_source(geo, riemann_chk, gamma, e, theta, nabla_theta, np.ones(count), grid_1d)
        vacuum, _ = checked_source(geo, riemann_chk, gamma, e, theta, nabla_theta, np.zeros(count), grid_1d)

        matter = matter_current(theta, nabla_theta, geo.legs_in_e_frame(), np.ones(count))
        expected = np.array([[geo.c[n] @ matter[n, p] for p in range(3)] for n in range(count)])
        assert np.max(np.abs(expected)) > 1e-3
        assert np.allclose(coupled.current - vacuum.current, expected, atol=1e-12)
        assert np.allclose(coupled.k[..., 3:], vacuum.k[..., 3:], atol=1e-12)


def sourced_wave_fields(grid, t=0.3):
    """
    F = dA on flat space with A₂ = sin(t − x) and A₃ = exp(−x²) cos t, the
    current J³ = ∂_μF^{μ3} in closed form.
    """
    x = grid.coords[:, 0]
    n = grid.n_nodes
    phase = t - x
    bump = np.exp(-x ** 2)
    g_t, g_x = -bump * np.sin(t), -2.0 * x * bump * np.cos(t)
    g_tt, g_xt, g_xx = -bump * np.cos(t), 2.0 * x * bump * np.sin(t), (4.0 * x ** 2 - 2.0) * bump * np.cos(t)

    lower = np.zeros((n, 4, 4))
    lower_t = np.zeros((n, 4, 4))
    for (a, b), value, rate in (
        ((0, 2), np.cos(phase), -np.sin(phase)),
        ((1, 2), -np.cos(phase), np.sin(phase)),
        ((0, 3), g_t, g_tt),
        ((1, 3), g_x, g_xt),
    ):
        lower[:, a, b], lower[:, b, a] = value, -value
        lower_t[:, a, b], lower_t[:, b, a] = rate, -rate
    current = np.zeros((n, 4))
    current[:, 3] = -g_tt + g_xx
    return lower, lower_t, current


def divcurl_error(grid):
    n = grid.n_nodes
    form, form_t, current = sourced_wave_fields(grid)
    ginv = np.tile(np.diag([-1.0, 1.0, 1.0, 1.0]), (n, 1, 1))
    residuals = divcurl_residuals(
        grid, form, form_t, ginv, np.zeros_like(ginv), np.ones(n), np.zeros(n),
        current, np.zeros((n, 4, 4, 4)),
    )
    norms = residual_norms(grid, residuals)
    return max(value for sides in norms.values() for value in sides.values())


class TestDivCurl:
    def test_split_of_a_two_form(self):
        form = np.zeros((1, 4, 4))
        form[0, 1, 0], form[0, 0, 1] = 0.5, -0.5
        form[0, 1, 2], form[0, 2, 1] = 2.0, -2.0
        em = coordinate_em(form)
        assert np.allclose(em.ebar, [[0.5, 0.0, 0.0]])
        assert np.allclose(em.hbar, [[0.0, 0.0, -2.0]])

    def test_residuals_converge_at_stencil_order(self):
        nrs = [8, 16, 32]
        grids = [DomainGrid.build(nr=nr, dim=1, r_far=1.5, band_width=0.125, order=4) for nr in nrs]
        errors = [divcurl_error(grid) for grid in grids]
        table = convergence_table([1 / nr for nr in nrs], {'divcurl': errors})
        assert errors[-1] < 1e-3
        assert table.orders['divcurl'][-1] > 2.5
