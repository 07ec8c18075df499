import numpy as np
import pytest

from core.error_handler import DegenerateFrame, DegenerateProjection, NonpositiveTheta0, TaylorViolation
from frames.algebra import (
    apply_closures,
    close_e0,
    first_bianchi_residual,
    metric_from_frame,
    pair_symmetry_residual,
    reconstruct_metric_inverse,
    ricci_contraction,
    ricci_from_fluid,
    transform_lower,
)
from frames.boundary import adapted_gram, build_adapted_frame, build_boundary_frame
from frames.checked import checked_coefficients, checked_gram
from frames.curvature import (
    decompose_curvature,
    random_algebraic_curvature,
    recover_curvature,
    two_form_from_w,
    w_from_two_form,
)
from frames.signature import EPS, MINKOWSKI, Signature, inner, levi4


def _near_identity_frames(rng, count=5, scale=0.1):
    return np.eye(4) + scale * rng.normal(size=(count, 4, 4))


class TestSignature:
    def test_default_signs(self):
        assert np.array_equal(EPS, [-1.0, 1.0, 1.0, 1.0])
        assert np.array_equal(MINKOWSKI, np.diag(EPS))

    def test_rejects_misplaced_timelike_entry(self):
        with pytest.raises(ValueError):
            Signature(epsilon=(1.0, -1.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            Signature(epsilon=(-1.0, -1.0, 1.0, 1.0))

    def test_levi_symbol(self):
        eps4 = levi4()
        assert eps4[0, 1, 2, 3] == 1.0
        assert eps4[1, 0, 2, 3] == -1.0
        assert np.count_nonzero(eps4) == 24


class TestMetricReconstruction:
    def test_frame_is_orthonormal_for_reconstructed_metric(self, rng):
        e = _near_identity_frames(rng)
        g = metric_from_frame(e)
        gram = np.einsum('nim,nmv,njv->nij', e, g, e)
        assert np.allclose(gram, np.broadcast_to(MINKOWSKI, gram.shape), atol=1e-12)

    def test_inverse_is_symmetric(self, rng):
        ginv = reconstruct_metric_inverse(_near_identity_frames(rng))
        assert np.allclose(ginv, np.swapaxes(ginv, 1, 2))

    def test_degenerate_frame_raises(self):
        e = np.tile(np.eye(4), (2, 1, 1))
        e[1, 2] = e[1, 1]
        with pytest.raises(DegenerateFrame):
            metric_from_frame(e)

    def test_nonfinite_frame_raises(self):
        e = np.tile(np.eye(4), (1, 1, 1))
        e[0, 0, 0] = np.nan
        with pytest.raises(DegenerateFrame):
            reconstruct_metric_inverse(e)


class TestClosures:
    def test_time_leg_satisfies_velocity_relation(self, rng):
        e = _near_identity_frames(rng)
        theta_hat = np.array([[1.2, 0.1, -0.2, 0.05]] * 5)
        closed, _ = apply_closures(theta_hat, e, np.zeros((5, 4, 4, 4)))
        dt = np.einsum('ni,nim->nm', theta_hat, closed)
        assert np.allclose(dt, np.broadcast_to([1.0, 0.0, 0.0, 0.0], dt.shape))

    def test_connection_closure_annihilates_velocity(self, rng):
        gamma = rng.normal(size=(3, 4, 4, 4))
        theta_hat = np.array([[1.5, 0.2, 0.1, -0.3]] * 3)
        _, closed = apply_closures(theta_hat, np.tile(np.eye(4), (3, 1, 1)), gamma)
        assert np.allclose(np.einsum('ni,nijk->njk', theta_hat, closed), 0.0, atol=1e-13)

    def test_closures_are_idempotent(self, rng):
        e = _near_identity_frames(rng, count=3)
        gamma = rng.normal(size=(3, 4, 4, 4))
        theta_hat = np.array([[1.1, 0.0, 0.3, 0.0]] * 3)
        once = apply_closures(theta_hat, e, gamma)
        twice = apply_closures(theta_hat, *once)
        assert np.allclose(once[0], twice[0])
        assert np.allclose(once[1], twice[1])

    def test_nonpositive_theta0_raises(self):
        theta_hat = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
        with pytest.raises(NonpositiveTheta0):
            close_e0(theta_hat, np.tile(np.eye(4), (2, 1, 1)))


class TestRicciSource:
    def test_static_fluid_source(self):
        theta = np.array([[1.0, 0.0, 0.0, 0.0]])
        ricci = ricci_from_fluid(theta, np.ones(1))
        assert np.allclose(ricci[0], 0.5 * np.eye(4))

    def test_switched_off_outside_the_fluid(self):
        theta = np.array([[1.0, 0.0, 0.0, 0.0]])
        assert np.allclose(ricci_from_fluid(theta, np.zeros(1)), 0.0)


class TestCurvatureAlgebra:
    def test_random_tensors_have_curvature_symmetries(self, rng):
        riemann = random_algebraic_curvature(rng, 4)
        assert np.allclose(pair_symmetry_residual(riemann), 0.0, atol=1e-12)
        assert np.allclose(first_bianchi_residual(riemann), 0.0, atol=1e-12)
        assert np.allclose(riemann, -np.swapaxes(riemann, 1, 2))

    def test_two_form_packing_inverts(self, rng):
        w = rng.normal(size=(4, 3, 6))
        assert np.allclose(w_from_two_form(two_form_from_w(w)), w)

    def test_recovery_from_w_and_ricci(self, rng):
        count = 6
        riemann = random_algebraic_curvature(rng, count)
        covector = np.tile([0.1, 1.0, 0.3, -0.2], (count, 1))
        xa, n, _, _ = build_adapted_frame(covector)
        w = decompose_curvature(riemann, xa)
        recovered = recover_curvature(w, xa, n, ricci_contraction(riemann))
        assert np.allclose(recovered, riemann, atol=1e-10)

    def test_recovery_round_trips_on_random_surfaces(self, rng):
        count = 100
        riemann = random_algebraic_curvature(rng, count)
        spatial = rng.normal(size=(count, 3))
        covector = np.zeros((count, 4))
        covector[:, 1:] = spatial
        covector[:, 0] = 0.6 * np.linalg.norm(spatial, axis=1) * np.tanh(rng.normal(size=count))
        xa, n, _, _ = build_adapted_frame(covector)
        w = decompose_curvature(riemann, xa)
        recovered = recover_curvature(w, xa, n, ricci_contraction(riemann))
        scale = max(1.0, float(np.max(np.abs(riemann))))
        assert np.max(np.abs(recovered - riemann)) <= 1e-9 * scale

    def test_identity_change_of_basis(self, rng):
        riemann = random_algebraic_curvature(rng, 2)
        identity = np.tile(np.eye(4), (2, 1, 1))
        assert np.allclose(transform_lower(riemann, identity, 4), riemann)


class TestAdaptedFrame:
    def test_adapted_frame_is_orthonormal(self):
        covector = np.array([[0.2, 1.0, 0.5, -0.3], [0.0, 0.0, 0.0, 2.0]])
        xa, n, a, _ = build_adapted_frame(covector)
        gxx, gxn, gnn = adapted_gram(xa, n)
        assert np.allclose(gxx, np.broadcast_to(np.diag([-1.0, 1.0, 1.0]), gxx.shape))
        assert np.allclose(gxn, 0.0, atol=1e-13)
        assert np.allclose(gnn, 1.0)
        assert np.allclose(a ** 2, inner(covector, covector))

    def test_timelike_covector_raises(self):
        with pytest.raises(DegenerateProjection):
            build_adapted_frame(np.array([[1.0, 0.1, 0.0, 0.0]]))

    def test_boundary_frame_of_planar_surface(self):
        frame = build_boundary_frame(np.array([[0.0, -2.0, 0.0, 0.0]]), np.ones(1), c0=0.1)
        assert np.allclose(frame.a, 2.0)
        assert np.allclose(frame.n, [[0.0, -1.0, 0.0, 0.0]])
        assert np.allclose(frame.gamma_coef, 1.0)

    def test_boundary_frame_enforces_taylor_bound(self):
        with pytest.raises(TaylorViolation):
            build_boundary_frame(np.array([[0.0, -0.05, 0.0, 0.0]]), np.ones(1), c0=0.1)


class TestCheckedFrame:
    def test_gram_matrix(self):
        theta_hat = np.array([[2.0, 0.5, 0.3, -0.1]])
        gram = checked_gram(checked_coefficients(theta_hat))
        expected = np.diag([-3.65, 1.0, 1.0, 1.0])
        assert np.allclose(gram[0], expected)

    def test_spacelike_velocity_raises(self):
        with pytest.raises(DegenerateFrame):
            checked_coefficients(np.array([[0.1, 1.0, 0.0, 0.0]]))
