"""
Frame-form right-hand sides against coordinate evaluations in flat space.

Every field here is closed form: a moving orthonormal frame of Minkowski
space, smooth vector fields and curvature-like tensors given in Cartesian
coordinates. Frame quantities are built from their exact coordinate
derivatives, so the frame formulas must reproduce the coordinate
references to round-off at arbitrary points.
"""
from dataclasses import dataclass
from typing import List

import numpy as np
import pytest
import sympy as sp

from curvature.maxwell import covariant_legs, matter_current, maxwell_source
from fluid.jets import FluidJet, WaveJet
from fluid.operators import boundary_operator, box_frame, box_from_frame_derivatives, wave_coefficients
from fluid.rhs import lambda_wave_rhs, sigma_wave_rhs, theta_boundary_rhs, theta_interior_rhs
from frames.curvature import kulkarni_nomizu, two_forms
from frames.signature import EPS, PAIRS
from tests.manufactured import (
    COORDS,
    box,
    gradient_flow,
    minkowski_dot,
    moving_frame,
    null_wave_potential,
    sample,
    wiggle,
)

ETA = np.diag(EPS)
TOL = dict(rtol=1e-9, atol=1e-9)


@dataclass
class FlatFrame:
    """
    :ivar points: (N, 4) sample points (t, x, y, z)
    :ivar e: e_I^μ, (N, 4, 4)
    :ivar de: ∂_α e_I^μ, (N, 4, 4, 4)
    :ivar dde: ∂_β∂_α e_I^μ, (N, 4, 4, 4, 4)
    """
    points: np.ndarray
    e: np.ndarray
    de: np.ndarray
    dde: np.ndarray


@dataclass
class Flow:
    """Samples of a gradient flow V = −∇φ with □φ = 0 and its scalars."""
    velocity: List[np.ndarray]
    sigma2: List[np.ndarray]
    lam: List[np.ndarray]
    d_flux: np.ndarray
    box_sigma2: np.ndarray
    box_lam: np.ndarray


def jets(expr, points: np.ndarray, order: int) -> List[np.ndarray]:
    """Samples of ``expr`` and its coordinate derivatives up to ``order``."""
    current = sp.Array(expr) if isinstance(expr, list) else expr
    out = [sample(current, points)]
    for _ in range(order):
        current = sp.derive_by_array(current, COORDS)
        out.append(sample(current, points))
    return out


def connection(frame: FlatFrame):
    """Γ_IJ^K = ε_K η(e_K, D_I e_J) and D_LΓ_IJ^K from the exact frame."""
    e, de, dde = frame.e, frame.de, frame.dde
    e_low, de_low = e * EPS, de * EPS
    gamma = np.einsum('k,nkv,nim,nmjv->nijk', EPS, e_low, e, de)
    d_gamma = (
        np.einsum('k,nakv,nim,nmjv->naijk', EPS, de_low, e, de)
        + np.einsum('k,nkv,naim,nmjv->naijk', EPS, e_low, de, de)
        + np.einsum('k,nkv,nim,namjv->naijk', EPS, e_low, e, dde)
    )
    return gamma, np.einsum('nla,naijk->nlijk', e, d_gamma)


def frame_vector(frame: FlatFrame, v: np.ndarray, dv: np.ndarray, ddv: np.ndarray):
    """Θ^I = ε_I η(e_I, V) with its first and second coordinate derivatives."""
    e_low, de_low, dde_low = frame.e * EPS, frame.de * EPS, frame.dde * EPS
    theta = EPS * np.einsum('niv,nv->ni', e_low, v)
    d_theta = EPS * (np.einsum('niv,nav->nai', e_low, dv) + np.einsum('naiv,nv->nai', de_low, v))
    dd_theta = EPS * (
        np.einsum('niv,nabv->nabi', e_low, ddv)
        + np.einsum('nbiv,nav->nabi', de_low, dv)
        + np.einsum('naiv,nbv->nabi', de_low, dv)
        + np.einsum('nabiv,nv->nabi', dde_low, v)
    )
    return theta, d_theta, dd_theta


def frame_derivatives(frame: FlatFrame, du: np.ndarray, ddu: np.ndarray):
    """D_I u and D_I D_J u from coordinate derivatives."""
    e, de = frame.e, frame.de
    first = np.einsum('nia,na...->ni...', e, du)
    second = (
        np.einsum('nia,najb,nb...->nij...', e, de, du)
        + np.einsum('nia,njb,nab...->nij...', e, e, ddu)
    )
    return first, second


def fluid_jet(frame: FlatFrame, velocity: List[np.ndarray], flow: Flow) -> FluidJet:
    gamma, dgamma = connection(frame)
    theta, d_theta, _ = frame_vector(frame, *velocity)
    sigma2, ds, dds = flow.sigma2
    lam, dlam = flow.lam
    dsigma2, ddsigma2 = frame_derivatives(frame, ds, dds)
    return FluidJet(
        theta=theta,
        theta_t=d_theta[:, 0],
        sigma2=sigma2,
        lam=lam,
        dtheta=np.einsum('nia,naj->nij', frame.e, d_theta),
        dsigma2=dsigma2,
        dlam=np.einsum('nia,na->ni', frame.e, dlam),
        ddsigma2=ddsigma2,
        gamma=gamma,
        dgamma=dgamma,
        riemann=None,
        coupling=np.zeros(sigma2.shape[0]),
    )


@pytest.fixture(scope='module')
def flat_frame():
    rng = np.random.default_rng(2024)
    points = rng.uniform(-1.0, 1.0, size=(12, 4))
    e, de, dde = jets(moving_frame(rng).tolist(), points, 2)
    return FlatFrame(points=points, e=e, de=de, dde=dde)


@pytest.fixture(scope='module')
def flow(flat_frame):
    rng = np.random.default_rng(77)
    points = flat_frame.points
    velocity = gradient_flow(null_wave_potential(rng))
    sigma2 = -minkowski_dot(velocity, velocity)
    flux = sum(velocity[m] * sp.diff(sigma2, COORDS[m]) for m in range(4))
    lam = flux / sp.sqrt(sigma2)
    return Flow(
        velocity=jets(velocity, points, 2),
        sigma2=jets(sigma2, points, 2),
        lam=jets(lam, points, 1),
        d_flux=jets(flux, points, 1)[1],
        box_sigma2=sample(box(sigma2), points),
        box_lam=sample(box(lam), points),
    )


@pytest.fixture(scope='module')
def drifting_velocity(flat_frame):
    """A velocity with a nonzero vector Laplacian."""
    rng = np.random.default_rng(5)
    velocity = gradient_flow(null_wave_potential(rng))
    drift = wiggle(rng)
    return jets([v + w for v, w in zip(velocity, drift)], flat_frame.points, 2)


class TestFluidFrameForms:
    def test_frame_is_orthonormal(self, flat_frame):
        gram = np.einsum('niv,vw,njw->nij', flat_frame.e, ETA, flat_frame.e)
        assert np.allclose(gram, ETA[None], atol=1e-13)

    def test_interior_rhs_is_frame_box_less_vector_laplacian(self, flat_frame, flow, drifting_velocity):
        jet = fluid_jet(flat_frame, drifting_velocity, flow)
        _, d_theta, dd_theta = frame_vector(flat_frame, *drifting_velocity)
        d_frame, dd_frame = frame_derivatives(flat_frame, d_theta, dd_theta)
        frame_box = box_from_frame_derivatives(dd_frame, d_frame, jet.gamma)

        laplacian = np.einsum('ab,nabv->nv', ETA, drifting_velocity[2])
        expected = EPS * np.einsum('niv,nv->ni', flat_frame.e * EPS, laplacian)
        assert np.max(np.abs(expected)) > 1e-3
        np.testing.assert_allclose(frame_box - theta_interior_rhs(jet), expected, **TOL)

    def test_coordinate_box_matches_frame_box(self, flat_frame, flow, drifting_velocity):
        jet = fluid_jet(flat_frame, drifting_velocity, flow)
        _, d_theta, dd_theta = frame_vector(flat_frame, *drifting_velocity)
        ginv, b = wave_coefficients(flat_frame.e, flat_frame.de, jet.gamma)
        assert np.allclose(ginv, ETA[None], atol=1e-13)

        wave = WaveJet(
            u_t=d_theta[:, 0],
            grad=d_theta[:, 1:],
            grad_t=dd_theta[:, 1:, 0],
            hess=dd_theta[:, 1:, 1:],
        )
        d_frame, dd_frame = frame_derivatives(flat_frame, d_theta, dd_theta)
        np.testing.assert_allclose(
            box_frame(wave, dd_theta[:, 0, 0], ginv, b),
            box_from_frame_derivatives(dd_frame, d_frame, jet.gamma),
            **TOL
        )

    def test_sigma_rhs_matches_coordinate_box(self, flat_frame, flow):
        jet = fluid_jet(flat_frame, flow.velocity, flow)
        assert np.all(jet.sigma2 > 0.0)
        np.testing.assert_allclose(sigma_wave_rhs(jet), flow.box_sigma2, **TOL)

    def test_lambda_rhs_matches_coordinate_box(self, flat_frame, flow):
        jet = fluid_jet(flat_frame, flow.velocity, flow)
        assert np.max(np.abs(flow.box_lam)) > 1e-6
        np.testing.assert_allclose(lambda_wave_rhs(jet), flow.box_lam, **TOL)

    def test_boundary_rhs_matches_normal_transport(self, flat_frame, flow):
        jet = fluid_jet(flat_frame, flow.velocity, flow)
        v, dv, _ = flow.velocity
        sigma2, ds, _ = flow.sigma2
        lam = flow.lam[0]

        # ∇_{grad σ²}V in coordinates, then the flux and time-derivative terms
        along = np.einsum('ab,na,nbv->nv', ETA, ds, dv)
        transport = EPS * np.einsum('niv,nv->ni', flat_frame.e * EPS, along)
        d_flux = np.einsum('nia,na->ni', flat_frame.e, flow.d_flux)
        expected = (
            transport / (2.0 * sigma2)[:, None]
            - EPS * d_flux / (2.0 * sigma2)[:, None]
            - (lam / (2.0 * sigma2))[:, None] * jet.theta_t
        )
        actual = theta_boundary_rhs(jet) - boundary_operator(jet.dtheta, jet.dsigma2, jet.sigma2)
        np.testing.assert_allclose(actual, expected, **TOL)


@dataclass
class CurvatureFields:
    """
    :ivar riemann: coordinate R_{abcd}, (N, 4, 4, 4, 4)
    :ivar d_riemann: ∂_m R_{abcd}, (N, 4, 4, 4, 4, 4)
    :ivar legs: coordinate X_A^ν, (N, 3, 4)
    :ivar d_legs: ∂_m X_A^ν, (N, 4, 3, 4)
    :ivar velocity: V^ν, (N, 4)
    :ivar d_velocity: ∂_m V^ν, (N, 4, 4)
    """
    riemann: np.ndarray
    d_riemann: np.ndarray
    legs: np.ndarray
    d_legs: np.ndarray
    velocity: np.ndarray
    d_velocity: np.ndarray


def _symmetric(rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(4, 4))
    return 0.5 * (m + m.T)


@pytest.fixture(scope='module')
def curvature_fields(flat_frame):
    """R = h ⊙ k for smooth symmetric h, k; it obeys neither Bianchi identity."""
    rng = np.random.default_rng(31)
    points = flat_frame.points
    h0, h1, k0, k1 = (_symmetric(rng) for _ in range(4))
    kappa, mu = rng.normal(size=4), rng.normal(size=4)
    ph, pk = points @ kappa, points @ mu
    h = h0 + np.sin(ph)[:, None, None] * h1
    k = k0 + np.cos(pk)[:, None, None] * k1
    dh = np.einsum('n,m,ab->nmab', np.cos(ph), kappa, h1)
    dk = -np.einsum('n,m,ab->nmab', np.sin(pk), mu, k1)
    riemann = kulkarni_nomizu(h, k)
    d_riemann = (
        kulkarni_nomizu(dh, np.broadcast_to(k[:, None], dk.shape))
        + kulkarni_nomizu(np.broadcast_to(h[:, None], dh.shape), dk)
    )

    base, swing, omega = rng.normal(size=(3, 4)), rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    phase = points @ omega.T
    legs = base[None] + np.sin(phase)[:, :, None] * swing[None]
    d_legs = np.einsum('na,am,av->nmav', np.cos(phase), omega, swing)

    drift, wobble, nu = rng.normal(size=4), 0.3 * rng.normal(size=4), rng.normal(size=4)
    pv = points @ nu
    velocity = drift[None] + np.sin(pv)[:, None] * wobble[None]
    d_velocity = np.einsum('n,m,v->nmv', np.cos(pv), nu, wobble)
    return CurvatureFields(riemann, d_riemann, legs, d_legs, velocity, d_velocity)


def to_frame(flat_frame: FlatFrame, fields: CurvatureFields):
    """Frame components of R, X_A and (∇_J X_A)^L."""
    e = flat_frame.e
    e_low = e * EPS
    riemann = np.einsum('nia,njb,nkc,nld,nabcd->nijkl', e, e, e, e, fields.riemann)
    xa = EPS * np.einsum('niv,nav->nai', e_low, fields.legs)
    nabla_xa = np.einsum('l,nlv,njm,nmav->najl', EPS, e_low, e, fields.d_legs)
    return riemann, xa, nabla_xa


def form_derivatives(flat_frame: FlatFrame, fields: CurvatureFields) -> np.ndarray:
    """D_I F^{AB}_{JK} per pair from the coordinate two-forms, (N, 3, 4, 4, 4)."""
    e, de = flat_frame.e, flat_frame.de
    r, dr, x, dx = fields.riemann, fields.d_riemann, fields.legs, fields.d_legs
    forms, d_forms = [], []
    for a, b in PAIRS:
        forms.append(np.einsum('nabcd,nc,nd->nab', r, x[:, a], x[:, b]))
        d_forms.append(
            np.einsum('nmabcd,nc,nd->nmab', dr, x[:, a], x[:, b])
            + np.einsum('nabcd,nmc,nd->nmab', r, dx[:, :, a], x[:, b])
            + np.einsum('nabcd,nc,nmd->nmab', r, x[:, a], dx[:, :, b])
        )
    forms, d_forms = np.stack(forms, axis=1), np.stack(d_forms, axis=2)
    d_frame_forms = (
        np.einsum('nmia,njb,npab->nmpij', de, e, forms)
        + np.einsum('nia,nmjb,npab->nmpij', e, de, forms)
        + np.einsum('nia,njb,nmpab->nmpij', e, e, d_forms)
    )
    return np.einsum('nim,nmpjk->npijk', e, d_frame_forms)


def matter_reference(fields: CurvatureFields, e: np.ndarray) -> np.ndarray:
    """g(X_B, V)∇_{X_A}V_K − g(X_A, V)∇_{X_B}V_K evaluated in coordinates."""
    x, v = fields.legs, fields.velocity
    g_xv = np.einsum('nav,v,nv->na', x, EPS, v)
    along = np.einsum('nam,nmv->nav', x, fields.d_velocity)
    lowered = np.einsum('nkv,nav->nak', e * EPS, along)
    out = [g_xv[:, b, None] * lowered[:, a] - g_xv[:, a, None] * lowered[:, b] for a, b in PAIRS]
    return np.stack(out, axis=1)


def cyclic_at(tensor: np.ndarray, i: int, j: int, k: int) -> np.ndarray:
    return tensor[..., i, j, k] + tensor[..., j, k, i] + tensor[..., k, i, j]


class TestMaxwellFrameForms:
    def test_two_forms_are_frame_projections(self, flat_frame, curvature_fields):
        riemann, xa, _ = to_frame(flat_frame, curvature_fields)
        e, x, r = flat_frame.e, curvature_fields.legs, curvature_fields.riemann
        for p, (a, b) in enumerate(PAIRS):
            coordinate = np.einsum('nabcd,nc,nd->nab', r, x[:, a], x[:, b])
            projected = np.einsum('nia,njb,nab->nij', e, e, coordinate)
            np.testing.assert_allclose(two_forms(riemann, xa)[:, p], projected, **TOL)

    def test_covariant_legs_match_coordinate_derivatives(self, flat_frame, curvature_fields):
        gamma, _ = connection(flat_frame)
        _, xa, nabla_xa = to_frame(flat_frame, curvature_fields)
        e_low = flat_frame.e * EPS
        dxa = EPS * (
            np.einsum('nlv,njm,nmav->najl', e_low, flat_frame.e, curvature_fields.d_legs)
            + np.einsum('njm,nmlv,nav->najl', flat_frame.e, flat_frame.de * EPS, curvature_fields.legs)
        )
        np.testing.assert_allclose(covariant_legs(xa, dxa, gamma), nabla_xa, **TOL)

    def test_interior_current_matches_divergence(self, flat_frame, curvature_fields):
        gamma, _ = connection(flat_frame)
        riemann, xa, nabla_xa = to_frame(flat_frame, curvature_fields)
        source = maxwell_source(riemann, gamma, xa, nabla_xa)
        divergence = np.einsum('i,npiik->npk', EPS, form_derivatives(flat_frame, curvature_fields))

        # what R itself contributes: η^{ma}∂_mR_{abcd} X_A^c X_B^d
        div_r = np.einsum('m,nmmbcd->nbcd', EPS, curvature_fields.d_riemann)
        x = curvature_fields.legs
        expected = np.stack(
            [np.einsum('nkb,nbcd,nc,nd->nk', flat_frame.e, div_r, x[:, a], x[:, b]) for a, b in PAIRS],
            axis=1,
        )
        np.testing.assert_allclose(divergence - source.current, expected, **TOL)
        np.testing.assert_allclose(source.k[..., :3], source.current[..., 1:], rtol=0.0, atol=0.0)

    def test_cyclic_source_matches_exterior_derivative(self, flat_frame, curvature_fields):
        gamma, _ = connection(flat_frame)
        riemann, xa, nabla_xa = to_frame(flat_frame, curvature_fields)
        source = maxwell_source(riemann, gamma, xa, nabla_xa)
        d_forms = form_derivatives(flat_frame, curvature_fields)

        e, x, dr = flat_frame.e, curvature_fields.legs, curvature_fields.d_riemann
        nabla_r = np.stack(
            [np.einsum('nmbcde,nd,ne->nmbc', dr, x[:, a], x[:, b]) for a, b in PAIRS],
            axis=1,
        )
        nabla_r = np.einsum('nim,njb,nkc,npmbc->npijk', e, e, e, nabla_r)
        for slot, (i, j, k) in enumerate(((0, 2, 3), (0, 3, 1), (0, 1, 2))):
            expected = cyclic_at(nabla_r, i, j, k) - cyclic_at(d_forms, i, j, k)
            np.testing.assert_allclose(source.k[..., 3 + slot], expected, **TOL)

    def test_matter_current_matches_coordinate_form(self, flat_frame, curvature_fields):
        _, xa, _ = to_frame(flat_frame, curvature_fields)
        e = flat_frame.e
        theta, _, _ = frame_vector(
            flat_frame,
            curvature_fields.velocity,
            curvature_fields.d_velocity,
            np.zeros(curvature_fields.d_velocity.shape[:2] + (4, 4)),
        )
        nabla_theta = EPS * np.einsum('njv,nim,nmv->nij', e * EPS, e, curvature_fields.d_velocity)
        coupling = np.ones(theta.shape[0])
        np.testing.assert_allclose(
            matter_current(theta, nabla_theta, xa, coupling),
            matter_reference(curvature_fields, e),
            **TOL
        )
        assert np.allclose(matter_current(theta, nabla_theta, xa, 0.0 * coupling), 0.0)

    def test_matter_enters_the_interior_current(self, flat_frame, curvature_fields):
        gamma, _ = connection(flat_frame)
        riemann, xa, nabla_xa = to_frame(flat_frame, curvature_fields)
        matter = matter_reference(curvature_fields, flat_frame.e)
        vacuum = maxwell_source(riemann, gamma, xa, nabla_xa)
        sourced = maxwell_source(riemann, gamma, xa, nabla_xa, matter=matter)
        np.testing.assert_allclose(sourced.current - vacuum.current, matter, **TOL)
        np.testing.assert_allclose(sourced.covariant_current - vacuum.covariant_current, matter, **TOL)
        np.testing.assert_allclose(sourced.k[..., 3:], vacuum.k[..., 3:], **TOL)
