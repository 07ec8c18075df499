"""
Initial-state construction from constraint data (ḡ, k, φ₀, φ₁).

Stages, each a pure function of its inputs:

    build_lapse_shift_data   g₀₀ = −1, g₀ᵢ = ∂ᵢφ₀/V⁰, V⁰, ∂tφ
    build_dtgij              ∂t g_ij from k
    build_christoffels       Γ^μ_{αβ}, ∂t g₀ₖ and Λ(0) from ∇·V = 0
    build_curvature_data     Gauss, Codazzi and the Einstein equations
    build_frame_and_connection  e_I(0), Γ_{IJ}^K(0), Θ(0), σ²(0)
    build_fluid_time_data    ∂tΘ(0), ∂tΛ(0)

Conventions: e₀(0) is the unit normal T of the slice, the spatial legs
are the ḡ-Gram-Schmidt of ∂₁, ∂₂, ∂₃, and ∇_i∂_j = Γ̄^k_{ij}∂_k + k_ij T.
Derivations are collected in docs/derivations.md.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from core.error_handler import DegenerateMetric, SpacelikeVelocity
from curvature.checked_system import CheckedGeometry, checked_geometry, initial_w
from evolution.wave import wave_to_first_order
from fluid.jets import FluidJet
from fluid.operators import wave_coefficients, wave_jet
from fluid.rhs import sigma_wave_rhs
from frames.algebra import transform_lower
from frames.fields import ConnectionField, CurvatureState, FluidState, FrameField
from frames.signature import EPS
from grid.domain import FLUID, SIGMA, DomainGrid
from initial_data.constraint_data import ConstraintData, constraint_residuals
from initial_data.geometry import SpatialGeometry, covariant_derivative_sym2, invert_metric, spatial_geometry

logger = logging.getLogger(__name__)

TEST_FLUID = 'test-fluid'
COUPLED = 'coupled'


@dataclass
class LapseShiftData:
    """
    :ivar v0: V⁰ = (φ₁² − |∇̄φ₀|²)^{1/2} = σ(0)
    :ivar g0i: g₀ᵢ = β_i, (N, 3)
    :ivar beta_up: β^i = ḡ^{ij}β_j, (N, 3)
    :ivar lapse: N = (1 + |β|²)^{1/2}
    :ivar g00: g₀₀ = −1
    :ivar dtg00: ∂t g₀₀ = 0
    :ivar dtphi: ∂tφ = −V⁰
    :ivar dphi0: ∂ᵢφ₀, (N, 3)
    """
    v0: np.ndarray
    g0i: np.ndarray
    beta_up: np.ndarray
    lapse: np.ndarray
    g00: np.ndarray
    dtg00: np.ndarray
    dtphi: np.ndarray
    dphi0: np.ndarray
    gbar_inv: np.ndarray

    @property
    def sigma2(self) -> np.ndarray:
        return self.v0 ** 2

    def metric(self, gbar: np.ndarray) -> np.ndarray:
        """g_{μν}(0), (N, 4, 4)."""
        g = np.zeros((gbar.shape[0], 4, 4))
        g[:, 0, 0] = self.g00
        g[:, 0, 1:] = self.g0i
        g[:, 1:, 0] = self.g0i
        g[:, 1:, 1:] = gbar
        return g


@dataclass
class ChristoffelData:
    """
    :ivar christoffel: Γ^μ_{αβ} stored [n, μ, α, β]
    :ivar dtg: ∂t g_{μν}, (N, 4, 4)
    :ivar lam: Λ(0) = ∂tσ² from the divergence-free condition, (N,)
    :ivar ginv: g^{μν}(0)
    """
    christoffel: np.ndarray
    dtg: np.ndarray
    lam: np.ndarray
    ginv: np.ndarray


@dataclass
class CurvatureData:
    """
    :ivar basis_riemann: R in the basis (T, ∂₁, ∂₂, ∂₃), all lower
    :ivar spatial: intrinsic geometry of ḡ
    """
    basis_riemann: np.ndarray
    spatial: SpatialGeometry


@dataclass
class InitialState:
    """Complete compatible state at t = 0."""
    g0: np.ndarray
    dtg: np.ndarray
    christoffel: np.ndarray
    frame0: FrameField
    conn0: ConnectionField
    curv0: CurvatureState
    fluid0: FluidState
    mode: str
    coupling: np.ndarray
    frame_rate: np.ndarray
    checked: Optional[CheckedGeometry] = None
    metadata: Dict[str, object] = field(default_factory=dict)


def build_lapse_shift_data(cd: ConstraintData, grid: DomainGrid, region: str = SIGMA) -> LapseShiftData:
    """
    Lapse/shift data of the Lagrangian gauge at t = 0.

    :raises SpacelikeVelocity: where φ₁² − |∇̄φ₀|² ≤ 0
    """
    gbar_inv = invert_metric(cd.gbar)
    dphi = grid.gradient(cd.phi0, region)
    radicand = cd.phi1 ** 2 - np.einsum('ni,nij,nj->n', dphi, gbar_inv, dphi)
    if np.any(radicand <= 0.0):
        node = int(np.argmin(radicand))
        raise SpacelikeVelocity(
            "Initial velocity is not timelike",
            context={'node': node, 'radicand': float(radicand[node])}
        )
    v0 = np.sqrt(radicand)
    g0i = dphi / v0[:, None]
    beta_up = np.einsum('nij,nj->ni', gbar_inv, g0i)
    lapse = np.sqrt(1.0 + np.einsum('ni,ni->n', g0i, beta_up))
    n = cd.n_nodes
    return LapseShiftData(
        v0=v0, g0i=g0i, beta_up=beta_up, lapse=lapse,
        g00=-np.ones(n), dtg00=np.zeros(n), dtphi=-v0, dphi0=dphi, gbar_inv=gbar_inv,
    )


def build_dtgij(
    cd: ConstraintData,
    lapse: LapseShiftData,
    grid: DomainGrid,
    region: str = SIGMA,
    floor: float = 1e-8
) -> np.ndarray:
    """
    ∂t g_ij = 2N k_ij + ∇̄_iβ_j + ∇̄_jβ_i from ∂t = N T + β.

    :raises DegenerateMetric: if (g⁻¹)⁰⁰ is not negative
    """
    ginv = invert_metric(lapse.metric(cd.gbar))
    if np.any(ginv[:, 0, 0] >= -floor):
        node = int(np.argmax(ginv[:, 0, 0]))
        raise DegenerateMetric(
            "Initial slice is not spacelike",
            context={'node': node, 'ginv00': float(ginv[node, 0, 0]), 'threshold': -floor}
        )
    geo_christoffel = spatial_geometry(cd.gbar, grid, region).christoffel
    dbeta = grid.gradient(lapse.g0i, region)
    cov = dbeta - np.einsum('nmij,nm->nij', geo_christoffel, lapse.g0i)
    return 2.0 * lapse.lapse[:, None, None] * cd.kk + cov + np.swapaxes(cov, 1, 2)


def build_christoffels(
    cd: ConstraintData,
    lapse: LapseShiftData,
    dtgij: np.ndarray,
    grid: DomainGrid,
    region: str = SIGMA,
    spatial: Optional[SpatialGeometry] = None
) -> ChristoffelData:
    """
    Spacetime Christoffel symbols at t = 0.

        Γ^0_ij = k_ij/N,   Γ^k_ij = Γ̄^k_ij − k_ij β^k/N
        Γ^μ_{i0} = g^{μj}(∂_i g_{0j} − Γ^ν_{ij} g_{ν0})
        Γ^μ_{00} = g^{μk} ∂t g_{0k}

    ∂t g_{0k} follows from ∂_k∂_tφ with V⁰ = √s and the divergence-free
    condition, which also fixes Λ(0):

        Λ = [g^{0k}∂_k s − s g^{ij}∂t g_ij] / (−g^{00})
        ∂t g_{0k} = −∂_k s/(2s) − g_{0k}Λ/(2s)
    """
    if spatial is None:
        spatial = spatial_geometry(cd.gbar, grid, region)
    g = lapse.metric(cd.gbar)
    ginv = invert_metric(g)
    n_lapse = lapse.lapse
    count = cd.n_nodes

    s = lapse.sigma2
    ds = grid.gradient(s, region)
    lam = (
        np.einsum('nk,nk->n', ginv[:, 0, 1:], ds)
        - s * np.einsum('nij,nij->n', ginv[:, 1:, 1:], dtgij)
    ) / (-ginv[:, 0, 0])
    dtg0k = -ds / (2.0 * s[:, None]) - lapse.g0i * (lam / (2.0 * s))[:, None]

    dtg = np.zeros((count, 4, 4))
    dtg[:, 0, 0] = lapse.dtg00
    dtg[:, 0, 1:] = dtg0k
    dtg[:, 1:, 0] = dtg0k
    dtg[:, 1:, 1:] = dtgij

    christoffel = np.zeros((count, 4, 4, 4))
    christoffel[:, 0, 1:, 1:] = cd.kk / n_lapse[:, None, None]
    christoffel[:, 1:, 1:, 1:] = (
        spatial.christoffel
        - np.einsum('nij,nk->nkij', cd.kk, lapse.beta_up) / n_lapse[:, None, None, None]
    )
    dg0j = grid.gradient(lapse.g0i, region)
    gamma_g0 = christoffel[:, 0, 1:, 1:] * lapse.g00[:, None, None] + np.einsum(
        'nkij,nk->nij', christoffel[:, 1:, 1:, 1:], lapse.g0i
    )
    low = dg0j - gamma_g0
    mixed = np.einsum('nmj,nij->nmi', ginv[:, :, 1:], low)
    christoffel[:, :, 1:, 0] = mixed
    christoffel[:, :, 0, 1:] = mixed
    christoffel[:, :, 0, 0] = np.einsum('nmk,nk->nm', ginv[:, :, 1:], dtg0k)
    return ChristoffelData(christoffel=christoffel, dtg=dtg, lam=lam, ginv=ginv)


def build_curvature_data(
    cd: ConstraintData,
    lapse: LapseShiftData,
    grid: DomainGrid,
    coupling: float = 1.0,
    region: str = SIGMA,
    spatial: Optional[SpatialGeometry] = None
) -> CurvatureData:
    """
    Spacetime curvature at t = 0 in the basis (T, ∂_i):

        R_ijkl = R̄_ijkl + k_ik k_jl − k_il k_jk
        R_Tjkl = ∇̄_l k_kj − ∇̄_k k_lj
        R_TiTj = ḡ^{kl} R_kilj − χ(∂_iφ₀∂_jφ₀ + ½ḡ_ij)

    with R_abcd = g(∂_a, R(∂_c, ∂_d)∂_b) and χ the fluid mask times
    ``coupling``.
    """
    if spatial is None:
        spatial = spatial_geometry(cd.gbar, grid, region)
    k = cd.kk
    spatial4 = (
        spatial.riemann
        + np.einsum('nik,njl->nijkl', k, k)
        - np.einsum('nil,njk->nijkl', k, k)
    )
    dk = covariant_derivative_sym2(k, spatial.christoffel, grid, region)
    # dk[n, a, b, c] = ∇̄_a k_bc
    codazzi = np.einsum('nlkj->njkl', dk) - np.einsum('nklj->njkl', dk)
    chi = coupling * cd.omega0_mask.astype(float)
    source = np.einsum('ni,nj->nij', lapse.dphi0, lapse.dphi0) + 0.5 * cd.gbar
    electric = np.einsum('nkl,nkilj->nij', spatial.inverse, spatial4) - chi[:, None, None] * source

    r = np.zeros((cd.n_nodes, 4, 4, 4, 4))
    r[:, 1:, 1:, 1:, 1:] = spatial4
    r[:, 0, 1:, 1:, 1:] = codazzi
    r[:, 1:, 0, 1:, 1:] = -codazzi
    r[:, 1:, 1:, 0, 1:] = np.einsum('njkl->nklj', codazzi)
    r[:, 1:, 1:, 1:, 0] = -np.einsum('njkl->nklj', codazzi)
    r[:, 0, 1:, 0, 1:] = electric
    r[:, 1:, 0, 1:, 0] = electric
    r[:, 0, 1:, 1:, 0] = -electric
    r[:, 1:, 0, 0, 1:] = -electric
    return CurvatureData(basis_riemann=r, spatial=spatial)


def spatial_legs(gbar: np.ndarray) -> np.ndarray:
    """E_Ĩ^i with e_Ĩ = E_Ĩ^i ∂_i the ḡ-Gram-Schmidt of ∂₁, ∂₂, ∂₃."""
    return np.linalg.inv(np.linalg.cholesky(gbar))


def build_frame_and_connection(
    cd: ConstraintData,
    lapse: LapseShiftData,
    christ: ChristoffelData,
    grid: DomainGrid,
    region: str = SIGMA
):
    """
    Frame, connection and fluid variables at t = 0.

    e₀ = T = (∂t − β^i∂_i)/N; ∂t e_I^μ = −Γ^μ_{0ν} e_I^ν from ∇_{∂t}e_I = 0;
    Γ_{IJ}^K = ε_K g_{νλ} e_K^λ (e_I^μ ∂_μ e_J^ν + e_I^μ e_J^λ' Γ^ν_{μλ'});
    Θ^I = ε_I g(V, e_I) with V = V⁰∂t, σ² = −Θ_IΘ^I.

    :return: (FrameField, ConnectionField, FluidState, ∂t e)
    """
    count = cd.n_nodes
    legs = spatial_legs(cd.gbar)
    e = np.zeros((count, 4, 4))
    e[:, 0, 0] = 1.0 / lapse.lapse
    e[:, 0, 1:] = -lapse.beta_up / lapse.lapse[:, None]
    e[:, 1:, 1:] = legs

    gamma4 = christ.christoffel
    e_t = -np.einsum('nmv,niv->nim', gamma4[:, :, 0, :], e)
    de_coord = np.concatenate([e_t[:, None], grid.gradient(e, region)], axis=1)

    g = lapse.metric(cd.gbar)
    nabla = (
        np.einsum('nim,nmjv->nijv', e, de_coord)
        + np.einsum('nim,njl,nvml->nijv', e, e, gamma4)
    )
    gamma = np.einsum('k,nkl,nlv,nijv->nijk', EPS, e, g, nabla)

    v_low = lapse.v0[:, None] * g[:, 0, :]
    theta = EPS * np.einsum('nm,nim->ni', v_low, e)
    sigma2 = -np.einsum('i,ni,ni->n', EPS, theta, theta)

    fluid = FluidState(
        theta=theta,
        sigma2=sigma2,
        lam=christ.lam.copy(),
        theta_t=np.zeros((count, 4)),
        lambda_t=np.zeros(count),
    )
    return FrameField(e=e), ConnectionField(gamma=gamma), fluid, e_t


def build_fluid_time_data(
    fluid: FluidState,
    frame: FrameField,
    e_t: np.ndarray,
    conn: ConnectionField,
    grid: DomainGrid,
    coupling: np.ndarray,
    floor: float = 1e-8
) -> FluidState:
    """
    Time data of the fluid at t = 0.

    σ ∂tΘ^I = −½ ε_I D_Iσ² from ∇_VV + ½∇σ² = 0, and ∂tΛ from the σ²
    wave equation. Outside the fluid the variables keep their rest values
    (Θ = Θ̂, σ² = 1) with vanishing rates; on ∂Ω, Λ = ∂tΛ = 0 since σ² = 1
    there for all time.
    """
    out = fluid.copy()
    e = frame.e
    exterior = ~grid.fluid
    out.sigma2[exterior] = 1.0
    out.lam[exterior] = 0.0
    out.theta[exterior] = out.theta[exterior] / np.sqrt(
        -np.einsum('i,ni,ni->n', EPS, out.theta[exterior], out.theta[exterior])
    )[:, None]
    discarded = float(np.max(np.abs(out.lam[grid.boundary]))) if np.any(grid.boundary) else 0.0
    out.lam[grid.boundary] = 0.0
    logger.debug(f"Boundary Λ(0) pinned to zero (discarded {discarded:.3e})")

    ds_coord = np.concatenate([out.lam[:, None], grid.gradient(out.sigma2, FLUID)], axis=1)
    dsigma2 = np.einsum('nim,nm->ni', e, ds_coord)
    sigma = np.sqrt(out.sigma2)
    out.theta_t = -0.5 * EPS * dsigma2 / sigma[:, None]
    out.theta_t[exterior] = 0.0

    dtheta_coord = np.concatenate([out.theta_t[:, None], grid.gradient(out.theta, FLUID)], axis=1)
    dtheta = np.einsum('nim,nmj->nij', e, dtheta_coord)
    count = out.sigma2.shape[0]
    # the σ² equation reads neither ∇Λ, ∇∇σ² nor ∇Γ
    jet = FluidJet(
        theta=out.theta, theta_t=out.theta_t, sigma2=out.sigma2, lam=out.lam,
        dtheta=dtheta, dsigma2=dsigma2, dlam=np.zeros((count, 4)),
        ddsigma2=np.zeros((count, 4, 4)), gamma=conn.gamma,
        dgamma=np.zeros((count, 4, 4, 4, 4)), riemann=None, coupling=coupling,
    )
    de_coord = np.concatenate([e_t[:, None], grid.gradient(e, SIGMA)], axis=1)
    ginv, b = wave_coefficients(e, de_coord, conn.gamma)
    u_jet = wave_jet(out.sigma2, out.lam, grid, FLUID)
    lambda_t = wave_to_first_order(u_jet, ginv, b, sigma_wave_rhs(jet), floor)
    lambda_t[~grid.interior] = 0.0
    out.lambda_t = lambda_t
    return out


def build_initial_state(
    cd: ConstraintData,
    grid: DomainGrid,
    mode: str = COUPLED,
    floor: float = 1e-8,
    gram_floor: float = 1e-8,
    constraint_tol: Optional[float] = None
) -> InitialState:
    """
    Run the whole pipeline.

    In test-fluid mode the geometry is frozen flat: the Ricci source is
    switched off and the curvature is set to zero.
    """
    if mode not in (TEST_FLUID, COUPLED):
        raise ValueError(f"Unknown mode {mode!r}")
    cd.validate(grid)
    coupled = mode == COUPLED
    coupling_value = 1.0 if coupled else 0.0
    coupling = coupling_value * grid.fluid.astype(float)

    residuals = constraint_residuals(cd, grid, coupling_value)
    norms = residuals.norms(~grid.band)
    logger.info(
        f"Constraint residuals: hamiltonian={norms['hamiltonian']:.3e}, momentum={norms['momentum']:.3e}"
    )
    if constraint_tol is not None and max(norms.values()) > constraint_tol:
        logger.warning(f"Constraint residuals exceed {constraint_tol:.1e}; data are not constraint satisfying")

    lapse = build_lapse_shift_data(cd, grid)
    spatial = spatial_geometry(cd.gbar, grid)
    dtgij = build_dtgij(cd, lapse, grid, floor=floor)
    christ = build_christoffels(cd, lapse, dtgij, grid, spatial=spatial)
    frame, conn, fluid, e_t = build_frame_and_connection(cd, lapse, christ, grid)
    fluid = build_fluid_time_data(fluid, frame, e_t, conn, grid, coupling, floor)

    theta_hat = fluid.theta_hat()
    geo = checked_geometry(
        frame.e, e_t, theta_hat, np.zeros_like(theta_hat), grid.normal_covector(), floor, gram_floor
    )
    frame.che = geo.che

    count = grid.n_nodes
    if coupled:
        curv = build_curvature_data(cd, lapse, grid, coupling_value, spatial=spatial)
        change = np.zeros((count, 4, 4))
        change[:, 0, 0] = 1.0
        change[:, 1:, 1:] = spatial_legs(cd.gbar)
        riemann = transform_lower(curv.basis_riemann, change, 4)
        w = initial_w(riemann, geo)
    else:
        riemann = np.zeros((count, 4, 4, 4, 4))
        w = np.zeros((count, 3, 6))

    state = InitialState(
        g0=lapse.metric(cd.gbar),
        dtg=christ.dtg,
        christoffel=christ.christoffel,
        frame0=frame,
        conn0=conn,
        curv0=CurvatureState(w=w, riemann=riemann),
        fluid0=fluid,
        mode=mode,
        coupling=coupling,
        frame_rate=e_t,
        checked=geo,
        metadata={'constraint_residuals': norms},
    )
    logger.info(f"Initial state built in {mode} mode on {count} nodes")
    return state
