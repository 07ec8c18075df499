"""
Quantities that vanish on solutions, used as constraint monitors.

Fluid:

    Δ̃ = ∇_IΘ^I,   ω_IJ = ∇_IΘ_J − ∇_JΘ_I,   S = σ² + Θ^IΘ_I,
    X_I = Θ^J∇_JΘ_I + ½∇_Iσ²,
    Y_I = Θ^J∇_J(Θ^K∇_KΘ_I) − ½(∇^Jσ²)∇_JΘ_I + ½∇_I(Θ^J∇_Jσ²),
    A = □σ² + 2(∇^IΘ^J)(∇_IΘ_J) + c(2σ² − 1)σ².

Geometry: the torsion Q_IJ^μ of the frame and connection, the first
Bianchi and pair-symmetry residuals of R, the contracted Bianchi residual
Δ, the second Bianchi residual Z, the Einstein residual R̃ split along the
adapted frame, and the Ricci-identity residual S̃ relating R to Γ.

Every quantity is reported as sup and L² norms per region; derivatives use
the region's one-sided stencils at the interface.
"""
import logging
from typing import Dict

import numpy as np

from diagnostics.context import MonitorContext
from diagnostics.flow import flow_derivative
from fluid.operators import box_frame, coordinate_derivative, wave_jet
from fluid.rhs import covariant_theta
from frames.algebra import (
    first_bianchi_residual,
    frame_derivative_from_coordinates,
    pair_symmetry_residual,
    ricci_contraction,
    ricci_from_fluid,
)
from frames.signature import EPS
from grid.domain import FLUID, SIGMA, VACUUM

logger = logging.getLogger(__name__)

Norms = Dict[str, Dict[str, Dict[str, float]]]

FLUID_QUANTITIES = ('divergence', 'vorticity', 'normalization', 'acceleration', 'y', 'sigma_wave')
GEOMETRY_QUANTITIES = (
    'torsion', 'first_bianchi', 'pair_symmetry', 'contracted_bianchi', 'second_bianchi',
    'einstein_tangential', 'einstein_mixed', 'einstein_normal', 'ricci_identity',
)


def _region_norms(values: np.ndarray, mask: np.ndarray, weights: np.ndarray) -> Dict[str, float]:
    count = values.shape[0]
    pointwise = np.sqrt(np.sum(np.abs(values.reshape(count, -1)) ** 2, axis=1))
    chunk = pointwise[mask]
    return {
        'sup': float(chunk.max()) if chunk.size else 0.0,
        'l2': float(np.sqrt(np.sum(weights[mask] * chunk ** 2))),
    }


def _lowered_nabla_theta(nabla: np.ndarray) -> np.ndarray:
    """∇_IΘ_J from ∇_IΘ^J."""
    return nabla * EPS[None, None, :]


def _acceleration_field(ctx: MonitorContext, y: np.ndarray) -> np.ndarray:
    """Θ^K∇_KΘ_I at a state vector."""
    f = ctx.layout.unpack(y)
    dtheta = frame_derivative_from_coordinates(
        f['e'], coordinate_derivative(f['theta'], f['theta_t'], ctx.grid, FLUID)
    )
    nabla = dtheta + np.einsum('nikj,nk->nij', f['gamma'], f['theta'])
    return np.einsum('nk,nki->ni', f['theta'], _lowered_nabla_theta(nabla))


def _flux_field(ctx: MonitorContext, y: np.ndarray) -> np.ndarray:
    """Θ^J D_Jσ² at a state vector."""
    f = ctx.layout.unpack(y)
    ds = frame_derivative_from_coordinates(
        f['e'], coordinate_derivative(f['sigma2'], f['lam'], ctx.grid, FLUID)
    )
    return np.einsum('nj,nj->n', f['theta'], ds)


def fluid_quantities(ctx: MonitorContext) -> Dict[str, np.ndarray]:
    """Pointwise fluid vanishing quantities."""
    grid, snap = ctx.grid, ctx.snap
    jet = snap.jet
    e, gamma = snap.e, jet.gamma
    theta = jet.theta
    nabla = covariant_theta(jet)
    nabla_low = _lowered_nabla_theta(nabla)
    theta_low = theta * EPS

    divergence = np.einsum('nii->n', nabla)
    vorticity = nabla_low - np.swapaxes(nabla_low, 1, 2)
    normalization = jet.sigma2 + np.einsum('ni,ni->n', theta, theta_low)
    acceleration = np.einsum('nj,nji->ni', theta, nabla_low) + 0.5 * jet.dsigma2

    accel = _acceleration_field(ctx, ctx.y)
    accel_t = flow_derivative(lambda y: _acceleration_field(ctx, y), ctx.y, ctx.rhs, 1)
    d_accel = frame_derivative_from_coordinates(e, coordinate_derivative(accel, accel_t, grid, FLUID))
    nabla_accel = d_accel - np.einsum('njik,nk->nji', gamma, accel)
    flux = _flux_field(ctx, ctx.y)
    flux_t = flow_derivative(lambda y: _flux_field(ctx, y), ctx.y, ctx.rhs, 1)
    d_flux = frame_derivative_from_coordinates(e, coordinate_derivative(flux, flux_t, grid, FLUID))
    y_field = (
        np.einsum('nj,nji->ni', theta, nabla_accel)
        - 0.5 * np.einsum('j,nj,nji->ni', EPS, jet.dsigma2, nabla_low)
        + 0.5 * d_flux
    )

    box_sigma = box_frame(
        wave_jet(jet.sigma2, jet.lam, grid, FLUID), ctx.fields['lambda_t'], snap.ginv, snap.b
    )
    sigma_wave = (
        box_sigma
        + 2.0 * np.einsum('i,j,nij,nij->n', EPS, EPS, nabla, nabla)
        + ctx.coupling * (2.0 * jet.sigma2 - 1.0) * jet.sigma2
    )
    return {
        'divergence': divergence,
        'vorticity': vorticity,
        'normalization': normalization,
        'acceleration': acceleration,
        'y': y_field,
        'sigma_wave': sigma_wave,
    }


def _riemann_gradient(ctx: MonitorContext) -> np.ndarray:
    """D_M R_{IJKL}, one-sided on each side of the fluid surface, (N, 4, 4, 4, 4, 4)."""
    grid = ctx.grid
    riemann = ctx.riemann
    if not ctx.coupled:
        return np.zeros((grid.n_nodes, 4) + riemann.shape[1:])
    riemann_t = flow_derivative(ctx.riemann_at, ctx.y, ctx.rhs, 1)
    inside = coordinate_derivative(riemann, riemann_t, grid, FLUID)
    outside = coordinate_derivative(riemann, riemann_t, grid, VACUUM)
    mask = grid.fluid.reshape((-1,) + (1,) * (inside.ndim - 1))
    return frame_derivative_from_coordinates(ctx.snap.e, np.where(mask, inside, outside))


def covariant_riemann(ctx: MonitorContext) -> np.ndarray:
    """∇_M R_{JIKL} with M first."""
    g = ctx.snap.jet.gamma
    r = ctx.riemann
    d = _riemann_gradient(ctx)
    return (
        d
        - np.einsum('nmjp,npikl->nmjikl', g, r)
        - np.einsum('nmip,njpkl->nmjikl', g, r)
        - np.einsum('nmkp,njipl->nmjikl', g, r)
        - np.einsum('nmlp,njikp->nmjikl', g, r)
    )


def geometry_quantities(ctx: MonitorContext) -> Dict[str, np.ndarray]:
    """Pointwise geometric vanishing quantities."""
    grid, snap = ctx.grid, ctx.snap
    jet = snap.jet
    e, g, r = snap.e, jet.gamma, ctx.riemann

    de_coord = coordinate_derivative(e, snap.e_t, grid, SIGMA)
    de = np.einsum('niv,nvjm->nijm', e, de_coord)
    antisym = g - np.swapaxes(g, 1, 2)
    torsion = de - np.swapaxes(de, 1, 2) - np.einsum('nijk,nkm->nijm', antisym, e)

    nabla_r = covariant_riemann(ctx)
    nabla = covariant_theta(jet)
    nabla_low = _lowered_nabla_theta(nabla)
    theta_low = jet.theta * EPS
    matter = (
        np.einsum('nl,nki->nikl', theta_low, nabla_low)
        - np.einsum('nk,nli->nikl', theta_low, nabla_low)
    )
    contracted = np.einsum('j,njjikl->nikl', EPS, nabla_r) - ctx.coupling[:, None, None, None] * matter
    second = (
        nabla_r
        + np.einsum('njkilm->nijklm', nabla_r)
        + np.einsum('nkijlm->nijklm', nabla_r)
    )

    einstein = ricci_contraction(r) - ricci_from_fluid(jet.theta, ctx.coupling)
    legs = ctx.geo.legs_in_e_frame()
    n_e = np.einsum('nj,nji->ni', ctx.geo.n, ctx.geo.c)
    blocks = np.concatenate([legs, n_e[:, None, :]], axis=1)
    adapted = np.einsum('nai,nbj,nij->nab', blocks, blocks, einstein)

    dgamma = np.einsum('nijmk->nkmij', jet.dgamma)
    quadratic = np.einsum('nilk,njml->nkmij', g, g) - np.einsum('njlk,niml->nkmij', g, g)
    bracket = np.einsum('njil,nlmk->nkmij', g, g) - np.einsum('nijl,nlmk->nkmij', g, g)
    ricci_identity = (
        np.einsum('k,nkmij->nkmij', EPS, r)
        - (dgamma - np.swapaxes(dgamma, 3, 4))
        - quadratic
        - bracket
    )
    return {
        'torsion': torsion,
        'first_bianchi': first_bianchi_residual(r),
        'pair_symmetry': pair_symmetry_residual(r),
        'contracted_bianchi': contracted,
        'second_bianchi': second,
        'einstein_tangential': adapted[:, :3, :3],
        'einstein_mixed': adapted[:, :3, 3],
        'einstein_normal': adapted[:, 3, 3],
        'ricci_identity': ricci_identity,
    }


def vanishing_fluid(ctx: MonitorContext) -> Norms:
    """Norms over the fluid; Y is also reported on the boundary, where it must vanish."""
    grid = ctx.grid
    vol = grid.volume_weights(FLUID)
    quantities = fluid_quantities(ctx)
    report = {name: {FLUID: _region_norms(values, grid.fluid, vol)} for name, values in quantities.items()}
    report['y']['boundary'] = _region_norms(quantities['y'], grid.boundary, grid.boundary_weights())
    return report


def vanishing_geometry(ctx: MonitorContext) -> Norms:
    """Norms on the fluid and on the vacuum off the absorbing band."""
    grid = ctx.grid
    vol = ctx.off_band(grid.volume_weights(SIGMA))
    regions = {FLUID: grid.fluid, VACUUM: grid.exterior & ~grid.band}
    return {
        name: {region: _region_norms(values, mask, vol) for region, mask in regions.items()}
        for name, values in geometry_quantities(ctx).items()
    }


def worst(report: Norms, norm: str = 'sup') -> Dict[str, float]:
    """Largest norm of each quantity over its regions."""
    return {name: max(sides[region][norm] for region in sides) for name, sides in report.items()}
