"""
Discrete energy identities.

Each balance evaluates, at one state, an energy E and its production P
such that dE/dt = P holds for exact solutions. :class:`BalanceTracker`
integrates P in time and reports E(t) − E(0) − ∫P, which converges to zero
with resolution.

For a wave equation □u = H and a vector field Q, the current

    J^μ = √|g| (g^{μα}∂_αu Qu − ½Q^μ g^{αβ}∂_αu∂_βu)

satisfies ∂_μJ^μ = √|g| H Qu + √|g| g^{μα}∂_μQ^ν ∂_αu∂_νu
− ½∂_μ(√|g| g^{αβ}Q^μ)∂_αu∂_βu. The energy is −∫J⁰ over the fluid and
the boundary flux is J^iν_i with the outward coordinate normal ν.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from curvature.maxwell import A_MATS
from diagnostics.context import MonitorContext
from diagnostics.energy import multiplier_alpha
from diagnostics.flow import flow_derivative
from grid.domain import FLUID, SIGMA

logger = logging.getLogger(__name__)


@dataclass
class BalanceTerms:
    energy: float
    production: float


def _coordinate_gradient(ctx: MonitorContext, values: np.ndarray, values_t: np.ndarray) -> np.ndarray:
    return np.concatenate([values_t[:, None], ctx.grid.gradient(values, FLUID)], axis=1)


def _boundary_flux(ctx: MonitorContext, current: np.ndarray) -> float:
    """∮ J^i ν_i dS from the coordinate current (N, 4) at the boundary nodes."""
    flux = np.einsum('ni,ni->n', current[:, 1:], ctx.grid.flux_normal())
    return float(ctx.grid.boundary_weights() @ flux)


def wave_balance(
    ctx: MonitorContext,
    u: np.ndarray,
    u_t: np.ndarray,
    force: np.ndarray,
    q: np.ndarray,
    dq: np.ndarray
) -> BalanceTerms:
    """
    Energy and production of □u = H with multiplier Q.

    :param u: (N, ...) components, each a scalar wave
    :param u_t: ∂tu
    :param force: H, (N, ...)
    :param q: Q^μ, (N, 4)
    :param dq: ∂_μQ^ν, (N, 4, 4)
    """
    grid = ctx.grid
    count = u.shape[0]
    du = _coordinate_gradient(ctx, u, u_t).reshape(count, 4, -1)
    force = force.reshape(count, -1)
    ginv = ctx.snap.ginv
    root = ctx.sqrt_det
    qu = np.einsum('nm,nmc->nc', q, du)
    flux = np.einsum('nma,nac->nmc', ginv, du)
    quad = np.einsum('nac,nac->nc', du, flux)

    current = root[:, None, None] * (flux * qu[:, None, :] - 0.5 * q[:, :, None] * quad[:, None, :])
    current = current.sum(axis=2)

    density = ctx.density(ctx.y)
    density_t = flow_derivative(ctx.density, ctx.y, ctx.rhs, 1)
    weighted = density[:, :, :, None] * q[:, None, None, :]
    weighted_t = density_t * q[:, 0][:, None, None]
    weighted_t = weighted_t + density * (dq[:, 0, 0][:, None, None])
    divergence = weighted_t.copy()
    for i in range(grid.dim):
        divergence += grid.d1(weighted[..., i + 1], i, FLUID)

    bulk = (
        root[:, None] * force * qu
        + root[:, None] * np.einsum('nma,nmv,nac,nvc->nc', ginv, dq, du, du)
        - 0.5 * np.einsum('nab,nac,nbc->nc', divergence, du, du)
    ).sum(axis=1)

    vol = grid.volume_weights(FLUID)
    return BalanceTerms(
        energy=-float(vol @ current[:, 0]),
        production=_boundary_flux(ctx, current) - float(vol @ bulk),
    )


def theta_energy_balance(ctx: MonitorContext) -> BalanceTerms:
    """Balance of the Θ wave system with Q = ∂t."""
    count = ctx.grid.n_nodes
    q = np.zeros((count, 4))
    q[:, 0] = 1.0
    f = ctx.fields
    return wave_balance(ctx, f['theta'], f['theta_t'], ctx.snap.theta_force, q, np.zeros((count, 4, 4)))


def lambda_multiplier_balance(ctx: MonitorContext, margin: float = 0.1) -> Tuple[BalanceTerms, float]:
    """
    Balance of the Λ wave equation with Q = ∂t − αn.

    :return: (terms, α)
    """
    alpha = multiplier_alpha(ctx, margin)
    n_vec, n_t = ctx.normal
    q = -alpha * n_vec
    q[:, 0] += 1.0
    spatial = ctx.grid.gradient(n_vec, FLUID)
    dq = -alpha * np.concatenate([n_t[:, None], spatial], axis=1)
    f = ctx.fields
    return wave_balance(ctx, f['lam'], f['lambda_t'], ctx.snap.lambda_force, q, dq), alpha


def _b_matrices(legs: np.ndarray) -> np.ndarray:
    """ℬ^μ = e₀^μ 1 + Σ e_Ĩ^μ𝒜^Ĩ, (N, 4, 6, 6)."""
    return np.einsum('nm,ab->nmab', legs[:, 0, :], np.eye(6)) + np.einsum('nim,iab->nmab', legs[:, 1:, :], A_MATS)


def curvature_energy_balance(ctx: MonitorContext) -> BalanceTerms:
    """
    Balance of the symmetric hyperbolic curvature system over the nodes
    off the absorbing band:

        d/dt ∫⟨W, ℬ⁰W⟩ = ∫⟨W, (∂tℬ⁰ + ∂_jℬ^j)W⟩ + 2⟨W, 𝒦⟩ − ∂_j⟨W, ℬ^jW⟩.
    """
    if ctx.snap.system is None:
        return BalanceTerms(energy=0.0, production=0.0)
    grid = ctx.grid
    geo = ctx.geo
    w = ctx.fields['w']
    b = _b_matrices(geo.che)
    b_t = _b_matrices(geo.che_t)[:, 0]

    div_b = b_t.copy()
    for i in range(grid.dim):
        div_b += grid.d1(b[:, i + 1], i, SIGMA)
    fluxes = np.einsum('npa,njab,npb->nj', w, b[:, 1:], w)
    flux_div = np.zeros(grid.n_nodes)
    for i in range(grid.dim):
        flux_div += grid.d1(fluxes[:, i], i, SIGMA)

    density = np.einsum('npa,nab,npb->n', w, b[:, 0], w)
    production = (
        np.einsum('npa,nab,npb->n', w, div_b, w)
        + 2.0 * np.einsum('npa,npa->n', w, ctx.snap.system.source)
        - flux_div
    )
    weights = ctx.off_band(grid.volume_weights(SIGMA))
    return BalanceTerms(energy=float(weights @ density), production=float(weights @ production))


@dataclass
class BalanceTracker:
    """E(t) − E(0) − ∫₀ᵗ P with the trapezoid rule in time."""
    name: str
    times: List[float] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    integral: float = 0.0
    _last_production: float = 0.0

    def add(self, t: float, terms: BalanceTerms):
        if self.times:
            self.integral += 0.5 * (t - self.times[-1]) * (self._last_production + terms.production)
        self.times.append(t)
        self.energies.append(terms.energy)
        self._last_production = terms.production

    @property
    def residual(self) -> float:
        if not self.energies:
            return 0.0
        return self.energies[-1] - self.energies[0] - self.integral

    def summary(self) -> Dict[str, float]:
        return {'energy': self.energies[-1] if self.energies else 0.0, 'residual': self.residual}
