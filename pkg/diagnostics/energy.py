"""
Energies of the free-boundary problem.

At order k the instantaneous energy is made of four pieces

    ‖∂ ∂t^kΘ‖²_Ω,  ‖∂t^{k+1}Θ‖²_∂Ω,  ‖∂ ∂t^{k+1}σ²‖²_Ω,  ‖∂t^kR‖²_Σ,

with ∂ the full coordinate gradient (time and space). The boundary term
‖∂ ∂t^{k+1}σ²‖² integrated over [0, T] × ∂Ω is accumulated in time by
:class:`EnergyAccumulator`, both with the plain surface measure and
weighted by the boundary multiplier (α/2)√|g|.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from core.error_handler import OrderUnavailable
from diagnostics.context import MonitorContext
from grid.domain import FLUID, SIGMA

logger = logging.getLogger(__name__)

MAX_ENERGY_ORDER = 3


@dataclass
class EnergySummands:
    """
    :ivar order: k
    :ivar theta_gradient: ‖∂ ∂t^kΘ‖² over the fluid
    :ivar theta_boundary: ‖∂t^{k+1}Θ‖² over the boundary
    :ivar sigma_gradient: ‖∂ ∂t^{k+1}σ²‖² over the fluid
    :ivar curvature: ‖∂t^kR‖² over the slice, band excluded
    :ivar sigma_boundary: ‖∂ ∂t^{k+1}σ²‖² over the boundary (integrand of
        the time-integrated term)
    :ivar sigma_boundary_weighted: (α/2)∫(D_n ∂t^{k+1}σ²)²√|g| over the boundary
    """
    order: int
    theta_gradient: float
    theta_boundary: float
    sigma_gradient: float
    curvature: float
    sigma_boundary: float = 0.0
    sigma_boundary_weighted: float = 0.0

    @property
    def instantaneous(self) -> float:
        return self.theta_gradient + self.theta_boundary + self.sigma_gradient + self.curvature

    def to_dict(self) -> Dict[str, float]:
        out = asdict(self)
        out['instantaneous'] = self.instantaneous
        return out


def gradient_squared(ctx: MonitorContext, values: np.ndarray, values_t: np.ndarray, region: str = FLUID) -> np.ndarray:
    """Σ_μ |∂_μ u|² per node, summed over the components of u."""
    spatial = ctx.grid.gradient(values, region)
    count = values.shape[0]
    return (
        np.sum(np.abs(values_t.reshape(count, -1)) ** 2, axis=1)
        + np.sum(np.abs(spatial.reshape(count, -1)) ** 2, axis=1)
    )


def normal_derivative(ctx: MonitorContext, values: np.ndarray, values_t: np.ndarray) -> np.ndarray:
    """D_n u = n^μ∂_μu with the fluid stencils, (N, ...)."""
    n_vec, _ = ctx.normal
    coord = np.concatenate([values_t[:, None], ctx.grid.gradient(values, FLUID)], axis=1)
    return np.einsum('nm,nm...->n...', n_vec, coord)


def multiplier_alpha(ctx: MonitorContext, margin: float = 0.1) -> float:
    """
    Largest α ≥ 0 keeping Q = ∂t − αn timelike with g(Q, Q) ≤ −margin at
    every fluid node: α = min(g(∂t,n) + (g(∂t,n)² − g₀₀ − margin)^{1/2}).
    """
    n_vec, _ = ctx.normal
    nodes = ctx.grid.fluid
    g0n = np.einsum('nm,nm->n', ctx.metric[:, 0, :], n_vec)[nodes]
    g00 = ctx.metric[nodes, 0, 0]
    root = np.sqrt(np.maximum(g0n ** 2 - g00 - margin, 0.0))
    if not nodes.any():
        return 0.0
    return max(float(np.min(g0n + root)), 0.0)


def energy(ctx: MonitorContext, k: int, margin: float = 0.1) -> EnergySummands:
    """
    Energy pieces of order k at the context's state.

    :raises OrderUnavailable: k above the context's time-derivative stack
    """
    if k > min(ctx.order, MAX_ENERGY_ORDER):
        raise OrderUnavailable(
            "Energy order is above the stored time-derivative stack",
            context={'order': k, 'stored': ctx.order}
        )
    grid = ctx.grid
    vol = grid.volume_weights(FLUID)
    surf = grid.boundary_weights()
    level = ctx.level(k)

    theta_gradient = float(vol @ gradient_squared(ctx, level['theta'], level['theta_t']))
    theta_boundary = float(surf @ np.sum(level['theta_t'] ** 2, axis=1))
    sigma_density = gradient_squared(ctx, level['lam'], level['lambda_t'])
    sigma_gradient = float(vol @ sigma_density)

    if ctx.coupled:
        riemann_k = ctx.riemann if k == 0 else ctx.stack.derivative(ctx.riemann_at, k)
        slice_weights = ctx.off_band(grid.volume_weights(SIGMA))
        curvature = float(slice_weights @ np.sum(riemann_k.reshape(grid.n_nodes, -1) ** 2, axis=1))
    else:
        curvature = 0.0

    alpha = multiplier_alpha(ctx, margin)
    dn = normal_derivative(ctx, level['lam'], level['lambda_t'])
    weighted = 0.5 * alpha * float(surf @ (dn ** 2 * ctx.sqrt_det))

    return EnergySummands(
        order=k,
        theta_gradient=theta_gradient,
        theta_boundary=theta_boundary,
        sigma_gradient=sigma_gradient,
        curvature=curvature,
        sigma_boundary=float(surf @ sigma_density),
        sigma_boundary_weighted=weighted,
    )


def energies(ctx: MonitorContext, max_order: Optional[int] = None, margin: float = 0.1) -> List[EnergySummands]:
    top = ctx.order if max_order is None else max_order
    return [energy(ctx, k, margin) for k in range(top + 1)]


@dataclass
class EnergyAccumulator:
    """
    Running energy of a run: sup over time of the instantaneous pieces plus
    the trapezoid time integral of the boundary σ² terms.
    """
    order: int
    times: List[float] = field(default_factory=list)
    sup: List[float] = field(default_factory=list)
    boundary_integral: List[float] = field(default_factory=list)
    boundary_integral_weighted: List[float] = field(default_factory=list)
    _last: Optional[List[EnergySummands]] = None

    def __post_init__(self):
        size = self.order + 1
        self.sup = [0.0] * size
        self.boundary_integral = [0.0] * size
        self.boundary_integral_weighted = [0.0] * size

    def add(self, t: float, summands: List[EnergySummands]):
        if self._last is not None:
            dt = t - self.times[-1]
            for k, (prev, now) in enumerate(zip(self._last, summands)):
                self.boundary_integral[k] += 0.5 * dt * (prev.sigma_boundary + now.sigma_boundary)
                self.boundary_integral_weighted[k] += 0.5 * dt * (
                    prev.sigma_boundary_weighted + now.sigma_boundary_weighted
                )
        for k, now in enumerate(summands):
            self.sup[k] = max(self.sup[k], now.instantaneous)
        self.times.append(t)
        self._last = list(summands)

    def totals(self) -> Dict[str, List[float]]:
        """ℰ_k with the unweighted and the multiplier-weighted boundary integral."""
        return {
            'unweighted': [s + b for s, b in zip(self.sup, self.boundary_integral)],
            'weighted': [s + b for s, b in zip(self.sup, self.boundary_integral_weighted)],
        }
