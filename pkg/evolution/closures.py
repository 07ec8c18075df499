"""
Algebraic closures applied after every stage.

Order: fluid pins and the exterior velocity extension, then e₀ and Γ₀
from Θ̂^I e_I = ∂t, then the curvature recovered from W and the metric
reconstructed from the frame. Every step reads only data the earlier
steps leave unchanged, so applying the closures twice is the same as
applying them once.
"""
import logging
from typing import Dict, Tuple

import numpy as np

from core.error_handler import SpacelikeVelocity
from curvature.checked_system import checked_geometry, recover_riemann
from evolution.state import EvolutionState, ExteriorAnchors, StateLayout
from frames import algebra
from frames.signature import EPS
from grid.domain import DomainGrid

logger = logging.getLogger(__name__)


def _normalize(u: np.ndarray, u_t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """u/ν and its rate, ν = (−⟨u, u⟩)^{1/2}."""
    nu = np.sqrt(-np.einsum('ni,i,ni->n', u, EPS, u))
    nu_t = -np.einsum('ni,i,ni->n', u, EPS, u_t) / nu
    return u / nu[:, None], u_t / nu[:, None] - u * (nu_t / nu ** 2)[:, None]


def extend_velocity(
    boundary_now: np.ndarray,
    boundary_rate: np.ndarray,
    anchors: ExteriorAnchors
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exterior Θ̂ anchored to the initial data:

        Θ̂ = normalize(Θ̂(0) + χ (Θ̂_b(t) − Θ̂_b(0)))

    with Θ̂_b the value at the nearest boundary node. Θ̂ = Θ̂(0) on the band
    (χ = 0), and the rate is exact.

    :param boundary_now: Θ̂ at the nearest boundary node of every node, (N, 4)
    :param boundary_rate: ∂tΘ̂ there, (N, 4)
    :return: (Θ̂, ∂tΘ̂), (N, 4) each
    """
    chi = anchors.chi[:, None]
    u = anchors.theta_hat0 + chi * (boundary_now - anchors.boundary0)
    return _normalize(u, chi * boundary_rate)


def theta_hat_with_rate(f: Dict[str, np.ndarray], floor: float = 1e-8) -> Tuple[np.ndarray, np.ndarray]:
    """Θ̂ = Θ/σ and ∂tΘ̂ = ∂tΘ/σ − ΘΛ/(2σ³)."""
    s = f['sigma2']
    if np.any(s <= floor):
        node = int(np.argmin(s))
        raise SpacelikeVelocity(
            "σ² fell below its floor",
            context={'node': node, 'sigma2': float(s[node]), 'threshold': floor}
        )
    sigma = np.sqrt(s)
    theta_hat = f['theta'] / sigma[:, None]
    rate = f['theta_t'] / sigma[:, None] - f['theta'] * (f['lam'] / (2.0 * sigma ** 3))[:, None]
    return theta_hat, rate


def close_fields(
    f: Dict[str, np.ndarray],
    grid: DomainGrid,
    anchors: ExteriorAnchors,
    theta0_floor: float = 1e-6,
    sigma_floor: float = 1e-8
):
    """Apply the fluid and frame closures in place on unpacked fields."""
    boundary = grid.boundary
    f['sigma2'][boundary] = 1.0
    f['lam'][boundary] = 0.0
    f['lambda_t'][boundary] = 0.0

    theta_hat, rate = theta_hat_with_rate(f, sigma_floor)
    ext_hat, ext_rate = extend_velocity(theta_hat[anchors.nearest], rate[anchors.nearest], anchors)
    exterior = grid.exterior
    f['theta'][exterior] = ext_hat[exterior]
    f['theta_t'][exterior] = ext_rate[exterior]
    f['sigma2'][exterior] = 1.0
    f['lam'][exterior] = 0.0
    f['lambda_t'][exterior] = 0.0
    theta_hat[exterior] = ext_hat[exterior]

    e, gamma = algebra.apply_closures(theta_hat, f['e'], f['gamma'], theta0_floor)
    f['e'][:, 0] = e[:, 0]
    f['gamma'][:, 0] = gamma[:, 0]


def close_vector(
    y: np.ndarray,
    layout: StateLayout,
    grid: DomainGrid,
    anchors: ExteriorAnchors,
    theta0_floor: float = 1e-6,
    sigma_floor: float = 1e-8
) -> np.ndarray:
    """Closed copy of a flat state vector."""
    out = y.copy()
    close_fields(layout.unpack(out), grid, anchors, theta0_floor, sigma_floor)
    return out


def apply_closures(
    state: EvolutionState,
    grid: DomainGrid,
    layout: StateLayout,
    tolerances
) -> EvolutionState:
    """
    Closed copy of ``state`` with ě, the recovered Riemann tensor and a
    metric reconstruction check.

    :param tolerances: floors (theta0_floor, sigma_floor, gram_floor, det_floor)
    """
    y = close_vector(state.pack(layout), layout, grid, state.anchors, tolerances.theta0_floor, tolerances.sigma_floor)
    f = layout.unpack(y)
    algebra.metric_from_frame(f['e'], tolerances.det_floor)

    theta_hat, rate = theta_hat_with_rate(f, tolerances.sigma_floor)
    geo = checked_geometry(
        f['e'], np.zeros_like(f['e']), theta_hat, rate, grid.normal_covector(),
        tolerances.sigma_floor, tolerances.gram_floor,
    )
    if state.coupled:
        _, riemann = recover_riemann(f['w'], geo, f['theta'], state.coupling)
    else:
        riemann = np.zeros_like(state.curv.riemann)
    return state.with_vector(y, layout, state.t, riemann=riemann, che=geo.che)
