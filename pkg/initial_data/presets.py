"""
Built-in constraint data.

    static          flat slice, fluid at rest with σ² ≡ 1 (test fluid)
    pressure-ball   flat slice, σ² = 2 − r² in Ω₀ (test fluid); the
                    boundary value of ∂t²σ² it implies is not zero, so it
                    is run at a single resolution only
    compatible-ball flat slice, σ² = 1 + u + ((3 + d)/4)u², u = 1 − r²
                    (test fluid), compatible on the boundary; the
                    refinement preset
    spherical-ball  the compatible ball on the 3D grid
    gauge-check     planar time-symmetric data solving the Hamiltonian
                    constraint exactly with a vacuum exterior (coupled, 1D);
                    single resolution, like the pressure ball

kasner_data is a vacuum slice used to exercise the curvature construction
without matter.
"""
import logging
from typing import Callable, Dict

import numpy as np

from grid.domain import DomainGrid
from initial_data.constraint_data import ConstraintData

logger = logging.getLogger(__name__)

KASNER_EXPONENTS = (2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0)

# largest |x| at which the planar gauge-check profile stays positive
GAUGE_CHECK_REACH = 1.0 + 4.0 / 7.0


def _flat(grid: DomainGrid) -> Dict[str, np.ndarray]:
    n = grid.n_nodes
    return {
        'gbar': np.tile(np.eye(3), (n, 1, 1)),
        'kk': np.zeros((n, 3, 3)),
        'phi0': np.zeros(n),
        'phi1': np.ones(n),
    }


def static_data(grid: DomainGrid) -> ConstraintData:
    return ConstraintData(omega0_mask=grid.fluid.copy(), **_flat(grid))


def pressure_ball_data(grid: DomainGrid) -> ConstraintData:
    """σ² = 2 − r² inside Ω₀ and 1 outside, a² = 4 on the boundary."""
    arrays = _flat(grid)
    r2 = grid.radius ** 2
    arrays['phi1'] = np.where(grid.fluid, np.sqrt(np.maximum(2.0 - r2, 1.0)), 1.0)
    return ConstraintData(omega0_mask=grid.fluid.copy(), **arrays)


def compatible_ball_profile(radius: np.ndarray, dim: int) -> np.ndarray:
    """
    σ² = 1 + u + ((3 + d)/4)u² with u = 1 − r², d the number of active axes.

    Data at rest keep σ² = 1 on the boundary only if the second time
    derivative of σ² vanishes there at t = 0, which in the Lagrangian gauge
    reads Δσ² = (3/2)|∇σ²|² on r = 1. The quadratic coefficient is the one
    value that meets it with |∇σ²| = 2.
    """
    u = 1.0 - radius ** 2
    return 1.0 + u + 0.25 * (3.0 + dim) * u ** 2


def compatible_ball_data(grid: DomainGrid) -> ConstraintData:
    """Test fluid at rest with boundary-compatible σ², a² = 4 on r = 1."""
    arrays = _flat(grid)
    sigma2 = compatible_ball_profile(grid.radius, grid.dim)
    arrays['phi1'] = np.where(grid.fluid, np.sqrt(np.maximum(sigma2, 1.0)), 1.0)
    return ConstraintData(omega0_mask=grid.fluid.copy(), **arrays)


def gauge_check_profile(x: np.ndarray):
    """
    (b, σ²) of the planar gauge-check data.

    ḡ = dx² + b^{4/3}(dy² + dz²) has scalar curvature −(8/3)b''/b; b is a
    quartic inside the slab and linear (vacuum) outside, C¹ at |x| = 1.
    """
    ax = np.abs(x)
    inside = ax <= 1.0
    b = np.where(inside, 1.0 - 9.0 * x ** 2 / 16.0 + x ** 4 / 16.0, 0.5 - 0.875 * (ax - 1.0))
    sigma2 = np.where(inside, (3.0 - 2.0 * x ** 2) / np.where(inside, b, 1.0) - 1.0, 1.0)
    return b, sigma2


def gauge_check_data(grid: DomainGrid) -> ConstraintData:
    if grid.dim != 1:
        raise ValueError("gauge-check data are planar and need a 1D grid")
    if grid.half_width >= GAUGE_CHECK_REACH:
        raise ValueError(f"gauge-check data need r_far < {GAUGE_CHECK_REACH:.4f}")
    x = grid.coords[:, 0]
    b, sigma2 = gauge_check_profile(x)
    a2 = b ** (4.0 / 3.0)
    arrays = _flat(grid)
    arrays['gbar'][:, 1, 1] = a2
    arrays['gbar'][:, 2, 2] = a2
    arrays['phi1'] = np.where(grid.fluid, np.sqrt(sigma2), 1.0)
    return ConstraintData(omega0_mask=grid.fluid.copy(), **arrays)


def kasner_data(grid: DomainGrid, exponents=KASNER_EXPONENTS) -> ConstraintData:
    """The t = 1 slice of −dt² + Σ t^{2p_i}(dx^i)²: ḡ = δ, k = diag(p)."""
    arrays = _flat(grid)
    arrays['kk'][:] = np.diag(exponents)
    return ConstraintData(omega0_mask=grid.fluid.copy(), **arrays)


PRESETS: Dict[str, Callable[[DomainGrid], ConstraintData]] = {
    'static': static_data,
    'pressure-ball': pressure_ball_data,
    'compatible-ball': compatible_ball_data,
    'spherical-ball': compatible_ball_data,
    'gauge-check': gauge_check_data,
}


def preset_data(name: str, grid: DomainGrid) -> ConstraintData:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ValueError(f"Unknown preset {name!r}; choose from {sorted(PRESETS)}")
    logger.info(f"Building preset constraint data {name!r}")
    return builder(grid)
