"""
Differential operators of the frame formulation on the domain grid.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from fluid.jets import WaveJet
from frames.signature import EPS
from grid.domain import SIGMA, DomainGrid

logger = logging.getLogger(__name__)


def coordinate_derivative(
    values: np.ndarray,
    values_t: np.ndarray,
    grid: DomainGrid,
    region: str = SIGMA
) -> np.ndarray:
    """
    ∂_μ u stacked on axis 1: μ = 0 from the supplied time derivative,
    μ = 1..3 from stencils in ``region``.
    """
    spatial = grid.gradient(values, region)
    return np.concatenate([values_t[:, None], spatial], axis=1)


def frame_derivative(
    values: np.ndarray,
    values_t: np.ndarray,
    e: np.ndarray,
    grid: DomainGrid,
    region: str = SIGMA,
    direction: Optional[int] = None
) -> np.ndarray:
    """
    D_I u = e_I^μ ∂_μ u.

    :param values: u, (N, ...)
    :param values_t: ∂t u, (N, ...)
    :param e: frame e_I^μ, (N, 4, 4)
    :param grid: domain grid
    :param region: stencil region (fluid, vacuum or the composite sigma)
    :param direction: a single I, or None for all four
    :return: (N, 4, ...) or (N, ...) when ``direction`` is given
    """
    coord = coordinate_derivative(values, values_t, grid, region)
    out = np.einsum('nim,nm...->ni...', e, coord)
    if direction is not None:
        return out[:, direction]
    return out


def wave_jet(values: np.ndarray, values_t: np.ndarray, grid: DomainGrid, region: str = SIGMA) -> WaveJet:
    """Coordinate jet of u from its values and time derivative."""
    return WaveJet(
        u_t=values_t,
        grad=grid.gradient(values, region),
        grad_t=grid.gradient(values_t, region),
        hess=grid.hessian(values, region),
    )


def wave_coefficients(
    e: np.ndarray,
    de_coord: np.ndarray,
    gamma: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Coefficients of □u = g^{μν}∂_μ∂_ν u + b^ν ∂_ν u.

    b^ν = Σ_I ε_I (D_I e_I^ν − Γ_{II}^K e_K^ν).

    :param e: (N, 4, 4)
    :param de_coord: ∂_μ e_I^ν with μ on axis 1, (N, 4, 4, 4)
    :param gamma: (N, 4, 4, 4)
    :return: (g^{μν} (N, 4, 4), b^ν (N, 4))
    """
    ginv = np.einsum('nim,i,niv->nmv', e, EPS, e)
    d_e = np.einsum('nim,nmiv->niv', e, de_coord)
    b = np.einsum('i,niv->nv', EPS, d_e) - np.einsum('i,niik,nkv->nv', EPS, gamma, e)
    return ginv, b


def box_frame(jet: WaveJet, u_tt: np.ndarray, ginv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Frame d'Alembertian from the coordinate decomposition.

    :param jet: coordinate jet of u
    :param u_tt: ∂t² u, (N, ...)
    :param ginv: g^{μν}
    :param b: b^ν
    :return: □u, (N, ...)
    """
    out = np.einsum('n,n...->n...', ginv[:, 0, 0], u_tt)
    out = out + 2.0 * np.einsum('nj,nj...->n...', ginv[:, 0, 1:], jet.grad_t)
    out = out + np.einsum('nij,nij...->n...', ginv[:, 1:, 1:], jet.hess)
    out = out + np.einsum('n,n...->n...', b[:, 0], jet.u_t)
    out = out + np.einsum('nj,nj...->n...', b[:, 1:], jet.grad)
    return out


def box_from_frame_derivatives(
    ddu: np.ndarray,
    du: np.ndarray,
    gamma: np.ndarray
) -> np.ndarray:
    """
    □u = Σ_I ε_I (D_I D_I u − Γ_{II}^K D_K u) from iterated frame derivatives.

    :param ddu: D_I D_J u, (N, 4, 4, ...)
    :param du: D_K u, (N, 4, ...)
    """
    diag = np.einsum('i,nii...->n...', EPS, ddu)
    return diag - np.einsum('i,niik,nk...->n...', EPS, gamma, du)


def boundary_operator(du: np.ndarray, dsigma2: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """
    γ D_n u along the outward normal: −(1/2σ²) Σ_J ε_J D_Jσ² D_J u.

    :param du: D_J u, (Nb, 4, ...)
    :param dsigma2: D_Jσ², (Nb, 4)
    :param sigma2: (Nb,)
    """
    weighted = np.einsum('j,nj,nj...->n...', EPS, dsigma2, du)
    return -np.einsum('n,n...->n...', 0.5 / sigma2, weighted)


def spatial_metric_positivity(ginv: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of (g⁻¹)^{ij} per node."""
    return np.linalg.eigvalsh(ginv[:, 1:, 1:])[:, 0]
