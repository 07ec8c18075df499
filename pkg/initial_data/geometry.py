"""
Metric-jet geometry shared by the initial-data pipeline and its oracles:
Christoffel symbols, their derivatives and the Riemann tensor from nodal
metric values with stencil derivatives. Works in any dimension d; the
spatial metric uses d = 3, the spacetime metric d = 4.

Conventions: Γ^a_{bc} = ½ g^{ad}(∂_b g_{cd} + ∂_c g_{bd} − ∂_d g_{bc}) and
R_{abcd} = g(∂_a, R(∂_c, ∂_d)∂_b).
"""
from dataclasses import dataclass

import numpy as np

from core.error_handler import DegenerateMetric
from grid.domain import SIGMA, DomainGrid


def invert_metric(metric: np.ndarray, det_floor: float = 1e-12) -> np.ndarray:
    det = np.linalg.det(metric)
    bad = np.abs(det) < det_floor
    if np.any(bad):
        node = int(np.argmax(bad))
        raise DegenerateMetric(
            "Metric is degenerate",
            context={'node': node, 'det': float(det[node]), 'threshold': det_floor}
        )
    return np.linalg.inv(metric)


def christoffels_lowered(dmetric: np.ndarray) -> np.ndarray:
    """Γ_{d,bc} = ½(∂_b g_{cd} + ∂_c g_{bd} − ∂_d g_{bc}); dmetric[n, a, b, c] = ∂_a g_{bc}."""
    return 0.5 * (
        np.einsum('nbcd->ndbc', dmetric)
        + np.einsum('ncbd->ndbc', dmetric)
        - dmetric
    )


def christoffels_from_jet(metric: np.ndarray, dmetric: np.ndarray, inverse: np.ndarray = None) -> np.ndarray:
    """
    Γ^a_{bc} from the metric and its first derivatives.

    :param metric: g_{ab}, (N, d, d)
    :param dmetric: ∂_c g_{ab} with the derivative index first, (N, d, d, d)
    :return: Γ^a_{bc} stored as [n, a, b, c]
    """
    if inverse is None:
        inverse = invert_metric(metric)
    return np.einsum('nad,ndbc->nabc', inverse, christoffels_lowered(dmetric))


def christoffel_derivative(
    inverse: np.ndarray,
    dmetric: np.ndarray,
    ddmetric: np.ndarray,
    christoffel: np.ndarray
) -> np.ndarray:
    """
    ∂_e Γ^a_{bc} from second metric derivatives.

    :param ddmetric: ∂_e∂_f g_{bc}, (N, d, d, d, d)
    :return: [n, e, a, b, c]
    """
    d_low = 0.5 * (
        np.einsum('nebcd->nedbc', ddmetric)
        + np.einsum('necbd->nedbc', ddmetric)
        - np.einsum('nedbc->nedbc', ddmetric)
    )
    first = np.einsum('nad,nedbc->neabc', inverse, d_low)
    # ∂_e g^{ad} = −g^{af} ∂_e g_{fg} g^{gd}
    second = np.einsum('naf,nefg,ngbc->neabc', inverse, dmetric, christoffel)
    return first - second


def riemann_from_christoffels(christoffel: np.ndarray, dchristoffel: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """
    R_{abcd} = g_{ae} R^e_{bcd} with
    R^a_{bcd} = ∂_cΓ^a_{db} − ∂_dΓ^a_{cb} + Γ^a_{ce}Γ^e_{db} − Γ^a_{de}Γ^e_{cb}.
    """
    up = (
        np.einsum('ncadb->nabcd', dchristoffel)
        - np.einsum('ndacb->nabcd', dchristoffel)
        + np.einsum('nace,nedb->nabcd', christoffel, christoffel)
        - np.einsum('nade,necb->nabcd', christoffel, christoffel)
    )
    return np.einsum('nae,nebcd->nabcd', metric, up)


@dataclass
class SpatialGeometry:
    """Intrinsic geometry of (Σ₀, ḡ) at every node."""
    inverse: np.ndarray
    dmetric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray


def spatial_jet(values: np.ndarray, grid: DomainGrid, region: str = SIGMA):
    """(∂_i values, ∂_i∂_j values) with the derivative axes right after the node axis."""
    return grid.gradient(values, region), grid.hessian(values, region)


def spatial_geometry(gbar: np.ndarray, grid: DomainGrid, region: str = SIGMA) -> SpatialGeometry:
    """
    Christoffels, Riemann, Ricci and scalar curvature of ḡ by stencils.

    :param gbar: ḡ_{ij}, (N, 3, 3)
    """
    inverse = invert_metric(gbar)
    dmetric, ddmetric = spatial_jet(gbar, grid, region)
    christoffel = christoffels_from_jet(gbar, dmetric, inverse)
    dchristoffel = christoffel_derivative(inverse, dmetric, ddmetric, christoffel)
    riemann = riemann_from_christoffels(christoffel, dchristoffel, gbar)
    ricci = np.einsum('nac,nabcd->nbd', inverse, riemann)
    scalar = np.einsum('nbd,nbd->n', inverse, ricci)
    return SpatialGeometry(
        inverse=inverse, dmetric=dmetric, christoffel=christoffel,
        riemann=riemann, ricci=ricci, scalar=scalar,
    )


def covariant_derivative_sym2(
    tensor: np.ndarray,
    christoffel: np.ndarray,
    grid: DomainGrid,
    region: str = SIGMA
) -> np.ndarray:
    """∇̄_i k_{jl} = ∂_i k_{jl} − Γ̄^m_{ij} k_{ml} − Γ̄^m_{il} k_{jm}, stored [n, i, j, l]."""
    partial = grid.gradient(tensor, region)
    return (
        partial
        - np.einsum('nmij,nml->nijl', christoffel, tensor)
        - np.einsum('nmil,njm->nijl', christoffel, tensor)
    )
