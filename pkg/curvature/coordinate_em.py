"""
Coordinate electric/magnetic split of a two-form and the div-curl residuals
of the Maxwell-type system on the slices {t = const}.

    Ē_i = F_{it},    H̄^k = −½ ε^{ijk} F_{ij}

The four residuals are the constraint and evolution parts of
∇_μ F^{μν} = J^ν and of the cyclic identity written with coordinate
derivatives:

    div Ē:   (1/√|g|) ∂_i(√|g| F^{it}) − J^t
    div H̄:   ∂_k H̄^k + 𝒯_{123}
    curl H̄:  (1/√|g|)[∂_t(√|g| F^{tj}) + ∂_i(√|g| F^{ij})] − J^j
    curl Ē:  ∂_t F_{ij} + ∂_i Ē_j − ∂_j Ē_i − 𝒯_{tij}

Lower-order terms of the induced-connection form are folded into the
densities, so each residual vanishes on an exact solution.
"""
import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from frames.signature import EPS, LEVI3
from grid.domain import FLUID, SIGMA, VACUUM, DomainGrid

logger = logging.getLogger(__name__)


@dataclass
class CoordinateEM:
    """
    :ivar ebar: Ē_i, (N, ..., 3)
    :ivar hbar: H̄^k, (N, ..., 3)
    """
    ebar: np.ndarray
    hbar: np.ndarray


def coordinate_em(form: np.ndarray) -> CoordinateEM:
    """
    Split of coordinate components F_{μν}.

    :param form: (..., 4, 4) antisymmetric
    """
    ebar = form[..., 1:, 0]
    hbar = -0.5 * np.einsum('ijk,...ij->...k', LEVI3, form[..., 1:, 1:])
    return CoordinateEM(ebar=ebar, hbar=hbar)


def coframe(e: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """θ^I_μ = ε_I g_{μν} e_I^ν, the dual basis of e_I."""
    return np.einsum('i,niv,nvm->nim', EPS, e, metric)


def frame_to_coordinate(tensor: np.ndarray, theta: np.ndarray, rank: int) -> np.ndarray:
    """
    Coordinate components of a covariant frame tensor, T_{μ..} = θ^I_μ ... T_{I..}.

    :param tensor: (N, ..., 4 × rank) with frame indices last
    :param theta: coframe θ^I_μ, (N, 4, 4)
    """
    letters = 'abcd'[:rank]
    upper = 'wxyz'[:rank]
    subs = ['n...' + letters] + [f'n{letters[k]}{upper[k]}' for k in range(rank)]
    return np.einsum(','.join(subs) + '->n...' + upper, tensor, *([theta] * rank))


def _spatial_divergence(grid: DomainGrid, values: np.ndarray, region: str) -> np.ndarray:
    """Σ_i ∂_i values[:, ..., i]."""
    out = np.zeros(values.shape[:-1], dtype=values.dtype)
    for i in range(grid.dim):
        out = out + grid.d1(values[..., i], i, region)
    return out


def divcurl_residuals(
    grid: DomainGrid,
    form: np.ndarray,
    form_t: np.ndarray,
    ginv: np.ndarray,
    ginv_t: np.ndarray,
    sqrt_det: np.ndarray,
    sqrt_det_t: np.ndarray,
    current_up: np.ndarray,
    cyclic: np.ndarray,
    region: str = SIGMA
) -> Dict[str, np.ndarray]:
    """
    Residual fields of the four div-curl systems.

    :param form: F_{μν} at every node, (N, 4, 4)
    :param form_t: ∂_t F_{μν}, (N, 4, 4)
    :param ginv: g^{μν}, (N, 4, 4)
    :param ginv_t: ∂_t g^{μν}
    :param sqrt_det: √|det g|, (N,)
    :param sqrt_det_t: ∂_t √|det g|
    :param current_up: J^ν, (N, 4)
    :param cyclic: 𝒯_{λμν}, (N, 4, 4, 4)
    :return: 'div_e' (N,), 'div_h' (N,), 'curl_h' (N, 3), 'curl_e' (N, 3) with
        curl_e[k] the (i, j) = cyclic pair opposite k
    """
    em = coordinate_em(form)
    raised = np.einsum('nma,nab,nvb->nmv', ginv, form, ginv)
    raised_t = (
        np.einsum('nma,nab,nvb->nmv', ginv_t, form, ginv)
        + np.einsum('nma,nab,nvb->nmv', ginv, form_t, ginv)
        + np.einsum('nma,nab,nvb->nmv', ginv, form, ginv_t)
    )
    dens = sqrt_det[:, None, None] * raised
    dens_t = sqrt_det_t[:, None, None] * raised + sqrt_det[:, None, None] * raised_t

    # F^{it} sits at [i, 0]; divergence over the first index
    div_e = _spatial_divergence(grid, dens[:, 1:, 0], region) / sqrt_det - current_up[:, 0]

    curl_h = np.zeros((grid.n_nodes, 3), dtype=form.dtype)
    for j in range(3):
        spatial = _spatial_divergence(grid, dens[:, 1:, j + 1], region)
        curl_h[:, j] = (dens_t[:, 0, j + 1] + spatial) / sqrt_det - current_up[:, j + 1]

    div_h = _spatial_divergence(grid, em.hbar, region) + cyclic[:, 1, 2, 3]

    grad_e = grid.gradient(em.ebar, region)
    curl_e = np.zeros((grid.n_nodes, 3), dtype=form.dtype)
    for k, (i, j) in enumerate(((1, 2), (2, 0), (0, 1))):
        curl_e[:, k] = (
            form_t[:, i + 1, j + 1] + grad_e[:, i, j] - grad_e[:, j, i] - cyclic[:, 0, i + 1, j + 1]
        )
    return {'div_e': div_e, 'div_h': div_h, 'curl_h': curl_h, 'curl_e': curl_e}


def residual_norms(grid: DomainGrid, residuals: Dict[str, np.ndarray], mask: np.ndarray = None) -> Dict[str, Dict[str, float]]:
    """Sup norms of each residual, reported per side of the interface."""
    if mask is None:
        mask = ~grid.band
    sides = {FLUID: grid.interior & mask, VACUUM: grid.exterior & mask}
    report = {}
    for name, values in residuals.items():
        report[name] = {}
        for side, nodes in sides.items():
            chunk = np.abs(values[nodes])
            report[name][side] = float(chunk.max()) if chunk.size else 0.0
    return report
