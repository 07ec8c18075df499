"""
First-order-in-time form of a frame wave equation □u = F.

With □u = g^{μν}∂_μ∂_νu + b^ν∂_νu,

    ∂t u_t = [F − 2g^{0j}∂_j u_t − g^{ij}∂_i∂_j u − b^0 u_t − b^j ∂_j u] / g^{00},

where g^{ij} is positive definite whenever the slices are spacelike.
"""
import logging

import numpy as np

from core.error_handler import DegenerateTimeCoefficient
from fluid.jets import WaveJet

logger = logging.getLogger(__name__)


def spatial_operator(jet: WaveJet, ginv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Everything in □u except the g^{00}∂t²u term."""
    out = 2.0 * np.einsum('nj,nj...->n...', ginv[:, 0, 1:], jet.grad_t)
    out = out + np.einsum('nij,nij...->n...', ginv[:, 1:, 1:], jet.hess)
    out = out + np.einsum('n,n...->n...', b[:, 0], jet.u_t)
    out = out + np.einsum('nj,nj...->n...', b[:, 1:], jet.grad)
    return out


def wave_to_first_order(
    jet: WaveJet,
    ginv: np.ndarray,
    b: np.ndarray,
    rhs: np.ndarray,
    floor: float = 1e-8
) -> np.ndarray:
    """
    Solve □u = F for ∂t²u.

    :param jet: coordinate jet of u (with u_t)
    :param ginv: g^{μν}, (N, 4, 4)
    :param b: b^ν, (N, 4)
    :param rhs: F, (N, ...)
    :param floor: smallest admissible |g^{00}|
    :return: ∂t u_t, (N, ...)
    """
    g00 = ginv[:, 0, 0]
    if g00.size and np.min(np.abs(g00)) < floor:
        node = int(np.argmin(np.abs(g00)))
        raise DegenerateTimeCoefficient(
            "Coefficient of the second time derivative vanishes",
            context={'node': node, 'g00': float(g00[node]), 'threshold': floor}
        )
    return np.einsum('n,n...->n...', 1.0 / g00, rhs - spatial_operator(jet, ginv, b))


def decomposition_residual(
    jet: WaveJet,
    u_tt: np.ndarray,
    ginv: np.ndarray,
    b: np.ndarray,
    box: np.ndarray
) -> np.ndarray:
    """
    □u − Āu − (g^{00}∂t²u + 2g^{0j}∂_j∂_tu + b^ν∂_νu) with Ā = g^{ij}∂_i∂_j,
    for an independently computed □u.
    """
    a_bar = np.einsum('nij,nij...->n...', ginv[:, 1:, 1:], jet.hess)
    rest = (
        np.einsum('n,n...->n...', ginv[:, 0, 0], u_tt)
        + 2.0 * np.einsum('nj,nj...->n...', ginv[:, 0, 1:], jet.grad_t)
        + np.einsum('n,n...->n...', b[:, 0], jet.u_t)
        + np.einsum('nj,nj...->n...', b[:, 1:], jet.grad)
    )
    return box - a_bar - rest
