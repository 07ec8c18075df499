"""
Boundary evolution of Θ: (∂t² + γD_n)Θ^I = f on ∂Ω as a first-order pair.

Boundary nodes are owned by this law; the interior wave update reads their
values through the one-sided fluid stencils as Dirichlet-in-time data.
"""
from typing import Tuple

import numpy as np

from core.error_handler import TaylorViolation
from fluid.operators import boundary_operator
from frames.signature import EPS


def taylor_coefficient(dsigma2: np.ndarray) -> np.ndarray:
    """a² = Σ ε_I (D_Iσ²)² at the boundary nodes."""
    return np.einsum('ni,i,ni->n', dsigma2, EPS, dsigma2)


def boundary_step(
    theta_t: np.ndarray,
    dtheta: np.ndarray,
    dsigma2: np.ndarray,
    sigma2: np.ndarray,
    f: np.ndarray,
    c0: float = 0.0
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rates of the boundary unknowns.

        ∂tΘ = Θ_t,   ∂tΘ_t = f − γD_nΘ

    :param theta_t: Θ_t at the boundary nodes, (Nb, 4)
    :param dtheta: D_JΘ^I from one-sided fluid stencils, (Nb, 4, 4)
    :param dsigma2: D_Jσ², (Nb, 4)
    :param sigma2: σ², (Nb,)
    :param f: boundary forcing, (Nb, 4)
    :param c0: Taylor bound; a² < c0² raises
    :return: (∂tΘ, ∂tΘ_t)
    """
    if c0 > 0.0 and sigma2.size:
        a2 = taylor_coefficient(dsigma2)
        if np.min(a2) < c0 ** 2:
            node = int(np.argmin(a2))
            raise TaylorViolation(
                "Taylor sign condition fails on the boundary",
                context={'node': node, 'a2': float(a2[node]), 'c0': c0}
            )
    return theta_t.copy(), f - boundary_operator(dtheta, dsigma2, sigma2)
