"""
Frames adapted to a hypersurface with spacelike unit normal n.

X̃_A = e_A − g(e_A, n) n projects frame legs onto the tangent space; the
time leg and the two spatial legs with the largest projections are
orthonormalized into X_A (X₀ timelike). Everything is expressed in frame
components and is complex-step safe, so rates of X along the flow are
exact directional derivatives.
"""
import logging
from typing import Optional, Tuple, Type

import numpy as np

from core.error_handler import DegenerateProjection, SimulationError, TaylorViolation
from frames.fields import BoundaryFrame
from frames.signature import EPS

logger = logging.getLogger(__name__)

COMPLEX_STEP = 1e-30


def _inner(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum('...i,i,...i->...', u, EPS, v)


def select_legs(n: np.ndarray) -> np.ndarray:
    """
    Two spatial legs with the least degenerate projections, ascending.

    |X̃_j|² = 1 − (n^j)², so the legs with the smallest |n^j| win; ties go
    to the lowest index.

    :param n: unit normal frame components, (N, 4)
    :return: (N, 2) leg indices in {1, 2, 3}
    """
    proj = 1.0 - n[:, 1:].real ** 2
    order = np.argsort(-proj, axis=1, kind='stable')[:, :2] + 1
    return np.sort(order, axis=1)


def build_adapted_frame(
    normal_covector: np.ndarray,
    gram_floor: float = 1e-8,
    legs: Optional[np.ndarray] = None,
    degenerate_error: Type[SimulationError] = DegenerateProjection
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Adapted frame for the covector N with frame components N_I = N(e_I).

    :param normal_covector: N_I, shape (N, 4)
    :param gram_floor: smallest admissible |Gram determinant| of the projections
    :param legs: fixed leg choice (used when differentiating); selected if None
    :param degenerate_error: exception raised when N is not spacelike
    :return: (X_A^I (N, 3, 4), n^I (N, 4), a (N,), legs (N, 2))
    """
    a2 = np.einsum('...i,i,...i->...', normal_covector, EPS, normal_covector)
    if np.any(a2.real <= 0.0):
        node = int(np.argmax(a2.real <= 0.0))
        raise degenerate_error(
            "Normal covector is not spacelike",
            context={'node': node, 'a2': float(a2[node].real)}
        )
    a = np.sqrt(a2)
    n = normal_covector * EPS / a[:, None]
    if legs is None:
        legs = select_legs(n)

    count = n.shape[0]
    rows = np.arange(count)
    basis = np.zeros((count, 3, 4), dtype=n.dtype)
    basis[:, 0, 0] = 1.0
    basis[rows, 1, legs[:, 0]] = 1.0
    basis[rows, 2, legs[:, 1]] = 1.0
    # g(e_A, n) = ε_A n^A
    g_en = np.einsum('nai,i,ni->na', basis, EPS, n)
    tilde = basis - g_en[:, :, None] * n[:, None, :]

    gram = np.einsum('nai,i,nbi->nab', tilde, EPS, tilde)
    det = np.linalg.det(gram.real)
    if np.any(np.abs(det) < gram_floor):
        node = int(np.argmax(np.abs(det) < gram_floor))
        raise DegenerateProjection(
            "Projected frame legs do not span the tangent space",
            context={'node': node, 'gram_det': float(det[node]), 'threshold': gram_floor}
        )

    x0 = tilde[:, 0] / np.sqrt(-_inner(tilde[:, 0], tilde[:, 0]))[:, None]
    v1 = tilde[:, 1] + _inner(tilde[:, 1], x0)[:, None] * x0
    x1 = v1 / np.sqrt(_inner(v1, v1))[:, None]
    v2 = tilde[:, 2] + _inner(tilde[:, 2], x0)[:, None] * x0 - _inner(tilde[:, 2], x1)[:, None] * x1
    x2 = v2 / np.sqrt(_inner(v2, v2))[:, None]
    xa = np.stack([x0, x1, x2], axis=1)
    return xa, n, a, legs


def adapted_frame_rate(
    normal_covector: np.ndarray,
    normal_covector_dot: np.ndarray,
    legs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Rates (∂t X_A^I, ∂t n^I) along ∂t N_I with the leg choice held fixed."""
    perturbed = normal_covector.astype(complex) + 1j * COMPLEX_STEP * normal_covector_dot
    xa, n, _, _ = build_adapted_frame(perturbed, gram_floor=0.0, legs=legs)
    return xa.imag / COMPLEX_STEP, n.imag / COMPLEX_STEP


def build_boundary_frame(
    dsigma2: np.ndarray,
    sigma2: np.ndarray,
    c0: float = 0.1,
    gram_floor: float = 1e-8
) -> BoundaryFrame:
    """
    Boundary-adapted frame with n = ∇σ²/a, a² = Σ ε_I (D_Iσ²)².

    :param dsigma2: D_Iσ² at the boundary nodes, (Nb, 4)
    :param sigma2: σ² at the boundary nodes, (Nb,)
    :param c0: Taylor bound, a² ≥ c₀² is required
    :param gram_floor: Gram determinant threshold for the projections
    :return: BoundaryFrame with X_A, n (inward), a and γ = a/(2σ²)
    """
    a2 = np.einsum('...i,i,...i->...', dsigma2, EPS, dsigma2)
    if a2.size and np.min(a2) < c0 ** 2:
        node = int(np.argmin(a2))
        raise TaylorViolation(
            "Taylor sign condition fails on the boundary",
            context={'node': node, 'a2': float(a2[node]), 'c0': c0}
        )
    xa, n, a, legs = build_adapted_frame(dsigma2, gram_floor, degenerate_error=TaylorViolation)
    return BoundaryFrame(xa=xa, n=n, a=a, gamma_coef=a / (2.0 * sigma2), legs=legs)


def adapted_gram(xa: np.ndarray, n: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """g(X_A, X_B), g(X_A, n) and g(n, n) for orthonormality checks."""
    gxx = np.einsum('nai,i,nbi->nab', xa, EPS, xa)
    gxn = np.einsum('nai,i,ni->na', xa, EPS, n)
    gnn = _inner(n, n)
    return gxx, gxn, gnn
