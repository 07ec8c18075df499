"""
Pointwise algebra of the frame formulation: metric reconstruction, the
algebraic closures for e₀ and Γ₀, the transport law of (e, Γ) along the
fluid and the index gymnastics shared by the other modules.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from core.error_handler import DegenerateFrame, NonpositiveTheta0
from frames.signature import EPS, MINKOWSKI

logger = logging.getLogger(__name__)

_LETTERS = 'abcdefgh'


def reconstruct_metric_inverse(e: np.ndarray) -> np.ndarray:
    """
    Inverse metric from the frame, (g⁻¹)^{μν} = Σ_I ε_I e_I^μ e_I^ν.

    :param e: frame components e_I^μ, shape (..., 4, 4)
    :return: symmetric (g⁻¹)^{μν}, shape (..., 4, 4)
    """
    if not np.all(np.isfinite(e)):
        raise DegenerateFrame("Frame has non-finite entries")
    return np.einsum('...im,i,...in->...mn', e, EPS, e)


def metric_from_frame(e: np.ndarray, det_floor: float = 1e-8) -> np.ndarray:
    """
    Pointwise inverse of :func:`reconstruct_metric_inverse`.

    :param e: frame components e_I^μ, shape (N, 4, 4)
    :param det_floor: smallest admissible |det g⁻¹|
    :return: g_{μν}, shape (N, 4, 4)
    """
    ginv = reconstruct_metric_inverse(e)
    det = np.linalg.det(ginv)
    bad = np.abs(det) < det_floor
    if np.any(bad):
        node = int(np.argmax(bad.reshape(-1)))
        raise DegenerateFrame(
            "Reconstructed inverse metric is degenerate",
            context={'node': node, 'det': float(det.reshape(-1)[node]), 'threshold': det_floor}
        )
    return np.linalg.inv(ginv)


def _check_theta0(theta_hat: np.ndarray, floor: float):
    low = theta_hat[..., 0].real <= floor
    if np.any(low):
        node = int(np.argmax(low.reshape(-1)))
        raise NonpositiveTheta0(
            "Θ̂⁰ fell below its floor",
            context={'node': node, 'theta0': float(theta_hat.reshape(-1, 4)[node, 0].real), 'threshold': floor}
        )


def close_e0(theta_hat: np.ndarray, e: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """
    Time leg from Θ̂^I e_I = ∂t: e₀^μ = (δ₀^μ − Θ̂^Ĩ e_Ĩ^μ)/Θ̂⁰.

    :param theta_hat: (N, 4)
    :param e: (N, 4, 4); only the spatial legs are read
    :param floor: Θ̂⁰ threshold
    :return: e₀^μ, shape (N, 4)
    """
    _check_theta0(theta_hat, floor)
    dt = np.zeros(e.shape[:-2] + (4,), dtype=np.result_type(e, theta_hat))
    dt[..., 0] = 1.0
    spatial = np.einsum('...i,...im->...m', theta_hat[..., 1:], e[..., 1:, :])
    return (dt - spatial) / theta_hat[..., 0:1]


def close_gamma0(theta_hat: np.ndarray, gamma: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """
    Γ_{0J}^K = −(Θ̂^Ĩ/Θ̂⁰) Γ_{ĨJ}^K, so that Θ̂^I Γ_{IJ}^K = 0.

    :return: Γ_{0J}^K, shape (N, 4, 4)
    """
    _check_theta0(theta_hat, floor)
    ratio = theta_hat[..., 1:] / theta_hat[..., 0:1]
    return -np.einsum('...i,...ijk->...jk', ratio, gamma[..., 1:, :, :])


def apply_closures(
    theta_hat: np.ndarray,
    e: np.ndarray,
    gamma: np.ndarray,
    floor: float = 1e-6
) -> Tuple[np.ndarray, np.ndarray]:
    """Return copies of (e, Γ) with the I=0 rows replaced by their closures."""
    e = e.copy()
    gamma = gamma.copy()
    e[..., 0, :] = close_e0(theta_hat, e, floor)
    gamma[..., 0, :, :] = close_gamma0(theta_hat, gamma, floor)
    return e, gamma


def transport_coefficient(theta_hat: np.ndarray, dtheta_hat: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """
    c_I^J = D_IΘ̂^J + Θ̂^K Γ_{IK}^J, the components of ∇_{e_I}V̂.

    :param dtheta_hat: D_IΘ̂^J, shape (N, 4, 4) with the derivative index first
    """
    return dtheta_hat + np.einsum('...k,...ikj->...ij', theta_hat, gamma)


def transport_rhs(
    e: np.ndarray,
    gamma: np.ndarray,
    theta_hat: np.ndarray,
    dtheta_hat: np.ndarray,
    riemann: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Time derivatives of the frame and connection under ∇_{V̂}e_I = 0 with V̂ = ∂t.

    ∂t e_I = −c_I^J e_J and
    ∂t Γ_{IJ}^K = Θ̂^L ε_K R_{KJLI} − c_I^L Γ_{LJ}^K.

    :param e: (N, 4, 4)
    :param gamma: (N, 4, 4, 4)
    :param theta_hat: (N, 4)
    :param dtheta_hat: D_IΘ̂^J, (N, 4, 4)
    :param riemann: R_{IJKL} (N, 4, 4, 4, 4), or None for flat geometry
    :return: (∂t e, ∂t Γ)
    """
    c = transport_coefficient(theta_hat, dtheta_hat, gamma)
    de = -np.einsum('...ij,...jm->...im', c, e)
    dgamma = -np.einsum('...il,...ljk->...ijk', c, gamma)
    if riemann is not None:
        dgamma = dgamma + np.einsum('...l,k,...kjli->...ijk', theta_hat, EPS, riemann)
    return de, dgamma


def ricci_from_fluid(theta: np.ndarray, coupling: np.ndarray) -> np.ndarray:
    """
    Frame Ricci tensor of the hard phase, R_IJ = c (Θ_IΘ_J + ½ m_IJ).

    The coupling array is 1 inside the fluid of a coupled run and 0 in
    vacuum or for a test fluid.

    :param theta: Θ^I, (N, 4)
    :param coupling: (N,)
    :return: R_IJ, (N, 4, 4)
    """
    low = theta * EPS
    ric = np.einsum('...i,...j->...ij', low, low) + 0.5 * MINKOWSKI
    return ric * np.asarray(coupling)[..., None, None]


def ricci_contraction(riemann: np.ndarray) -> np.ndarray:
    """R_IJ = Σ_K ε_K R_{KIKJ}."""
    return np.einsum('k,...kikj->...ij', EPS, riemann)


def transform_lower(tensor: np.ndarray, matrix: np.ndarray, rank: int) -> np.ndarray:
    """
    Change basis on ``rank`` covariant frame indices: T'_{I..} = M_I^a ... T_{a..}.

    The covariant slots are the last ``rank`` axes of ``tensor``; ``matrix``
    has shape (N, 4, 4) with the new index first.
    """
    src = _LETTERS[:rank]
    dst = _LETTERS[rank:2 * rank].upper()
    operands = [tensor] + [matrix] * rank
    subs = ['...' + src] + [f'...{dst[k]}{src[k]}' for k in range(rank)]
    return np.einsum(','.join(subs) + '->...' + dst, *operands)


def transform_vector(vec: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """
    Contravariant components in a new basis b_a = M_a^I e_I: v_b = v M⁻¹.
    """
    inv = np.linalg.inv(matrix)
    return np.einsum('...i,...ia->...a', vec, inv)


def frame_derivative_from_coordinates(e: np.ndarray, coord_derivative: np.ndarray) -> np.ndarray:
    """
    D_I u = e_I^μ ∂_μ u for a stack of coordinate derivatives.

    :param e: (N, 4, 4)
    :param coord_derivative: ∂_μ u with shape (N, 4, ...)
    :return: (N, 4, ...)
    """
    return np.einsum('nim,nm...->ni...', e, coord_derivative)


def pair_symmetry_residual(riemann: np.ndarray) -> np.ndarray:
    """Ỹ_IJKL = R_IJKL − R_KLIJ."""
    return riemann - np.swapaxes(np.swapaxes(riemann, -4, -2), -3, -1)


def first_bianchi_residual(riemann: np.ndarray) -> np.ndarray:
    """B_IJKL = R_{[IJK]L}, using the antisymmetry in the first pair."""
    r = riemann
    cyc1 = np.moveaxis(r, (-4, -3, -2), (-3, -2, -4))
    cyc2 = np.moveaxis(r, (-4, -3, -2), (-2, -4, -3))
    return (r + cyc1 + cyc2) / 3.0
