"""
Checked frame ě_I with ě₀ = ∂t.

ě₀ = Θ̂^J e_J, then ě₃, ě₂, ě₁ by Gram-Schmidt of e₃, e₂, e₁ against the
legs already built. The change of basis is stored as ě_I = C_I^J e_J; it
depends on Θ̂ only, so time derivatives of C are complex-step directional
derivatives along ∂tΘ̂.
"""
from typing import Tuple

import numpy as np

from core.error_handler import DegenerateFrame
from frames.fields import FrameField
from frames.signature import EPS

COMPLEX_STEP = 1e-30


def _eps_inner(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum('...i,i,...i->...', u, EPS, v)


def checked_coefficients(theta_hat: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """
    Coefficients C_I^J of the checked frame in the e-frame.

    Written without abs or comparisons on the data path so complex
    arguments propagate (used for derivatives).

    :param theta_hat: Θ̂^I, shape (N, 4)
    :param floor: smallest admissible squared norm during Gram-Schmidt
    :return: C, shape (N, 4, 4)
    """
    n = theta_hat.shape[0]
    c = np.zeros((n, 4, 4), dtype=theta_hat.dtype)
    c[:, 0] = theta_hat
    c00 = _eps_inner(theta_hat, theta_hat)
    if np.any(c00.real >= -floor):
        node = int(np.argmax(c00.real >= -floor))
        raise DegenerateFrame("∂t is not timelike in the frame", context={'node': node})

    built = []
    for leg in (3, 2, 1):
        v = np.zeros((n, 4), dtype=theta_hat.dtype)
        v[:, leg] = 1.0
        v = v - (_eps_inner(v, theta_hat) / c00)[:, None] * theta_hat
        for other in built:
            v = v - _eps_inner(v, other)[:, None] * other
        norm2 = _eps_inner(v, v)
        if np.any(norm2.real <= floor):
            node = int(np.argmax(norm2.real <= floor))
            raise DegenerateFrame(
                "Spatial frame legs are degenerate modulo ∂t",
                context={'node': node, 'leg': leg, 'norm2': float(norm2[node].real)}
            )
        v = v / np.sqrt(norm2)[:, None]
        c[:, leg] = v
        built.append(v)
    return c


def checked_coefficients_rate(theta_hat: np.ndarray, theta_hat_dot: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """∂t C along ∂tΘ̂, exact to round-off via the complex step."""
    perturbed = theta_hat.astype(complex) + 1j * COMPLEX_STEP * theta_hat_dot
    return checked_coefficients(perturbed, floor).imag / COMPLEX_STEP


def build_checked_frame(frame: FrameField, theta_hat: np.ndarray, floor: float = 1e-8) -> FrameField:
    """
    Attach ě_I^μ = C_I^J e_J^μ to a copy of ``frame``.

    ě₀ = ∂t holds whenever e₀ satisfies the closure Θ̂^I e_I = ∂t.
    """
    c = checked_coefficients(theta_hat, floor)
    out = frame.copy()
    out.che = np.einsum('nij,njm->nim', c, frame.e)
    return out


def checked_connection(c: np.ndarray, dc: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """
    Γ̌_{IJ}^K = ε_K Σ_L ε_L C_K^L [Ď_I C_J^L + C_I^M C_J^P Γ_{MP}^L].

    :param c: C_I^J, (N, 4, 4)
    :param dc: e-frame derivatives D_M C_J^L, (N, 4, 4, 4) with M first
    :param gamma: Γ_{MP}^L in the e-frame, (N, 4, 4, 4)
    :return: Γ̌, (N, 4, 4, 4)
    """
    dchk = np.einsum('nim,nmjl->nijl', c, dc)
    nabla = dchk + np.einsum('nim,njp,nmpl->nijl', c, c, gamma)
    return np.einsum('k,nkl,l,nijl->nijk', EPS, c, EPS, nabla)


def checked_gram(c: np.ndarray) -> np.ndarray:
    """Gram matrix g(ě_I, ě_J) = Σ_L ε_L C_I^L C_J^L."""
    return np.einsum('nil,l,njl->nij', c, EPS, c)


def split_checked(frame: FrameField) -> Tuple[np.ndarray, np.ndarray]:
    """(ě_Ĩ⁰, ě_Ĩ^j) of a frame carrying ``che``."""
    if frame.che is None:
        raise DegenerateFrame("Checked frame has not been built")
    return frame.che[:, 1:, 0], frame.che[:, 1:, 1:]
