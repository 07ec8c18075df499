"""
Maxwell form of the Bianchi identities for the curvature two-forms
F^{AB}_{IJ} = R_{IJLM} X_A^L X_B^M.

Contracted and cyclic Bianchi identities give, for each pair A < B,

    Σ_I ε_I ∇_I F_{IK} = ℐ_K,      ∇_I F_{JK} + ∇_J F_{KI} + ∇_K F_{IJ} = 𝒯_{IJK},

which in the split W = (E, H) of an orthonormal frame with D₀ = ∂t read

    D₀E + curl H = ℐ̌,    D₀H − curl E = 𝒦_H,

a symmetric hyperbolic system ℬ^μ ∂_μ W = 𝒦. Everything here is frame
agnostic: pass quantities of the checked frame to build the evolved system.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.error_handler import HyperbolicityLoss
from frames.curvature import two_forms
from frames.signature import EPS, LEVI3, PAIRS
from grid.domain import SIGMA, DomainGrid

logger = logging.getLogger(__name__)


def _build_a_matrices() -> np.ndarray:
    a = np.zeros((3, 6, 6))
    for i in range(3):
        for r in range(3):
            for s in range(3):
                a[i, r, 3 + s] = LEVI3[r, i, s]
                a[i, 3 + r, s] = -LEVI3[r, i, s]
    return a


# 𝒜^Ĩ, Ĩ = 1, 2, 3 on the leading axis; rows/cols (E₁, E₂, E₃, H¹, H², H³)
A_MATS = _build_a_matrices()
A_MATS.setflags(write=False)


@dataclass
class MaxwellSource:
    """
    :ivar k: 𝒦 per pair, (N, 3, 6)
    :ivar current: frame-form ℐ_K per pair including connection terms, (N, 3, 4);
        the K = 0 entry is the divergence constraint source
    :ivar covariant_current: ℐ_K of Σ ε_I ∇_I F_{IK} = ℐ_K, (N, 3, 4)
    :ivar cyclic: 𝒯_{IJK} per pair, (N, 3, 4, 4, 4)
    """
    k: np.ndarray
    current: np.ndarray
    covariant_current: np.ndarray
    cyclic: np.ndarray


@dataclass
class HyperbolicSystem:
    """
    :ivar a_mats: 𝒜^Ĩ, (3, 6, 6)
    :ivar b0: ℬ⁰, (N, 6, 6)
    :ivar bj: ℬ^j, (N, 3, 6, 6)
    :ivar source: 𝒦 per pair, (N, 3, 6)
    :ivar kappa: spectral floor of ℬ⁰, (N,)
    """
    a_mats: np.ndarray
    b0: np.ndarray
    bj: np.ndarray
    source: np.ndarray
    kappa: np.ndarray


def covariant_legs(xa: np.ndarray, dxa: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """
    (∇_J X_A)^L = D_J X_A^L + Γ_{JK}^L X_A^K.

    :param xa: X_A^L, (N, 3, 4)
    :param dxa: D_J X_A^L, (N, 3, 4, 4) ordered (A, J, L)
    :param gamma: Γ_{JK}^L, (N, 4, 4, 4)
    :return: (N, 3, 4, 4) ordered (A, J, L)
    """
    return dxa + np.einsum('njkl,nak->najl', gamma, xa)


def geometric_current(riemann: np.ndarray, xa: np.ndarray, nabla_xa: np.ndarray) -> np.ndarray:
    """Σ_J ε_J R_{JKLM}[(∇_JX_A)^L X_B^M + X_A^L (∇_JX_B)^M] per pair, (N, 3, 4)."""
    out = []
    for a, b in PAIRS:
        term = (
            np.einsum('j,njklm,njl,nm->nk', EPS, riemann, nabla_xa[:, a], xa[:, b])
            + np.einsum('j,njklm,nl,njm->nk', EPS, riemann, xa[:, a], nabla_xa[:, b])
        )
        out.append(term)
    return np.stack(out, axis=1)


def geometric_cyclic(riemann: np.ndarray, xa: np.ndarray, nabla_xa: np.ndarray) -> np.ndarray:
    """
    Cyclic sum over (I, J, K) of R_{JKLM}[(∇_IX_A)^L X_B^M + X_A^L (∇_IX_B)^M],
    per pair, (N, 3, 4, 4, 4).
    """
    out = []
    for a, b in PAIRS:
        s = (
            np.einsum('njklm,nil,nm->nijk', riemann, nabla_xa[:, a], xa[:, b])
            + np.einsum('njklm,nl,nim->nijk', riemann, xa[:, a], nabla_xa[:, b])
        )
        out.append(cyclic_sum(s))
    return np.stack(out, axis=1)


def cyclic_sum(tensor: np.ndarray) -> np.ndarray:
    """S_IJK + S_JKI + S_KIJ over the last three axes."""
    return (
        tensor
        + np.moveaxis(tensor, (-3, -2, -1), (-1, -3, -2))
        + np.moveaxis(tensor, (-3, -2, -1), (-2, -1, -3))
    )


def matter_current(
    theta: np.ndarray,
    nabla_theta: np.ndarray,
    xa: np.ndarray,
    coupling: np.ndarray
) -> np.ndarray:
    """
    Fluid part of ℐ_K: g(X_B, V)∇_{X_A}V_K − g(X_A, V)∇_{X_B}V_K, times the
    coupling (zero in vacuum and for a test fluid). The companion vorticity
    term drops for the irrotational flow.

    :param theta: Θ^I, (N, 4)
    :param nabla_theta: ∇_IΘ^J, (N, 4, 4)
    :param xa: X_A^I in the same frame, (N, 3, 4)
    :param coupling: (N,)
    :return: (N, 3, 4)
    """
    g_xv = np.einsum('nai,i,ni->na', xa, EPS, theta)
    along = np.einsum('naj,njk,k->nak', xa, nabla_theta, EPS)
    out = []
    for a, b in PAIRS:
        out.append(g_xv[:, b, None] * along[:, a] - g_xv[:, a, None] * along[:, b])
    return np.stack(out, axis=1) * np.asarray(coupling)[:, None, None]


def maxwell_source(
    riemann: np.ndarray,
    gamma: np.ndarray,
    xa: np.ndarray,
    nabla_xa: np.ndarray,
    matter: Optional[np.ndarray] = None
) -> MaxwellSource:
    """
    Source 𝒦 = (ℐ, 𝒦_H) of the frame-form Maxwell system, in the frame the
    inputs are expressed in.

    ℐ_K = ℐ^cov_K + Σ_I ε_I (Γ_{II}^M F_{MK} + Γ_{IK}^M F_{IM}),
    𝒦_H = −(𝒞_{023}, 𝒞_{031}, 𝒞_{012}) with
    𝒞_{IJK} = cyclic[Γ_{IJ}^M F_{MK} + Γ_{IK}^M F_{JM}] + 𝒯_{IJK}.

    :param riemann: R_{IJKL}, (N, 4, 4, 4, 4)
    :param gamma: Γ_{IJ}^K, (N, 4, 4, 4)
    :param xa: X_A^I, (N, 3, 4)
    :param nabla_xa: (∇_J X_A)^L, (N, 3, 4, 4)
    :param matter: fluid current per pair (N, 3, 4) or None in vacuum
    """
    forms = two_forms(riemann, xa)
    cov = geometric_current(riemann, xa, nabla_xa)
    if matter is not None:
        cov = cov + matter
    current = (
        cov
        + np.einsum('i,niim,npmk->npk', EPS, gamma, forms)
        + np.einsum('i,nikm,npim->npk', EPS, gamma, forms)
    )
    cyclic = geometric_cyclic(riemann, xa, nabla_xa)
    connection = (
        np.einsum('nijm,npmk->npijk', gamma, forms)
        + np.einsum('nikm,npjm->npijk', gamma, forms)
    )
    bracket = cyclic + cyclic_sum(connection)

    k = np.zeros(forms.shape[:2] + (6,), dtype=np.result_type(riemann, gamma, xa))
    k[..., :3] = current[..., 1:]
    k[..., 3] = -bracket[..., 0, 2, 3]
    k[..., 4] = -bracket[..., 0, 3, 1]
    k[..., 5] = -bracket[..., 0, 1, 2]
    return MaxwellSource(k=k, current=current, covariant_current=cov, cyclic=cyclic)


def spectral_floor(legs: np.ndarray) -> np.ndarray:
    """κ = e₀⁰ − (Σ_Ĩ (e_Ĩ⁰)²)^{1/2}, the smallest eigenvalue of ℬ⁰."""
    return legs[:, 0, 0] - np.linalg.norm(legs[:, 1:, 0], axis=1)


def assemble_hyperbolic(
    legs: np.ndarray,
    source: np.ndarray,
    kappa_min: float = 0.1
) -> HyperbolicSystem:
    """
    ℬ^μ = e₀^μ 1 + Σ_Ĩ e_Ĩ^μ 𝒜^Ĩ for the frame ``legs``.

    With the checked frame (ě₀ = ∂t) ℬ⁰ = 1 + Σ ě_Ĩ⁰𝒜^Ĩ, whose eigenvalues
    are 1 and 1 ± ‖ě⁰‖.

    :param legs: frame components (N, 4, 4), usually the checked frame
    :param source: 𝒦, (N, 3, 6)
    :param kappa_min: abort threshold for the spectral floor
    """
    eye = np.eye(6)
    b = (
        np.einsum('nm,ab->nmab', legs[:, 0, :], eye)
        + np.einsum('nim,iab->nmab', legs[:, 1:, :], A_MATS)
    )
    kappa = spectral_floor(legs)
    if kappa.size and np.min(kappa) <= kappa_min:
        node = int(np.argmin(kappa))
        raise HyperbolicityLoss(
            "Time matrix of the curvature system lost its spectral floor",
            context={'node': node, 'kappa': float(kappa[node]), 'threshold': kappa_min}
        )
    return HyperbolicSystem(a_mats=A_MATS, b0=b[:, 0], bj=b[:, 1:], source=source, kappa=kappa)


def curvature_rhs(
    system: HyperbolicSystem,
    w: np.ndarray,
    grid: DomainGrid,
    region: str = SIGMA,
    dw: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    dW/dt = (ℬ⁰)⁻¹(𝒦 − Σ_j ℬ^j ∂_jW), one-sided at the interface per side.

    :param w: (N, 3, 6)
    :param dw: precomputed ∂_jW (N, 3, 3, 6); taken from the grid if None
    :return: (N, 3, 6)
    """
    if dw is None:
        dw = grid.gradient(w, region)
    flux = np.einsum('njab,njpb->npa', system.bj, dw)
    rhs = system.source - flux
    b0 = np.broadcast_to(system.b0[:, None], rhs.shape[:2] + (6, 6))
    return np.linalg.solve(b0, rhs[..., None])[..., 0]
