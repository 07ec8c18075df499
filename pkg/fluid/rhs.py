"""
Right-hand sides of the fluid subsystem in the frame.

    □Θ^I = F_Θ          interior
    (∂t² + γD_n)Θ^I = f  on ∂Ω, n the outward normal
    □σ² = F_σ²
    □Λ = F_Λ,  Λ = ∂tσ²

The Ricci-derived potential terms carry the jet's coupling factor, so a
test fluid (flat geometry) sees them switched off. Derivations are
collected in docs/derivations.md.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.error_handler import TaylorViolation
from fluid.jets import FluidJet
from frames.signature import EPS


@dataclass
class FluidRHS:
    """
    :ivar theta_bdry_rhs: f^I on boundary nodes, (Nb, 4)
    :ivar theta_int_rhs: F_Θ^I on interior nodes, (Ni, 4)
    :ivar sigma_rhs: F_σ² on interior nodes, (Ni,)
    :ivar lambda_rhs: F_Λ on interior nodes, (Ni,)
    """
    theta_bdry_rhs: np.ndarray
    theta_int_rhs: np.ndarray
    sigma_rhs: np.ndarray
    lambda_rhs: np.ndarray


def covariant_theta(jet: FluidJet) -> np.ndarray:
    """∇_IΘ^J = D_IΘ^J + Γ_{IK}^J Θ^K, (N, 4, 4)."""
    return jet.dtheta + np.einsum('nikj,nk->nij', jet.gamma, jet.theta)


def theta_interior_rhs(jet: FluidJet) -> np.ndarray:
    """
    F_Θ^I = c(½ − σ²)Θ^I
            + 2ε_I Σ ε_Kε_L (∇_KΘ^L) Γ_{KI}^L
            + ε_I Σ ε_Kε_L Θ^L [D_KΓ_{KI}^L + Γ_{KI}^M Γ_{KM}^L − Γ_{KK}^M Γ_{MI}^L].
    """
    g = jet.gamma
    nabla = covariant_theta(jet)
    potential = (jet.coupling * (0.5 - jet.sigma2))[:, None] * jet.theta
    cross = 2.0 * EPS * np.einsum('k,l,nkl,nkil->ni', EPS, EPS, nabla, g)
    dg = np.einsum('k,nkkil->nil', EPS, jet.dgamma)
    quad = np.einsum('k,nkim,nkml->nil', EPS, g, g) - np.einsum('k,nkkm,nmil->nil', EPS, g, g)
    frame_box = EPS * np.einsum('l,nl,nil->ni', EPS, jet.theta, dg + quad)
    return potential + cross + frame_box


def sigma_wave_rhs(jet: FluidJet) -> np.ndarray:
    """F_σ² = c(σ² − 2σ⁴) − 2 Σ ε_Iε_J (∇_IΘ^J)²."""
    nabla = covariant_theta(jet)
    square = np.einsum('i,j,nij,nij->n', EPS, EPS, nabla, nabla)
    return jet.coupling * (jet.sigma2 - 2.0 * jet.sigma2 ** 2) - 2.0 * square


def enthalpy_flux_rhs(jet: FluidJet) -> np.ndarray:
    """
    F_P for P = σΛ = D_Vσ²:

    c(2P − 6σ²P) + 4 Σ ε_Iε_J S_IJ H_IJ + 4 Σ ε_Iε_Jε_K S_IJ S_IK S_KJ
    + 4 Σ R_{LJKI} Θ^L S^{IJ} Θ^K,

    with S_IJ = ∇_IV_J, S^{IJ} = ∇^IV^J and H_IJ = ∇_I∇_Jσ².
    """
    nabla = covariant_theta(jet)
    s_low = nabla * EPS[None, None, :]
    s_up = nabla * EPS[None, :, None]
    hess = jet.ddsigma2 - np.einsum('nijk,nk->nij', jet.gamma, jet.dsigma2)
    p = jet.sigma * jet.lam

    out = jet.coupling * (2.0 * p - 6.0 * jet.sigma2 * p)
    out = out + 4.0 * np.einsum('i,j,nij,nij->n', EPS, EPS, s_low, hess)
    out = out + 4.0 * np.einsum('i,j,k,nij,nik,nkj->n', EPS, EPS, EPS, s_low, s_low, s_low)
    if jet.riemann is not None:
        out = out + 4.0 * np.einsum('nljki,nl,nij,nk->n', jet.riemann, jet.theta, s_up, jet.theta)
    return out


def lambda_from_flux(
    jet: FluidJet,
    flux_rhs: np.ndarray,
    sigma_rhs: np.ndarray
) -> np.ndarray:
    """
    □Λ from □P and □σ² by the chain rule for Λ = P/σ:

    F_Λ = F_P/σ − (1/σ²) ∇Λ·∇σ² − (Λ/2σ²) F_σ² + (Λ/4σ⁴) ∇σ²·∇σ².
    """
    s = jet.sigma2
    grad_lam_s = np.einsum('i,ni,ni->n', EPS, jet.dlam, jet.dsigma2)
    grad_s_s = np.einsum('i,ni,ni->n', EPS, jet.dsigma2, jet.dsigma2)
    return (
        flux_rhs / jet.sigma
        - grad_lam_s / s
        - jet.lam * sigma_rhs / (2.0 * s)
        + jet.lam * grad_s_s / (4.0 * s ** 2)
    )


def lambda_wave_rhs(jet: FluidJet, sigma_rhs: Optional[np.ndarray] = None) -> np.ndarray:
    """F_Λ, the right side of □Λ."""
    if sigma_rhs is None:
        sigma_rhs = sigma_wave_rhs(jet)
    return lambda_from_flux(jet, enthalpy_flux_rhs(jet), sigma_rhs)


def theta_boundary_rhs(jet: FluidJet, c0: float = 0.0) -> np.ndarray:
    """
    f^I = (1/2σ²) Σ ε_J D_Jσ² Γ_{JK}^I Θ^K − (ε_I/2σ²) D_I(σΛ) − (Λ/2σ²) ∂tΘ^I.

    :param jet: jet restricted to boundary nodes
    :param c0: Taylor bound checked on a² = Σ ε_I (D_Iσ²)²
    """
    a2 = np.einsum('i,ni,ni->n', EPS, jet.dsigma2, jet.dsigma2)
    if a2.size and c0 > 0.0 and np.min(a2) < c0 ** 2:
        node = int(np.argmin(a2))
        raise TaylorViolation(
            "Taylor sign condition fails on the boundary",
            context={'node': node, 'a2': float(a2[node]), 'c0': c0}
        )
    s = jet.sigma2
    transport = np.einsum('j,nj,njki,nk->ni', EPS, jet.dsigma2, jet.gamma, jet.theta)
    d_flux = jet.sigma[:, None] * jet.dlam + (jet.lam / (2.0 * jet.sigma))[:, None] * jet.dsigma2
    return (
        transport / (2.0 * s)[:, None]
        - EPS * d_flux / (2.0 * s)[:, None]
        - (jet.lam / (2.0 * s))[:, None] * jet.theta_t
    )


def assemble_fluid_rhs(jet: FluidJet, interior: np.ndarray, boundary: np.ndarray, c0: float = 0.0) -> FluidRHS:
    """Evaluate all four right-hand sides on their node sets."""
    inner = jet.take(interior)
    sigma_rhs = sigma_wave_rhs(inner)
    return FluidRHS(
        theta_bdry_rhs=theta_boundary_rhs(jet.take(boundary), c0),
        theta_int_rhs=theta_interior_rhs(inner),
        sigma_rhs=sigma_rhs,
        lambda_rhs=lambda_wave_rhs(inner, sigma_rhs),
    )
