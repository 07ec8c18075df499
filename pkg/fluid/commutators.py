"""
Discrete residuals of the commutator identities of ∂t with D_I, □ and the
boundary operator, and of the coordinate decomposition of □.

All three identities hold whenever the frame is transported,
∂t e_I = −c_I^J e_J with c_I^J = D_IΘ̂^J + Θ̂^KΓ_{IK}^J. The residuals
compare a direct product-rule evaluation of the left side against the
commuted form; on smooth manufactured fields they converge to zero at the
stencil order.
"""
import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from fluid.operators import box_from_frame_derivatives, coordinate_derivative, wave_coefficients
from frames.algebra import transport_coefficient
from frames.signature import EPS
from grid.domain import FLUID, DomainGrid

logger = logging.getLogger(__name__)


@dataclass
class CommutatorFields:
    """
    Nodal samples of a scalar u and a background at one instant. Time
    derivatives are supplied; spatial ones come from the grid stencils.
    """
    u: np.ndarray
    u_t: np.ndarray
    u_tt: np.ndarray
    e: np.ndarray
    e_t: np.ndarray
    e_tt: np.ndarray
    gamma: np.ndarray
    gamma_t: np.ndarray
    theta_hat: np.ndarray
    theta_hat_t: np.ndarray
    theta_hat_tt: np.ndarray
    sigma2: np.ndarray
    lam: np.ndarray
    lam_t: np.ndarray


class _Jet:
    """Coordinate derivatives of the sampled fields shared by the residuals."""

    def __init__(self, fields: CommutatorFields, grid: DomainGrid, region: str):
        f = fields
        self.du = coordinate_derivative(f.u, f.u_t, grid, region)
        self.du_t = coordinate_derivative(f.u_t, f.u_tt, grid, region)
        self.de = coordinate_derivative(f.e, f.e_t, grid, region)
        self.de_t = coordinate_derivative(f.e_t, f.e_tt, grid, region)
        self.dtheta = coordinate_derivative(f.theta_hat, f.theta_hat_t, grid, region)
        self.dtheta_t = coordinate_derivative(f.theta_hat_t, f.theta_hat_tt, grid, region)
        self.dsigma2 = coordinate_derivative(f.sigma2, f.lam, grid, region)
        self.dlam = coordinate_derivative(f.lam, f.lam_t, grid, region)

        hess = np.zeros(f.u.shape[:1] + (4, 4))
        hess[:, 0, 0] = f.u_tt
        hess[:, 0, 1:] = self.du_t[:, 1:]
        hess[:, 1:, 0] = self.du_t[:, 1:]
        hess[:, 1:, 1:] = grid.hessian(f.u, region)
        self.hess = hess

        frame_dtheta = np.einsum('nim,nmj->nij', f.e, self.dtheta)
        self.c = transport_coefficient(f.theta_hat, frame_dtheta, f.gamma)
        # ∂t c from the product rule, ∂_i c from the stencils
        dtheta_hat_t = (
            np.einsum('nim,nmj->nij', f.e_t, self.dtheta)
            + np.einsum('nim,nmj->nij', f.e, self.dtheta_t)
        )
        c_t = (
            dtheta_hat_t
            + np.einsum('nk,nikj->nij', f.theta_hat_t, f.gamma)
            + np.einsum('nk,nikj->nij', f.theta_hat, f.gamma_t)
        )
        self.dc = coordinate_derivative(self.c, c_t, grid, region)

        self.frame_du = np.einsum('nim,nm->ni', f.e, self.du)
        self.frame_ddu = (
            np.einsum('njm,nmiv,nv->nji', f.e, self.de, self.du)
            + np.einsum('njm,niv,nmv->nji', f.e, f.e, hess)
        )


def transport_residual(fields: CommutatorFields, jet: _Jet) -> np.ndarray:
    """∂t(D_Iu) − D_I∂tu + c_I^J D_Ju, (N, 4)."""
    f = fields
    direct = np.einsum('nim,nm->ni', f.e_t, jet.du) + np.einsum('nim,nm->ni', f.e, jet.du_t)
    frame_du_t = np.einsum('nim,nm->ni', f.e, jet.du_t)
    return direct - frame_du_t + np.einsum('nij,nj->ni', jet.c, jet.frame_du)


def box_commutator_residual(fields: CommutatorFields, jet: _Jet) -> np.ndarray:
    """
    [∂t, □]u evaluated twice: from the time derivative of the coordinate
    coefficients, ∂_t g^{μν} ∂_μ∂_νu + ∂_t b^ν ∂_νu, and from the commuted
    frame form

        Σ ε_I (−c_I^J D_JD_Iu − D_I(c_I^J D_Ju) − ∂tΓ_{II}^K D_Ku + Γ_{II}^K c_K^J D_Ju).
    """
    f = fields
    ginv_t = np.einsum('nim,i,niv->nmv', f.e_t, EPS, f.e) + np.einsum('nim,i,niv->nmv', f.e, EPS, f.e_t)
    b_t = (
        np.einsum('i,nim,nmiv->nv', EPS, f.e_t, jet.de)
        + np.einsum('i,nim,nmiv->nv', EPS, f.e, jet.de_t)
        - np.einsum('i,niik,nkv->nv', EPS, f.gamma_t, f.e)
        - np.einsum('i,niik,nkv->nv', EPS, f.gamma, f.e_t)
    )
    direct = np.einsum('nmv,nmv->n', ginv_t, jet.hess) + np.einsum('nv,nv->n', b_t, jet.du)

    frame_dc = np.einsum('i,nim,nmij->nj', EPS, f.e, jet.dc)
    commuted = (
        -np.einsum('i,nij,nji->n', EPS, jet.c, jet.frame_ddu)
        - np.einsum('i,nij,nij->n', EPS, jet.c, jet.frame_ddu)
        - np.einsum('nj,nj->n', frame_dc, jet.frame_du)
        - np.einsum('i,niik,nk->n', EPS, f.gamma_t, jet.frame_du)
        + np.einsum('i,niik,nkj,nj->n', EPS, f.gamma, jet.c, jet.frame_du)
    )
    return direct - commuted


def boundary_commutator_residual(fields: CommutatorFields, jet: _Jet) -> np.ndarray:
    """
    [∂t, γD_n]u with γD_nu = −(1/2σ²) Σ ε_J D_Jσ² D_Ju, direct against

        −(Λ/σ²) γD_nu − (1/2σ²) Σ ε_J D_JΛ D_Ju
        + (1/2σ²) Σ ε_J c_J^K D_Kσ² D_Ju + (1/2σ²) Σ ε_J D_Jσ² c_J^K D_Ku.
    """
    f = fields
    s = f.sigma2
    ds = np.einsum('nim,nm->ni', f.e, jet.dsigma2)
    dlam = np.einsum('nim,nm->ni', f.e, jet.dlam)
    du = jet.frame_du
    du_t = np.einsum('nim,nm->ni', f.e, jet.du_t)

    ds_dot = np.einsum('nim,nm->ni', f.e_t, jet.dsigma2) + dlam
    du_dot = np.einsum('nim,nm->ni', f.e_t, jet.du) + du_t
    gdn = -0.5 / s * np.einsum('j,nj,nj->n', EPS, ds, du)
    gdn_dot = (
        0.5 * f.lam / s ** 2 * np.einsum('j,nj,nj->n', EPS, ds, du)
        - 0.5 / s * (np.einsum('j,nj,nj->n', EPS, ds_dot, du) + np.einsum('j,nj,nj->n', EPS, ds, du_dot))
    )
    direct = gdn_dot + 0.5 / s * np.einsum('j,nj,nj->n', EPS, ds, du_t)

    commuted = (
        -f.lam / s * gdn
        - 0.5 / s * np.einsum('j,nj,nj->n', EPS, dlam, du)
        + 0.5 / s * np.einsum('j,njk,nk,nj->n', EPS, jet.c, ds, du)
        + 0.5 / s * np.einsum('j,nj,njk,nk->n', EPS, ds, jet.c, du)
    )
    return direct - commuted


def box_decomposition_residual(fields: CommutatorFields, jet: _Jet) -> np.ndarray:
    """Σ ε_I(D_ID_Iu − Γ_{II}^K D_Ku) against g^{μν}∂_μ∂_νu + b^ν∂_νu."""
    ginv, b = wave_coefficients(fields.e, jet.de, fields.gamma)
    coordinate = np.einsum('nmv,nmv->n', ginv, jet.hess) + np.einsum('nv,nv->n', b, jet.du)
    frame = box_from_frame_derivatives(jet.frame_ddu, jet.frame_du, fields.gamma)
    return frame - coordinate


def commutator_residuals(
    fields: CommutatorFields,
    grid: DomainGrid,
    region: str = FLUID
) -> Dict[str, np.ndarray]:
    """
    All commutator residuals. Interior identities are restricted to interior
    nodes, the boundary identity to boundary nodes.

    :return: dict with 'transport' (Ni, 4), 'box' (Ni,), 'boundary' (Nb,)
        and 'decomposition' (Ni,)
    """
    jet = _Jet(fields, grid, region)
    interior = grid.interior
    residuals = {
        'transport': transport_residual(fields, jet)[interior],
        'box': box_commutator_residual(fields, jet)[interior],
        'boundary': boundary_commutator_residual(fields, jet)[grid.boundary],
        'decomposition': box_decomposition_residual(fields, jet)[interior],
    }
    logger.debug(
        "Commutator residuals: " + ", ".join(
            f"{name}={np.max(np.abs(value)) if value.size else 0.0:.3e}" for name, value in residuals.items()
        )
    )
    return residuals
