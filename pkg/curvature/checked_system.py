"""
Curvature system in the checked frame ě_I = C_I^J e_J (ě₀ = ∂t).

The adapted legs X̌_A come from the level sets of ψ = |x|, the Lagrangian
image of the free boundary, so X̌₀ = ě₀ everywhere and on ∂Ω the normal
agrees with ∇σ²/a up to orientation. W is stored in the checked frame;
the e-frame Riemann tensor is recovered from it by the inverse change of
basis.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.error_handler import DegenerateProjection
from curvature.maxwell import MaxwellSource, covariant_legs, matter_current, maxwell_source
from fluid.operators import coordinate_derivative
from frames.algebra import ricci_from_fluid, transform_lower
from frames.boundary import adapted_frame_rate, build_adapted_frame
from frames.checked import checked_coefficients, checked_coefficients_rate, checked_connection
from frames.curvature import decompose_curvature, recover_curvature
from grid.domain import SIGMA, DomainGrid

logger = logging.getLogger(__name__)


@dataclass
class CheckedGeometry:
    """
    :ivar c: C_I^J, (N, 4, 4)
    :ivar c_t: ∂t C_I^J
    :ivar che: ě_I^μ, (N, 4, 4)
    :ivar che_t: ∂t ě_I^μ
    :ivar xa: X̌_A^I in the checked frame, (N, 3, 4)
    :ivar xa_t: ∂t X̌_A^I
    :ivar n: ň^I, (N, 4)
    :ivar legs: adapted leg choice, (N, 2)
    """
    c: np.ndarray
    c_t: np.ndarray
    che: np.ndarray
    che_t: np.ndarray
    xa: np.ndarray
    xa_t: np.ndarray
    n: np.ndarray
    legs: np.ndarray

    @property
    def c_inv(self) -> np.ndarray:
        return np.linalg.inv(self.c)

    def legs_in_e_frame(self) -> np.ndarray:
        """X_A^I with respect to e_I: X̌_A^J C_J^I."""
        return np.einsum('naj,nji->nai', self.xa, self.c)


def checked_geometry(
    e: np.ndarray,
    e_t: np.ndarray,
    theta_hat: np.ndarray,
    theta_hat_t: np.ndarray,
    normal_covector: np.ndarray,
    floor: float = 1e-8,
    gram_floor: float = 1e-8,
    legs: Optional[np.ndarray] = None
) -> CheckedGeometry:
    """
    Checked frame, its rate and the bulk adapted legs.

    :param e: e_I^μ, (N, 4, 4)
    :param e_t: ∂t e_I^μ
    :param theta_hat: Θ̂^I, (N, 4)
    :param theta_hat_t: ∂tΘ̂^I
    :param normal_covector: coordinate covector dψ, (N, 3)
    """
    c = checked_coefficients(theta_hat, floor)
    c_t = checked_coefficients_rate(theta_hat, theta_hat_t, floor)
    che = np.einsum('nij,njm->nim', c, e)
    che_t = np.einsum('nij,njm->nim', c_t, e) + np.einsum('nij,njm->nim', c, e_t)

    normal = np.einsum('nim,nm->ni', che[:, :, 1:], normal_covector)
    normal_t = np.einsum('nim,nm->ni', che_t[:, :, 1:], normal_covector)
    xa, n, _, legs = build_adapted_frame(normal, gram_floor, legs, degenerate_error=DegenerateProjection)
    xa_t, _ = adapted_frame_rate(normal, normal_t, legs)
    return CheckedGeometry(c=c, c_t=c_t, che=che, che_t=che_t, xa=xa, xa_t=xa_t, n=n, legs=legs)


def checked_ricci(theta: np.ndarray, coupling: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Fluid Ricci tensor in the checked frame."""
    return transform_lower(ricci_from_fluid(theta, coupling), c, 2)


def recover_riemann(
    w: np.ndarray,
    geo: CheckedGeometry,
    theta: np.ndarray,
    coupling: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    (Ř in the checked frame, R in the e-frame) from the stored W.
    """
    checked = recover_curvature(w, geo.xa, geo.n, checked_ricci(theta, coupling, geo.c))
    return checked, transform_lower(checked, geo.c_inv, 4)


def initial_w(riemann: np.ndarray, geo: CheckedGeometry) -> np.ndarray:
    """W of an e-frame Riemann tensor, stored in the checked frame."""
    return decompose_curvature(transform_lower(riemann, geo.c, 4), geo.xa)


def checked_source(
    geo: CheckedGeometry,
    riemann_chk: np.ndarray,
    gamma: np.ndarray,
    e: np.ndarray,
    theta: np.ndarray,
    nabla_theta: np.ndarray,
    coupling: np.ndarray,
    grid: DomainGrid,
    region: str = SIGMA
) -> Tuple[MaxwellSource, np.ndarray]:
    """
    Source of the checked Maxwell system.

    :param riemann_chk: Ř_{IJKL} in the checked frame
    :param gamma: Γ_{IJ}^K in the e-frame
    :param e: e_I^μ
    :param theta: Θ^I in the e-frame
    :param nabla_theta: ∇_IΘ^J in the e-frame, (N, 4, 4)
    :return: (source, Γ̌)
    """
    dc_coord = coordinate_derivative(geo.c, geo.c_t, grid, region)
    dc = np.einsum('nmu,nuij->nmij', e, dc_coord)
    gamma_chk = checked_connection(geo.c, dc, gamma)

    dxa_coord = coordinate_derivative(geo.xa, geo.xa_t, grid, region)
    dxa = np.einsum('njm,nmal->najl', geo.che, dxa_coord)
    nabla_xa = covariant_legs(geo.xa, dxa, gamma_chk)

    matter = matter_current(theta, nabla_theta, geo.legs_in_e_frame(), coupling)
    matter_chk = np.einsum('npa,nAa->npA', matter, geo.c)
    return maxwell_source(riemann_chk, gamma_chk, geo.xa, nabla_xa, matter_chk), gamma_chk
