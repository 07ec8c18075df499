"""
Pointwise jets consumed by the right-hand-side formulas.

A jet holds field values together with their frame derivatives
D_I = e_I^μ ∂_μ, where ∂_t comes from time data (Θ_t, Λ, Λ_t, ∂t e, ∂t Γ)
and ∂_i from stencils. Keeping the formulas on jets lets tests feed exact
symbolic values and the solver feed finite differences.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class FluidJet:
    """
    :ivar theta: Θ^I, (N, 4)
    :ivar theta_t: ∂tΘ^I, (N, 4)
    :ivar sigma2: σ², (N,)
    :ivar lam: Λ = ∂tσ², (N,)
    :ivar dtheta: D_IΘ^J, (N, 4, 4)
    :ivar dsigma2: D_Iσ², (N, 4)
    :ivar dlam: D_IΛ, (N, 4)
    :ivar ddsigma2: D_I D_J σ², (N, 4, 4)
    :ivar gamma: Γ_{IJ}^K, (N, 4, 4, 4)
    :ivar dgamma: D_L Γ_{IJ}^K with L first, (N, 4, 4, 4, 4)
    :ivar riemann: R_{IJKL}, (N, 4, 4, 4, 4) or None when flat
    :ivar coupling: c = 1 where the Ricci source acts, else 0, (N,)
    """
    theta: np.ndarray
    theta_t: np.ndarray
    sigma2: np.ndarray
    lam: np.ndarray
    dtheta: np.ndarray
    dsigma2: np.ndarray
    dlam: np.ndarray
    ddsigma2: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    riemann: Optional[np.ndarray]
    coupling: np.ndarray

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(self.sigma2)

    def take(self, index: np.ndarray) -> 'FluidJet':
        """Restrict every array to the given nodes."""
        return FluidJet(
            theta=self.theta[index],
            theta_t=self.theta_t[index],
            sigma2=self.sigma2[index],
            lam=self.lam[index],
            dtheta=self.dtheta[index],
            dsigma2=self.dsigma2[index],
            dlam=self.dlam[index],
            ddsigma2=self.ddsigma2[index],
            gamma=self.gamma[index],
            dgamma=self.dgamma[index],
            riemann=None if self.riemann is None else self.riemann[index],
            coupling=self.coupling[index],
        )


@dataclass
class WaveJet:
    """
    Coordinate jet of a scalar (or stack of scalars) u for the wave operator.

    :ivar u_t: ∂t u, (N, ...)
    :ivar grad: ∂_i u, (N, 3, ...)
    :ivar grad_t: ∂_i ∂t u, (N, 3, ...)
    :ivar hess: ∂_i ∂_j u, (N, 3, 3, ...)
    """
    u_t: np.ndarray
    grad: np.ndarray
    grad_t: np.ndarray
    hess: np.ndarray

    def coordinate_gradient(self) -> np.ndarray:
        """∂_μ u with μ = 0..3 on axis 1."""
        return np.concatenate([self.u_t[:, None], self.grad], axis=1)
