"""
Field containers of the frame formulation.

Every array carries a leading node axis of length N (the flattened grid);
the remaining axes follow the index order of the symbol:

    FrameField.e        (N, 4, 4)        e_I^μ
    FrameField.che      (N, 4, 4)        ě_I^μ (optional)
    ConnectionField     (N, 4, 4, 4)     Γ_{IJ}^K
    FluidState.theta    (N, 4)           Θ^I
    CurvatureState.w    (N, 3, 6)        W^{AB} per pair (0,1), (0,2), (1,2)
    CurvatureState.riemann (N, 4, 4, 4, 4) R_{IJKL}
    BoundaryFrame.xa    (Nb, 3, 4)       X_A^I
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np


@dataclass
class FrameField:
    e: np.ndarray
    che: Optional[np.ndarray] = None

    @classmethod
    def identity(cls, n_nodes: int) -> 'FrameField':
        return cls(e=np.tile(np.eye(4), (n_nodes, 1, 1)))

    def copy(self) -> 'FrameField':
        return FrameField(e=self.e.copy(), che=None if self.che is None else self.che.copy())


@dataclass
class ConnectionField:
    gamma: np.ndarray

    @classmethod
    def zeros(cls, n_nodes: int) -> 'ConnectionField':
        return cls(gamma=np.zeros((n_nodes, 4, 4, 4)))

    def copy(self) -> 'ConnectionField':
        return ConnectionField(gamma=self.gamma.copy())


@dataclass
class FluidState:
    theta: np.ndarray
    sigma2: np.ndarray
    lam: np.ndarray
    theta_t: np.ndarray
    lambda_t: np.ndarray

    @classmethod
    def at_rest(cls, n_nodes: int) -> 'FluidState':
        theta = np.zeros((n_nodes, 4))
        theta[:, 0] = 1.0
        return cls(
            theta=theta,
            sigma2=np.ones(n_nodes),
            lam=np.zeros(n_nodes),
            theta_t=np.zeros((n_nodes, 4)),
            lambda_t=np.zeros(n_nodes),
        )

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(self.sigma2)

    def theta_hat(self) -> np.ndarray:
        """Θ̂^I = Θ^I/√σ² (derived, never stored)."""
        return self.theta / self.sigma[:, None]

    def copy(self) -> 'FluidState':
        return replace(
            self,
            theta=self.theta.copy(),
            sigma2=self.sigma2.copy(),
            lam=self.lam.copy(),
            theta_t=self.theta_t.copy(),
            lambda_t=self.lambda_t.copy(),
        )


@dataclass
class CurvatureState:
    w: np.ndarray
    riemann: np.ndarray

    @classmethod
    def zeros(cls, n_nodes: int) -> 'CurvatureState':
        return cls(w=np.zeros((n_nodes, 3, 6)), riemann=np.zeros((n_nodes, 4, 4, 4, 4)))

    def copy(self) -> 'CurvatureState':
        return CurvatureState(w=self.w.copy(), riemann=self.riemann.copy())


@dataclass
class BoundaryFrame:
    xa: np.ndarray
    n: np.ndarray
    a: np.ndarray
    gamma_coef: np.ndarray
    legs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {'xa': self.xa, 'n': self.n, 'a': self.a, 'gamma_coef': self.gamma_coef}
