"""
Constraint data on the initial slice and the residuals of the Hamiltonian
and momentum constraints.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from core.error_handler import DegenerateMetric
from grid.domain import SIGMA, DomainGrid
from initial_data.geometry import covariant_derivative_sym2, spatial_geometry

logger = logging.getLogger(__name__)


@dataclass
class ConstraintData:
    """
    :ivar gbar: induced metric ḡ_ij, (N, 3, 3)
    :ivar kk: second fundamental form k_ij, (N, 3, 3)
    :ivar phi0: velocity potential on the slice, (N,)
    :ivar phi1: normal derivative of the potential, (N,)
    :ivar omega0_mask: characteristic function of Ω₀, (N,) bool
    """
    gbar: np.ndarray
    kk: np.ndarray
    phi0: np.ndarray
    phi1: np.ndarray
    omega0_mask: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.phi0.shape[0]

    def arrays(self) -> Dict[str, np.ndarray]:
        return {
            'gbar': self.gbar,
            'kk': self.kk,
            'phi0': self.phi0,
            'phi1': self.phi1,
            'omega0_mask': self.omega0_mask.astype(float),
        }

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> 'ConstraintData':
        return cls(
            gbar=np.asarray(arrays['gbar'], dtype=float),
            kk=np.asarray(arrays['kk'], dtype=float),
            phi0=np.asarray(arrays['phi0'], dtype=float),
            phi1=np.asarray(arrays['phi1'], dtype=float),
            omega0_mask=np.asarray(arrays['omega0_mask']) > 0.5,
        )

    def validate(self, grid: Optional[DomainGrid] = None, exterior_tol: float = 1e-12):
        """
        Shape, symmetry and positivity checks on the raw arrays.

        The exterior normalization φ₀ = 0, φ₁ = 1 is checked on the pinned
        band of ``grid`` when one is given.
        """
        n = self.n_nodes
        for name, value, shape in (
            ('gbar', self.gbar, (n, 3, 3)),
            ('kk', self.kk, (n, 3, 3)),
            ('phi1', self.phi1, (n,)),
            ('omega0_mask', self.omega0_mask, (n,)),
        ):
            if value.shape != shape:
                raise ValueError(f"{name} has shape {value.shape}, expected {shape}")
        if not np.allclose(self.gbar, np.swapaxes(self.gbar, 1, 2)):
            raise ValueError("gbar is not symmetric")
        if not np.allclose(self.kk, np.swapaxes(self.kk, 1, 2)):
            raise ValueError("kk is not symmetric")
        smallest = np.linalg.eigvalsh(self.gbar)[:, 0]
        if np.any(smallest <= 0.0):
            node = int(np.argmin(smallest))
            raise DegenerateMetric(
                "Induced metric is not positive definite",
                context={'node': node, 'eigenvalue': float(smallest[node])}
            )
        if grid is not None and grid.n_nodes != n:
            raise ValueError(f"Constraint data has {n} nodes, grid has {grid.n_nodes}")
        if grid is not None and np.any(grid.band):
            drift = max(
                float(np.max(np.abs(self.phi0[grid.band]))),
                float(np.max(np.abs(self.phi1[grid.band] - 1.0))),
            )
            if drift > exterior_tol:
                logger.warning(f"Potential is not normalized on the far band (drift {drift:.3e})")


@dataclass
class ConstraintResiduals:
    """
    :ivar hamiltonian: (N,)
    :ivar momentum: (N, 3)
    """
    hamiltonian: np.ndarray
    momentum: np.ndarray

    def norms(self, mask: Optional[np.ndarray] = None) -> Dict[str, float]:
        if mask is None:
            mask = np.ones(self.hamiltonian.shape[0], dtype=bool)
        ham = np.abs(self.hamiltonian[mask])
        mom = np.linalg.norm(self.momentum[mask], axis=-1)
        return {
            'hamiltonian': float(ham.max()) if ham.size else 0.0,
            'momentum': float(mom.max()) if mom.size else 0.0,
        }


def constraint_residuals(
    cd: ConstraintData,
    grid: DomainGrid,
    coupling: float = 1.0,
    region: str = SIGMA
) -> ConstraintResiduals:
    """
    Hamiltonian and momentum constraints with the hard-phase source:

        R̄ + (tr k)² − |k|² − χ(φ₁² + |∇̄φ₀|² + 1)
        ∇̄^j k_ij − ∇̄_i tr k + χ φ₁ ∂_iφ₀

    χ is the fluid mask times ``coupling`` (0 for a test fluid).
    """
    geo = spatial_geometry(cd.gbar, grid, region)
    ginv = geo.inverse
    trace = np.einsum('nij,nij->n', ginv, cd.kk)
    k_up = np.einsum('nia,nab,njb->nij', ginv, cd.kk, ginv)
    k_sq = np.einsum('nij,nij->n', k_up, cd.kk)
    dphi = grid.gradient(cd.phi0, region)
    grad_sq = np.einsum('ni,nij,nj->n', dphi, ginv, dphi)
    chi = coupling * cd.omega0_mask.astype(float)

    hamiltonian = geo.scalar + trace ** 2 - k_sq - chi * (cd.phi1 ** 2 + grad_sq + 1.0)

    dk = covariant_derivative_sym2(cd.kk, geo.christoffel, grid, region)
    div_k = np.einsum('nab,naib->ni', ginv, dk)
    dtrace = grid.gradient(trace, region)
    momentum = div_k - dtrace + (chi * cd.phi1)[:, None] * dphi
    return ConstraintResiduals(hamiltonian=hamiltonian, momentum=momentum)
