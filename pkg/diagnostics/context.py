"""
Read-only evaluation context shared by the monitors.

A context packs a copy of the state once, takes one coefficient snapshot
and caches the derived geometry (metric, volume density, checked frame,
normal field) that several monitors need.
"""
import logging
from functools import cached_property
from typing import Dict

import numpy as np

from curvature.checked_system import CheckedGeometry, checked_geometry, recover_riemann
from diagnostics.flow import TimeDerivativeStack
from evolution.closures import theta_hat_with_rate
from evolution.rhs import CoefficientSnapshot, SystemRHS
from evolution.state import EvolutionState
from frames.algebra import metric_from_frame
from frames.boundary import adapted_frame_rate
from frames.signature import EPS
from grid.domain import DomainGrid

logger = logging.getLogger(__name__)


def volume_density(e: np.ndarray, det_floor: float = 1e-8) -> np.ndarray:
    """√|det g| from the frame."""
    return np.sqrt(np.abs(np.linalg.det(metric_from_frame(e, det_floor))))


class MonitorContext:
    """
    :param rhs: right-hand side of the run
    :param state: closed state; it is copied, never modified
    :param order: depth of the time-derivative stack
    """

    def __init__(self, rhs: SystemRHS, state: EvolutionState, order: int = 1):
        self.rhs = rhs
        self.grid: DomainGrid = rhs.grid
        self.layout = rhs.layout
        self.tol = rhs.tol
        self.t = state.t
        self.coupled = state.coupled
        self.coupling = state.coupling
        self.order = order
        self.y = state.pack(self.layout).copy()
        self.fields: Dict[str, np.ndarray] = self.layout.unpack(self.y)
        self.snap: CoefficientSnapshot = rhs.snapshot(self.y)

    @cached_property
    def stack(self) -> TimeDerivativeStack:
        return TimeDerivativeStack(self.rhs, self.y, self.order)

    @cached_property
    def metric(self) -> np.ndarray:
        return metric_from_frame(self.snap.e, self.tol.det_floor)

    @cached_property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.abs(np.linalg.det(self.metric)))

    @cached_property
    def geo(self) -> CheckedGeometry:
        if self.snap.geo is not None:
            return self.snap.geo
        snap = self.snap
        return checked_geometry(
            snap.e, snap.e_t, snap.theta_hat, snap.theta_hat_t, self.grid.normal_covector(),
            self.tol.sigma_floor, self.tol.gram_floor,
        )

    @cached_property
    def riemann(self) -> np.ndarray:
        if self.snap.riemann is None:
            return np.zeros((self.grid.n_nodes,) + (4,) * 4)
        return self.snap.riemann

    @cached_property
    def normal(self):
        """
        Unit normal n^μ of the level sets of ψ = |x| and its time
        derivative, both (N, 4).
        """
        geo = self.geo
        covector = self.grid.normal_covector()
        normal = np.einsum('nim,nm->ni', geo.che[:, :, 1:], covector)
        normal_t = np.einsum('nim,nm->ni', geo.che_t[:, :, 1:], covector)
        _, n_t = adapted_frame_rate(normal, normal_t, geo.legs)
        vec = np.einsum('ni,nim->nm', geo.n, geo.che)
        vec_t = np.einsum('ni,nim->nm', n_t, geo.che) + np.einsum('ni,nim->nm', geo.n, geo.che_t)
        return vec, vec_t

    def density(self, y: np.ndarray) -> np.ndarray:
        """√|g| g^{μν} at a state vector, (N, 4, 4)."""
        e = self.layout.unpack(y)['e']
        ginv = np.einsum('nim,i,niv->nmv', e, EPS, e)
        return volume_density(e, self.tol.det_floor)[:, None, None] * ginv

    def riemann_at(self, y: np.ndarray) -> np.ndarray:
        """e-frame Riemann tensor recovered from the W stored in ``y``."""
        f = self.layout.unpack(y)
        if not self.coupled:
            return np.zeros((self.grid.n_nodes,) + (4,) * 4)
        theta_hat, rate = theta_hat_with_rate(f, self.tol.sigma_floor)
        geo = checked_geometry(
            f['e'], np.zeros_like(f['e']), theta_hat, rate, self.grid.normal_covector(),
            self.tol.sigma_floor, self.tol.gram_floor,
        )
        return recover_riemann(f['w'], geo, f['theta'], self.coupling)[1]

    def level(self, m: int) -> Dict[str, np.ndarray]:
        return self.fields if m == 0 else self.stack.level(m)

    def off_band(self, weights: np.ndarray) -> np.ndarray:
        return np.where(self.grid.band, 0.0, weights)
