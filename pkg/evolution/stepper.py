"""
Time stepping: classical RK4 on the coupled vector with the closures
applied after every stage, optional frozen-coefficient Picard sweeps, and
the health monitors guarding each step.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from core.error_handler import CFLViolation, NoConvergence, NonfiniteState
from curvature.maxwell import spectral_floor
from evolution.closures import apply_closures, close_vector
from evolution.rhs import SystemRHS
from evolution.state import EvolutionState, StateLayout
from grid.domain import DomainGrid

logger = logging.getLogger(__name__)

# stage nodes of the classical scheme
RK4_NODES = (0.0, 0.5, 0.5, 1.0)
RK4_WEIGHTS = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)


def wave_speed(ginv: np.ndarray) -> np.ndarray:
    """
    Largest coordinate speed of the cone g^{μν}ξ_μξ_ν = 0 along each axis,
    |g^{0k} ± ((g^{0k})² − g^{00}g^{kk})^{1/2}| / |g^{00}|, (N, 3).
    """
    g00 = ginv[:, 0, 0][:, None]
    g0k = ginv[:, 0, 1:]
    gkk = np.einsum('nkk->nk', ginv[:, 1:, 1:])
    root = np.sqrt(np.maximum(g0k ** 2 - g00 * gkk, 0.0))
    return np.maximum(np.abs(g0k + root), np.abs(g0k - root)) / np.abs(g00)


def curvature_speed(che: np.ndarray) -> np.ndarray:
    """Bound ‖ě_·^j‖/κ on the spectral radius of (ℬ⁰)⁻¹ℬ^j, (N, 3)."""
    kappa = spectral_floor(che)
    return np.linalg.norm(che[:, 1:, 1:], axis=1) / np.maximum(kappa, 1e-300)[:, None]


def max_characteristic_speed(ginv: np.ndarray, che: Optional[np.ndarray], dim: int) -> float:
    """Largest characteristic speed over the active axes."""
    speeds = wave_speed(ginv)[:, :dim]
    top = float(np.max(speeds)) if speeds.size else 0.0
    if che is not None:
        top = max(top, float(np.max(curvature_speed(che)[:, :dim])))
    return top


def cfl_ratio(dt: float, speed: float, h: float) -> float:
    return dt * speed / h


@dataclass
class StepReport:
    """
    :ivar picard_distances: sup-distances between successive iterates
    :ivar cfl: CFL ratio at the start of the step
    :ivar picard_exhausted: the sweep budget ran out above ``picard_tol``
    """
    picard_distances: List[float] = field(default_factory=list)
    cfl: float = 0.0
    picard_exhausted: bool = False


class Stepper:
    """
    Advances an :class:`EvolutionState` by one step.

    :param grid: domain grid
    :param cfg: step configuration (dt, picard_iters, picard_tol,
        cfl_limit, tolerances)
    :param state: state fixing the anchors, the coupling and the mode
    """

    def __init__(self, grid: DomainGrid, cfg, state: EvolutionState):
        self.grid = grid
        self.cfg = cfg
        self.tol = cfg.tolerances
        self.layout = StateLayout(grid.n_nodes)
        self.rhs = SystemRHS(grid, self.layout, state.anchors, state.coupling, state.coupled, self.tol)
        self.anchors = state.anchors
        self.last_report = StepReport()

    def close(self, y: np.ndarray) -> np.ndarray:
        return close_vector(y, self.layout, self.grid, self.anchors, self.tol.theta0_floor, self.tol.sigma_floor)

    def rk4(
        self,
        y: np.ndarray,
        dt: float,
        rate: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    ) -> np.ndarray:
        """
        One RK4 step with closures after every stage.

        :param rate: stage rate ``rate(Y, stage)``; the full right-hand side
            when None
        """
        if rate is None:
            rate = lambda stage_y, _: self.rhs(stage_y)
        total = np.zeros_like(y)
        k = None
        for stage, (node, weight) in enumerate(zip(RK4_NODES, RK4_WEIGHTS)):
            stage_y = y if stage == 0 else self.close(y + node * dt * k)
            k = rate(stage_y, stage)
            total += weight * k
        return self.close(y + dt * total)

    def picard_sweep(self, y_n: np.ndarray, y_prev: np.ndarray, dt: float) -> np.ndarray:
        """
        One sweep: coefficients frozen on the linear interpolant between y_n
        and the previous iterate, principal parts from the current stage.
        """
        snapshots = {}
        for node in set(RK4_NODES):
            snapshots[node] = self.rhs.snapshot(self.close(y_n + node * (y_prev - y_n)))
        return self.rk4(y_n, dt, lambda stage_y, stage: self.rhs.linear_rhs(stage_y, snapshots[RK4_NODES[stage]]))

    def check_finite(self, y: np.ndarray, t: float):
        if not np.all(np.isfinite(y)):
            bad = int(np.argmax(~np.isfinite(y)))
            name = next(n for n, sl in self.layout.slices.items() if sl.start <= bad < sl.stop)
            raise NonfiniteState("State has non-finite entries", context={'field': name, 'offset': bad, 't': t})

    def cfl(self, state: EvolutionState) -> float:
        snap = self.rhs.snapshot(state.pack(self.layout))
        che = snap.geo.che if snap.geo is not None else None
        speed = max_characteristic_speed(snap.ginv, che, self.grid.dim)
        return cfl_ratio(self.cfg.dt, speed, self.grid.h)

    def step(self, state: EvolutionState) -> EvolutionState:
        """
        Advance ``state`` by dt. A Picard budget that runs out above the
        tolerance is logged and flagged on :attr:`last_report`.

        :raises CFLViolation: dt above the limit
        :raises NoConvergence: Picard iterates fail to contract
        :raises NonfiniteState: the new state is not finite
        """
        dt = self.cfg.dt
        report = StepReport(cfl=self.cfl(state))
        if report.cfl > self.cfg.cfl_limit:
            raise CFLViolation(
                "Time step exceeds the CFL limit",
                context={'t': state.t, 'dt': dt, 'ratio': report.cfl, 'limit': self.cfg.cfl_limit}
            )

        y_n = state.pack(self.layout)
        y = self.rk4(y_n, dt)
        for sweep in range(self.cfg.picard_iters):
            y_next = self.picard_sweep(y_n, y, dt)
            distance = float(np.max(np.abs(y_next - y)))
            report.picard_distances.append(distance)
            y = y_next
            if distance <= self.cfg.picard_tol:
                break
            if len(report.picard_distances) > 1 and distance >= report.picard_distances[-2]:
                raise NoConvergence(
                    "Picard iterates do not contract",
                    context={'t': state.t, 'sweep': sweep, 'distances': report.picard_distances}
                )
        else:
            distances = report.picard_distances
            if distances and distances[-1] > self.cfg.picard_tol:
                report.picard_exhausted = True
                logger.warning(
                    f"Picard budget of {self.cfg.picard_iters} sweeps used up at t={state.t:.6g}: "
                    f"last distance {distances[-1]:.3e} above tolerance {self.cfg.picard_tol:.3e}"
                )

        self.check_finite(y, state.t + dt)
        self.last_report = report
        advanced = state.with_vector(y, self.layout, state.t + dt)
        return apply_closures(advanced, self.grid, self.layout, self.tol)
