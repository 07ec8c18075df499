"""
Compatibility report of an initial state.

The checks never abort the run by themselves; the driver decides what to
do with failures (see ``diagnostics.strict_compatibility``).
"""
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List

import numpy as np

from core.error_handler import SimulationError
from diagnostics.context import MonitorContext
from diagnostics.taylor import taylor_monitor
from diagnostics.vanishing import vanishing_fluid, vanishing_geometry, worst
from evolution.rhs import SystemRHS
from evolution.state import EvolutionState, StateLayout
from frames.boundary import adapted_gram, build_boundary_frame
from grid.domain import DomainGrid
from initial_data.pipeline import InitialState

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """
    :ivar value: measured quantity
    :ivar threshold: limit it is compared with
    :ivar passed: outcome
    :ivar detail: free-form note (failing node, exception text)
    """
    value: float
    threshold: float
    passed: bool
    detail: str = ''


@dataclass
class CompatibilityReport:
    checks: Dict[str, CheckResult] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, name: str, result: CheckResult):
        self.checks[name] = result
        if not result.passed:
            self.failures.append(name)

    def to_dict(self) -> Dict[str, object]:
        return {
            'passed': self.passed,
            'failures': list(self.failures),
            'checks': {name: asdict(result) for name, result in self.checks.items()},
        }


def _boundary_frame_check(dsigma2: np.ndarray, sigma2: np.ndarray, c0: float, gram_floor: float) -> CheckResult:
    try:
        frame = build_boundary_frame(dsigma2, sigma2, c0, gram_floor)
    except SimulationError as exc:
        return CheckResult(value=float('nan'), threshold=gram_floor, passed=False, detail=str(exc))
    gxx, gxn, gnn = adapted_gram(frame.xa, frame.n)
    eta = np.diag([-1.0, 1.0, 1.0])
    defect = max(
        float(np.max(np.abs(gxx - eta), initial=0.0)),
        float(np.max(np.abs(gxn), initial=0.0)),
        float(np.max(np.abs(gnn - 1.0), initial=0.0)),
    )
    return CheckResult(value=defect, threshold=1e-10, passed=defect <= 1e-10)


def check_compatibility(initial: InitialState, grid: DomainGrid, tolerances, vanishing_tol: float = None) -> CompatibilityReport:
    """
    Check an initial state against the conditions the evolution relies on.

    :param initial: assembled initial state
    :param grid: domain grid
    :param tolerances: floors and thresholds (c0, gram_floor,
        compatibility_tol, constraint_tol)
    :param vanishing_tol: bound for the vanishing-quantity norms, the
        compatibility tolerance if None
    """
    report = CompatibilityReport()
    tol = tolerances.compatibility_tol
    vanishing_tol = tol if vanishing_tol is None else vanishing_tol
    fluid = initial.fluid0

    sigma_in = fluid.sigma2[grid.fluid]
    low = float(np.min(sigma_in)) if sigma_in.size else float('nan')
    report.add('sigma2_fluid', CheckResult(value=low, threshold=1.0, passed=low >= 1.0 - tol))

    sigma_b = fluid.sigma2[grid.boundary]
    drift = float(np.max(np.abs(sigma_b - 1.0))) if sigma_b.size else float('nan')
    report.add('sigma2_boundary', CheckResult(value=drift, threshold=tol, passed=drift <= tol))

    theta0 = fluid.theta[grid.fluid, 0]
    low_theta0 = float(np.min(theta0)) if theta0.size else float('nan')
    report.add('theta0', CheckResult(value=low_theta0, threshold=0.0, passed=low_theta0 > 0.0))

    residuals = initial.metadata.get('constraint_residuals', {})
    if residuals:
        worst_constraint = max(residuals.values())
        report.add('constraints', CheckResult(
            value=worst_constraint, threshold=tolerances.constraint_tol,
            passed=worst_constraint <= tolerances.constraint_tol,
        ))

    state = EvolutionState.from_initial(initial, grid)
    layout = StateLayout(grid.n_nodes)
    # the Taylor sign is reported below rather than raised by the boundary forcing
    rhs = SystemRHS(grid, layout, state.anchors, state.coupling, state.coupled, replace(tolerances, c0=0.0))
    try:
        ctx = MonitorContext(rhs, state, order=1)
    except SimulationError as exc:
        report.add('snapshot', CheckResult(value=float('nan'), threshold=0.0, passed=False, detail=str(exc)))
        logger.warning(f"Compatibility: coefficient snapshot failed: {exc}")
        return report

    dsigma2 = ctx.snap.jet.dsigma2
    taylor = taylor_monitor(dsigma2, grid.boundary, grid.coords, tolerances.c0)
    report.add('taylor', CheckResult(
        value=taylor.minimum, threshold=tolerances.c0 ** 2, passed=not taylor.flagged,
        detail=f'node {taylor.node}',
    ))
    report.add('boundary_frame', _boundary_frame_check(
        dsigma2[grid.boundary], fluid.sigma2[grid.boundary], 0.0, tolerances.gram_floor
    ))

    for prefix, norms in (('fluid', vanishing_fluid(ctx)), ('geometry', vanishing_geometry(ctx))):
        for name, value in worst(norms).items():
            report.add(f'{prefix}_{name}', CheckResult(value=value, threshold=vanishing_tol, passed=value <= vanishing_tol))

    if report.failures:
        logger.warning(f"Compatibility checks failed: {', '.join(report.failures)}")
    else:
        logger.info("Initial state passed every compatibility check")
    return report
