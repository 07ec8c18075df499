"""
Monitor evaluation at the run cadence.

:class:`MonitorSuite` owns the time-accumulated pieces (energy sup and
boundary integrals, energy-balance trackers) and turns each monitored
state into a :class:`MonitorReport`. Evaluation works on copies, so the
evolving state is never touched.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from curvature.maxwell import spectral_floor
from diagnostics.balance import (
    BalanceTracker,
    curvature_energy_balance,
    lambda_multiplier_balance,
    theta_energy_balance,
)
from diagnostics.context import MonitorContext
from diagnostics.divcurl import divcurl_norms
from diagnostics.energy import EnergyAccumulator, energies
from diagnostics.taylor import state_taylor_monitor
from diagnostics.vanishing import vanishing_fluid, vanishing_geometry, worst
from evolution.state import EvolutionState
from fluid.operators import spatial_metric_positivity

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1


@dataclass
class MonitorReport:
    """
    One monitor record. New monitors are appended as new fields; existing
    names never change.
    """
    t: float
    step: int
    energies: List[Dict[str, float]]
    energy_totals: Dict[str, List[float]]
    balances: Dict[str, Dict[str, float]]
    multiplier_alpha: float
    vanishing_fluid: Dict[str, Any]
    vanishing_geometry: Dict[str, Any]
    taylor_min: float
    taylor_node: int
    taylor_flagged: bool
    kappa: float
    spatial_positivity: float
    divcurl: Dict[str, Dict[str, float]]
    cfl: float
    flags: List[str] = field(default_factory=list)
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)

    def scalars(self) -> Dict[str, float]:
        """Flat scalar projection used for tables and plots."""
        out: Dict[str, float] = {'t': self.t, 'step': self.step}
        for summands in self.energies:
            out[f"E{summands['order']}"] = summands['instantaneous']
        for name, values in self.energy_totals.items():
            for k, value in enumerate(values):
                out[f'energy_total_{name}_{k}'] = value
        for name, terms in self.balances.items():
            out[f'balance_{name}_residual'] = terms['residual']
        for name, value in worst(self.vanishing_fluid).items():
            out[f'fluid_{name}'] = value
        for name, value in worst(self.vanishing_geometry).items():
            out[f'geometry_{name}'] = value
        out['taylor_min'] = self.taylor_min
        out['kappa'] = self.kappa
        out['spatial_positivity'] = self.spatial_positivity
        for name, sides in self.divcurl.items():
            out[f'divcurl_{name}'] = max(sides.values()) if sides else 0.0
        out['cfl'] = self.cfl
        return out


def _nonfinite_fields(record: Dict[str, float]) -> List[str]:
    return [name for name, value in record.items() if isinstance(value, float) and not math.isfinite(value)]


class MonitorSuite:
    """
    :param rhs: right-hand side of the run
    :param diagnostics: diagnostics configuration (energy_order,
        multiplier_margin)
    :param c0: Taylor threshold
    """

    def __init__(self, rhs, diagnostics, c0: float):
        self.rhs = rhs
        self.cfg = diagnostics
        self.c0 = c0
        self.order = diagnostics.energy_order
        self.energy = EnergyAccumulator(order=self.order)
        self.balances = {
            'theta': BalanceTracker('theta'),
            'lambda': BalanceTracker('lambda'),
            'curvature': BalanceTracker('curvature'),
        }
        self.reports: List[MonitorReport] = []

    def evaluate(self, state: EvolutionState, step: int = 0, cfl: Optional[float] = None) -> MonitorReport:
        ctx = MonitorContext(self.rhs, state, self.order)
        margin = self.cfg.multiplier_margin

        summands = energies(ctx, self.order, margin)
        self.energy.add(state.t, summands)

        self.balances['theta'].add(state.t, theta_energy_balance(ctx))
        lam_terms, alpha = lambda_multiplier_balance(ctx, margin)
        self.balances['lambda'].add(state.t, lam_terms)
        self.balances['curvature'].add(state.t, curvature_energy_balance(ctx))

        taylor = state_taylor_monitor(ctx, self.c0)
        kappa = spectral_floor(ctx.geo.che)

        report = MonitorReport(
            t=state.t,
            step=step,
            energies=[s.to_dict() for s in summands],
            energy_totals=self.energy.totals(),
            balances={name: tracker.summary() for name, tracker in self.balances.items()},
            multiplier_alpha=alpha,
            vanishing_fluid=vanishing_fluid(ctx),
            vanishing_geometry=vanishing_geometry(ctx),
            taylor_min=taylor.minimum,
            taylor_node=taylor.node,
            taylor_flagged=taylor.flagged,
            kappa=float(np.min(kappa)) if kappa.size else float('nan'),
            spatial_positivity=float(np.min(spatial_metric_positivity(ctx.snap.ginv))),
            divcurl=divcurl_norms(ctx),
            cfl=float('nan') if cfl is None else float(cfl),
        )
        if taylor.flagged:
            report.flags.append('taylor')
        if report.spatial_positivity <= 0.0:
            report.flags.append('spatial_positivity')
        bad = [name for name in _nonfinite_fields(report.scalars()) if name != 'cfl' or cfl is not None]
        if bad:
            report.flags.append('nonfinite:' + ','.join(bad))
        self.reports.append(report)
        logger.debug(f"Monitors at t={state.t:.6g}: E0={summands[0].instantaneous:.6g}, taylor_min={taylor.minimum:.6g}")
        return report
