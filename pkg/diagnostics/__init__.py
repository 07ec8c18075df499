"""Monitors of the evolution: energies, balances, vanishing quantities, Taylor sign, div-curl residuals."""
from diagnostics.context import MonitorContext
from diagnostics.energy import EnergyAccumulator, energies, energy
from diagnostics.identities import identity_audit
from diagnostics.refinement import convergence_table
from diagnostics.report import MonitorReport, MonitorSuite
from diagnostics.taylor import taylor_monitor
from diagnostics.vanishing import vanishing_fluid, vanishing_geometry

__all__ = [
    'EnergyAccumulator',
    'MonitorContext',
    'MonitorReport',
    'MonitorSuite',
    'convergence_table',
    'energies',
    'energy',
    'identity_audit',
    'taylor_monitor',
    'vanishing_fluid',
    'vanishing_geometry',
]
