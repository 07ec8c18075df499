"""
Refinement harness: observed convergence orders of monitor quantities.

For errors ε_h at resolutions h₁ > h₂ > ... the observed order between two
levels is log(ε_a/ε_b) / log(h_a/h_b).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

logger = logging.getLogger(__name__)

# below this level a quantity is treated as converged to round-off
ROUNDOFF = 1e-13


def observed_order(err_coarse: float, err_fine: float, h_coarse: float, h_fine: float) -> float:
    """log(ε_c/ε_f)/log(h_c/h_f); inf when the fine error is at round-off."""
    if err_fine <= ROUNDOFF:
        return math.inf
    if err_coarse <= 0.0:
        return math.nan
    return math.log(err_coarse / err_fine) / math.log(h_coarse / h_fine)


@dataclass
class ConvergenceTable:
    """
    :ivar spacings: grid spacing per level, coarsest first
    :ivar errors: quantity → error per level
    :ivar orders: quantity → observed order between consecutive levels
    """
    spacings: List[float]
    errors: Dict[str, List[float]] = field(default_factory=dict)
    orders: Dict[str, List[float]] = field(default_factory=dict)

    def min_order(self, name: str) -> float:
        values = [o for o in self.orders.get(name, []) if not math.isnan(o)]
        return min(values) if values else math.nan

    def rows(self) -> List[Dict[str, float]]:
        out = []
        for level, h in enumerate(self.spacings):
            row = {'level': level, 'h': h}
            for name, errs in self.errors.items():
                row[name] = errs[level]
                if level > 0:
                    row[f'{name}_order'] = self.orders[name][level - 1]
            out.append(row)
        return out

    def to_dict(self) -> Dict[str, object]:
        return {'spacings': self.spacings, 'errors': self.errors, 'orders': self.orders}


def convergence_table(spacings: Sequence[float], errors: Dict[str, Sequence[float]]) -> ConvergenceTable:
    """
    :param spacings: h per level, coarsest first
    :param errors: quantity → error per level (same length as spacings)
    """
    table = ConvergenceTable(spacings=list(spacings))
    for name, errs in errors.items():
        errs = [float(e) for e in errs]
        if len(errs) != len(spacings):
            raise ValueError(f"Quantity {name} has {len(errs)} levels, expected {len(spacings)}")
        table.errors[name] = errs
        table.orders[name] = [
            observed_order(errs[i], errs[i + 1], spacings[i], spacings[i + 1]) for i in range(len(errs) - 1)
        ]
    return table


def refinement_levels(nr: int, levels: int) -> List[int]:
    """Radial resolutions doubling from ``nr``."""
    return [nr * 2 ** k for k in range(levels)]


# slowest convergence accepted for an initial vanishing quantity above tolerance
MIN_COMPATIBLE_ORDER = 0.5


def diverging_quantities(table: ConvergenceTable, tol: float, min_order: float = MIN_COMPATIBLE_ORDER) -> List[str]:
    """
    Quantities whose finest error is above ``tol`` and whose observed order
    between the two finest levels is below ``min_order`` (or undefined).
    """
    out = []
    for name, errs in table.errors.items():
        if errs[-1] <= tol or len(errs) < 2:
            continue
        order = table.orders[name][-1]
        if math.isnan(order) or order < min_order:
            out.append(name)
    return out
