"""
Time derivatives of state functionals along the evolution.

∂t F(y) is taken as the central difference of F along the right-hand side,

    (F(y + δ ẏ) − F(y − δ ẏ)) / (2δ),   ẏ = rhs(y),

nested for higher orders. The first derivative of the state itself is the
right-hand side. The step shrinks with the nesting depth so that round-off
(≈ ε/δ^m) stays below the truncation error (≈ δ²).
"""
import logging
from typing import Callable, Dict, List

import numpy as np

from core.error_handler import OrderUnavailable
from evolution.rhs import SystemRHS

logger = logging.getLogger(__name__)

DIFFERENCE_STEPS = {1: 1e-6, 2: 1e-4, 3: 1e-3, 4: 3e-3}
MAX_ORDER = max(DIFFERENCE_STEPS)

Functional = Callable[[np.ndarray], np.ndarray]


def flow_derivative(fn: Functional, y: np.ndarray, rhs: SystemRHS, order: int = 1) -> np.ndarray:
    """
    ∂t^order F at the state ``y``.

    :raises OrderUnavailable: order above the supported nesting
    """
    if order == 0:
        return fn(y)
    if order > MAX_ORDER:
        raise OrderUnavailable(
            "Time derivative order is not available",
            context={'order': order, 'max_order': MAX_ORDER}
        )
    delta = DIFFERENCE_STEPS[order]
    return _nested(fn, y, rhs, order, delta)


def _nested(fn: Functional, y: np.ndarray, rhs: SystemRHS, depth: int, delta: float) -> np.ndarray:
    if depth == 0:
        return fn(y)
    ydot = rhs(y)
    plus = _nested(fn, y + delta * ydot, rhs, depth - 1, delta)
    minus = _nested(fn, y - delta * ydot, rhs, depth - 1, delta)
    return (plus - minus) / (2.0 * delta)


class TimeDerivativeStack:
    """
    State vectors ∂t^m y for m = 0..order.

    Level 0 is the state and level 1 the right-hand side; levels ≥ 2 are
    central differences of the right-hand side.

    :param rhs: right-hand side of the run
    :param y: closed state vector
    :param order: highest level kept
    """

    def __init__(self, rhs: SystemRHS, y: np.ndarray, order: int = 1):
        if order > MAX_ORDER:
            raise OrderUnavailable(
                "Requested time-derivative stack is too deep",
                context={'order': order, 'max_order': MAX_ORDER}
            )
        self.rhs = rhs
        self.y = y
        self.order = order
        self.levels: List[np.ndarray] = [y]
        if order >= 1:
            self.levels.append(rhs(y))
        for m in range(2, order + 1):
            self.levels.append(flow_derivative(rhs, y, rhs, m - 1))

    def level(self, m: int) -> Dict[str, np.ndarray]:
        """Fields of ∂t^m y."""
        if m > self.order:
            raise OrderUnavailable(
                "Time derivative is above the stored stack",
                context={'order': m, 'stored': self.order}
            )
        return self.rhs.layout.unpack(self.levels[m])

    def derivative(self, fn: Functional, m: int) -> np.ndarray:
        """∂t^m of a functional of the state."""
        if m > self.order:
            raise OrderUnavailable(
                "Time derivative is above the stored stack",
                context={'order': m, 'stored': self.order}
            )
        return flow_derivative(fn, self.y, self.rhs, m)
