from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class Signature:
    """
    Frame signature: ε₀ = −1, ε_Ĩ = +1. All frame indices are raised and
    lowered with these signs only.
    """
    epsilon: Tuple[float, float, float, float] = (-1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        eps = np.asarray(self.epsilon, dtype=float)
        if eps.shape != (4,) or not np.all(np.abs(eps) == 1.0):
            raise ValueError("Signature needs four entries of ±1")
        if np.count_nonzero(eps < 0) != 1 or eps[0] >= 0:
            raise ValueError("Signature must have exactly one negative entry, at index 0")

    @property
    def eps(self) -> np.ndarray:
        return np.asarray(self.epsilon, dtype=float)

    @property
    def minkowski(self) -> np.ndarray:
        return np.diag(self.eps)


SIGNATURE = Signature()
EPS = SIGNATURE.eps
MINKOWSKI = SIGNATURE.minkowski

# ordered pairs (A, B) with A < B in {0, 1, 2}; W is stored per pair in this order
PAIRS = ((0, 1), (0, 2), (1, 2))

# spatial Levi-Civita symbol ε_{abc}, a, b, c in {0, 1, 2} standing for 1, 2, 3
LEVI3 = np.zeros((3, 3, 3))
LEVI3[0, 1, 2] = LEVI3[1, 2, 0] = LEVI3[2, 0, 1] = 1.0
LEVI3[0, 2, 1] = LEVI3[2, 1, 0] = LEVI3[1, 0, 2] = -1.0


def lower(vec: np.ndarray) -> np.ndarray:
    """Lower the last (frame) index of ``vec`` with ε."""
    return vec * EPS


def inner(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Frame inner product Σ ε_I u^I v^I over the last axis."""
    return np.einsum('...i,i,...i->...', u, EPS, v)


def levi4() -> np.ndarray:
    """Totally antisymmetric symbol with ε^{0123} = +1."""
    out = np.zeros((4, 4, 4, 4))
    for perm in _permutations4():
        out[perm] = _parity(perm)
    return out


def _permutations4():
    from itertools import permutations
    return permutations(range(4))


def _parity(perm) -> float:
    perm = list(perm)
    sign = 1.0
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign
