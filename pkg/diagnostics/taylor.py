"""
Taylor sign monitor: a² = ∇_μσ²∇^μσ² on the fluid boundary.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from evolution.boundary import taylor_coefficient

logger = logging.getLogger(__name__)


@dataclass
class TaylorReport:
    """
    :ivar minimum: smallest a² over the boundary nodes
    :ivar node: grid index of the minimum
    :ivar location: coordinates of the minimum
    :ivar flagged: True when the minimum lies below c0²
    """
    minimum: float
    node: int
    location: List[float] = field(default_factory=list)
    flagged: bool = False


def taylor_monitor(dsigma2: np.ndarray, boundary: np.ndarray, coords: np.ndarray, c0: float) -> TaylorReport:
    """
    :param dsigma2: D_Iσ² at every node, (N, 4)
    :param boundary: boundary mask, (N,)
    :param coords: node coordinates, (N, 3)
    :param c0: Taylor threshold
    """
    nodes = np.flatnonzero(boundary)
    if nodes.size == 0:
        return TaylorReport(minimum=float('nan'), node=-1, flagged=True)
    a2 = taylor_coefficient(dsigma2[nodes])
    low = int(np.argmin(a2))
    node = int(nodes[low])
    minimum = float(a2[low])
    flagged = minimum < c0 ** 2 or (c0 == 0.0 and minimum <= 0.0)
    if flagged:
        logger.warning(f"Taylor sign coefficient {minimum:.6g} below threshold {c0 ** 2:.6g} at node {node}")
    return TaylorReport(minimum=minimum, node=node, location=coords[node].tolist(), flagged=flagged)


def state_taylor_monitor(ctx, c0: float) -> TaylorReport:
    """Taylor monitor of a monitor context."""
    grid = ctx.grid
    return taylor_monitor(ctx.snap.jet.dsigma2, grid.boundary, grid.coords, c0)
