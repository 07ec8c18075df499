"""
Finite-difference stencils on uniform lines, restricted to a region.

Weights come from a Vandermonde solve on arbitrary integer offsets; the
per-axis operators are assembled as scipy.sparse CSR matrices acting on
the flattened node axis. Windows stay inside the contiguous run of
same-region nodes that contains the evaluation point.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from core.error_handler import StencilOutOfDomain

logger = logging.getLogger(__name__)


def fd_weights(offsets: Sequence[int], deriv: int, h: float = 1.0) -> np.ndarray:
    """
    Weights w with Σ_j w_j u(x + s_j h) ≈ u^{(m)}(x).

    Solves A w = e_m with A[k, j] = s_j^k / k!.

    :param offsets: integer offsets s_j
    :param deriv: derivative order m
    :param h: grid spacing
    :return: weights, already divided by h^m
    """
    s = np.asarray(offsets, dtype=float)
    size = len(s)
    if deriv >= size:
        raise ValueError(f"Need more than {deriv} points for derivative order {deriv}")
    mat = np.array([s ** k / math.factorial(k) for k in range(size)])
    rhs = np.zeros(size)
    rhs[deriv] = 1.0
    weights = np.linalg.solve(mat, rhs)
    centre = np.flatnonzero(s == 0.0)
    if deriv >= 1 and centre.size:
        # derivatives of constants vanish exactly
        others = np.arange(size) != centre[0]
        weights[centre[0]] = -np.sum(weights[others])
    return weights / h ** deriv


def contiguous_runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Half-open [start, stop) ranges of consecutive True entries."""
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


@dataclass
class LineStencil:
    offsets: np.ndarray
    weights: np.ndarray
    straddles: bool = False


def line_stencil(
    i: int,
    run: Tuple[int, int],
    line_length: int,
    deriv: int,
    order: int,
    h: float,
    allow_straddle: bool = False
) -> LineStencil:
    """
    Stencil for node ``i`` inside ``run`` on a line of ``line_length`` nodes.

    First derivatives use order+1 points, second derivatives order+1
    centered or order+2 off-centre. Short runs drop to the smallest usable
    width (2 points for first, 3 for second derivatives).
    """
    start, stop = run
    length = stop - start
    half = order // 2
    if deriv == 1:
        width = order + 1
        minimum = 2
    else:
        width = order + 1 if (i - half >= start and i + half < stop) else order + 2
        minimum = 3

    if length < minimum:
        if not allow_straddle:
            raise StencilOutOfDomain(
                "Region run too short for a stencil",
                context={'node': i, 'run': (start, stop), 'deriv': deriv}
            )
        start, stop, length = 0, line_length, line_length
        width = min(width, line_length)
        straddles = True
    else:
        straddles = False
        width = min(width, length)

    lo = min(max(i - width // 2, start), stop - width)
    offsets = np.arange(lo, lo + width) - i
    return LineStencil(offsets=offsets, weights=fd_weights(offsets, deriv, h), straddles=straddles)


def axis_operator(
    shape: Tuple[int, ...],
    axis: int,
    region: np.ndarray,
    deriv: int,
    order: int,
    h: float,
    allow_straddle: bool = False
) -> Tuple[sp.csr_matrix, int]:
    """
    Sparse derivative along ``axis`` for nodes in ``region``.

    Rows of nodes outside the region are empty.

    :param shape: grid shape
    :param axis: derivative axis
    :param region: boolean mask with the grid shape
    :param deriv: 1 or 2
    :param order: nominal accuracy order p (even)
    :param h: spacing
    :param allow_straddle: fall back to full-line stencils for isolated nodes
    :return: (operator, number of straddling rows)
    """
    total = int(np.prod(shape))
    index = np.arange(total).reshape(shape)
    moved_index = np.moveaxis(index, axis, -1).reshape(-1, shape[axis])
    moved_region = np.moveaxis(region, axis, -1).reshape(-1, shape[axis])

    rows, cols, vals = [], [], []
    straddled = 0
    for line_nodes, line_mask in zip(moved_index, moved_region):
        for run in contiguous_runs(line_mask):
            for i in range(run[0], run[1]):
                stencil = line_stencil(i, run, shape[axis], deriv, order, h, allow_straddle)
                straddled += int(stencil.straddles)
                rows.extend([line_nodes[i]] * len(stencil.offsets))
                cols.extend(line_nodes[i + stencil.offsets])
                vals.extend(stencil.weights)

    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(total, total))
    if straddled:
        logger.warning(f"{straddled} stencil rows straddle a region boundary along axis {axis}")
    return matrix, straddled


def restrict_rows(matrix: sp.csr_matrix, rows: np.ndarray) -> sp.csr_matrix:
    """Keep only the rows flagged in ``rows`` (flattened boolean mask)."""
    return sp.diags(rows.astype(float)) @ matrix
