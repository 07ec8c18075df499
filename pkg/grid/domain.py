"""
Lagrangian domain: a uniform Cartesian product grid over [−L, L]^d that
contains the fluid body Ω₀ = {|x| < 1}, the vacuum shell up to the far
field, and a pinned band at the outer edge.

Inactive axes (d < 3) are symmetry directions along which every field is
constant; d = 1 is the planar slab.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from grid.stencils import axis_operator, restrict_rows

logger = logging.getLogger(__name__)

FLUID = 'fluid'
VACUUM = 'vacuum'
SIGMA = 'sigma'


def smooth_step(rho: np.ndarray) -> np.ndarray:
    """C^∞ transition: 1 for ρ ≤ 0, 0 for ρ ≥ 1."""
    rho = np.clip(rho, 0.0, 1.0)

    def bump(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    left = bump(1.0 - rho)
    right = bump(rho)
    return left / (left + right)


@dataclass
class DomainGrid:
    """
    Node sets, quadrature and stencil operators of the product domain.

    Arrays with a node axis use the C-order flattening of ``shape``.
    """
    dim: int
    nr: int
    h: float
    half_width: float
    order: int
    band_width: float
    shape: Tuple[int, ...]
    coords: np.ndarray
    fluid: np.ndarray
    boundary: np.ndarray
    interior: np.ndarray
    exterior: np.ndarray
    band: np.ndarray
    operators: Dict[Tuple[str, str, int], sp.csr_matrix] = field(repr=False)
    straddled: int = 0
    tol: float = 1e-9
    _tree: Optional[cKDTree] = field(default=None, repr=False)
    _row_sums: Dict[Tuple[str, str, int], np.ndarray] = field(default_factory=dict, repr=False)

    @classmethod
    def build(
        cls,
        nr: int = 16,
        dim: int = 1,
        r_far: float = 1.5,
        band_width: float = 0.125,
        order: int = 4,
        allow_straddle_fallback: bool = False
    ) -> 'DomainGrid':
        """
        Build the grid and its stencil tables.

        :param nr: nodes per unit length (h = 1/nr)
        :param dim: number of active axes, 1 to 3
        :param r_far: far-field cutoff, rounded up to a node
        :param band_width: width of the pinned outer band
        :param order: stencil accuracy order p (even)
        :param allow_straddle_fallback: permit full-line stencils where a
            staircase leaves isolated nodes
        """
        if dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if order % 2 or order < 2:
            raise ValueError("order must be an even integer ≥ 2")
        if r_far <= 1.0:
            raise ValueError("r_far must exceed the fluid radius 1")

        h = 1.0 / nr
        cells = int(math.ceil(r_far * nr - 1e-9))
        half_width = cells * h
        axis = np.arange(-cells, cells + 1) * h
        shape = (axis.size,) * dim
        mesh = np.meshgrid(*([axis] * dim), indexing='ij')
        coords = np.zeros((axis.size ** dim, 3))
        for k in range(dim):
            coords[:, k] = mesh[k].reshape(-1)

        tol = 1e-9
        radius = np.linalg.norm(coords, axis=1)
        fluid = radius <= 1.0 + tol
        exterior = ~fluid

        boundary = np.zeros_like(fluid)
        fluid_grid = fluid.reshape(shape)
        for k in range(dim):
            for step in (-1, 1):
                shifted = np.roll(fluid_grid, step, axis=k)
                edge = np.zeros(shape, dtype=bool)
                sl = [slice(None)] * dim
                sl[k] = 0 if step == 1 else -1
                edge[tuple(sl)] = True
                neighbour_exterior = (~shifted) & ~edge
                boundary |= (fluid_grid & neighbour_exterior).reshape(-1)
        interior = fluid & ~boundary

        band = np.max(np.abs(coords[:, :dim]), axis=1) >= half_width - band_width - tol

        vacuum_region = (exterior | boundary).reshape(shape)
        operators = {}
        straddled = 0
        for k in range(dim):
            for deriv, kind in ((1, 'd1'), (2, 'd2')):
                fluid_op, s1 = axis_operator(shape, k, fluid_grid, deriv, order, h, allow_straddle_fallback)
                vac_op, s2 = axis_operator(shape, k, vacuum_region, deriv, order, h, allow_straddle_fallback)
                straddled += s1 + s2
                operators[(FLUID, kind, k)] = fluid_op
                operators[(VACUUM, kind, k)] = vac_op
                operators[(SIGMA, kind, k)] = (
                    restrict_rows(fluid_op, fluid) + restrict_rows(vac_op, exterior)
                ).tocsr()

        grid = cls(
            dim=dim, nr=nr, h=h, half_width=half_width, order=order, band_width=band_width,
            shape=shape, coords=coords, fluid=fluid, boundary=boundary, interior=interior,
            exterior=exterior, band=band, operators=operators, straddled=straddled, tol=tol,
        )
        logger.info(
            f"Built {dim}D grid: {grid.n_nodes} nodes, h={h:.4g}, L={half_width:.4g}, "
            f"{int(boundary.sum())} boundary nodes, order {order}"
        )
        return grid

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.coords, axis=1)

    def region_mask(self, region: str) -> np.ndarray:
        if region == FLUID:
            return self.fluid
        if region == VACUUM:
            return self.exterior | self.boundary
        return np.ones(self.n_nodes, dtype=bool)

    def d1(self, values: np.ndarray, axis: int, region: str = SIGMA) -> np.ndarray:
        """First derivative along a coordinate axis (zero along symmetry axes)."""
        if axis >= self.dim:
            return np.zeros_like(values)
        return self._apply((region, 'd1', axis), values)

    def d2(self, values: np.ndarray, axis_i: int, axis_j: int, region: str = SIGMA) -> np.ndarray:
        """Second derivative; mixed derivatives are products of first-derivative operators."""
        if axis_i >= self.dim or axis_j >= self.dim:
            return np.zeros_like(values)
        if axis_i == axis_j:
            return self._apply((region, 'd2', axis_i), values)
        inner = self._apply((region, 'd1', axis_j), values)
        return self._apply((region, 'd1', axis_i), inner)

    def gradient(self, values: np.ndarray, region: str = SIGMA) -> np.ndarray:
        """∂_i u for i = 1, 2, 3 stacked on a new axis after the node axis."""
        return np.stack([self.d1(values, k, region) for k in range(3)], axis=1)

    def hessian(self, values: np.ndarray, region: str = SIGMA) -> np.ndarray:
        """∂_i∂_j u, symmetric in (i, j), stacked after the node axis."""
        out = np.zeros((values.shape[0], 3, 3) + values.shape[1:], dtype=values.dtype)
        for i in range(self.dim):
            for j in range(i, self.dim):
                block = self.d2(values, i, j, region)
                out[:, i, j] = block
                out[:, j, i] = block
        return out

    def row_sums(self, key: Tuple[str, str, int]) -> np.ndarray:
        """Operator applied to the unit constant, taken through the same product as the fields."""
        cached = self._row_sums.get(key)
        if cached is None:
            matrix = self.operators[key]
            cached = np.asarray(matrix @ np.ones((matrix.shape[1], 1)))[:, 0]
            self._row_sums[key] = cached
        return cached

    def _apply(self, key: Tuple[str, str, int], values: np.ndarray) -> np.ndarray:
        matrix = self.operators[key]
        rows = self.row_sums(key)[:, None]
        flat = values.reshape(values.shape[0], -1)
        if np.iscomplexobj(flat):
            real, imag = flat.real, flat.imag
            result = (matrix @ real - rows * real) + 1j * (matrix @ imag - rows * imag)
        else:
            result = matrix @ flat - rows * flat
        return np.asarray(result).reshape(values.shape)

    # quadrature

    def volume_weights(self, region: str = FLUID) -> np.ndarray:
        """
        Nodal trapezoid weights. In the fluid, boundary nodes carry half
        weight; on the whole slice the outer faces carry half weight per axis.
        """
        cell = self.h ** self.dim
        if region == FLUID:
            weights = np.where(self.fluid, cell, 0.0)
            weights[self.boundary] *= 0.5
            return weights
        weights = np.full(self.n_nodes, cell)
        for k in range(self.dim):
            edge = np.isclose(np.abs(self.coords[:, k]), self.half_width)
            weights[edge] *= 0.5
        return weights

    def boundary_weights(self) -> np.ndarray:
        """Surface measure per boundary node (counting measure in 1D)."""
        count = int(self.boundary.sum())
        if self.dim == 1:
            area = float(count)
        elif self.dim == 2:
            area = 2.0 * np.pi
        else:
            area = 4.0 * np.pi
        weights = np.zeros(self.n_nodes)
        weights[self.boundary] = area / max(count, 1)
        return weights

    def outer_edge(self) -> np.ndarray:
        """Nodes on the outer faces of the box."""
        edge = np.zeros(self.n_nodes, dtype=bool)
        for k in range(self.dim):
            edge |= np.isclose(np.abs(self.coords[:, k]), self.half_width)
        return edge

    def outer_normal(self) -> np.ndarray:
        """Outward coordinate normal of the box faces, (N, 3)."""
        normal = np.zeros((self.n_nodes, 3))
        for k in range(self.dim):
            on_face = np.isclose(np.abs(self.coords[:, k]), self.half_width)
            normal[on_face, k] = np.sign(self.coords[on_face, k])
        return normal

    # geometry of the fluid surface

    def normal_covector(self) -> np.ndarray:
        """
        Coordinate covector dψ of ψ = |x|: dx¹ in 1D (up to the sign of x,
        which is irrelevant for the adapted frame), radial otherwise.
        """
        covector = np.zeros((self.n_nodes, 3))
        if self.dim == 1:
            covector[:, 0] = 1.0
            return covector
        radius = self.radius
        safe = radius > self.tol
        covector[safe] = self.coords[safe] / radius[safe, None]
        covector[~safe, 0] = 1.0
        return covector

    def flux_normal(self) -> np.ndarray:
        """Outward unit coordinate normal of the fluid surface at every node."""
        radius = self.radius
        normal = np.zeros((self.n_nodes, 3))
        safe = radius > self.tol
        normal[safe] = self.coords[safe] / radius[safe, None]
        return normal

    def nearest_boundary(self) -> np.ndarray:
        """Index of the closest boundary node for every node."""
        if self._tree is None:
            self._tree = cKDTree(self.coords[self.boundary])
        _, idx = self._tree.query(self.coords)
        return np.flatnonzero(self.boundary)[idx]

    def transition(self) -> np.ndarray:
        """χ: 1 on the fluid, smoothly 0 at the inner edge of the band."""
        outer = self.half_width - self.band_width
        rho = (self.radius - 1.0) / max(outer - 1.0, self.h)
        return smooth_step(rho)
