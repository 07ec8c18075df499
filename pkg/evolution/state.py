"""
Evolution state and its flat vector layout.

The time integrator works on one flat float64 vector; :class:`StateLayout`
maps it to named node fields. The I = 0 rows of e and Γ and the exterior
fluid variables travel in the vector but are overwritten by the closures
after every stage.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from frames.fields import ConnectionField, CurvatureState, FluidState, FrameField
from grid.domain import DomainGrid

logger = logging.getLogger(__name__)

FIELDS: Tuple[Tuple[str, Tuple[int, ...]], ...] = (
    ('e', (4, 4)),
    ('gamma', (4, 4, 4)),
    ('theta', (4,)),
    ('theta_t', (4,)),
    ('sigma2', ()),
    ('lam', ()),
    ('lambda_t', ()),
    ('w', (3, 6)),
)


class StateLayout:
    """Offsets of the named node fields inside the flat state vector."""

    def __init__(self, n_nodes: int):
        self.n_nodes = n_nodes
        self.shapes: Dict[str, Tuple[int, ...]] = {}
        self.slices: Dict[str, slice] = {}
        offset = 0
        for name, trailing in FIELDS:
            shape = (n_nodes,) + trailing
            size = int(np.prod(shape))
            self.shapes[name] = shape
            self.slices[name] = slice(offset, offset + size)
            offset += size
        self.size = offset

    def pack(self, fields: Dict[str, np.ndarray]) -> np.ndarray:
        y = np.empty(self.size)
        for name, sl in self.slices.items():
            y[sl] = np.asarray(fields[name], dtype=float).reshape(-1)
        return y

    def unpack(self, y: np.ndarray) -> Dict[str, np.ndarray]:
        """Views into ``y``; writing through them writes ``y``."""
        return {name: y[sl].reshape(self.shapes[name]) for name, sl in self.slices.items()}

    def zeros(self) -> Dict[str, np.ndarray]:
        return self.unpack(np.zeros(self.size))


@dataclass
class ExteriorAnchors:
    """
    Data of the anchored exterior velocity extension.

    :ivar theta_hat0: Θ̂ of the initial data, (N, 4)
    :ivar boundary0: Θ̂(0) at the nearest boundary node, (N, 4)
    :ivar nearest: nearest boundary node of every node, (N,)
    :ivar chi: transition function, 1 on the fluid and 0 on the band, (N,)
    """
    theta_hat0: np.ndarray
    boundary0: np.ndarray
    nearest: np.ndarray
    chi: np.ndarray

    @classmethod
    def from_fluid(cls, fluid: FluidState, grid: DomainGrid) -> 'ExteriorAnchors':
        theta_hat = fluid.theta_hat()
        nearest = grid.nearest_boundary()
        return cls(
            theta_hat0=theta_hat.copy(),
            boundary0=theta_hat[nearest].copy(),
            nearest=nearest,
            chi=grid.transition(),
        )

    def arrays(self) -> Dict[str, np.ndarray]:
        return {
            'anchor_theta_hat0': self.theta_hat0,
            'anchor_boundary0': self.boundary0,
            'anchor_nearest': self.nearest,
            'anchor_chi': self.chi,
        }

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> 'ExteriorAnchors':
        return cls(
            theta_hat0=arrays['anchor_theta_hat0'],
            boundary0=arrays['anchor_boundary0'],
            nearest=arrays['anchor_nearest'].astype(np.int64),
            chi=arrays['anchor_chi'],
        )


@dataclass
class EvolutionState:
    """
    :ivar t: time
    :ivar frame: e_I^μ, with ě_I^μ attached after the closures
    :ivar conn: Γ_{IJ}^K
    :ivar fluid: Θ, ∂tΘ, σ², Λ, ∂tΛ
    :ivar curv: W in the checked frame and the recovered e-frame Riemann tensor
    :ivar coupling: Ricci coupling per node (fluid mask of a coupled run)
    :ivar mode: 'test-fluid' or 'coupled'
    :ivar anchors: exterior extension data fixed at t = 0
    """
    t: float
    frame: FrameField
    conn: ConnectionField
    fluid: FluidState
    curv: CurvatureState
    coupling: np.ndarray
    mode: str
    anchors: ExteriorAnchors
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.frame.e.shape[0]

    @property
    def coupled(self) -> bool:
        return self.mode == 'coupled'

    def fields(self) -> Dict[str, np.ndarray]:
        return {
            'e': self.frame.e,
            'gamma': self.conn.gamma,
            'theta': self.fluid.theta,
            'theta_t': self.fluid.theta_t,
            'sigma2': self.fluid.sigma2,
            'lam': self.fluid.lam,
            'lambda_t': self.fluid.lambda_t,
            'w': self.curv.w,
        }

    def pack(self, layout: StateLayout) -> np.ndarray:
        return layout.pack(self.fields())

    def with_vector(
        self,
        y: np.ndarray,
        layout: StateLayout,
        t: float,
        riemann: np.ndarray = None,
        che: np.ndarray = None
    ) -> 'EvolutionState':
        """New state holding copies of the fields in ``y``."""
        f = {name: value.copy() for name, value in layout.unpack(y).items()}
        return EvolutionState(
            t=t,
            frame=FrameField(e=f['e'], che=None if che is None else che.copy()),
            conn=ConnectionField(gamma=f['gamma']),
            fluid=FluidState(
                theta=f['theta'], sigma2=f['sigma2'], lam=f['lam'],
                theta_t=f['theta_t'], lambda_t=f['lambda_t'],
            ),
            curv=CurvatureState(
                w=f['w'],
                riemann=self.curv.riemann.copy() if riemann is None else riemann.copy(),
            ),
            coupling=self.coupling,
            mode=self.mode,
            anchors=self.anchors,
            metadata=dict(self.metadata),
        )

    def copy(self) -> 'EvolutionState':
        return EvolutionState(
            t=self.t,
            frame=self.frame.copy(),
            conn=self.conn.copy(),
            fluid=self.fluid.copy(),
            curv=self.curv.copy(),
            coupling=self.coupling.copy(),
            mode=self.mode,
            anchors=self.anchors,
            metadata=dict(self.metadata),
        )

    @classmethod
    def from_initial(cls, initial, grid: DomainGrid) -> 'EvolutionState':
        """
        Start from an assembled initial state (anything with frame0, conn0,
        fluid0, curv0, coupling and mode).
        """
        frame = initial.frame0.copy()
        state = cls(
            t=0.0,
            frame=frame,
            conn=initial.conn0.copy(),
            fluid=initial.fluid0.copy(),
            curv=initial.curv0.copy(),
            coupling=np.asarray(initial.coupling, dtype=float).copy(),
            mode=initial.mode,
            anchors=ExteriorAnchors.from_fluid(initial.fluid0, grid),
            metadata=dict(getattr(initial, 'metadata', {}) or {}),
        )
        logger.debug(f"Evolution state created on {state.n_nodes} nodes in {state.mode} mode")
        return state
