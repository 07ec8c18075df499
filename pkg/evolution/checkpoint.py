"""
Checkpoints of the evolution state in the binary field container.
"""
import logging
from pathlib import Path

import numpy as np

from core.error_handler import ContainerFormatError
from evolution.state import EvolutionState, ExteriorAnchors
from frames.fields import ConnectionField, CurvatureState, FluidState, FrameField
from grid.domain import DomainGrid
from initial_data.container import Container, PathLike, read_container, write_container

logger = logging.getLogger(__name__)

KIND = 'evolution-state'


def save_checkpoint(path: PathLike, state: EvolutionState, grid: DomainGrid) -> Path:
    arrays = dict(state.fields())
    arrays['riemann'] = state.curv.riemann
    arrays['coupling'] = state.coupling
    arrays['t'] = np.array([state.t])
    if state.frame.che is not None:
        arrays['che'] = state.frame.che
    arrays.update(state.anchors.arrays())
    metadata = {'kind': KIND, 'mode': state.mode, 't': state.t}
    path = write_container(
        path, Container(arrays=arrays, dim=grid.dim, nr=grid.nr, order=grid.order, metadata=metadata)
    )
    logger.info(f"Checkpoint written to {path} at t={state.t:.6g}")
    return path


def load_checkpoint(path: PathLike, grid: DomainGrid) -> EvolutionState:
    """
    Restore a state written by :func:`save_checkpoint`; the restart is
    bitwise on the same build.

    :raises ContainerFormatError: wrong kind or a grid mismatch
    """
    container = read_container(path)
    if container.metadata.get('kind') != KIND:
        raise ContainerFormatError(
            "Container does not hold an evolution state",
            context={'path': str(path), 'kind': container.metadata.get('kind')}
        )
    a = container.arrays
    if (container.dim, container.nr, container.order) != (grid.dim, grid.nr, grid.order) \
            or a['e'].shape[0] != grid.n_nodes:
        raise ContainerFormatError(
            "Checkpoint was written on a different grid",
            context={'path': str(path), 'dim': container.dim, 'nr': container.nr, 'order': container.order}
        )
    return EvolutionState(
        t=float(a['t'][0]),
        frame=FrameField(e=a['e'], che=a.get('che')),
        conn=ConnectionField(gamma=a['gamma']),
        fluid=FluidState(
            theta=a['theta'], sigma2=a['sigma2'], lam=a['lam'],
            theta_t=a['theta_t'], lambda_t=a['lambda_t'],
        ),
        curv=CurvatureState(w=a['w'], riemann=a['riemann']),
        coupling=a['coupling'],
        mode=container.metadata['mode'],
        anchors=ExteriorAnchors.from_arrays(a),
    )
