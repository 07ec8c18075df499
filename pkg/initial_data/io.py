"""
Reading constraint data and writing initial states through the container
formats.
"""
import logging
from pathlib import Path
from typing import Optional

from core.error_handler import ContainerFormatError
from grid.domain import DomainGrid
from initial_data.constraint_data import ConstraintData
from initial_data.container import Container, PathLike, read_container, read_table, write_container, write_table
from initial_data.pipeline import InitialState

logger = logging.getLogger(__name__)

TABLE_SUFFIXES = ('.txt', '.dat', '.tsv')


def _check_grid(path: Path, dim: int, nr: int, count: int, grid: Optional[DomainGrid]):
    if grid is None:
        return
    if (dim, nr, count) != (grid.dim, grid.nr, grid.n_nodes):
        raise ContainerFormatError(
            "Constraint data were sampled on a different grid",
            context={
                'path': str(path), 'dim': dim, 'nr': nr, 'nodes': count,
                'grid_dim': grid.dim, 'grid_nr': grid.nr, 'grid_nodes': grid.n_nodes,
            }
        )


def load_constraint_data(path: PathLike, grid: Optional[DomainGrid] = None) -> ConstraintData:
    """Load constraint data from a binary container or a text table."""
    path = Path(path)
    if path.suffix in TABLE_SUFFIXES:
        arrays, header = read_table(path)
        dim = int(header.get('dim', grid.dim if grid else 0))
        nr = int(header.get('nr', grid.nr if grid else 0))
    else:
        container = read_container(path)
        arrays, dim, nr = container.arrays, container.dim, container.nr
    missing = {'gbar', 'kk', 'phi0', 'phi1', 'omega0_mask'} - set(arrays)
    if missing:
        raise ContainerFormatError("Constraint data are incomplete", context={'path': str(path), 'missing': sorted(missing)})
    cd = ConstraintData.from_arrays(arrays)
    _check_grid(path, dim, nr, cd.n_nodes, grid)
    logger.info(f"Loaded constraint data from {path} ({cd.n_nodes} nodes)")
    return cd


def save_constraint_data(path: PathLike, cd: ConstraintData, grid: DomainGrid) -> Path:
    path = Path(path)
    if path.suffix in TABLE_SUFFIXES:
        return write_table(path, cd.arrays(), {'dim': grid.dim, 'nr': grid.nr, 'order': grid.order})
    return write_container(path, Container(arrays=cd.arrays(), dim=grid.dim, nr=grid.nr, order=grid.order))


def save_initial_state(path: PathLike, state: InitialState, grid: DomainGrid) -> Path:
    """Write the t = 0 state in the checkpoint layout (t = 0)."""
    arrays = {
        'e': state.frame0.e,
        'gamma': state.conn0.gamma,
        'theta': state.fluid0.theta,
        'sigma2': state.fluid0.sigma2,
        'lam': state.fluid0.lam,
        'theta_t': state.fluid0.theta_t,
        'lambda_t': state.fluid0.lambda_t,
        'w': state.curv0.w,
        'riemann': state.curv0.riemann,
        'coupling': state.coupling,
        'g0': state.g0,
        'dtg': state.dtg,
    }
    metadata = {'t': 0.0, 'mode': state.mode, 'kind': 'initial-state'}
    metadata.update({k: v for k, v in state.metadata.items() if k != 'kind'})
    return write_container(path, Container(arrays=arrays, dim=grid.dim, nr=grid.nr, order=grid.order, metadata=metadata))
