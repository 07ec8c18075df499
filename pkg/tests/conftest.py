import numpy as np
import pytest
from dotenv import load_dotenv

from config.run_config import Tolerances
from evolution.closures import apply_closures
from evolution.state import EvolutionState, ExteriorAnchors, StateLayout
from frames.fields import ConnectionField, CurvatureState, FluidState, FrameField
from grid.domain import DomainGrid


def pytest_configure(config):
    """
    Load the environment for all tests and register the project markers.
    """
    load_dotenv()
    config.addinivalue_line("markers", "unit: fast checks of a single module")
    config.addinivalue_line("markers", "integration: runs that cross several modules")
    config.addinivalue_line("markers", "slow: multi-step evolutions and refinement studies")


@pytest.fixture(scope='session')
def grid_1d():
    """Planar grid: 49 nodes on [-1.5, 1.5], fluid on [-1, 1]."""
    return DomainGrid.build(nr=16, dim=1, r_far=1.5, band_width=0.125, order=4)


@pytest.fixture
def test_fluid_tolerances():
    return Tolerances(c0=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_static_state(grid, tolerances, sigma2=None, mode='test-fluid'):
    """Closed state of the fluid at rest on flat space."""
    n = grid.n_nodes
    fluid = FluidState.at_rest(n)
    if sigma2 is not None:
        fluid.sigma2 = np.asarray(sigma2, dtype=float).copy()
    state = EvolutionState(
        t=0.0,
        frame=FrameField.identity(n),
        conn=ConnectionField.zeros(n),
        fluid=fluid,
        curv=CurvatureState.zeros(n),
        coupling=np.zeros(n),
        mode=mode,
        anchors=ExteriorAnchors.from_fluid(fluid, grid),
    )
    return apply_closures(state, grid, StateLayout(n), tolerances)


@pytest.fixture
def static_state(grid_1d, test_fluid_tolerances):
    return make_static_state(grid_1d, test_fluid_tolerances)
