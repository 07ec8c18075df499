"""Time evolution of the coupled frame system."""
from evolution.state import EvolutionState, ExteriorAnchors, StateLayout
from evolution.stepper import Stepper

__all__ = ['EvolutionState', 'ExteriorAnchors', 'StateLayout', 'Stepper']
