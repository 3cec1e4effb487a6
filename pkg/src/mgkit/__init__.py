"""Minority game simulation and exact analysis of its efficient regime."""

from ._kernel import DEFAULT_BACKEND, HAVE_EXTENSION
from .game import (
    GameConfig,
    GameState,
    Payoff,
    StepRecord,
    active_strategy,
    aggregated_demand,
    minority_action,
    new_game,
    payoff,
    perturbed_initial_utilities,
    run,
    step,
)
from .rng import GameRNG
from .strategies import (
    Strategy,
    assign_strategies,
    enumerate_full_strategy_space,
    hamming_distance,
)
from .trace import Trace

__version__ = "0.1.0"
