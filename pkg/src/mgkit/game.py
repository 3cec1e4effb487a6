"""Minority game engine: greedy agents, aggregated demand, utility updates.

Utilities are kept as exact integers in units of ``1/scale``.  ``scale`` is 1
for the step and proportional payoffs with integer initial utilities; it
absorbs ``N`` for the scaled payoff and the common denominator of any
fractional initial utilities.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import strategies as st
from ._kernel import play_round, simulate
from .rng import GameRNG

DEFAULT_MAX_STEPS = 10**8


class Payoff(str, enum.Enum):
    STEP = "sgn"
    PROPORTIONAL = "x"
    SCALED_PROPORTIONAL = "x-over-n"

    @property
    def code(self) -> int:
        return _PAYOFF_CODES[self]

    def g(self, x, N: int = 1):
        if self is Payoff.STEP:
            return (x > 0) - (x < 0)
        if self is Payoff.PROPORTIONAL:
            return x
        return Fraction(x, N)


_PAYOFF_CODES = {Payoff.STEP: 0, Payoff.PROPORTIONAL: 1, Payoff.SCALED_PROPORTIONAL: 2}


def perturbed_initial_utilities(m: int, order: Sequence[int] | None = None) -> tuple[Fraction, ...]:
    """Distinct fractional initial utilities in ``(0, 1/2]``.

    Utility differences only ever move by even integers under the step and
    proportional payoffs, so these offsets keep every pair of strategies
    apart forever.  ``order`` lists strategy ids from lowest to highest
    utility (default: ascending id).
    """
    K = st.n_strategies(m)
    order = list(range(K)) if order is None else list(order)
    if sorted(order) != list(range(K)):
        raise ValueError("order must be a permutation of all strategy ids")
    u = [Fraction(0)] * K
    for rank, sid in enumerate(order):
        u[sid] = Fraction(rank + 1, 2 * K)
    return tuple(u)


@dataclass(frozen=True)
class GameConfig:
    N: int
    m: int
    S: int = 2
    payoff: Payoff = Payoff.STEP
    steps: int = 1000
    seed: int = 0
    # None means all zero; otherwise one value per strategy id
    initial_utilities: tuple | None = None
    # None means drawn from the seed
    initial_history: int | None = None
    distinct_strategies: bool = False
    max_m: int = st.DEFAULT_MAX_MEMORY
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        object.__setattr__(self, "payoff", Payoff(self.payoff))
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.S < 2:
            raise ValueError(f"S must be >= 2, got {self.S}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        st.check_memory(self.m, self.max_m)
        if self.steps > self.max_steps:
            raise st.ResourceGuardError(f"steps={self.steps} exceeds the guard max_steps={self.max_steps}")
        if self.distinct_strategies and self.S > st.n_strategies(self.m):
            raise ValueError(f"S={self.S} exceeds the {st.n_strategies(self.m)} strategies available for m={self.m}")
        if self.initial_history is not None and not 0 <= self.initial_history < (1 << self.m):
            raise ValueError(f"initial_history {self.initial_history} out of range for m={self.m}")
        if self.initial_utilities is not None:
            u = tuple(Fraction(x) for x in self.initial_utilities)
            if len(u) != st.n_strategies(self.m):
                raise ValueError(f"initial_utilities needs {st.n_strategies(self.m)} entries, got {len(u)}")
            object.__setattr__(self, "initial_utilities", u)

    @property
    def P(self) -> int:
        return 1 << self.m

    def to_dict(self) -> dict:
        d = asdict(self)
        d["payoff"] = self.payoff.value
        if self.initial_utilities is not None:
            d["initial_utilities"] = [str(x) for x in self.initial_utilities]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GameConfig":
        d = dict(d)
        if d.get("initial_utilities") is not None:
            d["initial_utilities"] = tuple(Fraction(x) for x in d["initial_utilities"])
        return cls(**d)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def utility_scale(config: GameConfig) -> int:
    scale = 1
    if config.initial_utilities is not None:
        for x in config.initial_utilities:
            scale = math.lcm(scale, x.denominator)
    if config.payoff is Payoff.SCALED_PROPORTIONAL:
        scale *= config.N
    return scale


# ---------------------------------------------------------------- primitives


def aggregated_demand(actions) -> int:
    return int(np.sum(np.asarray(actions, dtype=np.int64)))


def minority_action(A: int, rng: GameRNG) -> int:
    """``-sgn(A)``; a fair coin from ``rng`` when ``A == 0``."""
    if A > 0:
        return -1
    if A < 0:
        return 1
    return rng.coin()


def active_strategy(agent_strategies: Sequence[int], utilities, rng: GameRNG) -> int:
    """Id of a maximal-utility strategy; ties broken uniformly at random.

    ``utilities`` is indexable by strategy id (sequence or mapping).
    """
    vals = [utilities[s] for s in agent_strategies]
    best = max(vals)
    tied = [s for s, v in zip(agent_strategies, vals) if v == best]
    if len(tied) == 1:
        return tied[0]
    return tied[rng.below(len(tied))]


def payoff(action: int, A: int, g: Payoff, N: int = 1):
    return -action * g.g(A, N)


# ---------------------------------------------------------------- game state


@dataclass
class StepRecord:
    t: int
    demand: int
    minority: int
    history_before: int
    utilities_after: dict  # strategy id -> Fraction, held strategies only


@dataclass
class GameState:
    """Mutable state of one game: history plus utilities of held strategies."""

    config: GameConfig
    rng: GameRNG
    strategies: np.ndarray  # (N, S) strategy ids
    held: np.ndarray  # sorted distinct ids held by the population
    agent_index: np.ndarray  # (N, S) rows of ``held``
    actions: np.ndarray  # (len(held), P) +-1 table
    utilities: np.ndarray  # scaled int64 per held strategy
    scores: np.ndarray  # scaled int64 per history: cumulative g(A) seen there
    history: int
    scale: int
    t: int = 0
    initial_scaled: np.ndarray = field(default=None, repr=False)

    def utility(self, sid: int) -> Fraction:
        """Current utility of any strategy id, held or not."""
        base = 0
        if self.config.initial_utilities is not None:
            base = self.config.initial_utilities[sid] * self.scale
        acts = [st.strategy_action(sid, h, self.config.m) for h in range(self.config.P)]
        val = base - sum(a * int(g) for a, g in zip(acts, self.scores))
        return Fraction(val, self.scale)


def new_game(config: GameConfig) -> GameState:
    rng = GameRNG(config.seed)
    history = config.initial_history
    if history is None:
        history = rng.below(config.P)
    strategies = st.assign_strategies(config.N, config.m, config.S, rng, config.distinct_strategies)
    held, agent_index = np.unique(strategies, return_inverse=True)
    agent_index = agent_index.reshape(strategies.shape).astype(np.int64)
    scale = utility_scale(config)
    if config.initial_utilities is None:
        u0 = np.zeros(len(held), dtype=np.int64)
    else:
        u0 = np.array([int(config.initial_utilities[s] * scale) for s in held], dtype=np.int64)
    return GameState(
        config=config,
        rng=rng,
        strategies=strategies,
        held=held,
        agent_index=np.ascontiguousarray(agent_index),
        actions=st.action_matrix(held, config.m),
        utilities=u0.copy(),
        scores=np.zeros(config.P, dtype=np.int64),
        history=int(history),
        scale=scale,
        initial_scaled=u0,
    )


def step(state: GameState) -> StepRecord:
    """Advance one round and return its record."""
    cfg = state.config
    mu = state.history
    A, minority = play_round(
        state.agent_index, state.actions, state.utilities, state.scores, mu,
        cfg.payoff.code, state.scale, cfg.N, state.rng.bitgen,
    )
    state.history = st.shift_history(mu, minority, cfg.m)
    rec = StepRecord(
        t=state.t,
        demand=A,
        minority=minority,
        history_before=mu,
        utilities_after={int(s): Fraction(int(u), state.scale) for s, u in zip(state.held, state.utilities)},
    )
    state.t += 1
    return rec


def run(config: GameConfig, backend: str | None = None):
    """Play ``config.steps`` rounds and return the full :class:`Trace`."""
    from .trace import Trace

    state = new_game(config)
    demand, minority, history, scores = simulate(
        state.agent_index, state.actions, state.utilities, state.history, config.steps,
        config.payoff.code, state.scale, config.N, state.rng.bitgen, backend=backend,
    )
    return Trace(
        config=config,
        strategies=state.strategies,
        demand=demand,
        minority=minority,
        history=history,
        scores=scores,
        scale=state.scale,
    )
