"""Round loop of the game, compiled when available.

``simulate`` dispatches to the Cython extension ``mgkit._ckernel`` unless it
failed to build or ``MGKIT_PURE_PYTHON=1`` is set; the numpy fallback below
consumes the random stream in exactly the same order, so both backends give
bit-identical traces.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

HAVE_EXTENSION = _ckernel is not None
DEFAULT_BACKEND = "c" if HAVE_EXTENSION and os.environ.get("MGKIT_PURE_PYTHON") != "1" else "python"

STEP, PROPORTIONAL, SCALED = 0, 1, 2


def play_round(agent_index, actions, utilities, scores, mu, payoff_code, scale, N, bitgen):
    """One round in place: updates ``utilities`` and ``scores``.

    Returns ``(A, minority)``.
    """
    u = utilities[agent_index]
    best = u.max(axis=1)
    tied = u == best[:, None]
    ties = tied.sum(axis=1)
    slot = tied.argmax(axis=1)
    rows = np.arange(agent_index.shape[0])
    # a draw is needed only if the tied slots hold different strategies
    first = agent_index[rows, slot]
    mixed = (tied & (agent_index != first[:, None])).any(axis=1)
    multi = np.flatnonzero(mixed)
    if multi.size:
        raws = bitgen.random_raw(multi.size)
        pick = (raws % ties[multi].astype(np.uint64)).astype(np.int64)
        t = tied[multi]
        rank = np.cumsum(t, axis=1) - 1
        slot[multi] = (t & (rank == pick[:, None])).argmax(axis=1)
    chosen = agent_index[rows, slot]
    A = int(actions[chosen, mu].sum(dtype=np.int64))
    if A > 0:
        minority = -1
    elif A < 0:
        minority = 1
    else:
        minority = 1 if int(bitgen.random_raw()) & 1 else -1
    if payoff_code == STEP:
        g = ((A > 0) - (A < 0)) * scale
    elif payoff_code == PROPORTIONAL:
        g = A * scale
    else:
        g = A * scale // N
    if g:
        utilities -= actions[:, mu].astype(np.int64) * g
        scores[mu] += g
    return A, minority


def simulate_python(agent_index, actions, u0, history0, steps, payoff_code, scale, N, bitgen):
    P = actions.shape[1]
    mask = P - 1
    utilities = np.array(u0, dtype=np.int64, copy=True)
    scores = np.zeros(P, dtype=np.int64)
    demand = np.empty(steps, dtype=np.int64)
    minority = np.empty(steps, dtype=np.int8)
    history = np.empty(steps, dtype=np.int64)
    score_trace = np.empty((steps, P), dtype=np.int64)
    mu = int(history0)
    for t in range(steps):
        history[t] = mu
        A, a_star = play_round(agent_index, actions, utilities, scores, mu, payoff_code, scale, N, bitgen)
        demand[t] = A
        minority[t] = a_star
        score_trace[t] = scores
        mu = ((mu << 1) | (a_star > 0)) & mask
    return demand, minority, history, score_trace


def group_agents(agent_index):
    """Distinct ordered strategy rows, each agent's row, and row multiplicities."""
    groups, agent_group, counts = np.unique(agent_index, axis=0, return_inverse=True, return_counts=True)
    return (
        np.ascontiguousarray(groups, dtype=np.int64),
        np.ascontiguousarray(agent_group.reshape(-1), dtype=np.int64),
        np.ascontiguousarray(counts, dtype=np.int64),
    )


def simulate(agent_index, actions, u0, history0, steps, payoff_code, scale, N, bitgen, backend=None):
    """Run ``steps`` rounds.

    Returns ``(demand, minority, history_before, scores_after)``; scores are
    the scaled cumulative payoff sums per history after each round.
    """
    backend = backend or DEFAULT_BACKEND
    if backend == "c":
        if not HAVE_EXTENSION:
            raise RuntimeError("compiled kernel requested but mgkit._ckernel is not built")
        groups, agent_group, group_size = group_agents(agent_index)
        return _ckernel.simulate(
            groups, group_size, agent_group,
            np.ascontiguousarray(actions, dtype=np.int8),
            np.ascontiguousarray(u0, dtype=np.int64),
            int(history0), int(steps), int(payoff_code), int(scale), int(N), bitgen,
        )
    if backend == "python":
        return simulate_python(agent_index, actions, u0, history0, steps, payoff_code, scale, N, bitgen)
    raise ValueError(f"unknown backend {backend!r}")
