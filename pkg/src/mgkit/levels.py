"""Closed-form level statistics of the full strategy space.

Agents draw their ``S`` strategies independently and uniformly from all
``2**P`` tables, and the active strategy is the best one held.  If the
strategies are grouped into utility levels ``u_1 > u_2 > ...`` with counts
``c_1, c_2, ...``, the probability that an agent's active strategy sits on
level ``l`` is::

    (1 - T_{l-1} / 2**P) ** S - (1 - T_l / 2**P) ** S,    T_l = c_1 + ... + c_l

Every function here returns exact :class:`~fractions.Fraction` values.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .strategies import check_memory, n_histories, n_strategies, strategy_action


def extremal_levels(m: int) -> list[int]:
    """Utility levels ``2**m, 2**m - 2, ..., -2**m`` at the first extremal time."""
    top = n_histories(m)
    return list(range(top, -top - 1, -2))


def _check_level(m: int, l: int) -> None:
    if not 1 <= l <= n_histories(m) + 1:
        raise ValueError(f"level index l={l} out of range 1..{n_histories(m) + 1} for m={m}")


def level_count(m: int, l: int) -> int:
    """Strategies on level ``l`` (1-based from the top) at the first extremal time."""
    _check_level(m, l)
    return comb(n_histories(m), l - 1)


def tail_count(m: int, l: int) -> int:
    """Strategies with utility ``>= u_l``, i.e. on levels ``1..l``."""
    _check_level(m, l)
    return sum(comb(n_histories(m), j - 1) for j in range(1, l + 1))


def active_level_probabilities(counts: Sequence[int], S: int) -> list[Fraction]:
    """Probability that the active strategy lies on each level (counts listed top first)."""
    K = sum(counts)
    out = []
    above = 0
    for c in counts:
        below_prev = Fraction(K - above, K) ** S
        above += c
        below_here = Fraction(K - above, K) ** S
        out.append(below_prev - below_here)
    return out


def prob_active_at_level_step(m: int, S: int, l: int) -> Fraction:
    _check_level(m, l)
    counts = [level_count(m, j) for j in range(1, n_histories(m) + 2)]
    return active_level_probabilities(counts, S)[l - 1]


@dataclass(frozen=True)
class BestActionStats:
    p_max: Fraction
    p_min: Fraction
    p_best_action: Fraction


def best_action_from(p_max: Fraction, p_min: Fraction) -> Fraction:
    """Probability of copying the best strategy's action when the middle
    levels split their recommendations evenly."""
    return (1 + Fraction(p_max) - Fraction(p_min)) / 2


def best_action_stats(m: int, S: int) -> BestActionStats:
    check_memory(m)
    top = n_histories(m) + 1
    p_max = prob_active_at_level_step(m, S, 1)
    p_min = prob_active_at_level_step(m, S, top)
    return BestActionStats(p_max, p_min, best_action_from(p_max, p_min))


def prob_active_at_level_proportional(m: int, S: int, l: int) -> Fraction:
    """Level probability when all ``2**P`` utilities are distinct."""
    K = n_strategies(m)
    if not 1 <= l <= K:
        raise ValueError(f"level index l={l} out of range 1..{K}")
    return Fraction(K - l + 1, K) ** S - Fraction(K - l, K) ** S


def best_half_probability(m: int, S: int) -> Fraction:
    """Probability that the active strategy is in the upper half of the ranking."""
    half = n_strategies(m) // 2
    # telescopes to 1 - (1/2)**S
    return 1 - Fraction(n_strategies(m) - half, n_strategies(m)) ** S


def expected_peak_height(N: int, S: int) -> Fraction:
    if S < 2:
        raise ValueError("S must be >= 2")
    return N * (1 - Fraction(1, 2 ** (S - 1)))


def expected_holders(N: int, m: int, S: int) -> Fraction:
    """Expected number of agents holding one given strategy."""
    return N * (1 - (1 - Fraction(1, n_strategies(m))) ** S)


def prob_no_good_strategy(S: int) -> Fraction:
    return Fraction(1, 2**S)


def expected_action(utilities: Sequence, mu: int, m: int, S: int) -> Fraction:
    """Mean action of an agent after history ``mu`` given the full utility vector.

    Strategies sharing a level are equally likely to be active, so each
    level contributes its probability times the mean action of its members.
    """
    by_level: dict = {}
    for sid, u in enumerate(utilities):
        tot, cnt = by_level.get(u, (0, 0))
        by_level[u] = (tot + strategy_action(sid, mu, m), cnt + 1)
    levels = sorted(by_level, reverse=True)
    probs = active_level_probabilities([by_level[u][1] for u in levels], S)
    return sum((p * Fraction(by_level[u][0], by_level[u][1]) for p, u in zip(probs, levels)), Fraction(0))


def predictions(m: int, S: int, N: int) -> dict:
    """All closed forms for one parameter set, as plain strings/numbers."""
    stats = best_action_stats(m, S)
    top = n_histories(m) + 1
    return {
        "m": m,
        "S": S,
        "N": N,
        "strategy_space_size": n_strategies(m),
        "utility_bound": n_histories(m),
        "extremal_levels": extremal_levels(m),
        "level_counts": [level_count(m, l) for l in range(1, top + 1)],
        "p_active_level_step": [str(prob_active_at_level_step(m, S, l)) for l in range(1, top + 1)],
        "p_max": str(stats.p_max),
        "p_min": str(stats.p_min),
        "p_best_action": str(stats.p_best_action),
        "expected_demand_at_extremum": str(N * (2 * stats.p_best_action - 1)),
        "p_best_half_proportional": str(best_half_probability(m, S)),
        "peak_height": str(expected_peak_height(N, S)),
        "peak_frequency": str(Fraction(1, n_histories(m))),
        "demand_period": 2 * n_histories(m),
        "expected_holders_per_strategy": str(expected_holders(N, m, S)),
        "p_no_good_strategy": str(prob_no_good_strategy(S)),
    }
