"""Histories, strategy tables and their integer encodings.

A history of ``m`` minority actions (oldest first) is encoded as an integer
in ``[0, 2**m)`` with ``-1 -> 0``, ``+1 -> 1`` and the oldest action as the
most significant bit.  A strategy over ``P = 2**m`` histories is encoded as
the ``P``-bit integer whose most significant bit is the action taken after
history 0, so the four ``m=1`` strategies come out in the familiar order::

    id   after -1   after +1
    0       -1         -1
    1       -1         +1
    2       +1         -1
    3       +1         +1
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_MEMORY = 5


class ResourceGuardError(ValueError):
    """Raised when a request would enumerate an unreasonably large space."""


def check_memory(m: int, max_m: int = DEFAULT_MAX_MEMORY) -> None:
    if m < 1:
        raise ValueError(f"memory m must be >= 1, got {m}")
    if m > max_m:
        raise ResourceGuardError(f"memory m={m} exceeds the guard max_m={max_m}")


def n_histories(m: int) -> int:
    return 1 << m


def n_strategies(m: int) -> int:
    return 1 << (1 << m)


def action_bit(a: int) -> int:
    if a == 1:
        return 1
    if a == -1:
        return 0
    raise ValueError(f"action must be -1 or +1, got {a!r}")


def encode_history(actions: Sequence[int]) -> int:
    code = 0
    for a in actions:
        code = (code << 1) | action_bit(a)
    return code


def decode_history(code: int, m: int) -> tuple[int, ...]:
    if not 0 <= code < (1 << m):
        raise ValueError(f"history code {code} out of range for m={m}")
    return tuple(1 if (code >> (m - 1 - i)) & 1 else -1 for i in range(m))


def shift_history(code: int, action: int, m: int) -> int:
    """Append ``action`` on the right and drop the oldest entry."""
    return ((code << 1) | action_bit(action)) & ((1 << m) - 1)


def strategy_action(sid: int, mu: int, m: int) -> int:
    P = 1 << m
    return 1 if (sid >> (P - 1 - mu)) & 1 else -1


def complement(sid: int, m: int) -> int:
    return sid ^ (n_strategies(m) - 1)


@dataclass(frozen=True, order=True)
class Strategy:
    id: int
    m: int

    def __post_init__(self):
        if not 0 <= self.id < n_strategies(self.m):
            raise ValueError(f"strategy id {self.id} out of range for m={self.m}")

    def action(self, mu: int) -> int:
        return strategy_action(self.id, mu, self.m)

    @property
    def table(self) -> tuple[int, ...]:
        """Actions for histories ``0 .. 2**m - 1``."""
        return tuple(self.action(mu) for mu in range(1 << self.m))

    @classmethod
    def from_table(cls, table: Sequence[int]) -> "Strategy":
        P = len(table)
        m = P.bit_length() - 1
        if P < 2 or 1 << m != P:
            raise ValueError("table length must be a power of two >= 2")
        return cls(encode_history(table), m)


class StrategySpace(Sequence):
    """All ``2**P`` strategies in ascending id order, built lazily."""

    def __init__(self, m: int):
        self.m = m

    def __len__(self) -> int:
        return n_strategies(self.m)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        return Strategy(i, self.m)

    def __repr__(self) -> str:
        return f"StrategySpace(m={self.m}, size={len(self)})"


def enumerate_full_strategy_space(m: int, max_m: int = DEFAULT_MAX_MEMORY) -> StrategySpace:
    check_memory(m, max_m)
    return StrategySpace(m)


def action_matrix(ids, m: int) -> np.ndarray:
    """``len(ids) x 2**m`` int8 matrix of +-1 actions."""
    ids = np.asarray(ids, dtype=np.uint64)
    P = 1 << m
    shifts = np.arange(P - 1, -1, -1, dtype=np.uint64)
    bits = (ids[:, None] >> shifts[None, :]) & np.uint64(1)
    return (bits.astype(np.int8) * 2 - 1).astype(np.int8)


def hamming_distance(s1: Strategy, s2: Strategy) -> int:
    if s1.m != s2.m:
        raise ValueError(f"strategies have different memory: {s1.m} vs {s2.m}")
    return (s1.id ^ s2.id).bit_count()


def expected_holders(N: int, m: int, S: int) -> float:
    """Mean number of agents holding one fixed strategy under i.i.d. draws."""
    K = n_strategies(m)
    return N * (1.0 - (1.0 - 1.0 / K) ** S)


def assign_strategies(N: int, m: int, S: int, rng, distinct: bool = False) -> np.ndarray:
    """Draw ``S`` strategy ids per agent from the full space.

    Draws are independent and uniform.  With ``distinct=True`` each agent's
    ids are pairwise different (uniform without replacement).
    """
    K = n_strategies(m)
    if distinct and S > K:
        raise ValueError(f"S={S} distinct strategies requested but only {K} exist for m={m}")
    out = np.empty((N, S), dtype=np.int64)
    if not distinct:
        raws = rng.raw(N * S)
        out[:] = (raws % np.uint64(K)).astype(np.int64).reshape(N, S)
        return out
    for n in range(N):
        held = []
        while len(held) < S:
            sid = rng.below(K)
            if sid not in held:
                held.append(sid)
        out[n] = held
    return out
