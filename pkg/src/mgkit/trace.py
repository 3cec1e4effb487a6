"""Game traces and their CSV representation.

A trace stores, per step ``t``: the demand ``A(t)``, the minority action, the
history code seen before the step, and the scaled cumulative payoff sum per
history after the step.  Utilities of any strategy follow from the latter::

    U_id(t+1) * scale = U_id(0) * scale - sum_h action(id, h) * scores[t, h]

CSV layout: a ``#`` comment line carrying the config hash and the config as
JSON, then ``t,A,minority,history,U_<id>...``.  Utility columns cover the
whole strategy space when it has at most ``max_utility_columns`` members,
otherwise only the ids held by the population.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import strategies as st
from .game import GameConfig

MAX_UTILITY_COLUMNS = 256


@dataclass
class Trace:
    config: GameConfig
    strategies: np.ndarray | None  # (N, S) ids; None when loaded from CSV
    demand: np.ndarray
    minority: np.ndarray
    history: np.ndarray  # history code before each step
    scores: np.ndarray  # (steps, P) scaled, after each step
    scale: int

    def __len__(self) -> int:
        return len(self.demand)

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def P(self) -> int:
        return self.config.P

    @property
    def history_after(self) -> np.ndarray:
        bit = (self.minority > 0).astype(np.int64)
        return ((self.history << 1) | bit) & (self.P - 1)

    @property
    def edges(self) -> np.ndarray:
        """de Bruijn edge word ``(history << 1) | bit(minority)`` per step."""
        return (self.history << 1) | (self.minority > 0).astype(np.int64)

    def held_ids(self) -> np.ndarray:
        if self.strategies is None:
            raise ValueError("trace has no strategy assignment (loaded from CSV?)")
        return np.unique(self.strategies)

    def initial_scaled(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        u0 = self.config.initial_utilities
        if u0 is None:
            return np.zeros(len(ids), dtype=np.int64)
        return np.array([int(u0[i] * self.scale) for i in ids], dtype=np.int64)

    def scores_before(self) -> np.ndarray:
        out = np.empty_like(self.scores)
        out[0] = 0
        out[1:] = self.scores[:-1]
        return out

    def utilities(self, ids, before: bool = False) -> np.ndarray:
        """Scaled utilities, shape ``(steps, len(ids))``.

        ``before=False`` gives values after each step, ``True`` the values the
        agents saw when deciding.
        """
        ids = np.asarray(ids, dtype=np.int64)
        acts = st.action_matrix(ids, self.m).astype(np.int64)
        sc = self.scores_before() if before else self.scores
        return self.initial_scaled(ids)[None, :] - sc @ acts.T

    def utility_vector(self, t: int, before: bool = False) -> tuple[Fraction, ...]:
        """Exact utilities of the whole strategy space at step ``t``."""
        ids = np.arange(st.n_strategies(self.m))
        sc = self.scores_before()[t] if before else self.scores[t]
        acts = st.action_matrix(ids, self.m).astype(np.int64)
        vals = self.initial_scaled(ids) - acts @ sc
        return tuple(Fraction(int(v), self.scale) for v in vals)

    def max_abs_utility(self) -> Fraction:
        """Largest ``|U|`` over all strategies and steps, initial values included."""
        if self.config.initial_utilities is None:
            # maximised by the strategy agreeing in sign with every score
            return Fraction(int(np.abs(self.scores).sum(axis=1).max()), self.scale)
        ids = np.arange(st.n_strategies(self.m))
        u = np.abs(self.utilities(ids)).max()
        u0 = max(abs(x) for x in self.config.initial_utilities)
        return max(Fraction(int(u), self.scale), u0)

    def state_keys(self) -> list[tuple]:
        """Hashable ``(history, scores)`` key of the state each step starts in.

        Scores determine the full utility vector one-to-one, so equal keys
        mean equal game states.
        """
        sb = self.scores_before()
        return [(int(h), tuple(int(x) for x in row)) for h, row in zip(self.history, sb)]

    # ------------------------------------------------------------------ csv

    def utility_column_ids(self, max_utility_columns: int = MAX_UTILITY_COLUMNS) -> np.ndarray:
        K = st.n_strategies(self.m)
        if K <= max_utility_columns:
            return np.arange(K)
        return self.held_ids()

    def to_csv(self, path, max_utility_columns: int = MAX_UTILITY_COLUMNS) -> None:
        ids = self.utility_column_ids(max_utility_columns)
        U = self.utilities(ids)
        buf = io.StringIO()
        buf.write(f"# mgkit-trace config_hash={self.config.hash()} scale={self.scale} "
                  f"config={json.dumps(self.config.to_dict(), sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "A", "minority", "history"] + [f"U_{i}" for i in ids])
        integral = self.scale == 1
        for t in range(len(self)):
            if integral:
                us = [str(int(x)) for x in U[t]]
            else:
                us = [str(Fraction(int(x), self.scale)) for x in U[t]]
            w.writerow([t, int(self.demand[t]), int(self.minority[t]), int(self.history[t])] + us)
        atomic_write(path, buf.getvalue())

    @classmethod
    def from_csv(cls, path) -> "Trace":
        with open(path, newline="") as fh:
            first = fh.readline()
            if not first.startswith("# mgkit-trace"):
                raise ValueError(f"{path}: missing mgkit trace header line")
            meta = first[len("# mgkit-trace"):].strip()
            cfg_json = meta.split("config=", 1)[1]
            config = GameConfig.from_dict(json.loads(cfg_json))
            scale = int(meta.split("scale=", 1)[1].split()[0])
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header[:4] != ["t", "A", "minority", "history"]:
            raise ValueError(f"{path}: unexpected header {header[:4]}")
        ids = np.array([int(c[2:]) for c in header[4:]], dtype=np.int64)
        demand = np.array([int(r[1]) for r in body], dtype=np.int64)
        minority = np.array([int(r[2]) for r in body], dtype=np.int8)
        history = np.array([int(r[3]) for r in body], dtype=np.int64)
        U = np.array([[int(Fraction(x) * scale) for x in r[4:]] for r in body], dtype=np.int64)
        trace = cls(config, None, demand, minority, history, np.zeros((len(body), config.P), np.int64), scale)
        trace.scores = _solve_scores(trace, ids, U)
        return trace


def _solve_scores(trace: Trace, ids: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Recover per-history scores from utility columns, checked exactly."""
    acts = st.action_matrix(ids, trace.m).astype(np.int64)
    if np.linalg.matrix_rank(acts.astype(float)) < trace.P:
        raise ValueError("utility columns do not determine the per-history scores")
    rhs = trace.initial_scaled(ids)[None, :] - U
    sol, *_ = np.linalg.lstsq(acts.astype(float), rhs.T.astype(float), rcond=None)
    scores = np.rint(sol.T).astype(np.int64)
    if not np.array_equal(scores @ acts.T, rhs):
        raise ValueError("utility columns are inconsistent with a single score vector")
    return scores


def atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
