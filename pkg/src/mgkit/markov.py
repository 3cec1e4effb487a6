"""Exact Markov-chain description of the step-payoff game.

A state is the history code plus the integer utilities of all ``2**P``
strategies.  The chain is the *a priori* one: a state's next minority action
follows the sign of its expected demand, and when that expectation is zero
both actions are taken with probability 1/2.

States are stored canonically as ``(history_code, utilities_by_strategy_id)``.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict, deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from . import strategies as st
from .game import Payoff
from .levels import expected_action

MAX_EXACT_MEMORY = 2
DEFAULT_MAX_STATES = 200_000


class StateExplosionError(RuntimeError):
    pass


class ReducibleChainError(ValueError):
    def __init__(self, classes):
        self.classes = classes
        super().__init__(f"chain has {len(classes)} closed classes; no unique stationary distribution")


@dataclass(frozen=True, order=True)
class ChainState:
    history: int
    utilities: tuple

    def label(self) -> str:
        return f"[{self.history}; {','.join(str(u) for u in self.utilities)}]"


@dataclass
class TransitionMatrix:
    states: list
    rows: list  # rows[i] = {j: Fraction}
    m: int
    S: int | None = None
    expected_action: list | None = None  # per state, fraction of N
    counts: list | None = None  # empirical chains: rows of raw counts
    visits: list | None = None
    low_confidence: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def successors(self, i: int) -> dict:
        return self.rows[i]

    def out_degrees(self) -> list[int]:
        return [len(r) for r in self.rows]

    def is_row_stochastic(self) -> bool:
        return all(sum(r.values()) == 1 for r in self.rows)

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.states)))
        for i, r in enumerate(self.rows):
            for j, p in r.items():
                g.add_edge(i, j, p=p)
        return g

    def dense(self) -> np.ndarray:
        M = np.zeros((len(self), len(self)))
        for i, r in enumerate(self.rows):
            for j, p in r.items():
                M[i, j] = float(p)
        return M

    # ------------------------------------------------------------- export

    def to_dict(self, pi=None) -> dict:
        d = {
            "m": self.m,
            "S": self.S,
            "states": [{"history": s.history, "utilities": list(s.utilities)} for s in self.states],
            "edges": [
                {"from": i, "to": j, "numerator": p.numerator, "denominator": p.denominator}
                for i, r in enumerate(self.rows) for j, p in sorted(r.items())
            ],
        }
        if self.expected_action is not None:
            d["expected_demand_over_N"] = [str(x) for x in self.expected_action]
        if pi is not None:
            d["pi"] = [str(x) for x in pi]
        if self.visits is not None:
            d["visits"] = list(self.visits)
            d["low_confidence"] = list(self.low_confidence)
        return d

    def to_json(self, pi=None, indent=1) -> str:
        return json.dumps(self.to_dict(pi), indent=indent)

    def to_dot(self, pi=None) -> str:
        lines = ["digraph chain {"]
        for i, s in enumerate(self.states):
            extra = f"\\npi={pi[i]}" if pi is not None else ""
            lines.append(f'  {i} [label="{i}: {s.label()}{extra}"];')
        for i, r in enumerate(self.rows):
            for j, p in sorted(r.items()):
                lines.append(f'  {i} -> {j} [label="{p}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- enumeration


def _successor(state: ChainState, a_star: int, m: int) -> ChainState:
    # step payoff: R = -a * sgn(A) = a * a_star
    mu = state.history
    u = tuple(x + st.strategy_action(sid, mu, m) * a_star for sid, x in enumerate(state.utilities))
    return ChainState(st.shift_history(mu, a_star, m), u)


def expected_demand(state: ChainState, N: int, S: int, m: int) -> Fraction:
    return N * expected_action(state.utilities, state.history, m, S)


def enumerate_chain(m: int, S: int = 2, max_states: int = DEFAULT_MAX_STATES,
                    max_m: int = MAX_EXACT_MEMORY) -> TransitionMatrix:
    """Breadth-first closure from the zero-utility states.

    Both minority actions are emitted with probability 1/2 from states whose
    expected demand vanishes (the ``+1`` branch first).
    """
    st.check_memory(m, max_m)
    K = st.n_strategies(m)
    start = [ChainState(mu, (0,) * K) for mu in range(st.n_histories(m))]
    index = {s: i for i, s in enumerate(start)}
    states = list(start)
    rows: list = []
    exp_a: list = []
    queue = deque(range(len(start)))
    half = Fraction(1, 2)
    while queue:
        i = queue.popleft()
        s = states[i]
        ea = expected_action(s.utilities, s.history, m, S)
        if ea == 0:
            branches = [(1, half), (-1, half)]
        else:
            branches = [(-1 if ea > 0 else 1, Fraction(1))]
        row = {}
        for a_star, p in branches:
            nxt = _successor(s, a_star, m)
            j = index.get(nxt)
            if j is None:
                if len(states) >= max_states:
                    raise StateExplosionError(f"more than {max_states} states for m={m}, S={S}")
                j = len(states)
                index[nxt] = j
                states.append(nxt)
                queue.append(j)
            row[j] = row.get(j, 0) + p
        while len(rows) <= i:
            rows.append(None)
            exp_a.append(None)
        rows[i] = row
        exp_a[i] = ea
    return TransitionMatrix(states=states, rows=rows, m=m, S=S, expected_action=exp_a)


# ---------------------------------------------------------------- stationary


@dataclass
class StationaryDistribution:
    pi: list  # Fraction per state, zero off the recurrent class
    recurrent: list  # state indices of the closed class

    def __getitem__(self, i):
        return self.pi[i]


def closed_classes(chain: TransitionMatrix) -> list[list[int]]:
    """Closed communicating classes, ordered by their smallest state index."""
    return sorted((sorted(c) for c in nx.attracting_components(chain.graph())), key=lambda c: c[0])


def solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination with exact rationals; ``A`` is square and nonsingular."""
    n = len(A)
    M = [list(row) + [bi] for row, bi in zip(A, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise ValueError("singular system")
        M[c], M[piv] = M[piv], M[c]
        pv = M[c][c]
        rowc = [x / pv for x in M[c]]
        M[c] = rowc
        nz = [k for k in range(c, n + 1) if rowc[k] != 0]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                rr = M[r]
                for k in nz:
                    rr[k] -= f * rowc[k]
    return [M[i][n] for i in range(n)]


def stationary(chain: TransitionMatrix, component: int | None = None) -> StationaryDistribution:
    """Exact solution of ``pi P = pi``, ``sum(pi) = 1`` on the closed class.

    If the chain has several closed classes, ``component`` picks one (as
    indexed by :func:`closed_classes`); otherwise they are reported in a
    :class:`ReducibleChainError`.
    """
    classes = closed_classes(chain)
    if component is None:
        if len(classes) != 1:
            raise ReducibleChainError(classes)
        component = 0
    rec = classes[component]
    pos = {s: k for k, s in enumerate(rec)}
    n = len(rec)
    # equations: sum_i pi_i (P_ij - delta_ij) = 0 for j, last one replaced by normalisation
    A = [[Fraction(0)] * n for _ in range(n)]
    for i in rec:
        for j, p in chain.rows[i].items():
            if j in pos:
                A[pos[j]][pos[i]] += p
    for k in range(n):
        A[k][k] -= 1
    A[n - 1] = [Fraction(1)] * n
    b = [Fraction(0)] * (n - 1) + [Fraction(1)]
    x = solve_exact(A, b)
    pi = [Fraction(0)] * len(chain)
    for s, v in zip(rec, x):
        pi[s] = v
    return StationaryDistribution(pi=pi, recurrent=rec)


def stationary_power(chain: TransitionMatrix, iters: int = 10_000, tol: float = 1e-13) -> np.ndarray:
    """Floating-point cross-check by (lazy) power iteration."""
    M = chain.dense()
    M = 0.5 * (M + np.eye(len(M)))  # aperiodic, same fixed point
    v = np.full(len(M), 1.0 / len(M))
    for _ in range(iters):
        w = v @ M
        if np.abs(w - v).max() < tol:
            return w
        v = w
    return v


def step_distribution(chain: TransitionMatrix, dist: dict, tau: int) -> dict:
    for _ in range(tau):
        nxt: dict = defaultdict(Fraction)
        for i, p in dist.items():
            for j, q in chain.rows[i].items():
                nxt[j] += p * q
        dist = nxt
    return dict(dist)


def period_match_probability(chain: TransitionMatrix, dist: StationaryDistribution, tau: int,
                             demand_class=None) -> Fraction:
    """Probability that the demand class at ``t + tau`` equals the one at ``t``.

    ``demand_class`` defaults to each state's expected demand.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    cls = demand_class if demand_class is not None else chain.expected_action
    total = Fraction(0)
    for i, p in enumerate(dist.pi):
        if p == 0:
            continue
        after = step_distribution(chain, {i: Fraction(1)}, tau)
        total += p * sum((q for j, q in after.items() if cls[j] == cls[i]), Fraction(0))
    return total


# ---------------------------------------------------------------- empirical


def extract_state_graph(traces, min_visits: int = 10, with_utilities: bool | None = None) -> TransitionMatrix:
    """Empirical chain from one or more traces.

    States are keyed by history and utility vector; transition probabilities
    are observed frequencies.  States visited fewer than ``min_visits`` times
    are listed in ``low_confidence``.
    """
    if not isinstance(traces, (list, tuple)):
        traces = [traces]
    if not traces:
        raise ValueError("no traces given")
    m = traces[0].m
    counts: Counter = Counter()
    trans: dict = defaultdict(Counter)
    for tr in traces:
        if tr.m != m:
            raise ValueError("traces with different memory cannot be merged")
        if len(tr) < 2:
            raise ValueError("trace too short to extract transitions")
        keys = tr.state_keys()
        counts.update(keys)
        for a, b in zip(keys[:-1], keys[1:]):
            trans[a][b] += 1
    order = sorted(counts, key=lambda k: (-counts[k], k))
    pos = {k: i for i, k in enumerate(order)}
    rows, raw = [], []
    for k in order:
        c = trans.get(k, Counter())
        tot = sum(c.values())
        raw.append({pos[b]: n for b, n in c.items()})
        rows.append({pos[b]: Fraction(n, tot) for b, n in c.items()} if tot else {})
    if with_utilities is None:
        with_utilities = st.n_strategies(m) <= 256
    tr0 = traces[0]
    states = []
    for h, scores in order:
        if with_utilities:
            acts = st.action_matrix(np.arange(st.n_strategies(m)), m).astype(np.int64)
            u0 = tr0.initial_scaled(np.arange(st.n_strategies(m)))
            vals = u0 - acts @ np.asarray(scores, dtype=np.int64)
            ut = tuple(Fraction(int(v), tr0.scale) for v in vals)
            if all(x.denominator == 1 for x in ut):
                ut = tuple(int(x) for x in ut)
            states.append(ChainState(h, ut))
        else:
            states.append(ChainState(h, tuple(scores)))
    visits = [counts[k] for k in order]
    low = [i for i, v in enumerate(visits) if v < min_visits]
    return TransitionMatrix(states=states, rows=rows, m=m, counts=raw, visits=visits, low_confidence=low)


def recurrent_part(chain: TransitionMatrix) -> list[int]:
    """States in closed classes of the (empirical) transition graph."""
    return sorted(i for c in nx.attracting_components(chain.graph()) for i in c)


def visit_frequencies(chain: TransitionMatrix) -> dict:
    tot = sum(chain.visits)
    return {s: Fraction(v, tot) for s, v in zip(chain.states, chain.visits)}


def require_step_payoff(payoff) -> None:
    if Payoff(payoff) is not Payoff.STEP:
        raise ValueError("Markov-chain enumeration supports the step payoff (sgn) only")
