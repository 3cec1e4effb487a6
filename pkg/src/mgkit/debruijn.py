"""de Bruijn graphs of histories, Euler circuits and demand-peak analysis.

Nodes are history codes ``0..2**m - 1``.  Edge ``(mu, bit)`` has the integer
label ``(mu << 1) | bit`` (a ``P``-bit word) and leads to ``shift(mu, bit)``,
so a run's edge sequence is ``(history_before << 1) | (minority == +1)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import factorial

import networkx as nx
import numpy as np

from . import strategies as st

MAX_ENUMERATION_MEMORY = 3


def n_edges(m: int) -> int:
    """Edge count ``2**(m+1)``, also the Euler circuit length."""
    return 2 * st.n_histories(m)


@dataclass(frozen=True)
class DeBruijnGraph:
    m: int

    @property
    def nodes(self) -> range:
        return range(st.n_histories(self.m))

    @property
    def edges(self) -> list[tuple[int, int, int]]:
        """``(src, dst, label)`` for every edge, ordered by label."""
        return [(e >> 1, self.target(e), e) for e in range(n_edges(self.m))]

    def target(self, label: int) -> int:
        return label & (st.n_histories(self.m) - 1)

    def out_edges(self, mu: int) -> tuple[int, int]:
        return (mu << 1, (mu << 1) | 1)

    def in_degree(self, mu: int) -> int:
        return sum(1 for _, d, _ in self.edges if d == mu)

    def out_degree(self, mu: int) -> int:
        return len(self.out_edges(mu))

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.nodes)
        for s, d, e in self.edges:
            g.add_edge(s, d, key=e, label=e)
        return g

    def node_label(self, mu: int) -> str:
        return "".join("+" if a > 0 else "-" for a in st.decode_history(mu, self.m))

    def to_dot(self) -> str:
        lines = [f"digraph debruijn_m{self.m} {{"]
        for mu in self.nodes:
            lines.append(f'  {mu} [label="{self.node_label(mu)}"];')
        for s, d, e in self.edges:
            lines.append(f'  {s} -> {d} [label="{"+" if e & 1 else "-"}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_graph(m: int, max_m: int = st.DEFAULT_MAX_MEMORY) -> DeBruijnGraph:
    st.check_memory(m, max_m)
    return DeBruijnGraph(m)


def homogeneous_nodes(graph: DeBruijnGraph) -> tuple[int, int]:
    """The all ``-1`` and all ``+1`` histories, the nodes with self-loops."""
    return 0, st.n_histories(graph.m) - 1


# ---------------------------------------------------------------- Euler circuits


@dataclass(frozen=True)
class EulerTrail:
    m: int
    edges: tuple

    def __len__(self) -> int:
        return len(self.edges)

    def nodes(self) -> list[int]:
        return [e >> 1 for e in self.edges]

    def minority_actions(self) -> list[int]:
        return [1 if e & 1 else -1 for e in self.edges]

    def is_valid(self) -> bool:
        n = n_edges(self.m)
        mask = st.n_histories(self.m) - 1
        if sorted(self.edges) != list(range(n)):
            return False
        seq = list(self.edges) + [self.edges[0]]
        return all((a & mask) == (b >> 1) for a, b in zip(seq[:-1], seq[1:]))

    def label(self) -> str:
        return " ".join(format(e, f"0{self.m + 1}b") for e in self.edges)


def enumerate_euler_circuits(graph: DeBruijnGraph, max_m: int = MAX_ENUMERATION_MEMORY) -> list[EulerTrail]:
    """All Euler circuits starting with edge 0 (one per rotation class)."""
    if graph.m > max_m:
        raise st.ResourceGuardError(f"backtracking enumeration limited to m <= {max_m}")
    m = graph.m
    total = n_edges(m)
    used = [False] * total
    path = [0]
    used[0] = True
    out = []

    def extend():
        if len(path) == total:
            # must close back to the start node
            if graph.target(path[-1]) == 0:
                out.append(EulerTrail(m, tuple(path)))
            return
        for e in graph.out_edges(graph.target(path[-1])):
            if not used[e]:
                used[e] = True
                path.append(e)
                extend()
                path.pop()
                used[e] = False

    extend()
    return out


def _det(M: list[list[int]]) -> int:
    """Exact integer determinant (Bareiss)."""
    n = len(M)
    if n == 0:
        return 1
    A = [row[:] for row in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if A[r][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def count_euler_circuits(graph: DeBruijnGraph) -> int:
    """Circuit count by the BEST theorem: arborescences times prod (deg - 1)!.

    This counts circuits up to rotation, the same convention as
    :func:`enumerate_euler_circuits`.
    """
    n = st.n_histories(graph.m)
    # Laplacian L = D_out - A, with multi-edges counted
    L = [[0] * n for _ in range(n)]
    for s, d, _ in graph.edges:
        L[s][s] += 1
        L[s][d] -= 1
    minor = [row[1:] for row in L[1:]]
    t_w = _det(minor)
    prod = 1
    for mu in graph.nodes:
        prod *= factorial(graph.out_degree(mu) - 1)
    return t_w * prod


@dataclass
class EulerResult:
    m: int
    count: int
    raw_count: int
    trails: list | None
    method: str


def euler_trails(graph: DeBruijnGraph, enumerate_max_m: int = MAX_ENUMERATION_MEMORY) -> EulerResult:
    """Euler circuits of ``graph``, counted up to rotation.

    Enumerated by backtracking for ``m <= enumerate_max_m``, counted by the
    BEST theorem otherwise.  ``raw_count`` counts edge-rooted circuits.
    """
    if graph.m <= enumerate_max_m:
        trails = enumerate_euler_circuits(graph, enumerate_max_m)
        count = len(trails)
        method = "backtracking"
    else:
        trails = None
        count = count_euler_circuits(graph)
        method = "best"
    return EulerResult(graph.m, count, count * n_edges(graph.m), trails, method)


# ---------------------------------------------------------------- trace analyses


def trace_edges(trace) -> np.ndarray:
    return (np.asarray(trace.history, dtype=np.int64) << 1) | (np.asarray(trace.minority) > 0)


def eulerian_windows(edges: np.ndarray, m: int) -> np.ndarray:
    """Boolean per window start: the next ``2**(m+1)`` edges are all distinct."""
    w = n_edges(m)
    edges = np.asarray(edges, dtype=np.int64)
    if len(edges) < w:
        raise ValueError(f"trace shorter than one window ({w} steps)")
    onehot = np.zeros((len(edges) + 1, w), dtype=np.int32)
    onehot[np.arange(1, len(edges) + 1), edges] = 1
    cum = onehot.cumsum(axis=0)
    counts = cum[w:] - cum[:-w]
    return (counts == 1).all(axis=1)


def verify_eulerian_following(trace, burn_in: int = 0) -> float:
    """Fraction of length-``2**(m+1)`` windows that use every edge exactly once."""
    edges = trace_edges(trace)[burn_in:]
    return float(eulerian_windows(edges, trace.m).mean())


def default_burn_in(m: int) -> int:
    return 4 * n_edges(m)


def default_peak_threshold(N: int, S: int) -> float:
    return 0.8 * N * (1 - 2.0 ** -(S - 1))


@dataclass
class PeakReport:
    N: int
    m: int
    S: int
    steps: int
    burn_in: int
    threshold: float
    peak_times: list = field(default_factory=list)
    heights: list = field(default_factory=list)
    signs: list = field(default_factory=list)
    histories: list = field(default_factory=list)
    critical_history: int | None = None
    critical_share: float = 0.0
    critical_is_unique: bool = False
    reached_from_homogeneous: float | None = None
    frequency: float = 0.0
    predicted_frequency: float = 0.0
    mean_height: float | None = None
    alternating_pairs: int = 0
    same_history_pairs: int = 0

    @property
    def alternation(self) -> float | None:
        if not self.same_history_pairs:
            return None
        return self.alternating_pairs / self.same_history_pairs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alternation"] = self.alternation
        return d

    def to_json(self, indent=1) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def analyze_peaks(trace, threshold: float | None = None, burn_in: int | None = None) -> PeakReport:
    """Demand peaks ``|A| >= threshold`` after burn-in.

    The critical history is the most common history at peak times.  Sign
    alternation is measured over consecutive peaks at that history that are
    less than one Euler period apart.
    """
    N, m, S = trace.N, trace.m, trace.config.S
    if threshold is None:
        threshold = default_peak_threshold(N, S)
    if burn_in is None:
        burn_in = default_burn_in(m)
    A = np.asarray(trace.demand, dtype=np.int64)
    hist = np.asarray(trace.history, dtype=np.int64)
    steps = len(A) - burn_in
    rep = PeakReport(N=N, m=m, S=S, steps=max(steps, 0), burn_in=burn_in, threshold=float(threshold),
                     predicted_frequency=1 / st.n_histories(m))
    if steps <= 0:
        return rep
    idx = np.flatnonzero(np.abs(A[burn_in:]) >= threshold) + burn_in
    rep.frequency = len(idx) / steps
    if not len(idx):
        return rep
    rep.peak_times = idx.tolist()
    rep.heights = A[idx].tolist()
    rep.signs = np.sign(A[idx]).astype(int).tolist()
    rep.histories = hist[idx].tolist()
    rep.mean_height = float(np.abs(A[idx]).mean())
    vals, cnt = np.unique(hist[idx], return_counts=True)
    mu_c = int(vals[cnt.argmax()])
    rep.critical_history = mu_c
    rep.critical_share = float(cnt.max() / len(idx))
    rep.critical_is_unique = len(vals) == 1
    # history one step before each peak at mu_c
    at_c = idx[hist[idx] == mu_c]
    prev = at_c[at_c > 0] - 1
    if len(prev):
        homo = set(homogeneous_nodes(DeBruijnGraph(m)))
        rep.reached_from_homogeneous = float(np.isin(hist[prev], list(homo)).mean())
    period = n_edges(m)
    gaps = np.diff(at_c)
    close = gaps < period
    s = np.sign(A[at_c])
    rep.same_history_pairs = int(close.sum())
    rep.alternating_pairs = int((close & (s[1:] != s[:-1])).sum())
    return rep


@dataclass
class UtilitySplit:
    peaks_checked: int
    bimodal_fraction: float
    group_fractions: tuple  # agents with S, S-1, ..., 0 good strategies
    predicted_fractions: tuple
    penalty_reward_ratio: float | None
    predicted_no_good: Fraction

    def to_dict(self) -> dict:
        d = asdict(self)
        d["predicted_fractions"] = [str(x) for x in self.predicted_fractions]
        d["predicted_no_good"] = str(self.predicted_no_good)
        return d


def binomial_split(S: int) -> tuple:
    """Fractions of agents holding S, S-1, ..., 0 good strategies."""
    from math import comb
    return tuple(Fraction(comb(S, k), 2**S) for k in range(S, -1, -1))


def utility_split_check(trace, peaks: PeakReport | None = None) -> UtilitySplit:
    """Split of strategies and agents into high and low utility groups at peaks.

    Strategies above the median utility (as seen when deciding the peak
    round) are "good".  Bimodality holds at a peak when the gap between the
    upper and lower halves exceeds the spread inside either half.  Agents are
    classified by how many of their strategies are good, and the penalty of
    the good group in the peak round is compared with the reward of the bad
    group (ratio of mean magnitudes, ideally 1).
    """
    if trace.strategies is None:
        raise ValueError("trace has no strategy assignment")
    if peaks is None:
        peaks = analyze_peaks(trace)
    agent_index = np.asarray(trace.strategies)
    S = agent_index.shape[1]
    times = np.asarray(peaks.peak_times, dtype=np.int64)
    if not len(times):
        return UtilitySplit(0, 0.0, tuple([0.0] * (S + 1)), binomial_split(S), None, Fraction(1, 2**S))
    K = st.n_strategies(trace.m)
    space = np.arange(K) if K <= 1 << 16 else trace.held_ids()
    acts = st.action_matrix(space, trace.m).astype(np.int64)
    u0 = trace.initial_scaled(space)
    sb = trace.scores_before()[times]
    pos = np.searchsorted(space, agent_index)
    bimodal = 0
    counts = np.zeros(S + 1)
    ratios = []
    for k, t in enumerate(times):
        u = u0 - acts @ sb[k]
        us = np.sort(u)
        half = len(us) // 2
        lo, hi = us[:half], us[half:]
        if hi[0] - lo[-1] > max(hi[-1] - hi[0], lo[-1] - lo[0]):
            bimodal += 1
        good = u > (lo[-1] + hi[0]) / 2
        n_good = good[pos].sum(axis=1)
        counts += np.bincount(S - n_good, minlength=S + 1)
        # payoff of every strategy in the peak round is -a * sgn(A) * |g|
        delta = -acts[:, trace.history[t]] * np.sign(trace.demand[t])
        if good.any() and (~good).any():
            pen = -delta[good].mean()
            rew = delta[~good].mean()
            if rew:
                ratios.append(pen / rew)
    return UtilitySplit(
        peaks_checked=len(times),
        bimodal_fraction=bimodal / len(times),
        group_fractions=tuple(float(x) for x in counts / counts.sum()),
        predicted_fractions=binomial_split(S),
        penalty_reward_ratio=float(np.mean(ratios)) if ratios else None,
        predicted_no_good=Fraction(1, 2**S),
    )
