import json
from collections import Counter
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from mgkit import GameConfig, run
from mgkit import markov
from mgkit.experiment import M1_REFERENCE, m1_reference_states
from mgkit.game import perturbed_initial_utilities
from mgkit.strategies import ResourceGuardError


@pytest.fixture(scope="module")
def m1():
    chain = markov.enumerate_chain(1, 2)
    return chain, markov.stationary(chain)


@pytest.fixture(scope="module")
def m2():
    return markov.enumerate_chain(2, 2)


def labels(chain):
    idx = chain.index()
    return {idx[s]: f"x{k + 1}" for k, s in enumerate(m1_reference_states())}


# ---------------------------------------------------------------- m = 1


def test_m1_has_twelve_reference_states(m1):
    chain, _ = m1
    assert len(chain) == 12
    assert set(chain.states) == set(m1_reference_states())


def test_m1_transition_graph(m1):
    chain, _ = m1
    lab = labels(chain)
    edges = {(lab[i], lab[j]): p for i in range(12) for j, p in chain.successors(i).items()}
    half = Fraction(1, 2)
    assert edges == {
        ("x1", "x3"): half, ("x1", "x11"): half, ("x2", "x4"): half, ("x2", "x12"): half,
        ("x3", "x5"): half, ("x3", "x7"): half, ("x4", "x6"): half, ("x4", "x8"): half,
        ("x5", "x4"): 1, ("x6", "x3"): 1, ("x7", "x9"): 1, ("x8", "x10"): 1,
        ("x9", "x1"): 1, ("x10", "x2"): 1, ("x11", "x2"): 1, ("x12", "x1"): 1,
    }


def test_m1_branching_only_at_zero_demand(m1):
    chain, _ = m1
    for i, ea in enumerate(chain.expected_action):
        assert chain.out_degrees()[i] == (2 if ea == 0 else 1)


def test_m1_stationary_and_demands(m1):
    chain, dist = m1
    idx = chain.index()
    for s, (_, _, p, ea) in zip(m1_reference_states(), M1_REFERENCE):
        assert dist.pi[idx[s]] == p
        assert chain.expected_action[idx[s]] == ea
    assert sum(dist.pi) == 1
    assert chain.is_row_stochastic()


def test_m1_stationary_matches_power_iteration(m1):
    chain, dist = m1
    v = markov.stationary_power(chain)
    assert np.allclose(v, [float(p) for p in dist.pi], atol=1e-10)


def test_m1_zero_sum_symmetry(m1):
    # relabelling +1 <-> -1 maps the chain onto itself; strategy t(h) goes
    # to -t(-h), which swaps ids 0 and 3 and fixes 1 and 2
    chain, dist = m1
    idx = chain.index()
    perm = (3, 1, 2, 0)
    for i, s in enumerate(chain.states):
        mirror = markov.ChainState(1 - s.history, tuple(s.utilities[perm[k]] for k in range(4)))
        j = idx[mirror]
        assert chain.expected_action[j] == -chain.expected_action[i]
        assert dist.pi[j] == dist.pi[i]


def test_period_match_tau_zero_is_one(m1):
    chain, dist = m1
    assert markov.period_match_probability(chain, dist, 0) == 1
    with pytest.raises(ValueError):
        markov.period_match_probability(chain, dist, -1)


def test_period_match_profile(m1):
    chain, dist = m1
    prof = [markov.period_match_probability(chain, dist, t) for t in range(1, 13)]
    assert prof[:4] == [Fraction(1, 8), Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]
    assert max(prof) == prof[3] == prof[7] == prof[11]


def test_period_match_with_printed_demand_column(m1):
    # with the demand signs of x10 and x12 exchanged the tau=4 value
    # becomes 7/16 and is the maximum
    chain, dist = m1
    idx = chain.index()
    printed = {k: ea for k, (*_, ea) in enumerate(M1_REFERENCE)}
    printed[9], printed[11] = -printed[9], -printed[11]
    cls = [None] * 12
    for k, s in enumerate(m1_reference_states()):
        cls[idx[s]] = printed[k]
    prof = [markov.period_match_probability(chain, dist, t, cls) for t in range(1, 13)]
    assert prof[3] == Fraction(7, 16) == max(prof)


# ---------------------------------------------------------------- m = 2


def test_m2_structure(m2):
    assert len(m2) == 144
    assert m2.is_row_stochastic()
    classes = markov.closed_classes(m2)
    assert [len(c) for c in classes] == [72, 72]
    assert set(markov.recurrent_part(m2)) == set(range(144))
    with pytest.raises(markov.ReducibleChainError):
        markov.stationary(m2)


def test_m2_stationary_per_class(m2):
    for k in range(2):
        d = markov.stationary(m2, k)
        vals = Counter(p for p in d.pi if p)
        assert vals == {Fraction(1, 32): 8, Fraction(1, 64): 32, Fraction(1, 128): 32}


def test_m2_period_match_regression(m2):
    d = markov.stationary(m2, 0)
    prof = {t: markov.period_match_probability(m2, d, t) for t in range(1, 17)}
    best = max(prof.values())
    assert best == prof[8] == Fraction(409, 1024)


def test_chain_guards():
    with pytest.raises(ResourceGuardError):
        markov.enumerate_chain(3, 2)
    with pytest.raises(markov.StateExplosionError):
        markov.enumerate_chain(2, 2, max_states=10)
    with pytest.raises(ValueError):
        markov.require_step_payoff("x")
    markov.require_step_payoff("sgn")


# ---------------------------------------------------------------- small chains


def toy(rows):
    return markov.TransitionMatrix(states=[markov.ChainState(i, ()) for i in range(len(rows))],
                                   rows=rows, m=1)


def test_absorbing_state():
    chain = toy([{0: Fraction(1, 2), 1: Fraction(1, 2)}, {1: Fraction(1)}])
    d = markov.stationary(chain)
    assert d.pi == [0, 1]
    assert d.recurrent == [1]


def test_two_state_flip():
    chain = toy([{1: Fraction(1)}, {0: Fraction(1)}])
    assert markov.stationary(chain).pi == [Fraction(1, 2)] * 2
    assert markov.step_distribution(chain, {0: Fraction(1)}, 3) == {1: 1}


def test_solve_exact_singular():
    with pytest.raises(ValueError):
        markov.solve_exact([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]], [Fraction(0), Fraction(1)])


# ---------------------------------------------------------------- simulated chains


def test_extracted_states_are_chain_states(m1):
    chain, _ = m1
    tr = run(GameConfig(N=401, m=1, S=2, steps=20000, seed=3))
    g = markov.extract_state_graph(tr)
    assert set(g.states) <= set(chain.states)
    assert g.is_row_stochastic()
    assert max(g.out_degrees()) <= 2
    assert sum(g.visits) == len(tr)
    assert g.visits == sorted(g.visits, reverse=True)


def test_extracted_edges_are_chain_edges(m1):
    chain, _ = m1
    idx = chain.index()
    g = markov.extract_state_graph([run(GameConfig(N=401, m=1, S=2, steps=5000, seed=s)) for s in range(3)])
    for i, s in enumerate(g.states):
        for j in g.successors(i):
            assert idx[g.states[j]] in chain.successors(idx[s])


@pytest.mark.parametrize("m,n_states", [(1, 4), (2, 8)])
def test_perturbed_init_is_deterministic(m, n_states):
    cfg = GameConfig(N=401, m=m, S=2, steps=20000, seed=1, initial_utilities=perturbed_initial_utilities(m))
    g = markov.extract_state_graph(run(cfg))
    rec = markov.recurrent_part(g)
    assert len(rec) == n_states
    assert all(g.out_degrees()[i] == 1 for i in rec)
    assert nx.is_strongly_connected(g.graph().subgraph(rec))


def test_extract_errors():
    with pytest.raises(ValueError):
        markov.extract_state_graph([])
    a = run(GameConfig(N=11, m=1, steps=10))
    b = run(GameConfig(N=11, m=2, steps=10))
    with pytest.raises(ValueError):
        markov.extract_state_graph([a, b])


def test_low_confidence_flag():
    g = markov.extract_state_graph(run(GameConfig(N=401, m=2, S=2, steps=300, seed=0)), min_visits=10)
    assert g.low_confidence == [i for i, v in enumerate(g.visits) if v < 10]


def test_exports(m1):
    chain, dist = m1
    d = json.loads(chain.to_json(dist.pi))
    assert len(d["states"]) == 12
    assert len(d["edges"]) == 16
    assert sum(Fraction(p) for p in d["pi"]) == 1
    dot = chain.to_dot(dist.pi)
    assert dot.startswith("digraph chain {")
    assert dot.count("->") == 16
