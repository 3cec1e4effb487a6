from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

import mgkit
from mgkit import GameConfig, GameRNG, Payoff, run
from mgkit import strategies as st
from mgkit._kernel import HAVE_EXTENSION
from mgkit.game import (
    active_strategy,
    aggregated_demand,
    minority_action,
    new_game,
    payoff,
    perturbed_initial_utilities,
    step,
    utility_scale,
)


def test_aggregated_demand():
    assert aggregated_demand([1, 1, -1]) == 1
    assert aggregated_demand([1] * 401) == 401
    assert aggregated_demand([1] * 251 + [-1] * 150) == 101


def test_minority_action_sign():
    rng = GameRNG(0)
    assert minority_action(101, rng) == -1
    assert minority_action(-3, rng) == 1


def test_minority_action_zero_is_fair():
    rng = GameRNG(1)
    draws = [minority_action(0, rng) for _ in range(20000)]
    assert set(draws) == {-1, 1}
    p = draws.count(1) / len(draws)
    assert abs(p - 0.5) < 3 * 0.5 / np.sqrt(len(draws))


def test_active_strategy_strict_max():
    rng = GameRNG(0)
    u = {3: 2, 5: -2}
    assert all(active_strategy([3, 5], u, rng) == 3 for _ in range(100))


@pytest.mark.parametrize("S", [2, 3])
def test_active_strategy_ties_uniform(S):
    rng = GameRNG(7)
    ids = list(range(10, 10 + S))
    u = {i: 0 for i in ids}
    n = 30000
    c = Counter(active_strategy(ids, u, rng) for _ in range(n))
    sigma = np.sqrt(n * (1 / S) * (1 - 1 / S))
    for i in ids:
        assert abs(c[i] - n / S) < 3 * sigma


def test_payoff_values():
    assert payoff(1, 10, Payoff.STEP) == -1
    assert payoff(-1, 10, Payoff.PROPORTIONAL) == 10
    assert payoff(1, 0, Payoff.STEP) == 0
    assert payoff(1, 10, Payoff.SCALED_PROPORTIONAL, N=20) == Fraction(-1, 2)


def test_config_validation():
    with pytest.raises(ValueError, match="S must be"):
        GameConfig(N=11, m=1, S=1)
    with pytest.raises(ValueError):
        GameConfig(N=0, m=1)
    with pytest.raises(st.ResourceGuardError):
        GameConfig(N=11, m=6)
    with pytest.raises(ValueError, match="exceeds"):
        GameConfig(N=11, m=1, S=5, distinct_strategies=True)
    with pytest.raises(ValueError):
        GameConfig(N=11, m=1, initial_utilities=(0, 0, 0))
    with pytest.raises(st.ResourceGuardError):
        GameConfig(N=11, m=1, steps=10, max_steps=5)
    GameConfig(N=11, m=1, S=5)  # with replacement any S is fine


def test_config_roundtrip_and_hash():
    cfg = GameConfig(N=11, m=1, S=2, payoff="x", steps=5, seed=3,
                     initial_utilities=perturbed_initial_utilities(1))
    again = GameConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.hash() == cfg.hash()
    assert GameConfig(N=11, m=1, seed=4).hash() != GameConfig(N=11, m=1, seed=5).hash()


def test_utility_scale():
    assert utility_scale(GameConfig(N=11, m=1)) == 1
    assert utility_scale(GameConfig(N=11, m=1, payoff="x-over-n")) == 11
    assert utility_scale(GameConfig(N=11, m=1, initial_utilities=perturbed_initial_utilities(1))) == 8


def test_replay_determinism():
    cfg = GameConfig(N=101, m=2, S=2, steps=2000, seed=42)
    a, b = run(cfg), run(cfg)
    assert np.array_equal(a.demand, b.demand)
    assert np.array_equal(a.scores, b.scores)
    assert np.array_equal(a.strategies, b.strategies)


@pytest.mark.skipif(not HAVE_EXTENSION, reason="compiled kernel not built")
@pytest.mark.parametrize("payoff_name", ["sgn", "x", "x-over-n"])
@pytest.mark.parametrize("m,S", [(1, 2), (2, 3), (3, 4)])
def test_backends_bit_identical(payoff_name, m, S):
    cfg = GameConfig(N=64, m=m, S=S, payoff=payoff_name, steps=3000, seed=m * 10 + S)
    c, p = run(cfg, backend="c"), run(cfg, backend="python")
    assert np.array_equal(c.demand, p.demand)
    assert np.array_equal(c.minority, p.minority)
    assert np.array_equal(c.history, p.history)
    assert np.array_equal(c.scores, p.scores)


def test_step_matches_run():
    cfg = GameConfig(N=51, m=2, S=3, steps=300, seed=9)
    tr = run(cfg)
    state = new_game(cfg)
    for t in range(cfg.steps):
        rec = step(state)
        assert rec.demand == tr.demand[t]
        assert rec.minority == tr.minority[t]
        assert rec.history_before == tr.history[t]
    u = tr.utilities(state.held)[-1]
    assert np.array_equal(u, state.utilities)


def test_step_payoff_moves_every_strategy_by_one():
    cfg = GameConfig(N=101, m=2, S=2, steps=500, seed=3)
    tr = run(cfg)
    U = tr.utilities(np.arange(st.n_strategies(2)))
    d = np.diff(np.vstack([np.zeros((1, U.shape[1]), np.int64), U]), axis=0)
    assert np.all(np.abs(d) == 1)  # N odd so A is never 0


def test_demand_parity():
    for N in (100, 101):
        tr = run(GameConfig(N=N, m=1, S=2, steps=2000, seed=N))
        assert np.all((tr.demand - N) % 2 == 0)


def test_zero_demand_is_possible_for_even_n():
    tr = run(GameConfig(N=2, m=1, S=2, steps=500, seed=0))
    assert (tr.demand == 0).any()
    zero = tr.demand == 0
    # step payoff: sgn(0)=0 leaves utilities unchanged
    sb = tr.scores_before()
    assert np.array_equal(tr.scores[zero], sb[zero])


def test_complement_pairs_are_zero_sum():
    tr = run(GameConfig(N=101, m=2, S=2, payoff="x", steps=500, seed=1))
    ids = np.arange(st.n_strategies(2))
    U = tr.utilities(ids)
    comp = np.array([st.complement(i, 2) for i in ids])
    assert np.array_equal(U + U[:, comp], np.zeros_like(U))


def test_identical_strategies_share_utility():
    state = new_game(GameConfig(N=301, m=1, S=2, seed=5))
    for _ in range(50):
        step(state)
    # one utility per id, whoever holds it
    for sid, u in zip(state.held, state.utilities):
        assert state.utility(int(sid)) == Fraction(int(u), state.scale)


def test_utility_bound_short_run():
    tr = run(GameConfig(N=401, m=1, S=2, steps=10**4, seed=11))
    assert tr.max_abs_utility() <= 2


def test_initial_history_override_and_x1_branching():
    # from all-zero utilities and history -1 the first minority is a coin flip over seeds
    firsts = [run(GameConfig(N=401, m=1, S=2, steps=1, seed=s, initial_history=0)).minority[0]
              for s in range(400)]
    p = np.mean(np.array(firsts) > 0)
    assert 0.4 < p < 0.6


def test_perturbed_init_is_distinct_and_stays_distinct():
    u0 = perturbed_initial_utilities(2)
    assert len(set(u0)) == 16
    tr = run(GameConfig(N=201, m=2, S=2, steps=2000, seed=2, initial_utilities=u0))
    U = tr.utilities(np.arange(16))
    assert all(len(set(row)) == 16 for row in U[::97])


def test_scaled_payoff_matches_proportional_choices():
    # dividing every utility by N does not change any comparison
    a = run(GameConfig(N=101, m=2, S=2, payoff="x", steps=1000, seed=8))
    b = run(GameConfig(N=101, m=2, S=2, payoff="x-over-n", steps=1000, seed=8))
    assert np.array_equal(a.demand, b.demand)
    assert np.array_equal(a.scores, b.scores)  # both kept in units of 1/N * N


def test_distinct_assignment_pairs_uniform():
    rng = GameRNG(0)
    s = st.assign_strategies(20000, 1, 2, rng, distinct=True)
    assert np.all(s[:, 0] != s[:, 1])
    pairs = Counter(tuple(sorted(r)) for r in s.tolist())
    assert len(pairs) == 6
    n = len(s)
    sigma = np.sqrt(n * (1 / 6) * (5 / 6))
    assert all(abs(c - n / 6) < 3.5 * sigma for c in pairs.values())


def test_distinct_full_set():
    s = st.assign_strategies(50, 1, 4, GameRNG(1), distinct=True)
    assert all(sorted(r) == [0, 1, 2, 3] for r in s.tolist())


def test_expected_holders():
    assert st.expected_holders(1601, 2, 2) == pytest.approx(1601 * 31 / 256)  # ~194
    s = st.assign_strategies(1601, 2, 2, GameRNG(3))
    holders = [np.any(s == k, axis=1).sum() for k in range(16)]
    assert np.mean(holders) == pytest.approx(194.0, rel=0.05)


def test_all_strategies_held_when_population_large():
    tr = run(GameConfig(N=1601, m=2, S=2, steps=1, seed=0))
    assert len(tr.held_ids()) == 16


def test_public_api():
    for name in ("GameConfig", "run", "new_game", "step", "Trace", "GameRNG", "Strategy"):
        assert hasattr(mgkit, name)


@settings(max_examples=25, deadline=None)
@given(N=hst.integers(1, 60), m=hst.integers(1, 3), S=hst.integers(2, 4),
       payoff_name=hst.sampled_from(["sgn", "x", "x-over-n"]), seed=hst.integers(0, 2**32))
def test_invariants_random_configs(N, m, S, payoff_name, seed):
    tr = run(GameConfig(N=N, m=m, S=S, payoff=payoff_name, steps=200, seed=seed))
    assert np.all((tr.demand - N) % 2 == 0)
    assert np.all(np.abs(tr.demand) <= N)
    assert np.array_equal(tr.minority[tr.demand != 0], -np.sign(tr.demand[tr.demand != 0]))
    assert np.array_equal(tr.history[1:], tr.history_after[:-1])
