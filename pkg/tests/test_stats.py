import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst
from hypothesis.extra.numpy import arrays

from mgkit import GameConfig, run
from mgkit import stats


def brute_acf(x, tau_max):
    d = np.asarray(x, float) - np.mean(x)
    c0 = d @ d
    return np.array([d[: len(d) - k] @ d[k:] / c0 for k in range(tau_max + 1)])


def test_period_four_series():
    x = np.tile([3.0, 1.0, -2.0, -2.0], 500)
    acf = stats.autocorrelation(x, 16)
    assert acf.r[0] == 1.0
    assert stats.dominant_period(acf) == 4
    assert acf.r[4] == pytest.approx(1.0, abs=0.01)


def test_dominant_period_picks_fundamental():
    # the harmonics at 8, 12, ... are nearly as high as lag 4
    rng = np.random.default_rng(0)
    x = np.tile([1.0, -1.0, 1.0, 1.0], 2000) + 0.3 * rng.standard_normal(8000)
    acf = stats.autocorrelation(x, 32)
    assert stats.dominant_period(acf) == 4
    assert acf.argmax() % 4 == 0


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, hst.integers(20, 200), elements=hst.floats(-100, 100, allow_nan=False)))
def test_fft_matches_direct_sum(x):
    acf = stats.autocorrelation(x, 1, strict=False)
    if acf.degenerate:
        return
    assert np.allclose(acf.r, np.clip(brute_acf(x, 1), -1, 1), atol=1e-9)
    tau = min(len(x) // 10, 8)
    full = stats.autocorrelation(x, tau)
    assert np.allclose(full.r, np.clip(brute_acf(x, tau), -1, 1), atol=1e-9)
    # time reversal leaves the estimator unchanged
    assert np.allclose(stats.autocorrelation(x[::-1], tau).r, full.r, atol=1e-9)
    assert np.all(np.abs(full.r) <= 1)


def test_constant_series_is_degenerate():
    acf = stats.autocorrelation(np.full(100, 7.0), 5)
    assert acf.degenerate and acf.r[0] == 1.0 and np.isnan(acf.r[1])
    with pytest.raises(ValueError):
        stats.dominant_period(acf)
    with pytest.raises(ValueError):
        acf.argmax()


def test_autocorrelation_input_checks():
    with pytest.raises(ValueError, match="too short"):
        stats.autocorrelation(np.arange(50.0), 10)
    with pytest.raises(ValueError):
        stats.autocorrelation([1.0, np.nan, 2.0], 1, strict=False)
    with pytest.raises(ValueError):
        stats.autocorrelation(np.ones((3, 3)), 1, strict=False)
    with pytest.raises(ValueError):
        stats.autocorrelation(np.arange(50.0), -1)


def test_bootstrap_band_contains_zero_for_noise():
    x = np.random.default_rng(1).standard_normal(5000)
    lo, hi = stats.block_bootstrap_band(x, 5, block=500, n_boot=50)
    assert np.all(lo[1:] < 0.05) and np.all(hi[1:] > -0.05)
    assert np.all(lo <= hi)


def test_lagged_pairs():
    assert stats.lagged_pairs([1, 2, 3, 4], 2) == [(1, 3), (2, 4)]
    assert stats.lagged_pairs([1, 2], 0) == [(1, 1), (2, 2)]
    with pytest.raises(ValueError):
        stats.lagged_pairs([1, 2], 2)


def test_lagged_correlation_of_periodic_series():
    x = np.tile([1.0, 2.0, -3.0, 0.5], 100)
    assert stats.lagged_correlation(x, 4) == pytest.approx(1.0)


# ---------------------------------------------------------------- levels


def test_level_clustering_finds_planted_levels():
    rng = np.random.default_rng(2)
    levels = np.array([-200.0, -150.0, 0.0, 150.0, 200.0])
    x = rng.choice(levels, 50000, p=[0.1, 0.1, 0.4, 0.2, 0.2]) + rng.normal(0, 5, 50000)
    c = stats.level_clustering(x, 5, bin_width=20)
    assert np.allclose(np.sort(c.centers), levels, atol=2)
    assert c.centers[0] == pytest.approx(0, abs=2)  # most occupied first
    assert np.all(np.diff(c.occupancy) <= 0)


def test_level_clustering_constant_and_defaults():
    c = stats.level_clustering(np.full(10, 3.0))
    assert c.centers.tolist() == [3.0]
    assert stats.level_clustering(np.arange(100.0), N=500).bin_width == 5.0
    assert len(stats.level_clustering(np.arange(100.0), k_max=2).centers) <= 2


# ---------------------------------------------------------------- utilities


def test_mean_reversion_signs():
    rng = np.random.default_rng(3)
    walk = np.cumsum(rng.choice([-1, 1], 20000))
    assert abs(stats.mean_reversion_stat(walk)) < 0.03
    alt = np.tile([0, 1], 500)
    assert stats.mean_reversion_stat(alt) == pytest.approx(-1, abs=0.01)
    assert stats.mean_reversion_stat(np.zeros(200)) == 0.0
    with pytest.raises(ValueError):
        stats.mean_reversion_stat(np.zeros(10))


def test_step_payoff_utilities_mean_revert():
    tr = run(GameConfig(N=401, m=1, S=2, steps=20000, seed=0))
    U = tr.utilities([0, 1, 2, 3])
    assert all(stats.mean_reversion_stat(U[:, k]) < 0 for k in range(4))


def test_utility_bound_audit():
    tr = run(GameConfig(N=401, m=2, S=2, steps=20000, seed=0))
    a = stats.utility_bound_audit(tr)
    assert a.applicable and a.passed and a.bound == 4
    b = stats.utility_bound_audit(run(GameConfig(N=401, m=2, S=2, payoff="x", steps=100, seed=0)))
    assert not b.applicable and b.passed is None
