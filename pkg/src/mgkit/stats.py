"""Time-series statistics of demand and utility traces."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import strategies as st
from .game import Payoff

DEFAULT_PERIOD_TOLERANCE = 0.05


@dataclass
class AutocorrelationResult:
    lags: np.ndarray
    r: np.ndarray
    degenerate: bool = False

    def argmax(self, min_lag: int = 1) -> int:
        """Lag of the largest ``r`` with ``lag >= min_lag`` (first one on ties)."""
        if self.degenerate:
            raise ValueError("autocorrelation undefined for a constant series")
        return int(self.lags[min_lag + int(np.argmax(self.r[min_lag:]))])


def _as_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not np.isfinite(x).all():
        raise ValueError("series contains non-finite values")
    return x


def autocorrelation(series, tau_max: int, strict: bool = True) -> AutocorrelationResult:
    """Biased mean-centred estimator ``r(tau) = c(tau) / c(0)`` for ``0..tau_max``.

    ``c(tau) = sum_t (x_t - mean)(x_{t+tau} - mean)``, computed by FFT.
    """
    x = _as_series(series)
    if tau_max < 0:
        raise ValueError("tau_max must be >= 0")
    if strict and len(x) < 10 * tau_max:
        raise ValueError(f"series of length {len(x)} too short for tau_max={tau_max} (need 10x)")
    tau_max = min(tau_max, len(x) - 1)
    lags = np.arange(tau_max + 1)
    d = x - x.mean()
    c0 = float(d @ d)
    if c0 == 0:
        r = np.full(tau_max + 1, np.nan)
        r[0] = 1.0
        return AutocorrelationResult(lags, r, degenerate=True)
    n = len(d)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, size)
    c = np.fft.irfft(f * np.conj(f), size)[: tau_max + 1]
    r = c / c[0]
    r[0] = 1.0
    return AutocorrelationResult(lags, np.clip(r, -1.0, 1.0))


def dominant_period(acf: AutocorrelationResult, tol: float = DEFAULT_PERIOD_TOLERANCE) -> int:
    """Smallest lag ``>= 1`` whose ``r`` is within ``tol`` of the maximum over ``lag >= 1``.

    The harmonics of a periodic signal have nearly equal ``r``, so the plain
    argmax over a long lag range lands on a random multiple of the period.
    """
    if acf.degenerate:
        raise ValueError("autocorrelation undefined for a constant series")
    r = acf.r[1:]
    top = r.max()
    return int(acf.lags[1 + int(np.flatnonzero(r >= top - tol)[0])])


def block_bootstrap_band(series, tau_max: int, block: int = 1000, n_boot: int = 200,
                         level: float = 0.95, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise moving-block bootstrap band for ``r(tau)``."""
    x = _as_series(series)
    if len(x) < 2 * block:
        raise ValueError("series too short for the block size")
    rng = np.random.default_rng(seed)
    n_blocks = len(x) // block
    starts_max = len(x) - block
    out = np.empty((n_boot, tau_max + 1))
    for b in range(n_boot):
        starts = rng.integers(0, starts_max + 1, n_blocks)
        xb = np.concatenate([x[s:s + block] for s in starts])
        out[b] = autocorrelation(xb, tau_max, strict=False).r
    a = (1 - level) / 2
    return np.quantile(out, a, axis=0), np.quantile(out, 1 - a, axis=0)


def lagged_pairs(series, lag: int) -> list[tuple]:
    """Aligned pairs ``(x_t, x_{t+lag})``."""
    x = list(series)
    if not 0 <= lag < len(x):
        raise ValueError("lag must be in [0, len(series))")
    return list(zip(x[: len(x) - lag], x[lag:]))


def lagged_correlation(series, lag: int) -> float:
    x = _as_series(series)
    return float(np.corrcoef(x[:-lag], x[lag:])[0, 1])


@dataclass
class LevelClusters:
    centers: np.ndarray  # sorted by occupancy, largest first
    occupancy: np.ndarray  # fraction of samples per center's bin
    bin_width: float


def level_clustering(series, k_max: int = 5, bin_width: float | None = None, N: int | None = None) -> LevelClusters:
    """Preferred values of a series as local maxima of its histogram.

    The bin width defaults to ``N / 100`` (or a hundredth of the range when
    ``N`` is not given).  The ``k_max`` most occupied local modes are kept,
    each refined to the mean of the samples in its bin and the two
    neighbouring bins.
    """
    x = _as_series(series)
    lo, hi = x.min(), x.max()
    if bin_width is None:
        span = N if N is not None else (hi - lo)
        bin_width = max(span / 100, 1.0)
    if hi == lo:
        return LevelClusters(np.array([lo]), np.array([1.0]), bin_width)
    # bins centred on multiples of bin_width so 0 sits mid-bin
    first = np.floor(lo / bin_width - 0.5)
    last = np.ceil(hi / bin_width + 0.5)
    edges = (np.arange(first, last + 1) + 0.5) * bin_width
    hist, edges = np.histogram(x, bins=edges)
    mids = (edges[:-1] + edges[1:]) / 2
    padded = np.concatenate([[-1], hist, [-1]])
    is_mode = (hist > 0) & (hist >= padded[:-2]) & (hist > padded[2:])
    idx = np.flatnonzero(is_mode)
    order = idx[np.argsort(-hist[idx], kind="stable")][:k_max]
    xs = np.sort(x)
    centers = np.empty(len(order))
    for k, b in enumerate(order):
        lo_i, hi_i = np.searchsorted(xs, [edges[max(b - 1, 0)], edges[min(b + 2, len(edges) - 1)]])
        centers[k] = xs[lo_i:hi_i].mean()
    return LevelClusters(centers, hist[order] / len(x), bin_width)


@dataclass
class UtilityAudit:
    max_abs_utility: Fraction
    bound: int
    applicable: bool
    passed: bool | None
    attained: bool | None


def utility_bound_audit(trace) -> UtilityAudit:
    """Check ``max |U| <= 2**m`` over every strategy and step (step payoff only)."""
    bound = st.n_histories(trace.m)
    mx = trace.max_abs_utility()
    if Payoff(trace.config.payoff) is not Payoff.STEP:
        return UtilityAudit(mx, bound, False, None, None)
    return UtilityAudit(mx, bound, True, mx <= bound, mx == bound)


def mean_reversion_stat(utility_series) -> float:
    """Lag-1 autocorrelation of the increments; negative means mean reversion."""
    x = _as_series(utility_series)
    if len(x) < 100:
        raise ValueError("need at least 100 values")
    d = np.diff(x)
    d = d - d.mean()
    den = float(d @ d)
    if den == 0:
        return 0.0
    return float(np.clip((d[:-1] @ d[1:]) / den, -1.0, 1.0))
