"""Seed sweeps that compare simulations with the closed forms and the chain."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import debruijn as db
from . import levels, markov, stats
from . import strategies as st
from .config import ExperimentSpec
from .game import GameConfig, Payoff, run
from .trace import atomic_write


@dataclass
class CheckRow:
    claim: str
    predicted: object
    measured: object
    tolerance: object
    passed: bool | None  # None: informational, not part of the exit status
    note: str = ""


@dataclass
class CrossCheckReport:
    config_hash: str
    seeds: list
    rows: list = field(default_factory=list)

    def add(self, *args, **kw) -> CheckRow:
        row = CheckRow(*args, **kw)
        if any(r.claim == row.claim for r in self.rows):
            raise ValueError(f"duplicate claim {row.claim}")
        self.rows.append(row)
        return row

    def row(self, claim: str) -> CheckRow:
        return next(r for r in self.rows if r.claim == claim)

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.rows)

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "seeds": self.seeds, "passed": self.passed,
                "rows": [asdict(r) for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, default=_jsonable)

    def lines(self) -> list[str]:
        out = []
        for r in self.rows:
            tag = {True: "PASS", False: "FAIL", None: "INFO"}[r.passed]
            out.append(f"{tag} {r.claim}: measured={_fmt(r.measured)} predicted={_fmt(r.predicted)} "
                       f"tol={_fmt(r.tolerance)}" + (f" ({r.note})" if r.note else ""))
        return out


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.4g}"
    if isinstance(x, (list, tuple)) and len(x) > 8:
        return f"[{len(x)} values]"
    return json.dumps(x, default=_jsonable) if not isinstance(x, str) else x


# ---------------------------------------------------------------- m = 1 reference

# canonical m=1 states (history as +/-1, utilities of ids 0..3), their
# stationary probabilities and expected demand per agent
M1_REFERENCE = [
    (-1, (0, 0, 0, 0), Fraction(1, 8), Fraction(0)),
    (1, (0, 0, 0, 0), Fraction(1, 8), Fraction(0)),
    (1, (-1, -1, 1, 1), Fraction(1, 8), Fraction(0)),
    (-1, (1, -1, 1, -1), Fraction(1, 8), Fraction(0)),
    (-1, (0, -2, 2, 0), Fraction(1, 16), Fraction(3, 8)),
    (1, (0, -2, 2, 0), Fraction(1, 16), Fraction(-3, 8)),
    (1, (-2, 0, 0, 2), Fraction(1, 16), Fraction(3, 8)),
    (-1, (2, 0, 0, -2), Fraction(1, 16), Fraction(-3, 8)),
    (-1, (-1, -1, 1, 1), Fraction(1, 16), Fraction(1, 2)),
    (1, (1, -1, 1, -1), Fraction(1, 16), Fraction(-1, 2)),
    (-1, (1, 1, -1, -1), Fraction(1, 16), Fraction(-1, 2)),
    (1, (-1, 1, -1, 1), Fraction(1, 16), Fraction(1, 2)),
]


def m1_reference_states() -> list[markov.ChainState]:
    return [markov.ChainState(st.encode_history([h]), u) for h, u, _, _ in M1_REFERENCE]


# ---------------------------------------------------------------- sweeps


def simulate_seed(config: GameConfig, out_dir: Path | None):
    trace = run(config)
    if out_dir is not None:
        trace.to_csv(Path(out_dir) / f"seed_{config.seed}" / "trace.csv")
    return trace


def run_seeds(spec: ExperimentSpec, write: bool = True) -> list:
    configs = [spec.config_for_seed(s) for s in spec.seeds]
    out = spec.output_dir if write else None
    if spec.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(spec.jobs) as ex:
            return list(ex.map(simulate_seed, configs, [out] * len(configs)))
    return [simulate_seed(c, out) for c in configs]


def run_experiment(spec: ExperimentSpec, write: bool = True) -> CrossCheckReport:
    """Simulate every seed, run the enabled analyses and write ``report.json``."""
    traces = run_seeds(spec, write)
    report = CrossCheckReport(spec.game.hash(), list(spec.seeds))
    for name, fn in _ANALYSES:
        if name in spec.analyses:
            fn(spec, traces, report)
    if write:
        atomic_write(Path(spec.output_dir) / "report.json", report.to_json() + "\n")
    return report


def _period(m: int) -> int:
    return 2 * st.n_histories(m)


def _autocorr(spec, traces, report):
    T = _period(spec.game.m)
    tau_max = spec.tau_max or 4 * T
    found = []
    for tr in traces:
        acf = stats.autocorrelation(tr.demand, tau_max, strict=False)
        found.append(None if acf.degenerate else stats.dominant_period(acf))
    hits = sum(f == T for f in found)
    need = math.ceil(0.9 * len(traces))
    report.add("autocorr_period", T, found, f">= {need}/{len(traces)} seeds", hits >= need,
               note=f"{hits}/{len(traces)} seeds")


def _scatter(spec, traces, report):
    T = _period(spec.game.m)
    r = [stats.lagged_correlation(tr.demand, T) for tr in traces]
    report.add("lagged_correlation", "> 0", float(np.mean(r)), None, all(x > 0 for x in r))


def _levels(spec, traces, report):
    N, m = spec.game.N, spec.game.m
    bw = spec.level_bin_width or math.sqrt(N)
    pooled = np.concatenate([tr.demand for tr in traces])
    c = stats.level_clustering(pooled, 5, bin_width=bw)
    centers = sorted(float(x) / N for x in c.centers)
    if spec.game.payoff is Payoff.STEP and m == 1 and spec.game.S == 2:
        target = sorted({float(ea) for *_, ea in M1_REFERENCE})
        ok = len(centers) == 5 and all(abs(a - b) <= 0.05 for a, b in zip(centers, target))
        report.add("m1_demand_levels", target, centers, 0.05, ok, note="fractions of N, pooled seeds")
    else:
        report.add("demand_levels", None, centers, None, None, note="fractions of N, pooled seeds")


def _markov(spec, traces, report):
    m, S = spec.game.m, spec.game.S
    if m > markov.MAX_EXACT_MEMORY:
        g = markov.extract_state_graph(traces)
        report.add("chain_states_observed", None, len(g), None, None,
                   note=f"{len(g.low_confidence)} low-confidence states")
        return
    chain = markov.enumerate_chain(m, S)
    classes = markov.closed_classes(chain)
    if m == 1 and S == 2:
        dist = markov.stationary(chain)
        idx = chain.index()
        ref = m1_reference_states()
        got = [(dist.pi[idx[s]], chain.expected_action[idx[s]]) if s in idx else None for s in ref]
        exp = [(p, ea) for *_, p, ea in M1_REFERENCE]
        report.add("m1_stationary", [str(p) for p, _ in exp], [str(g[0]) if g else None for g in got], 0,
                   len(chain) == 12 and [g[0] if g else None for g in got] == [p for p, _ in exp])
        report.add("m1_demand", [str(e) for _, e in exp], [str(g[1]) if g else None for g in got], 0,
                   [g[1] if g else None for g in got] == [e for _, e in exp], note="fractions of N")
        pm = {tau: markov.period_match_probability(chain, dist, tau) for tau in range(1, 17)}
        best = max(pm.values())
        report.add("period_match_max", {"tau": 4, "value": "7/16"},
                   {"tau": min(t for t, v in pm.items() if v == best), "value": str(best), "at_tau_4": str(pm[4])},
                   0, pm[4] == Fraction(7, 16) and best == Fraction(7, 16))
        # simulation agreement, pooled over seeds
        if spec.game.initial_utilities is None:
            emp = markov.visit_frequencies(markov.extract_state_graph(traces))
            dev = max(abs(float(emp.get(s, 0)) - float(p)) for s, (p, _) in zip(ref, exp))
            report.add("chain_agreement", 0.0, dev, 0.01, dev <= 0.01,
                       note="max |empirical - stationary| over the 12 states")
    else:
        report.add("chain_states", None, len(chain), None, None,
                   note=f"{len(classes)} closed classes of sizes {[len(c) for c in classes]}")


def _audit(spec, traces, report):
    if spec.game.payoff is not Payoff.STEP:
        mx = max(tr.max_abs_utility() for tr in traces)
        report.add("utility_max", None, str(mx), None, None)
        return
    audits = [stats.utility_bound_audit(tr) for tr in traces]
    mx = max(a.max_abs_utility for a in audits)
    bound = st.n_histories(spec.game.m)
    report.add("utility_bound", bound, str(mx), 0, all(a.passed for a in audits),
               note=f"attained in {sum(bool(a.attained) for a in audits)}/{len(audits)} runs")


def _debruijn(spec, traces, report):
    m = spec.game.m
    g = db.build_graph(m, spec.game.max_m)
    res = db.euler_trails(g)
    best = db.count_euler_circuits(g)
    report.add("euler_count", best, res.count, 0, res.count == best, note=res.method)
    burn = spec.burn_in if spec.burn_in is not None else db.default_burn_in(m)
    fr = [db.verify_eulerian_following(tr, burn) for tr in traces]
    deterministic = spec.game.payoff is not Payoff.STEP or spec.game.initial_utilities is not None
    report.add("euler_following", 0.95, float(np.mean(fr)), ">=", float(np.mean(fr)) >= 0.95 if deterministic else None)


def _peaks(spec, traces, report):
    cfg = spec.game
    if cfg.payoff is Payoff.STEP:
        report.add("peaks", None, None, None, None, note="peak analysis needs a proportional payoff")
        return
    reps = [db.analyze_peaks(tr, spec.peak_threshold, spec.burn_in) for tr in traces]
    n_peaks = sum(len(r.peak_times) for r in reps)
    steps = sum(r.steps for r in reps)
    f = n_peaks / steps if steps else 0.0
    f0 = 1 / st.n_histories(cfg.m)
    report.add("peak_frequency", f0, f, "20%", abs(f - f0) <= 0.2 * f0)
    if n_peaks:
        h = float(np.mean(np.concatenate([np.abs(r.heights) for r in reps if r.heights])))
        h0 = float(levels.expected_peak_height(cfg.N, cfg.S))
        report.add("peak_height", h0, h, "5%", abs(h - h0) <= 0.05 * h0)
        alt = sum(r.alternating_pairs for r in reps)
        pairs = sum(r.same_history_pairs for r in reps)
        report.add("peak_alternation", 0.95, alt / pairs if pairs else None, ">=",
                   (alt / pairs >= 0.95) if pairs else False)
        report.add("critical_history", None, [r.critical_history for r in reps], None, None,
                   note=f"single history in {sum(r.critical_is_unique for r in reps)}/{len(reps)} runs")
        splits = [db.utility_split_check(tr, r) for tr, r in zip(traces, reps)]
        frac = np.mean([s.group_fractions for s in splits], axis=0)
        pred = [float(x) for x in splits[0].predicted_fractions]
        report.add("population_split", pred, frac.round(4).tolist(), 0.03,
                   bool(np.all(np.abs(frac - pred) <= 0.03)))
    else:
        report.add("peak_height", float(levels.expected_peak_height(cfg.N, cfg.S)), None, "5%", False,
                   note="no peaks found")


_ANALYSES = [
    ("timeseries", lambda spec, traces, report: None),
    ("markov", _markov),
    ("levels", _levels),
    ("autocorr", _autocorr),
    ("scatter", _scatter),
    ("audit", _audit),
    ("debruijn", _debruijn),
    ("peaks", _peaks),
]
