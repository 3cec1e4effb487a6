"""Command-line driver: ``mgkit {simulate,analyze,predict,markov,debruijn,check}``.

Game flags override values read from ``--config``.  The output directory
defaults to ``$MGKIT_OUTPUT_DIR`` (or ``./mgkit-out``) when ``--out`` is not
given.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import debruijn as db
from . import levels, markov, stats
from .config import DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV, ConfigError, build_spec, read_key_values
from .experiment import run_experiment, run_seeds
from .game import Payoff
from .trace import Trace, atomic_write


def _game_flags(p: argparse.ArgumentParser, analyses: bool = False) -> None:
    p.add_argument("--config", type=Path, help="key = value experiment file (flags win)")
    p.add_argument("--agents", "-N", type=int, dest="N")
    p.add_argument("--memory", "-m", type=int, dest="m")
    p.add_argument("--strategies-per-agent", "-S", type=int, dest="S")
    p.add_argument("--payoff", choices=[x.value for x in Payoff])
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="e.g. 0-19 or 1,2,5")
    p.add_argument("--init", choices=["zero", "perturbed"])
    p.add_argument("--out", dest="output_dir", help=f"output directory (default ${OUTPUT_DIR_ENV} or ./{DEFAULT_OUTPUT_DIR})")
    p.add_argument("--jobs", type=int)
    if analyses:
        p.add_argument("--analyses", help="comma list of timeseries,autocorr,scatter,levels,markov,debruijn,peaks,audit")


_FLAG_KEYS = ("N", "m", "S", "payoff", "steps", "seed", "seeds", "init", "output_dir", "jobs", "analyses")
_DEFAULTS = {"S": "2", "payoff": "sgn", "steps": "1000"}


def _spec_from_args(args, defaults: dict | None = None):
    values = dict(defaults or {})
    if args.config is not None:
        values.update(read_key_values(args.config))
    for k in _FLAG_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = str(v)
    if args.seed is not None and args.seeds is None:
        values.pop("seeds", None)
    return build_spec(values)


def _write_or_print(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write(path, text)
        print(f"wrote {path}", file=sys.stderr)


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args, _DEFAULTS)
    traces = run_seeds(spec, write=True)
    for s, tr in zip(spec.seeds, traces):
        print(f"seed {s}: {len(tr)} steps, mean A={tr.demand.mean():.3f}, "
              f"var(A)/N={tr.demand.var() / tr.N:.3f} -> {spec.output_dir / f'seed_{s}' / 'trace.csv'}")
    return 0


def cmd_analyze(args) -> int:
    out = {}
    for path in args.traces:
        tr = Trace.from_csv(path)
        m, N = tr.m, tr.N
        T = 2 * (1 << m)
        res: dict = {"config_hash": tr.config.hash(), "steps": len(tr)}
        acf = stats.autocorrelation(tr.demand, args.tau_max or 4 * T, strict=False)
        res["autocorrelation"] = {"r": acf.r.round(6).tolist(), "degenerate": acf.degenerate}
        if not acf.degenerate:
            res["autocorrelation"]["dominant_period"] = stats.dominant_period(acf)
        lv = stats.level_clustering(tr.demand, 5, bin_width=args.bin_width, N=N)
        res["levels"] = {"centers": lv.centers.tolist(), "occupancy": lv.occupancy.tolist(), "bin_width": lv.bin_width}
        res["lagged_correlation"] = stats.lagged_correlation(tr.demand, T) if len(tr) > T + 1 else None
        audit = stats.utility_bound_audit(tr)
        res["utility_audit"] = {"max_abs_utility": str(audit.max_abs_utility), "bound": audit.bound,
                                "applicable": audit.applicable, "passed": audit.passed}
        if len(tr) >= T:
            res["euler_following"] = db.verify_eulerian_following(tr, min(db.default_burn_in(m), len(tr) - T))
        if tr.config.payoff is not Payoff.STEP:
            res["peaks"] = db.analyze_peaks(tr, args.threshold).to_dict()
        if tr.config.payoff is Payoff.STEP and tr.m <= 3:
            g = markov.extract_state_graph(tr)
            res["state_graph"] = {"states": len(g), "low_confidence": len(g.low_confidence),
                                  "max_out_degree": max(g.out_degrees())}
        out[str(path)] = res
    _write_or_print(json.dumps(out, indent=1) + "\n", args.json)
    return 0


def cmd_predict(args) -> int:
    pred = levels.predictions(args.m, args.S, args.N)
    _write_or_print(json.dumps(pred, indent=1) + "\n", args.json)
    return 0


def cmd_markov(args) -> int:
    chain = markov.enumerate_chain(args.m, args.S, max_states=args.max_states)
    classes = markov.closed_classes(chain)
    pi = None
    if len(classes) == 1 or args.component is not None:
        pi = markov.stationary(chain, args.component).pi
    else:
        print(f"{len(classes)} closed classes (sizes {[len(c) for c in classes]}); "
              "pass --component to solve one", file=sys.stderr)
    text = chain.to_dot(pi) if args.format == "dot" else chain.to_json(pi) + "\n"
    _write_or_print(text, args.output)
    return 0


def cmd_debruijn(args) -> int:
    g = db.build_graph(args.m)
    res = db.euler_trails(g, enumerate_max_m=args.enumerate_max_m)
    if args.format == "dot":
        text = g.to_dot()
    else:
        lines = [f"# de Bruijn graph m={g.m}: {len(g.nodes)} nodes, {len(g.edges)} edges",
                 f"# euler circuits up to rotation: {res.count} ({res.method}); edge-rooted: {res.raw_count}",
                 f"# homogeneous nodes: {list(db.homogeneous_nodes(g))}"]
        lines += [f"{s} {d} {e}" for s, d, e in g.edges]
        if res.trails is not None and args.trails:
            lines += [f"trail {t.label()}" for t in res.trails]
        text = "\n".join(lines) + "\n"
    _write_or_print(text, args.output)
    return 0


def cmd_check(args) -> int:
    spec = _spec_from_args(args, _DEFAULTS)
    report = run_experiment(spec, write=True)
    for line in report.lines():
        print(line)
    print(f"report: {spec.output_dir / 'report.json'}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mgkit", description="Minority game simulator and analyses")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run games and write trace CSVs")
    _game_flags(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("analyze", help="statistics of existing trace CSVs")
    s.add_argument("traces", nargs="+", type=Path)
    s.add_argument("--tau-max", type=int)
    s.add_argument("--bin-width", type=float)
    s.add_argument("--threshold", type=float, help="peak threshold (default 0.8 N (1 - 2^(1-S)))")
    s.add_argument("--json", help="output file (default stdout)")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("predict", help="closed-form predictions")
    s.add_argument("--memory", "-m", type=int, dest="m", required=True)
    s.add_argument("--strategies-per-agent", "-S", type=int, dest="S", default=2)
    s.add_argument("--agents", "-N", type=int, dest="N", default=1)
    s.add_argument("--json", help="output file (default stdout)")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("markov", help="exact Markov chain of the step-payoff game")
    s.add_argument("--memory", "-m", type=int, dest="m", required=True)
    s.add_argument("--strategies-per-agent", "-S", type=int, dest="S", default=2)
    s.add_argument("--payoff", choices=[x.value for x in Payoff], default="sgn")
    s.add_argument("--format", choices=["json", "dot"], default="json")
    s.add_argument("--component", type=int, help="closed class to solve when there are several")
    s.add_argument("--max-states", type=int, default=markov.DEFAULT_MAX_STATES)
    s.add_argument("--output", "-o", help="output file (default stdout)")
    s.set_defaults(func=cmd_markov)

    s = sub.add_parser("debruijn", help="de Bruijn graph and Euler circuits")
    s.add_argument("--memory", "-m", type=int, dest="m", required=True)
    s.add_argument("--format", choices=["edgelist", "dot"], default="edgelist")
    s.add_argument("--trails", action="store_true", help="list enumerated circuits")
    s.add_argument("--enumerate-max-m", type=int, default=db.MAX_ENUMERATION_MEMORY)
    s.add_argument("--output", "-o", help="output file (default stdout)")
    s.set_defaults(func=cmd_debruijn)

    s = sub.add_parser("check", help="simulate and cross-check against predictions")
    _game_flags(s, analyses=True)
    s.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "markov":
        try:
            markov.require_step_payoff(args.payoff)
        except ValueError as exc:
            parser.error(str(exc))
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"mgkit {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
