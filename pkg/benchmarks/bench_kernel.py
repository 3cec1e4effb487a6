"""Compiled kernel vs pure-Python loop on the same game.

    python3 benchmarks/bench_kernel.py [--steps 20000] [--repeat 3]

Both backends draw the same random numbers, so the traces are also compared
for bit identity.
"""

import argparse
import time

import numpy as np

from mgkit import GameConfig, run
from mgkit._kernel import HAVE_EXTENSION

CASES = [
    (401, 1, 2, "sgn"),
    (1601, 2, 2, "sgn"),
    (1601, 2, 2, "x"),
    (1601, 3, 4, "sgn"),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not HAVE_EXTENSION:
        print("compiled kernel not built; install with `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'N':>5} {'m':>2} {'S':>2} {'payoff':>7} {'C (s)':>8} {'Py (s)':>8} {'speedup':>8}  identical")
    for N, m, S, payoff in CASES:
        cfg = GameConfig(N=N, m=m, S=S, payoff=payoff, steps=args.steps, seed=1)
        tc, c = best_of(lambda: run(cfg, backend="c"), args.repeat)
        tp, p = best_of(lambda: run(cfg, backend="python"), 1)
        same = np.array_equal(c.demand, p.demand) and np.array_equal(c.scores, p.scores)
        print(f"{N:>5} {m:>2} {S:>2} {payoff:>7} {tc:8.3f} {tp:8.3f} {tp / tc:8.1f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
