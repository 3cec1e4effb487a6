"""Key-value experiment files and their validation.

A config file holds one ``key = value`` pair per line; ``#`` starts a
comment.  Command-line flags are merged on top of the file (flags win).

Example::

    N = 401
    m = 1
    S = 2
    payoff = sgn
    steps = 100000
    seeds = 0-19
    analyses = markov, levels, audit
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import strategies as st
from .game import GameConfig, Payoff, perturbed_initial_utilities

OUTPUT_DIR_ENV = "MGKIT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "mgkit-out"

ANALYSES = frozenset({"timeseries", "autocorr", "scatter", "levels", "markov", "debruijn", "peaks", "audit"})
STEP_ONLY = frozenset({"markov", "audit"})

REQUIRED = ("N", "m", "S", "payoff", "steps")
ALIASES = {
    "agents": "N",
    "memory": "m",
    "strategies_per_agent": "S",
    "strategies-per-agent": "S",
    "out": "output_dir",
}
KNOWN = frozenset(REQUIRED) | {
    "seed", "seeds", "analyses", "output_dir", "init", "initial_history", "distinct_strategies",
    "burn_in", "peak_threshold", "tau_max", "level_bin_width", "jobs", "max_m",
}


class ConfigError(ValueError):
    def __init__(self, key: str | None, message: str):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


@dataclass(frozen=True)
class ExperimentSpec:
    game: GameConfig
    analyses: frozenset
    seeds: tuple
    output_dir: Path
    burn_in: int | None = None
    peak_threshold: float | None = None
    tau_max: int | None = None
    level_bin_width: float | None = None
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def config_for_seed(self, seed: int) -> GameConfig:
        return replace(self.game, seed=seed)


def read_key_values(path) -> dict:
    """Raw ``key -> value`` strings from a config file."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(None, f"{path}:{lineno}: expected 'key = value', got {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            k = ALIASES.get(k, k)
            if k in out:
                raise ConfigError(k, f"{path}:{lineno}: duplicate key")
            out[k] = v
    return out


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"3"``, ``"0,1,5"`` or ``"0-19"`` (inclusive ranges may be mixed)."""
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            try:
                lo, hi = int(a), int(b)
            except ValueError:
                raise ConfigError("seeds", f"bad range {part!r}") from None
            if hi < lo:
                raise ConfigError("seeds", f"empty range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            try:
                seeds.append(int(part))
            except ValueError:
                raise ConfigError("seeds", f"bad seed {part!r}") from None
    if not seeds:
        raise ConfigError("seeds", "no seeds given")
    return tuple(seeds)


def _int(d: dict, key: str, default=None):
    if key not in d or d[key] is None:
        return default
    try:
        return int(d[key])
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected an integer, got {d[key]!r}") from None


def _float(d: dict, key: str):
    if key not in d or d[key] is None:
        return None
    try:
        return float(d[key])
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {d[key]!r}") from None


def _bool(d: dict, key: str) -> bool:
    v = str(d.get(key, "false")).lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {d[key]!r}")


def build_spec(values: dict) -> ExperimentSpec:
    """Validate merged raw values into an :class:`ExperimentSpec`."""
    values = {ALIASES.get(k, k): v for k, v in values.items() if v is not None}
    unknown = sorted(set(values) - KNOWN)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for k in REQUIRED:
        if k not in values:
            raise ConfigError(k, "missing required key")
    N, m, S, steps = (_int(values, k) for k in ("N", "m", "S", "steps"))
    if N < 1:
        raise ConfigError("N", f"must be >= 1, got {N}")
    if m < 1:
        raise ConfigError("m", f"must be >= 1, got {m}")
    if S < 2:
        raise ConfigError("S", f"must be >= 2, got {S}")
    if steps < 1:
        raise ConfigError("steps", f"must be >= 1, got {steps}")
    try:
        payoff = Payoff(str(values["payoff"]))
    except ValueError:
        raise ConfigError("payoff", f"must be one of sgn, x, x-over-n; got {values['payoff']!r}") from None
    if "seeds" in values:
        seeds = parse_seeds(values["seeds"])
    else:
        seeds = (_int(values, "seed", 0),)
    analyses_raw = values.get("analyses", "timeseries")
    analyses = frozenset(a.strip() for a in str(analyses_raw).split(",") if a.strip())
    if not analyses:
        raise ConfigError("analyses", "at least one analysis is required")
    bad = sorted(analyses - ANALYSES)
    if bad:
        raise ConfigError("analyses", f"unknown analysis {bad[0]!r}; choose from {', '.join(sorted(ANALYSES))}")
    if payoff is not Payoff.STEP and "markov" in analyses:
        raise ConfigError("analyses", "markov enumeration supports the step payoff (sgn) only")
    max_m = _int(values, "max_m", st.DEFAULT_MAX_MEMORY)
    init = str(values.get("init", "zero"))
    if init == "zero":
        u0 = None
    elif init == "perturbed":
        st.check_memory(m, max_m)
        u0 = perturbed_initial_utilities(m)
    else:
        raise ConfigError("init", f"must be 'zero' or 'perturbed', got {init!r}")
    try:
        game = GameConfig(
            N=N, m=m, S=S, payoff=payoff, steps=steps, seed=seeds[0], initial_utilities=u0,
            initial_history=_int(values, "initial_history"),
            distinct_strategies=_bool(values, "distinct_strategies"), max_m=max_m,
        )
    except ValueError as exc:
        raise ConfigError(None, str(exc)) from exc
    out = values.get("output_dir") or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR
    jobs = _int(values, "jobs", 1)
    if jobs < 1:
        raise ConfigError("jobs", "must be >= 1")
    return ExperimentSpec(
        game=game, analyses=analyses, seeds=seeds, output_dir=Path(out),
        burn_in=_int(values, "burn_in"), peak_threshold=_float(values, "peak_threshold"),
        tau_max=_int(values, "tau_max"), level_bin_width=_float(values, "level_bin_width"), jobs=jobs,
    )


def parse_config(path, overrides: dict | None = None) -> ExperimentSpec:
    """Read ``path`` and apply ``overrides`` (e.g. command-line flags) on top."""
    values = read_key_values(path)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[ALIASES.get(k, k)] = v
    return build_spec(values)
