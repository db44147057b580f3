"""Declarative experiment configuration for the command line.

The config file is flat `key = value` text: `#` starts a comment, lists are
comma-separated, booleans are true/false.  Any key can be overridden on the
command line with `--set key=value`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Tuple

from .encoding import CANONICAL_LENGTHS
from .game import GameConfig
from .mixnodes import MixStrategy, Poisson, Pool, Threshold


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 2."""


@dataclass
class ExperimentConfig:
    # population and node
    users: int = 100
    send_rate: float = 0.01
    strategy: str = "threshold"          # threshold | pool | poisson
    threshold: int = 100                 # batch trigger size n
    pool_count: int = 10                 # retained messages (pool strategy)
    mean_delay: float = 20.0             # poisson mean delay, seconds
    # game / dataset
    seq_length: int = 4096
    n_samples: int = 60
    splits: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    strict_exclusive: bool = False
    fixed_roles: bool = False
    # evaluation
    lengths: Tuple[int, ...] = (256, 512, 1024, 2048, 4096)
    # plain simulation
    duration: int = 5000
    # sweep grids
    thresholds: Tuple[int, ...] = tuple(range(10, 101, 10))
    lambdas: Tuple[float, ...] = tuple(float(x) for x in range(5, 51, 5))
    pool_counts: Tuple[int, ...] = (0, 10)
    rounds_per_config: int = 120
    workers: int = 1
    # seeding
    master_seed: int = 7

    def build_strategy(self) -> MixStrategy:
        try:
            if self.strategy == "threshold":
                return Threshold(n=self.threshold)
            if self.strategy == "pool":
                return Pool(n=self.threshold, pool_count=self.pool_count)
            if self.strategy == "poisson":
                return Poisson(mean_delay=self.mean_delay)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown strategy {self.strategy!r}")

    def game_config(self) -> GameConfig:
        try:
            return GameConfig(
                n_users=self.users, send_rate=self.send_rate,
                strategy=self.build_strategy(), seq_length=self.seq_length,
                strict_exclusive=self.strict_exclusive, fixed_roles=self.fixed_roles)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> "ExperimentConfig":
        self.build_strategy()
        if self.users < 3:
            raise ConfigError("users must be at least 3")
        if self.send_rate <= 0:
            raise ConfigError("send_rate must be positive")
        if self.users * self.send_rate > 1.0 + 1e-9:
            raise ConfigError("users * send_rate must not exceed 1 message/second")
        if self.seq_length not in CANONICAL_LENGTHS:
            raise ConfigError(f"seq_length must be one of {CANONICAL_LENGTHS}")
        for length in self.lengths:
            if length not in CANONICAL_LENGTHS:
                raise ConfigError(f"evaluation lengths must be among {CANONICAL_LENGTHS}")
        if abs(sum(self.splits) - 1.0) > 1e-9 or len(self.splits) != 3:
            raise ConfigError("splits must be three ratios summing to 1")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.n_samples < 3:
            raise ConfigError("n_samples must be at least 3")
        if self.rounds_per_config < 2:
            raise ConfigError("rounds_per_config must be at least 2")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        for n in self.thresholds:
            if n < 1:
                raise ConfigError("sweep thresholds must be positive")
        for lam in self.lambdas:
            if lam <= 0:
                raise ConfigError("sweep delays must be positive")
        for pc in self.pool_counts:
            if pc < 0:
                raise ConfigError("pool counts must be non-negative")
        return self

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def _parse_scalar(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _coerce(name: str, raw: str, template: ExperimentConfig):
    current = getattr(template, name)
    if isinstance(current, tuple):
        items = [p for p in (s.strip() for s in raw.split(",")) if p]
        return tuple(_parse_scalar(p) for p in items)
    if isinstance(current, bool):
        value = _parse_scalar(raw)
        if not isinstance(value, bool):
            raise ConfigError(f"{name} expects true or false, got {raw!r}")
        return value
    if isinstance(current, int):
        value = _parse_scalar(raw)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} expects an integer, got {raw!r}")
        return value
    if isinstance(current, float):
        value = _parse_scalar(raw)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} expects a number, got {raw!r}")
        return float(value)
    return raw.strip()


def parse_assignments(pairs: List[str], base: ExperimentConfig) -> ExperimentConfig:
    """Apply `key=value` strings on top of a base config."""
    known = {f.name for f in fields(base)}
    updates = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"expected key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        key = key.strip()
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _coerce(key, raw, base)
    return replace(base, **updates)


def load_config(path: Path) -> ExperimentConfig:
    """Parse a key=value config file into an ExperimentConfig (not yet validated)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    assignments = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        assignments.append(stripped)
    return parse_assignments(assignments, ExperimentConfig())
