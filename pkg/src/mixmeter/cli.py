"""Command line front end.

Subcommands:

  simulate     run one mix deployment and dump the event trace
  gen-dataset  play repeated distinguishing games and write a token dataset
  metrics      evaluate the matching attack across observed lengths
  sweep        trade accuracy against latency over a strategy grid

Every run writes into a deterministic output directory derived from the
configuration hash, so repeating a command reproduces the same bytes.
Exit codes: 0 success, 2 bad configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, ExperimentConfig, load_config, parse_assignments
from .experiments import SweepPoint, collect_rounds, length_profile, profile_report, sweep_point
from .game import SPLIT_NAMES, split_sizes
from .mixnodes import MixNode
from .seeding import MASK_STREAM, SWEEP_STREAM, seed_key
from .storage import (config_hash, write_dataset, write_ledger_jsonl,
                      write_manifest, write_trace_csv)
from .traffic import Topology, assign_contacts, latency_stats, simulate


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.set:
        cfg = parse_assignments(args.set, cfg)
    return cfg.validate()


def _run_dir(args, cfg: ExperimentConfig, command: str) -> Path:
    if args.out:
        out = Path(args.out)
    else:
        digest = config_hash({"command": command, **cfg.to_dict()})[:12]
        out = Path("runs") / f"{command}-{digest}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    out = _run_dir(args, cfg, "simulate")
    topology = Topology.single_node(
        MixNode(cfg.build_strategy()), senders=range(cfg.users), receivers=range(cfg.users))
    population = assign_contacts(cfg.users, cfg.send_rate, cfg.master_seed)
    trace = simulate(topology, population, cfg.duration, cfg.master_seed)
    mean, std = latency_stats(trace)

    write_trace_csv(trace, out / "trace.csv")
    write_ledger_jsonl(trace, out / "ledger.jsonl")
    write_manifest({
        "command": "simulate",
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg.to_dict()),
        "events": len(trace.events),
        "observation_start": trace.observation_start,
        "messages_sent": len(trace.ledger),
        "messages_delivered": len([m for m in trace.ledger.values() if m.delivered is not None]),
        "latency_mean": mean,
        "latency_std": std,
        "link_map": topology.link_map(),
    }, out / "manifest.json")
    print(f"simulate: {len(trace.events)} events, latency {mean:.2f} +/- {std:.2f} s -> {out}")
    return 0


def cmd_gen_dataset(args) -> int:
    cfg = _resolve_config(args)
    out = _run_dir(args, cfg, "dataset")
    manifest = write_dataset(out, cfg.game_config(), cfg.n_samples, cfg.splits, cfg.master_seed)
    sizes = split_sizes(cfg.n_samples, cfg.splits)
    counts = ", ".join(f"{name}={n}" for name, n in zip(SPLIT_NAMES, sizes))
    print(f"gen-dataset: {cfg.n_samples} rounds ({counts}) -> {out}")
    print(f"config hash {manifest['config_hash'][:12]}")
    return 0


def cmd_metrics(args) -> int:
    from .reports import (length_profile_figure, write_length_profile_csv,
                          write_metrics_csv)
    cfg = _resolve_config(args)
    if any(length > cfg.seq_length for length in cfg.lengths):
        raise ConfigError("evaluation lengths cannot exceed seq_length")
    out = _run_dir(args, cfg, "metrics")
    records = collect_rounds(cfg.game_config(), cfg.n_samples, cfg.master_seed)
    eval_seed = seed_key(cfg.master_seed, MASK_STREAM)
    profile = length_profile(records, cfg.seq_length, cfg.lengths, eval_seed)
    report = profile_report(profile)

    write_metrics_csv(report, out / "metrics.csv")
    write_length_profile_csv(profile, out / "length_profile.csv")
    length_profile_figure(profile, out / "length_profile.png")
    write_manifest({
        "command": "metrics",
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg.to_dict()),
        "rounds": cfg.n_samples,
        "lengths": list(cfg.lengths),
        "accuracy": {str(n): profile[n].accuracy.accuracy for n in sorted(profile)},
    }, out / "manifest.json")
    for length in sorted(profile):
        sample = profile[length].accuracy
        lo, hi = sample.ci95
        print(f"length {length:>5}: accuracy {sample.accuracy:.3f} "
              f"[{lo:.3f}, {hi:.3f}]  eps {profile[length].eps_mean:.3f}")
    print(f"metrics -> {out}")
    return 0


def _sweep_grid(cfg: ExperimentConfig) -> List[dict]:
    grid: List[dict] = []
    for n in cfg.thresholds:
        grid.append({"family": "threshold", "param": n, "pool_count": None,
                     "strategy": "threshold", "threshold": n, "pool_count_cfg": 0})
    for pc in cfg.pool_counts:
        if pc <= 0:
            continue
        for n in cfg.thresholds:
            if n <= pc:
                continue
            grid.append({"family": "pool", "param": n, "pool_count": pc,
                         "strategy": "pool", "threshold": n, "pool_count_cfg": pc})
    for lam in cfg.lambdas:
        grid.append({"family": "poisson", "param": lam, "pool_count": None,
                     "strategy": "poisson", "threshold": cfg.threshold,
                     "pool_count_cfg": 0, "mean_delay": lam})
    return grid


def _sweep_task(payload) -> SweepPoint:
    cfg, spec, idx = payload
    point_cfg = replace(
        cfg, strategy=spec["strategy"], threshold=spec["threshold"],
        pool_count=spec["pool_count_cfg"], mean_delay=spec.get("mean_delay", cfg.mean_delay))
    master = seed_key(cfg.master_seed, SWEEP_STREAM, idx)
    eval_seed = seed_key(cfg.master_seed, SWEEP_STREAM, idx, MASK_STREAM)
    return sweep_point(
        spec["family"], spec["param"], spec["pool_count"],
        point_cfg.game_config(), cfg.rounds_per_config, master, eval_seed)


def cmd_sweep(args) -> int:
    from .reports import (accuracy_vs_latency_figure, latency_profile_figure,
                          write_sweep_csv)
    cfg = _resolve_config(args)
    out = _run_dir(args, cfg, "sweep")
    grid = _sweep_grid(cfg)
    payloads = [(cfg, spec, idx) for idx, spec in enumerate(grid)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            points = list(pool.map(_sweep_task, payloads))
    else:
        points = [_sweep_task(p) for p in payloads]

    write_sweep_csv(points, out / "sweep.csv")
    accuracy_vs_latency_figure(points, out / "accuracy_vs_latency.png")
    latency_profile_figure(points, out / "latency_profile.png")
    write_manifest({
        "command": "sweep",
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg.to_dict()),
        "points": len(points),
    }, out / "manifest.json")
    for p in points:
        tag = p.family if p.pool_count is None else f"{p.family}({p.pool_count})"
        print(f"{tag:>14} param {p.param:>6g}: accuracy {p.accuracy.accuracy:.3f}, "
              f"latency {p.latency_mean:.1f} s")
    print(f"sweep: {len(points)} grid points -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixmeter",
        description="Measure sender anonymity under batching and delay mixes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", type=Path, default=None,
                       help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: runs/<command>-<hash>)")

    p = sub.add_parser("simulate", help="run one deployment and dump the trace")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-dataset", help="write a labelled token dataset")
    common(p)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("metrics", help="attack accuracy and leakage by observed length")
    common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="accuracy/latency trade-off over a strategy grid")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive surface
        print(f"failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
