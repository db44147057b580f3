"""On-disk formats: traces, ledgers, datasets, and run manifests.

Everything is line-delimited JSON or CSV with sorted keys and no wall-clock
fields, so a rerun under the same seed reproduces every byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .game import (GameConfig, GameInstance, RoundRecord, SPLIT_NAMES,
                   generate_rounds, split_sizes)
from .mixnodes import MixNode, MixStrategy, Poisson, Pool, Threshold
from .traffic import Topology, Trace

DATASET_FORMAT = "mix-game-dataset/1"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def config_hash(config_dict: dict) -> str:
    return sha256_hex(canonical_json(config_dict).encode())


def file_sha256(path: Path) -> str:
    return sha256_hex(Path(path).read_bytes())


# ---------------------------------------------------------------------- #
# strategies


def strategy_to_dict(strategy: MixStrategy) -> dict:
    if isinstance(strategy, Threshold):
        return {"kind": "threshold", "n": strategy.n}
    if isinstance(strategy, Pool):
        return {"kind": "pool", "n": strategy.n, "pool_count": strategy.pool_count}
    if isinstance(strategy, Poisson):
        return {"kind": "poisson", "mean_delay": strategy.mean_delay}
    raise TypeError(f"unknown strategy {strategy!r}")


def strategy_from_dict(d: dict) -> MixStrategy:
    kind = d.get("kind")
    if kind == "threshold":
        return Threshold(n=int(d["n"]))
    if kind == "pool":
        return Pool(n=int(d["n"]), pool_count=int(d["pool_count"]))
    if kind == "poisson":
        return Poisson(mean_delay=float(d["mean_delay"]))
    raise ValueError(f"unknown strategy kind {kind!r}")


# ---------------------------------------------------------------------- #
# trace / ledger / manifest


def write_trace_csv(trace: Trace, path: Path) -> None:
    lines = ["time,link_id,message_id"]
    for time, _layer, _gen, link, msg in trace.events:
        lines.append(f"{time!r},{link},{msg}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_ledger_jsonl(trace: Trace, path: Path) -> None:
    with Path(path).open("w") as fh:
        for mid in sorted(trace.ledger):
            rec = trace.ledger[mid]
            fh.write(canonical_json({
                "id": rec.id, "sender": rec.sender, "recipient": rec.recipient,
                "sent": rec.sent, "delivered": rec.delivered}) + "\n")


def write_manifest(manifest: dict, path: Path) -> None:
    Path(path).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def read_manifest(path: Path) -> dict:
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------- #
# datasets


def _round_row(instance: GameInstance, record: RoundRecord, chash: str) -> dict:
    return {
        "tokens": list(instance.observation.tokens),
        "label": record.label,
        "meta": {
            "round": record.index,
            "seed": list(record.seed_key),
            "suspects": list(record.suspects),
            "recipient": record.recipient,
            "messages_from_true_sender": record.suspect_messages,
            "config_hash": chash,
        },
    }


def _ledger_row(record: RoundRecord) -> dict:
    return {
        "round": record.index,
        "label": record.label,
        "suspects": list(record.suspects),
        "recipient": record.recipient,
        "burn_in_seconds": record.burn_in_seconds,
        "latency_mean": record.latency_mean,
        "latency_std": record.latency_std,
        "deliveries": [
            {"pos": d.position, "msg": d.message_id, "sender": d.sender,
             "from_suspect": d.from_suspect, "p0": d.p0, "p1": d.p1,
             "entropy": d.entropy}
            for d in record.deliveries],
    }


def game_config_dict(config: GameConfig, n_samples: int, ratios: Sequence[float],
                     master_seed: int) -> dict:
    return {
        "n_users": config.n_users,
        "send_rate": config.send_rate,
        "strategy": strategy_to_dict(config.strategy),
        "seq_length": config.seq_length,
        "strict_exclusive": config.strict_exclusive,
        "fixed_roles": config.fixed_roles,
        "n_samples": n_samples,
        "splits": list(ratios),
        "master_seed": master_seed,
    }


def write_dataset(out_dir: Path, config: GameConfig, n_samples: int,
                  ratios: Sequence[float], master_seed: int) -> dict:
    """Generate rounds and write the dataset directory; returns the manifest.

    Layout: manifest.json plus, per split, `<split>.jsonl` (token rows with
    labels and metadata) and `<split>.ledger.jsonl` (ground truth the
    white-box attacker and the metrics command read).  Splits take disjoint
    round-index ranges, and every round has its own seed, so no sample ever
    shares traffic with another.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sizes = split_sizes(n_samples, ratios)
    cfg_dict = game_config_dict(config, n_samples, ratios, master_seed)
    chash = config_hash(cfg_dict)

    boundaries = []
    start = 0
    for size in sizes:
        boundaries.append((start, start + size))
        start += size

    vocab_size = None
    handles = {}
    try:
        for name in SPLIT_NAMES:
            handles[name] = ((out_dir / f"{name}.jsonl").open("w"),
                            (out_dir / f"{name}.ledger.jsonl").open("w"))
        for i, instance, record in generate_rounds(config, n_samples, master_seed):
            vocab_size = instance.observation.vocab_size
            split = next(name for name, (lo, hi) in zip(SPLIT_NAMES, boundaries)
                         if lo <= i < hi)
            rows, ledger = handles[split]
            rows.write(canonical_json(_round_row(instance, record, chash)) + "\n")
            ledger.write(canonical_json(_ledger_row(record)) + "\n")
    finally:
        for rows, ledger in handles.values():
            rows.close()
            ledger.close()

    # the link map is a pure function of the population size
    topo = Topology.single_node(MixNode(config.strategy), senders=range(config.n_users),
                                receivers=range(config.n_users))
    manifest = {
        "format": DATASET_FORMAT,
        "config": cfg_dict,
        "config_hash": chash,
        "vocab_size": vocab_size,
        "cls_token_id": vocab_size - 1,
        "link_map": topo.link_map(),
        "splits": {name: size for name, size in zip(SPLIT_NAMES, sizes)},
    }
    write_manifest(manifest, out_dir / "manifest.json")
    return manifest


@dataclass
class DatasetSplit:
    rows: List[dict]
    records: List[dict]


def read_dataset(dataset_dir: Path) -> Tuple[dict, Dict[str, DatasetSplit]]:
    """Load a dataset directory back into memory (manifest, splits)."""
    dataset_dir = Path(dataset_dir)
    manifest = read_manifest(dataset_dir / "manifest.json")
    if manifest.get("format") != DATASET_FORMAT:
        raise ValueError(f"not a dataset directory: {dataset_dir}")
    splits = {}
    for name in SPLIT_NAMES:
        rows = [json.loads(line) for line in (dataset_dir / f"{name}.jsonl").open()]
        records = [json.loads(line) for line in (dataset_dir / f"{name}.ledger.jsonl").open()]
        splits[name] = DatasetSplit(rows=rows, records=records)
    return manifest, splits
