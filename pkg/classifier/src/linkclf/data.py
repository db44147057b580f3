"""Loading and batching for link-token game datasets.

The on-disk contract is the dataset directory the traffic workbench writes:
a ``manifest.json`` with format tag ``mix-game-dataset/1`` plus, per split,
a ``<split>.jsonl`` whose rows carry a token sequence (the classification
token in place of the first event, then one link id per network event, 0
meaning no activity) and a binary label saying which suspect was the true
correspondent.  Nothing else from the workbench is imported here; the
directory format is the whole interface.
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

DATASET_FORMAT = "mix-game-dataset/1"


@dataclass(frozen=True)
class Split:
    """One split's samples as arrays: tokens [n, length], labels [n]."""

    tokens: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class GameDataset:
    manifest: dict
    splits: Dict[str, Split]

    @property
    def vocab_size(self) -> int:
        return int(self.manifest["vocab_size"])

    @property
    def cls_token_id(self) -> int:
        return int(self.manifest["cls_token_id"])

    @property
    def seq_length(self) -> int:
        return int(self.manifest["config"]["seq_length"])


def load_dataset(dataset_dir) -> GameDataset:
    """Read a dataset directory; raises ValueError if it is not one."""
    dataset_dir = Path(dataset_dir)
    manifest = json.loads((dataset_dir / "manifest.json").read_text())
    if manifest.get("format") != DATASET_FORMAT:
        raise ValueError(f"{dataset_dir} is not a {DATASET_FORMAT} directory")
    splits = {}
    for name, expected in manifest["splits"].items():
        rows = [json.loads(line)
                for line in (dataset_dir / f"{name}.jsonl").open()]
        if len(rows) != expected:
            raise ValueError(f"split {name}: manifest says {expected} rows, "
                             f"file has {len(rows)}")
        tokens = np.array([r["tokens"] for r in rows], dtype=np.int64)
        labels = np.array([r["label"] for r in rows], dtype=np.int64)
        if tokens.size and tokens.max() >= manifest["vocab_size"]:
            raise ValueError(f"split {name}: token id {tokens.max()} outside "
                             f"vocabulary of {manifest['vocab_size']}")
        splits[name] = Split(tokens=tokens, labels=labels)
    return GameDataset(manifest=manifest, splits=splits)


def truncate_observation(tokens: np.ndarray, length: int) -> np.ndarray:
    """Keep the leading classification token plus the first `length` events;
    later positions become 0, the no-activity token, so the result stays
    in-distribution and the same shape."""
    if length < 0:
        raise ValueError("length must be >= 0")
    out = np.array(tokens, dtype=np.int64, copy=True)
    out[..., 1 + length:] = 0
    return out


def prefix_split(split: Split, length: int) -> Split:
    """First `length` events (plus the leading classification token) of every
    sample — cheaper to train on than full observations."""
    if length < 1:
        raise ValueError("length must be >= 1")
    return Split(tokens=split.tokens[:, :length + 1].copy(),
                 labels=split.labels)


def balanced_subset(split: Split, seed=0) -> Split:
    """Deterministically drop samples of the majority class so that both
    labels appear equally often (useful for chance-level controls, where a
    constant predictor should score exactly 0.5)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    idx0 = np.flatnonzero(split.labels == 0)
    idx1 = np.flatnonzero(split.labels == 1)
    n = min(len(idx0), len(idx1))
    keep = np.sort(np.concatenate([rng.permutation(idx0)[:n],
                                   rng.permutation(idx1)[:n]]))
    return Split(tokens=split.tokens[keep], labels=split.labels[keep])


def shuffled_labels(split: Split, seed) -> Split:
    """Same tokens, labels randomly permuted — the classic sanity control."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return Split(tokens=split.tokens,
                 labels=rng.permutation(split.labels))


def iter_batches(split: Split, batch_size: int,
                 rng: np.random.Generator) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Yield (tokens, labels) minibatches covering the split once, shuffled."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = rng.permutation(len(split))
    for start in range(0, len(order), batch_size):
        pick = order[start:start + batch_size]
        yield split.tokens[pick], split.labels[pick]
