"""Training loop: Adam, per-epoch validation, early stopping, curriculum.

Rather than a fixed epoch count, training stops once validation accuracy has
gone `patience` evaluations without improving by at least `min_delta`, and
the best-scoring weights are restored.  A curriculum is just the same loop
run twice: converge on an easy configuration, then continue from those
weights on the harder one.
"""
import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
from torch import nn

from .data import Split, iter_batches, truncate_observation
from .model import LinkClassifier, ModelConfig


@dataclass
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 1e-3
    max_epochs: int = 40
    patience: int = 20          # evaluations without improvement
    min_delta: float = 0.01     # what counts as improvement
    seed: int = 0


@dataclass
class TrainResult:
    model: LinkClassifier
    best_val_accuracy: float
    epochs_run: int
    stopped_early: bool
    history: List[Dict[str, float]] = field(default_factory=list)


def seed_everything(seed: int) -> np.random.Generator:
    """Seed torch and hand back a numpy generator for batch shuffling."""
    torch.manual_seed(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


def evaluate(model: LinkClassifier, split: Split, *,
             length: Optional[int] = None,
             batch_size: int = 256) -> Tuple[float, int, int]:
    """Accuracy on a split; `length` masks each observation down to its
    first `length` events first.  Returns (accuracy, correct, total)."""
    tokens = split.tokens if length is None else \
        truncate_observation(split.tokens, length)
    model.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, len(split), batch_size):
            batch = torch.from_numpy(tokens[start:start + batch_size])
            pred = model(batch).argmax(dim=1).numpy()
            correct += int((pred == split.labels[start:start + batch_size]).sum())
    return correct / len(split), correct, len(split)


def train(model: LinkClassifier, train_split: Split, val_split: Split,
          config: TrainConfig) -> TrainResult:
    rng = seed_everything(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    best_acc, best_state, stale = -1.0, None, 0
    history: List[Dict[str, float]] = []
    epochs_run, stopped_early = 0, False

    for epoch in range(config.max_epochs):
        model.train()
        epoch_loss, n_batches = 0.0, 0
        for tokens, labels in iter_batches(train_split, config.batch_size, rng):
            optimizer.zero_grad()
            loss = loss_fn(model(torch.from_numpy(tokens)),
                           torch.from_numpy(labels))
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
            n_batches += 1

        val_acc, _, _ = evaluate(model, val_split,
                                 batch_size=config.batch_size)
        history.append({"epoch": epoch, "loss": epoch_loss / max(n_batches, 1),
                        "val_accuracy": val_acc})
        epochs_run = epoch + 1

        if val_acc > best_acc + config.min_delta:
            best_acc, stale = val_acc, 0
            best_state = copy.deepcopy(model.state_dict())
        else:
            stale += 1
            if stale >= config.patience:
                stopped_early = True
                break

    if best_state is not None:
        model.load_state_dict(best_state)
    return TrainResult(model=model, best_val_accuracy=best_acc,
                       epochs_run=epochs_run, stopped_early=stopped_early,
                       history=history)


def train_fresh(model_config: ModelConfig, train_split: Split,
                val_split: Split, config: TrainConfig) -> TrainResult:
    """Build a model (seeded) and train it; init consumes the same seed so
    identical calls produce identical weights."""
    seed_everything(config.seed)
    return train(LinkClassifier(model_config), train_split, val_split, config)


def train_curriculum(model_config: ModelConfig,
                     easy: Tuple[Split, Split], hard: Tuple[Split, Split],
                     easy_config: TrainConfig,
                     hard_config: TrainConfig) -> Tuple[TrainResult, TrainResult]:
    """Converge on the easy configuration, then continue on the hard one.

    Returns (easy stage result, hard stage result); the hard-stage model is
    the curriculum model.
    """
    first = train_fresh(model_config, easy[0], easy[1], easy_config)
    second = train(first.model, hard[0], hard[1], hard_config)
    return first, second
