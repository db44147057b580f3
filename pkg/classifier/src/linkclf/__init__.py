"""linkclf: windowed-attention classifier for link-token traffic datasets."""
from .data import (GameDataset, Split, balanced_subset, iter_batches,
                   load_dataset, prefix_split, shuffled_labels,
                   truncate_observation)
from .model import (LinkClassifier, LocalSelfAttention, ModelConfig,
                    local_attention_mask)
from .training import (TrainConfig, TrainResult, evaluate, seed_everything,
                       train, train_curriculum, train_fresh)

__version__ = "0.1.0"

__all__ = [
    "GameDataset", "Split", "balanced_subset", "iter_batches", "load_dataset",
    "prefix_split", "shuffled_labels", "truncate_observation",
    "LinkClassifier", "LocalSelfAttention", "ModelConfig",
    "local_attention_mask",
    "TrainConfig", "TrainResult", "evaluate", "seed_everything", "train",
    "train_curriculum", "train_fresh",
]
