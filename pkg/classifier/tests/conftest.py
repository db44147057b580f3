"""Dataset fixtures, produced by the traffic workbench's command line.

The generator is invoked as a subprocess and everything downstream reads
only the files it wrote — the directory format is the entire contract
between the two packages.

Two population densities are used.  The 16-user corpus exercises loading
and gives the curriculum test an easy/hard pair; the 8-user corpus is the
training workload: with the same 1 msg/s aggregate load concentrated on
fewer, faster senders (plus exclusive sender roles), each observation
holds several decision-relevant events instead of roughly one, which is
what makes the task learnable at desk scale.
"""
import subprocess
import sys
from pathlib import Path

import pytest


def generate(out: Path, *, users: int, send_rate: str, threshold: int,
             n_samples: int, master_seed: int,
             strict_exclusive: bool = False) -> Path:
    args = [sys.executable, "-m", "mixmeter.cli", "gen-dataset",
            "--set", f"users={users}", "--set", f"send_rate={send_rate}",
            "--set", f"threshold={threshold}", "--set", "seq_length=256",
            "--set", "fixed_roles=true", "--set", f"n_samples={n_samples}",
            "--set", "splits=0.8,0.1,0.1",
            "--set", f"master_seed={master_seed}",
            "--out", str(out)]
    if strict_exclusive:
        args[-2:-2] = ["--set", "strict_exclusive=true"]
    subprocess.run(args, check=True, capture_output=True, text=True)
    return out


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory):
    """A few 16-user rounds — enough to exercise loading, not training."""
    return generate(tmp_path_factory.mktemp("tiny") / "ds",
                    users=16, send_rate="0.0625",
                    threshold=10, n_samples=24, master_seed=29)


@pytest.fixture(scope="session")
def tiny_harder_dataset_dir(tmp_path_factory):
    """Same population, threshold 20 — the curriculum's second stage."""
    return generate(tmp_path_factory.mktemp("tiny20") / "ds",
                    users=16, send_rate="0.0625",
                    threshold=20, n_samples=24, master_seed=31)


@pytest.fixture(scope="session")
def desk_dataset_dir(tmp_path_factory):
    """The threshold-10 training set: 8 exclusive-role users at 0.125 msg/s."""
    return generate(tmp_path_factory.mktemp("desk10") / "ds",
                    users=8, send_rate="0.125", strict_exclusive=True,
                    threshold=10, n_samples=1600, master_seed=23)
