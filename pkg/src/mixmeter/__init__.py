"""mixmeter: measure sender anonymity in batching and delay mixnets.

The package simulates message traffic through configurable mix nodes, plays
repeated two-suspect distinguishing games against a Bayesian matching
adversary, and reports how attack accuracy, likelihood leakage, and anonymity
entropy change with observed trace length and mixing latency.
"""

from .attacker import AccuracySample, BeliefState, RoundEvidence, attack_round, decide, update
from .encoding import (CANONICAL_LENGTHS, TokenSequence, decode, encode,
                       mask_to_length, prepend_cls, retained_span)
from .game import GameConfig, GameInstance, RoundRecord, generate_rounds, play_round
from .metrics import (DegenerateEvidence, MetricsReport, SenderPosterior,
                      aggregate, entropy, likelihood_diff, welch_p_value,
                      wilson_interval)
from .mixnodes import Egress, Message, MixNode, Poisson, Pool, Threshold
from .traffic import (Population, Simulation, Topology, TopologyError, Trace,
                      assign_contacts, burn_in_duration, latency_stats, simulate)

__version__ = "0.1.0"

__all__ = [
    "AccuracySample", "BeliefState", "RoundEvidence", "attack_round", "decide",
    "update", "CANONICAL_LENGTHS", "TokenSequence", "decode", "encode",
    "mask_to_length", "prepend_cls", "retained_span", "GameConfig",
    "GameInstance", "RoundRecord", "generate_rounds", "play_round",
    "DegenerateEvidence", "MetricsReport", "SenderPosterior", "aggregate",
    "entropy", "likelihood_diff", "welch_p_value", "wilson_interval", "Egress",
    "Message", "MixNode", "Poisson", "Pool", "Threshold", "Population",
    "Simulation", "Topology", "TopologyError", "Trace", "assign_contacts",
    "burn_in_duration", "latency_stats", "simulate", "__version__",
]
