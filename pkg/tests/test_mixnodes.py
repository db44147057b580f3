import math

import numpy as np
import pytest

from mixmeter.mixnodes import Egress, Message, MixNode, Poisson, Pool, Threshold


def msg(i, sender=0, recipient=99, t=0.0):
    return Message(id=i, sender=sender, recipient=recipient, ingress_time=t)


# ---------------------------------------------------------------------- #
# construction and validation


def test_strategy_validation():
    with pytest.raises(ValueError):
        Threshold(0)
    with pytest.raises(ValueError):
        Pool(3, 3)
    with pytest.raises(ValueError):
        Pool(3, -1)
    with pytest.raises(ValueError):
        Poisson(0.0)
    with pytest.raises(ValueError):
        Poisson(-1.0)
    assert Pool(10, 3).retention_ratio == pytest.approx(0.3)


def test_message_must_have_distinct_endpoints():
    with pytest.raises(ValueError):
        Message(id=0, sender=3, recipient=3, ingress_time=0.0)


def test_duplicate_ingest_rejected():
    node = MixNode(Threshold(5), seed=1)
    node.ingest(msg(0), 0.0)
    with pytest.raises(ValueError):
        node.ingest(msg(0), 1.0)


# ---------------------------------------------------------------------- #
# batch mechanics


def test_threshold_flushes_on_nth_message():
    node = MixNode(Threshold(3), seed=1)
    assert node.ingest(msg(0, sender=0), 0.0) == []
    assert node.ingest(msg(1, sender=1), 1.0) == []
    out = node.ingest(msg(2, sender=2), 2.0)
    assert len(out) == 3
    assert node.buffer_size == 0
    assert {e.message.id for e in out} == {0, 1, 2}
    assert all(e.time == 2.0 for e in out)


def test_pool_70_10_releases_exactly_60():
    node = MixNode(Pool(70, 10), seed=3)
    out = []
    for i in range(70):
        out = node.ingest(msg(i, sender=i, recipient=(i + 1) % 71), float(i))
    assert len(out) == 60
    assert node.buffer_size == 10
    assert node.ingested == 70
    assert node.egressed == 60


def test_pool_retention_frequency_matches_ratio():
    # a fixed message should stay behind with probability pool_count / n
    hits = 0
    trials = 10_000
    for k in range(trials):
        node = MixNode(Pool(5, 1), seed=(9, k))
        for i in range(5):
            node.ingest(msg(i, sender=i, recipient=(i + 1) % 6), 0.0)
        if node._buffer and node._buffer[0][0].id == 0:
            hits += 1
    p = 1 / 5
    sigma = math.sqrt(p * (1 - p) / trials)
    assert abs(hits / trials - p) < 3 * sigma


def test_flush_output_order_is_random():
    # message 0 should appear first in roughly half of Threshold(2) flushes
    first = 0
    trials = 10_000
    for k in range(trials):
        node = MixNode(Threshold(2), seed=(11, k))
        node.ingest(msg(0, sender=0), 0.0)
        out = node.ingest(msg(1, sender=1), 0.0)
        first += out[0].message.id == 0
    sigma = math.sqrt(0.25 / trials)
    assert abs(first / trials - 0.5) < 3 * sigma


def test_residual_counts_after_partial_batches():
    node = MixNode(Threshold(10), seed=1)
    for i in range(25):
        node.ingest(msg(i, sender=i % 5, recipient=9), float(i))
    assert node.occupancy() == 5
    assert len(node.drain()) == 5
    assert node.occupancy() == 0

    node = MixNode(Pool(10, 3), seed=1)
    for i in range(100):
        node.ingest(msg(i, sender=i % 5, recipient=9), float(i))
    # flush k consumes 10 + 7(k-1) arrivals; 13 flushes cover 94, leaving 6
    # fresh arrivals on top of the 3 retained
    assert node.occupancy() == 9


def test_conservation_counters():
    rng = np.random.default_rng(5)
    for strategy in (Threshold(7), Pool(9, 4), Poisson(3.0)):
        node = MixNode(strategy, seed=2)
        t = 0.0
        for i in range(200):
            t += float(rng.exponential(1.0))
            node.ingest(msg(i, sender=int(rng.integers(5)), recipient=7), t)
            if isinstance(strategy, Poisson) and i % 10 == 0:
                node.pop_due(t)
        assert node.ingested == node.egressed + node.occupancy()


# ---------------------------------------------------------------------- #
# posteriors: analytic values frozen from first principles


def test_threshold_batch_posterior_is_sender_frequency():
    # three messages from sender 0, one from sender 1 -> (3/4, 1/4) for every output
    node = MixNode(Threshold(4), seed=1)
    for i, s in enumerate([0, 0, 0, 1]):
        out = node.ingest(msg(i, sender=s, recipient=5), float(i))
    assert len(out) == 4
    for egress in out:
        assert egress.posterior == pytest.approx({0: 0.75, 1: 0.25})


def test_pool_first_flush_posterior():
    node = MixNode(Pool(2, 1), seed=1)
    node.ingest(msg(0, sender=0, recipient=5), 0.0)
    out = node.ingest(msg(1, sender=1, recipient=5), 1.0)
    assert len(out) == 1
    assert out[0].posterior == pytest.approx({0: 0.5, 1: 0.5})


def test_pool_second_flush_mixes_retained_history():
    # Pool(3,1): second flush sees one survivor carrying the uniform first-batch
    # mixture plus two fresh messages, so its posterior is
    # {old: 1/9 each, new: 1/3 each}
    node = MixNode(Pool(3, 1), seed=2)
    for i, s in enumerate([0, 1, 2]):
        node.ingest(msg(i, sender=s, recipient=5), float(i))
    out = node.ingest(msg(3, sender=3, recipient=5), 3.0)
    assert out == []
    out = node.ingest(msg(4, sender=4, recipient=5), 4.0)
    assert len(out) == 2
    expected = {0: 1 / 9, 1: 1 / 9, 2: 1 / 9, 3: 1 / 3, 4: 1 / 3}
    for egress in out:
        assert egress.posterior == pytest.approx(expected)
        assert sum(egress.posterior.values()) == pytest.approx(1.0, abs=1e-12)


def test_batch_posterior_requires_messages():
    node = MixNode(Threshold(3), seed=1)
    with pytest.raises(ValueError):
        node.batch_posterior()


# ---------------------------------------------------------------------- #
# exponential-delay mechanics


def test_poisson_buffers_until_popped():
    node = MixNode(Poisson(10.0), seed=4)
    assert node.ingest(msg(0, sender=0), 0.0) == []
    assert node.pending_size == 1
    out = node.pop_due(before=1e9)
    assert len(out) == 1
    assert out[0].message.id == 0
    assert out[0].time > 0.0


def test_poisson_delay_moments():
    # read the scheduled egress instants straight off the pending heap; going
    # through pop_due would recompute a posterior over all pending messages
    # per pop, which is quadratic in n
    lam = 10.0
    node = MixNode(Poisson(lam), seed=6)
    n = 100_000
    for i in range(n):
        node.ingest(msg(i, sender=0), 0.0)
    arr = np.asarray([item[0] for item in node._pending])
    assert len(arr) == n
    assert abs(arr.mean() - lam) / lam < 0.02
    assert abs(arr.var() - lam * lam) / (lam * lam) < 0.02


def test_pending_posterior_density_weighting():
    # ingress at t=0 and t=5, egress observed at t=10 with mean delay 10:
    # weights are e^-1 and e^-0.5, so P(first) = 1 / (1 + e^0.5)
    node = MixNode(Poisson(10.0), seed=7)
    node.ingest(msg(0, sender=0, recipient=9), 0.0)
    node.ingest(msg(1, sender=1, recipient=9), 5.0)
    post = node.pending_posterior(10.0)
    p0 = 1.0 / (1.0 + math.exp(0.5))
    assert post[0] == pytest.approx(p0, abs=1e-12)
    assert post[1] == pytest.approx(1.0 - p0, abs=1e-12)


def test_pending_posterior_excludes_future_arrivals():
    node = MixNode(Poisson(10.0), seed=7)
    node.ingest(msg(0, sender=0, recipient=9), 0.0)
    node.ingest(msg(1, sender=1, recipient=9), 50.0)
    post = node.pending_posterior(10.0)
    assert post == pytest.approx({0: 1.0})


def test_pending_posterior_without_feasible_input_raises():
    node = MixNode(Poisson(10.0), seed=7)
    node.ingest(msg(0, sender=0, recipient=9), 100.0)
    with pytest.raises(RuntimeError):
        node.pending_posterior(10.0)


def test_pop_due_in_schedule_order():
    node = MixNode(Poisson(5.0), seed=8)
    for i in range(50):
        node.ingest(msg(i, sender=i % 3, recipient=9), float(i))
    out = node.pop_due(before=float("inf"))
    times = [e.time for e in out]
    assert times == sorted(times)
    assert node.pending_size == 0


# ---------------------------------------------------------------------- #
# corrupt behaviour


def test_corrupt_node_is_transparent():
    node = MixNode(Threshold(100), honest=False, seed=9)
    prov = {3: 0.5, 4: 0.5}
    out = node.ingest(msg(0, sender=3, recipient=9), 7.0, provenance=prov)
    assert out == [Egress(msg(0, sender=3, recipient=9, t=0.0), 7.0, prov)]
    assert out[0].time == 7.0          # zero added latency
    assert out[0].posterior is prov    # untouched provenance
    assert node.occupancy() == 0


def test_corrupt_node_preserves_fifo():
    node = MixNode(Pool(50, 10), honest=False, seed=9)
    order = []
    for i in range(20):
        for egress in node.ingest(msg(i, sender=0), float(i)):
            order.append(egress.message.id)
    assert order == list(range(20))
