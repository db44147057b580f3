import math

import numpy as np
import pytest
from scipy import stats

from mixmeter.mixnodes import MixNode, Poisson, Pool, Threshold
from mixmeter.traffic import (BURN_IN_BASE, BURN_IN_JITTER, Population,
                              Simulation, Topology, TopologyError,
                              assign_contacts, burn_in_duration, latency_stats,
                              simulate)


def single_node_topology(strategy, n_users, **kwargs):
    return Topology.single_node(MixNode(strategy, node_id=0),
                                senders=range(n_users), receivers=range(n_users),
                                **kwargs)


# ---------------------------------------------------------------------- #
# population


def test_population_validation():
    with pytest.raises(ValueError):
        Population(rates=[0.1, 0.1], contacts=[1, 0])            # too few users
    with pytest.raises(ValueError):
        Population(rates=[0.1] * 3, contacts=[0, 0, 1])          # self contact
    with pytest.raises(ValueError):
        Population(rates=[0.5] * 3, contacts=[1, 2, 0])          # aggregate > 1
    with pytest.raises(ValueError):
        Population(rates=[-0.1, 0.1, 0.1], contacts=[1, 2, 0])


def test_assign_contacts_never_self():
    pop = assign_contacts(50, 0.01, seed=3)
    assert pop.n_users == 50
    assert np.all(pop.contacts != np.arange(50))
    assert np.all(pop.rates == 0.01)


def test_assign_contacts_uniform_over_others():
    # the skip-self mapping: draw c in [0, n-2], shift past the own index
    rng = np.random.default_rng(17)
    n, u = 10, 5
    draws = rng.integers(n - 1, size=20_000)
    mapped = np.where(draws < u, draws, draws + 1)
    counts = np.bincount(mapped, minlength=n)
    assert counts[u] == 0
    chi2 = float(((counts[counts > 0] - 20_000 / 9) ** 2 / (20_000 / 9)).sum())
    assert stats.chi2.sf(chi2, df=8) > 0.01


def test_assign_contacts_deterministic():
    a = assign_contacts(30, 0.02, seed=5)
    b = assign_contacts(30, 0.02, seed=5)
    assert np.array_equal(a.contacts, b.contacts)


# ---------------------------------------------------------------------- #
# topology and link ids


def test_link_ids_enumerate_ingress_then_egress():
    topo = single_node_topology(Threshold(3), 3)
    assert topo.ingress_link == {0: 1, 1: 2, 2: 3}
    assert topo.egress_link == {0: 4, 1: 5, 2: 6}
    assert topo.n_links == 6
    assert topo.vocab_size == 8
    assert topo.cls_token_id == 7


def test_link_ids_with_restricted_senders():
    # two senders and a shared mix: the third user's egress link lands on id 5
    node = MixNode(Threshold(2), node_id=0)
    topo = Topology.single_node(node, senders=[0, 1], receivers=[0, 1, 2])
    assert topo.ingress_link == {0: 1, 1: 2}
    assert topo.egress_link == {0: 3, 1: 4, 2: 5}
    assert topo.vocab_size == 7


def test_inter_layer_links():
    layers = [[MixNode(Threshold(2), node_id=0)], [MixNode(Threshold(2), node_id=1)]]
    topo = Topology(layers, senders=[0, 1], receivers=[0, 1, 2])
    assert topo.inter_link == {(0, 1): 3}
    assert topo.egress_link == {0: 4, 1: 5, 2: 6}
    assert len(topo.nodes) == 2


def test_anytrust_requires_one_honest_layer():
    corrupt = MixNode(Threshold(2), honest=False, node_id=0)
    with pytest.raises(TopologyError):
        Topology.single_node(corrupt, senders=[0, 1], receivers=[0, 1, 2])
    topo = Topology.single_node(corrupt, senders=[0, 1], receivers=[0, 1, 2],
                                allow_all_corrupt=True)
    assert not topo.nodes[0].honest
    mixed = [[MixNode(Threshold(2), honest=False, node_id=0)],
             [MixNode(Threshold(2), node_id=1)]]
    Topology(mixed, senders=[0, 1], receivers=[0, 1, 2])   # second layer honest


def test_link_map_is_json_friendly():
    topo = single_node_topology(Threshold(3), 3)
    m = topo.link_map()
    assert m["ingress"]["0"] == 1
    assert m["egress"]["2"] == 6
    assert m["internode"] == {}


# ---------------------------------------------------------------------- #
# event generation


def test_ingress_flush_pattern_on_shared_link():
    # two senders forced to one recipient through Threshold(3): the sorted
    # trace must contain the ingress links and a contiguous triple flush on
    # the recipient's egress link
    node = MixNode(Threshold(3), node_id=0)
    topo = Topology.single_node(node, senders=[0, 1], receivers=[0, 1, 2])
    pop = Population(rates=[0.4, 0.4, 0.0], contacts=[2, 2, 0])
    sim = Simulation(topo, pop, seed=21)
    sim.run_seconds(200)
    trace = sim.finish()
    links = trace.link_sequence()
    assert set(links) <= {1, 2, 5}
    egress = topo.egress_link[2]
    assert egress == 5
    flushes = [i for i in range(len(links) - 2)
               if links[i] == links[i + 1] == links[i + 2] == egress]
    assert flushes, "no complete flush appeared on the egress link"
    ingress_count = sum(l in (1, 2) for l in links)
    assert ingress_count == len(trace.ledger)


def test_conservation_and_ledger_consistency():
    topo = single_node_topology(Pool(20, 5), 50)
    pop = assign_contacts(50, 0.02, seed=9)
    sim = Simulation(topo, pop, seed=9)
    sim.run_seconds(500)
    sim.check_conservation()
    trace = sim.finish()
    for rec in trace.ledger.values():
        if rec.delivered is not None:
            assert rec.delivered >= rec.sent
    delivered = sum(r.delivered is not None for r in trace.ledger.values())
    assert delivered + topo.nodes[0].occupancy() == len(trace.ledger)


def test_simulation_is_deterministic():
    def run():
        topo = single_node_topology(Threshold(10), 30)
        pop = assign_contacts(30, 0.03, seed=4)
        return simulate(topo, pop, 400, seed=4).events

    a, b = run(), run()
    assert a == b
    topo = single_node_topology(Threshold(10), 30)
    pop = assign_contacts(30, 0.03, seed=4)
    c = simulate(topo, pop, 400, seed=5).events
    assert a != c


def test_events_sorted_and_observation_start():
    topo = single_node_topology(Threshold(5), 20)
    pop = assign_contacts(20, 0.05, seed=6)
    sim = Simulation(topo, pop, seed=6)
    sim.run_seconds(100)
    sim.mark_observation_start()
    sim.run_until_observation_events(256)
    trace = sim.finish()
    assert trace.events == sorted(trace.events)
    s = trace.observation_start
    assert trace.events[s][0] >= trace.observation_time
    assert trace.events[s - 1][0] < trace.observation_time
    assert len(trace.events) - s >= 256
    # event_index finds every delivery key
    for d in trace.deliveries:
        assert trace.events[trace.event_index(d.event_key)][:3] == d.event_key


def test_burn_in_duration_range_and_determinism():
    durations = {burn_in_duration(s) for s in range(40)}
    assert all(BURN_IN_BASE + 1 <= d <= BURN_IN_BASE + BURN_IN_JITTER
               for d in durations)
    assert len(durations) > 10                       # jitter actually varies
    assert burn_in_duration(11) == burn_in_duration(11)


def test_simulate_rejects_nonpositive_duration():
    topo = single_node_topology(Threshold(5), 20)
    pop = assign_contacts(20, 0.01, seed=2)
    with pytest.raises(ValueError):
        simulate(topo, pop, 0, seed=2)


def test_latency_stats_requires_deliveries():
    trace = simulate(single_node_topology(Threshold(5), 20),
                     assign_contacts(20, 0.04, seed=3), 300, seed=3)
    mean, std = latency_stats(trace)
    assert mean > 0
    assert std >= 0
    from mixmeter.traffic import Trace
    with pytest.raises(ValueError):
        latency_stats(Trace(events=[], ledger={}, deliveries=[]))


# ---------------------------------------------------------------------- #
# latency laws


def lat_for(strategy, seed, duration=4000, n_users=100, rate=0.01):
    topo = single_node_topology(strategy, n_users)
    pop = assign_contacts(n_users, rate, seed=seed)
    trace = simulate(topo, pop, duration, seed=seed)
    return latency_stats(trace)[0]


def test_threshold_latency_law():
    n = 40
    mean = lat_for(Threshold(n), seed=31)
    assert abs(mean - (n - 1) / 2) / ((n - 1) / 2) < 0.05


def test_pool_latency_law():
    # expected wait: (n - pc - 1)/2 to the next flush plus pc seconds of
    # geometric retention at one flush per (n - pc) seconds
    n, pc = 40, 10
    mean = lat_for(Pool(n, pc), seed=32)
    expected = (n + pc - 1) / 2
    assert abs(mean - expected) / expected < 0.05


def test_poisson_latency_law():
    lam = 20.0
    mean = lat_for(Poisson(lam), seed=33, duration=6000)
    assert abs(mean - lam) / lam < 0.05


def test_threshold_matches_poisson_at_half_param():
    # Threshold(2 * lam) and Poisson(lam) sit at the same mean latency
    lam = 40.0
    t_mean = lat_for(Threshold(int(2 * lam)), seed=34, duration=8000)
    p_mean = lat_for(Poisson(lam), seed=35, duration=8000)
    assert abs(t_mean - p_mean) / p_mean < 0.05


def test_batch_position_latency_decreases():
    # within one batch the earliest arrival waits longest: deterministic
    node = MixNode(Threshold(20), seed=1)
    from mixmeter.mixnodes import Message
    out = []
    for i in range(20):
        out = node.ingest(Message(id=i, sender=0, recipient=1, ingress_time=float(i)),
                          float(i))
    latencies = {e.message.id: e.time - e.message.ingress_time for e in out}
    ordered = [latencies[i] for i in range(20)]
    assert ordered == sorted(ordered, reverse=True)
    assert ordered[0] == 19.0
    assert ordered[-1] == 0.0


def test_corrupt_node_adds_no_latency():
    topo = Topology.single_node(MixNode(Threshold(50), honest=False, node_id=0),
                                senders=range(20), receivers=range(20),
                                allow_all_corrupt=True)
    pop = assign_contacts(20, 0.05, seed=36)
    trace = simulate(topo, pop, 300, seed=36, burn_in=False)
    assert latency_stats(trace, observed_only=False)[0] == 0.0
    # FIFO: egress event order equals ingress order on every second
    for rec in trace.ledger.values():
        assert rec.delivered == rec.sent


# ---------------------------------------------------------------------- #
# occupancy stationarity after warm-up


def test_occupancy_is_stationary_after_burn_in():
    topo = single_node_topology(Poisson(50.0), 100)
    pop = assign_contacts(100, 0.01, seed=41)
    log = []
    sim = Simulation(topo, pop, seed=41)
    sim.run_seconds(4096, occupancy_log=log)
    # discard the approach to equilibrium, thin to beat autocorrelation
    tail = np.asarray(log[400:], float)[::150]
    slope, _, _, p_value, _ = stats.linregress(np.arange(len(tail)), tail)
    assert p_value > 0.05, f"occupancy still trending: slope {slope:.4f}, p {p_value:.4f}"
    assert abs(tail.mean() - 50.0) / 50.0 < 0.15
