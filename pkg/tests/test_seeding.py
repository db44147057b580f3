import numpy as np

from mixmeter.seeding import (GAME_STREAM, NODE_STREAM, TRAFFIC_STREAM,
                              derive_rng, seed_key)


def test_seed_key_flattens_ints_and_tuples():
    assert seed_key(7) == (7,)
    assert seed_key(7, 1, 2) == (7, 1, 2)
    assert seed_key((7, 8), 3) == (7, 8, 3)
    assert seed_key(seed_key(7, 1), 2) == (7, 1, 2)


def test_derive_rng_deterministic():
    a = derive_rng(42, NODE_STREAM, 0).integers(0, 1 << 30, size=8)
    b = derive_rng(42, NODE_STREAM, 0).integers(0, 1 << 30, size=8)
    assert np.array_equal(a, b)


def test_streams_are_distinct():
    node = derive_rng(42, NODE_STREAM).integers(0, 1 << 30, size=8)
    traffic = derive_rng(42, TRAFFIC_STREAM).integers(0, 1 << 30, size=8)
    game = derive_rng(42, GAME_STREAM).integers(0, 1 << 30, size=8)
    assert not np.array_equal(node, traffic)
    assert not np.array_equal(node, game)
    assert not np.array_equal(traffic, game)


def test_same_tag_different_seed_differs():
    a = derive_rng(1, NODE_STREAM).integers(0, 1 << 30, size=8)
    b = derive_rng(2, NODE_STREAM).integers(0, 1 << 30, size=8)
    assert not np.array_equal(a, b)
