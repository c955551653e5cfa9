from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_force_closed

from flpaction.miner import (
    MinerConfig,
    Pattern,
    contains,
    count_frequencies,
    dump_patterns,
    load_patterns,
    mine_closed,
)
from flpaction.transactions import Transaction, assemble_db


def make_db(actions, ndf=100):
    """actions: list of (list of item lists, label)."""
    return assemble_db(
        [([Transaction(tuple(sorted(set(t))), j) for t in txs], label, 1) for j, (txs, label) in enumerate(actions)],
        ndf,
    )


def as_dict(patterns):
    return {p.items: p.support for p in patterns}


EX = [[1, 2], [1, 2, 3], [1, 3]]


def test_example_closed_sets():
    db = make_db([(EX, 1)])
    assert as_dict(mine_closed(db, MinerConfig(2, 3))) == {(1,): 3, (1, 2): 2, (1, 3): 2}


def test_example_max_support_filter():
    db = make_db([(EX, 1)])
    assert as_dict(mine_closed(db, MinerConfig(2, 2))) == {(1, 2): 2, (1, 3): 2}


def test_identical_transactions():
    db = make_db([([[4, 9]] * 5, 1)])
    pats = mine_closed(db, MinerConfig(1))
    assert [(p.items, p.support) for p in pats] == [((4, 9), 5)]


def test_config_validation():
    with pytest.raises(ValueError):
        MinerConfig(0)
    with pytest.raises(ValueError):
        MinerConfig(5, 4)


def test_contains():
    assert contains((1, 3), (1, 2, 3))
    assert not contains((1, 4), (1, 2, 3))
    assert contains((3,), (3,))
    with pytest.raises(ValueError):
        contains((), (1, 2))


def test_frequencies():
    db = make_db([([[1, 2], [1, 2, 5], [1, 2]], 1), ([[7], [8]], 2)])
    assert count_frequencies((1, 2), db) == (3, 0)
    assert count_frequencies((9,), db) == (0, 0)
    one = make_db([(EX, 1)])
    assert count_frequencies((1, 2), one) == (2,)


def _random_db(rng, max_items=12, max_tx=30):
    n_items = int(rng.integers(1, max_items + 1))
    n_tx = int(rng.integers(1, max_tx + 1))
    txs = []
    for _ in range(n_tx):
        k = int(rng.integers(1, n_items + 1))
        txs.append(sorted(rng.choice(np.arange(1, n_items + 1), size=k, replace=False).tolist()))
    # split into up to 3 actions
    cuts = sorted(rng.integers(0, n_tx + 1, size=2).tolist())
    parts = [txs[:cuts[0]], txs[cuts[0]:cuts[1]], txs[cuts[1]:]]
    actions = [(p, j + 1) for j, p in enumerate(parts) if p]
    return txs, make_db(actions)


@pytest.mark.parametrize("seed", range(40))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    txs, db = _random_db(rng)
    S = int(rng.integers(1, 6))
    U = int(rng.integers(S, 31))
    got = mine_closed(db, MinerConfig(S, U))
    assert as_dict(got) == brute_force_closed(txs, S, U)
    # output order and per-action frequencies
    assert [p.items for p in got] == sorted(p.items for p in got)
    for p in got:
        assert p.per_action_freq == count_frequencies(p, db)
        assert sum(p.per_action_freq) == p.support


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_closedness_and_antimonotone(seed):
    rng = np.random.default_rng(seed)
    txs, db = _random_db(rng, 8, 15)
    pats = as_dict(mine_closed(db, MinerConfig(1)))
    sets = [set(t) for t in txs]
    for items, s in pats.items():
        # no strict superset with the same support
        union = set.intersection(*[t for t in sets if set(items) <= t])
        assert tuple(sorted(union)) == items
        for other, s2 in pats.items():
            if set(items) < set(other):
                assert s2 <= s


def test_higher_min_support_gives_subset():
    rng = np.random.default_rng(7)
    _, db = _random_db(rng)
    low = as_dict(mine_closed(db, MinerConfig(1)))
    high = as_dict(mine_closed(db, MinerConfig(3)))
    assert set(high) <= set(low)
    assert all(s >= 3 for s in high.values())


def test_parallel_identical():
    rng = np.random.default_rng(3)
    _, db = _random_db(rng)
    assert mine_closed(db, MinerConfig(2), jobs=1) == mine_closed(db, MinerConfig(2), jobs=3)


def test_dump_round_trip(tmp_path):
    db = make_db([(EX, 1), ([[1, 3], [2]], 2)])
    pats = mine_closed(db, MinerConfig(1))
    dump_patterns(pats, tmp_path / "p.txt")
    assert load_patterns(tmp_path / "p.txt", db) == pats
    assert [p.items for p in load_patterns(tmp_path / "p.txt")] == [p.items for p in pats]
    (tmp_path / "bad.txt").write_text("x: 1 2\n")
    with pytest.raises(ValueError, match="bad.txt:1"):
        load_patterns(tmp_path / "bad.txt")
