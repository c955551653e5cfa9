from __future__ import annotations

import numpy as np
import pytest

from flpaction.bof import BagOfFlps, bags_from_db, encode_action, encode_db, read_features, write_features
from flpaction.transactions import Transaction, assemble_db


def T(*items):
    return Transaction(tuple(items), 0)


def test_containment_example():
    assert encode_action([T(1, 2, 3)], [(1,), (2, 4), (1, 3)]).counts == (1, 0, 1)


def test_extremes():
    txs = [T(1, 2), T(1, 5), T(1)]
    assert encode_action(txs, [(1,), (9,)]).counts == (3, 0)
    assert encode_action(txs, [(7,), (8, 9)]).counts == (0, 0)
    with pytest.raises(ValueError):
        encode_action(txs, [])


def test_doubling_transactions_doubles_counts(rng):
    txs = [T(*sorted(rng.choice(np.arange(1, 12), size=4, replace=False).tolist())) for _ in range(8)]
    sel = [(1,), (2, 3), (4, 5, 6), (7,)]
    once = np.array(encode_action(txs, sel).counts)
    assert np.array_equal(np.array(encode_action(txs + txs, sel).counts), 2 * once)


def test_bitset_encoder_matches_direct(rng):
    per_action = []
    for j in range(5):
        txs = [Transaction(tuple(sorted(rng.choice(np.arange(1, 15), size=5, replace=False).tolist())), j)
               for _ in range(int(rng.integers(1, 9)))]
        per_action.append((txs, j % 2 + 1, j))
    db = assemble_db(per_action, ndf=20)
    sel = [(1,), (2, 3), (5, 7, 9), (14,), (3, 4)]
    H = encode_db(db, sel)
    for j in range(5):
        assert tuple(H[j]) == encode_action(db.action_transactions(j), sel).counts


def test_features_round_trip(tmp_path):
    db = assemble_db([([T(1, 2)], 2, 3), ([T(2)], 1, 4)], ndf=5)
    bags = bags_from_db(db, [(1,), (2,)])
    assert bags == [BagOfFlps((1, 1), 2, 3), BagOfFlps((0, 1), 1, 4)]
    write_features(bags, tmp_path / "f.csv")
    assert read_features(tmp_path / "f.csv") == bags
