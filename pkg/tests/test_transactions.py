from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flpaction.transactions import (
    Transaction,
    WindowConfig,
    assemble_db,
    build_transactions,
    dump_db,
    load_db,
    num_windows,
)

F1 = [1, 8, 20, 30, 40, 50, 60]


def test_identical_frames_single_transaction():
    txs = build_transactions([F1] * 3, WindowConfig(3, 1), 0)
    assert len(txs) == 1
    assert txs[0].items == tuple(F1)


def test_window_union():
    f2 = list(F1)
    f2[2] = 21
    txs = build_transactions([F1, f2], WindowConfig(2, 1), 0)
    assert len(txs) == 1
    assert len(txs[0].items) == 8
    assert txs[0].items == tuple(sorted(set(F1) | set(f2)))


def test_five_frames_three_windows():
    frames = np.arange(35).reshape(5, 7) + 1
    txs = build_transactions(frames, WindowConfig(3, 1), 4)
    assert len(txs) == 3
    assert [t.items[0] for t in txs] == [1, 8, 15]  # starts 0, 1, 2
    assert all(t.action_index == 4 for t in txs)


def test_short_sequence_single_transaction():
    frames = np.arange(14).reshape(2, 7) + 1
    txs = build_transactions(frames, WindowConfig(4, 1), 0)
    assert len(txs) == 1 and txs[0].items == tuple(range(1, 15))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(1, 6), st.integers(1, 4))
def test_window_count(n, c, s):
    frames = np.random.default_rng(n * 100 + c * 10 + s).integers(1, 50, size=(n, 7))
    txs = build_transactions(frames, WindowConfig(c, s), 0)
    expected = 1 if n < c else (n - c) // s + 1
    assert len(txs) == expected == num_windows(n, WindowConfig(c, s))
    for t in txs:
        assert list(t.items) == sorted(set(t.items))


def test_window_config_validation():
    with pytest.raises(ValueError):
        WindowConfig(0, 1)
    with pytest.raises(ValueError):
        WindowConfig(3, 0)


def _tx(*items, j=0):
    return Transaction(tuple(items), j)


def test_assemble_two_actions():
    db = assemble_db([([_tx(1), _tx(2), _tx(3)], 1, 1), ([_tx(4), _tx(5), _tx(6)], 2, 1)], ndf=10)
    assert len(db) == 6 and len(db.actions) == 2
    assert [t.action_index for t in db.transactions] == [0, 0, 0, 1, 1, 1]
    assert db.labels.tolist() == [1, 2]
    assert db.action_transactions(1)[0].items == (4,)


def test_assemble_errors():
    with pytest.raises(ValueError, match="label"):
        assemble_db([([_tx(1)], 0, 1)], ndf=10)
    with pytest.raises(ValueError, match="no actions"):
        assemble_db([], ndf=10)
    with pytest.raises(ValueError, match="outside"):
        assemble_db([([_tx(11)], 1, 1)], ndf=10)


def test_dump_round_trip(tmp_path):
    db = assemble_db([([_tx(1, 2), _tx(3)], 2, 5), ([_tx(4, 9)], 1, 7)], ndf=10, num_classes=3)
    dump_db(db, tmp_path / "t.txt")
    assert load_db(tmp_path / "t.txt") == db
