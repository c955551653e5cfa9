"""Bag-of-FLPs histograms: per-action occurrence counts of selected patterns."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .miner import action_counts, contains, item_occurrences
from .transactions import Transaction, TransactionDb


@dataclass(frozen=True)
class BagOfFlps:
    counts: tuple[int, ...]
    label: int | None = None
    subject: int | None = None


def _items(p) -> tuple[int, ...]:
    return tuple(getattr(p, "items", p))


def encode_action(transactions: Sequence[Transaction], selected: Sequence) -> BagOfFlps:
    """counts[i] = number of the action's transactions that contain pattern i."""
    if not selected:
        raise ValueError("no selected patterns")
    pats = [_items(p) for p in selected]
    return BagOfFlps(tuple(sum(contains(p, t.items) for t in transactions) for p in pats))


def encode_db(db: TransactionDb, selected: Sequence) -> np.ndarray:
    """Histograms for every action of ``db`` at once, shape (num_actions, K).

    Pattern occurrence sets are intersected as transaction bitsets, which
    avoids one containment test per (pattern, transaction) pair.
    """
    if not selected:
        raise ValueError("no selected patterns")
    occ = item_occurrences(db.transactions)
    ranges = tuple((a.start, a.count) for a in db.actions)
    full = (1 << len(db)) - 1
    out = np.zeros((len(db.actions), len(selected)), dtype=np.int64)
    for i, p in enumerate(selected):
        bits = full
        for item in _items(p):
            bits &= occ.get(item, 0)
            if not bits:
                break
        if bits:
            out[:, i] = action_counts(bits, ranges)
    return out


def bags_from_db(db: TransactionDb, selected: Sequence) -> list[BagOfFlps]:
    H = encode_db(db, selected)
    return [
        BagOfFlps(tuple(int(x) for x in row), a.label, a.subject)
        for row, a in zip(H, db.actions)
    ]


def write_features(bags: Sequence[BagOfFlps], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for b in bags:
            w.writerow([b.label if b.label is not None else "", b.subject if b.subject is not None else "", *b.counts])


def read_features(path: str | Path) -> list[BagOfFlps]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            label = int(row[0]) if row[0] else None
            subject = int(row[1]) if row[1] else None
            out.append(BagOfFlps(tuple(int(x) for x in row[2:]), label, subject))
    return out
