"""Sliding-window transactions built from per-frame part states."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class WindowConfig:
    window: int = 3
    stride: int = 1

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ValueError("window and stride must be >= 1")


@dataclass(frozen=True)
class Transaction:
    items: tuple[int, ...]
    action_index: int


@dataclass(frozen=True)
class ActionInfo:
    label: int
    subject: int
    start: int   # index of the action's first transaction in the db
    count: int


@dataclass(frozen=True)
class TransactionDb:
    transactions: tuple[Transaction, ...]
    actions: tuple[ActionInfo, ...]
    num_classes: int
    ndf: int

    def __len__(self):
        return len(self.transactions)

    @property
    def labels(self) -> np.ndarray:
        return np.array([a.label for a in self.actions])

    def action_transactions(self, j: int) -> tuple[Transaction, ...]:
        a = self.actions[j]
        return self.transactions[a.start:a.start + a.count]


def num_windows(num_frames: int, cfg: WindowConfig) -> int:
    if num_frames < cfg.window:
        return 1
    return (num_frames - cfg.window) // cfg.stride + 1


def build_transactions(frames: Sequence, cfg: WindowConfig, action_index: int) -> list[Transaction]:
    """Deduplicated union of part items over each window of ``cfg.window`` frames.

    Sequences shorter than the window yield a single transaction over all frames.
    """
    frames = np.asarray(frames)
    if frames.ndim != 2 or len(frames) == 0:
        raise ValueError("need at least one frame of part items")
    n = len(frames)
    if n < cfg.window:
        starts, width = [0], n
    else:
        starts, width = range(0, n - cfg.window + 1, cfg.stride), cfg.window
    return [
        Transaction(tuple(int(x) for x in np.unique(frames[s:s + width])), action_index)
        for s in starts
    ]


def assemble_db(
    per_action: Iterable[tuple[list[Transaction], int, int]],
    ndf: int,
    num_classes: int | None = None,
) -> TransactionDb:
    """Concatenate per-action transaction lists into one database.

    ``per_action`` yields ``(transactions, label, subject)``; transactions are
    re-indexed to the action's position in the input. ``num_classes`` defaults
    to the largest label and can only be raised above it.
    """
    transactions: list[Transaction] = []
    actions: list[ActionInfo] = []
    for j, (txs, label, subject) in enumerate(per_action):
        if label < 1:
            raise ValueError(f"action {j}: label must be >= 1, got {label}")
        if not txs:
            raise ValueError(f"action {j}: no transactions")
        for t in txs:
            if not t.items or t.items[0] < 1 or t.items[-1] > ndf:
                raise ValueError(f"action {j}: item outside (0, {ndf}] in {t.items}")
        actions.append(ActionInfo(label, subject, len(transactions), len(txs)))
        transactions.extend(Transaction(t.items, j) for t in txs)
    if not actions:
        raise ValueError("no actions to assemble")
    top = max(a.label for a in actions)
    return TransactionDb(tuple(transactions), tuple(actions), max(top, num_classes or 0), ndf)


# ---------------------------------------------------------------------------
# Text dump
# ---------------------------------------------------------------------------

def dump_db(db: TransactionDb, path: str | Path) -> None:
    lines = [f"# ndf={db.ndf} num_classes={db.num_classes}"]
    for j, a in enumerate(db.actions):
        lines.append(f"# action={j} label={a.label} subject={a.subject}")
        lines.extend(" ".join(map(str, t.items)) for t in db.action_transactions(j))
    Path(path).write_text("\n".join(lines) + "\n")


def _kv(line: str) -> dict[str, int]:
    return {k: int(v) for k, v in (tok.split("=") for tok in line[1:].split())}


def load_db(path: str | Path) -> TransactionDb:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# ndf="):
        raise ValueError(f"{path}:1: missing '# ndf=' header")
    head = _kv(lines[0])
    per_action: list[tuple[list[Transaction], int, int]] = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if ln.startswith("#"):
            kv = _kv(ln)
            if kv["action"] != len(per_action):
                raise ValueError(f"{path}:{lineno}: actions out of order")
            per_action.append(([], kv["label"], kv.get("subject", 0)))
        elif ln.strip():
            if not per_action:
                raise ValueError(f"{path}:{lineno}: transaction before any action header")
            per_action[-1][0].append(Transaction(tuple(int(x) for x in ln.split()), len(per_action) - 1))
    return assemble_db(per_action, head["ndf"], head["num_classes"])
