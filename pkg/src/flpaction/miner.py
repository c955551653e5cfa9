"""Closed frequent itemset mining by prefix-preserving closure extension.

Occurrence sets are Python integers used as bitsets over transaction
indices, so intersections are ``&`` and supports are ``int.bit_count()``.
Every node of the search carries its projected item list: the items outside
the current closed set that are still frequent inside its occurrence set.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .transactions import Transaction, TransactionDb

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MinerConfig:
    min_support: int = 1
    max_support: int | None = None

    def __post_init__(self):
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")
        if self.max_support is not None and self.max_support < self.min_support:
            raise ValueError(
                f"max_support ({self.max_support}) must be >= min_support ({self.min_support})"
            )


@dataclass(frozen=True)
class Pattern:
    """A closed itemset with its support and per-action frequencies F(t|A_j)."""

    items: tuple[int, ...]
    support: int
    per_action_freq: tuple[int, ...] = ()


def item_occurrences(transactions) -> dict[int, int]:
    """Map each item to the bitset of transaction indices containing it."""
    occ: dict[int, int] = {}
    for k, t in enumerate(transactions):
        bit = 1 << k
        for i in t.items:
            occ[i] = occ.get(i, 0) | bit
    return occ


def action_counts(occ: int, ranges) -> tuple[int, ...]:
    """Split an occurrence bitset into per-action counts; ``ranges`` holds (start, count)."""
    return tuple(((occ >> start) & ((1 << count) - 1)).bit_count() for start, count in ranges)


# Per-process search context (item occurrences, thresholds, action ranges).
_CTX: dict = {}


def _init_worker(occ, min_support, max_support, ranges):
    _CTX.update(occ=occ, S=min_support, U=max_support, ranges=ranges)


def _extend(closed: tuple[int, ...], e: int, occ: int, cand: list[int], out: list) -> None:
    """Try ``closed + {e}``; on a valid ppc-extension emit its closure and recurse."""
    item_occ = _CTX["occ"]
    S = _CTX["S"]
    occ_e = occ & item_occ[e]
    supp = occ_e.bit_count()
    if supp < S:
        return
    added, sub = [], []
    for j in cand:
        if j == e:
            continue
        x = item_occ[j] & occ_e
        if x == occ_e:
            if j < e:
                return  # closure gains a smaller item, so the prefix is not preserved
            added.append(j)
        elif x.bit_count() >= S:
            sub.append(j)
    q = tuple(sorted(closed + (e,) + tuple(added)))
    U = _CTX["U"]
    if U is None or supp <= U:
        out.append((q, supp, action_counts(occ_e, _CTX["ranges"])))
    for e2 in sub:
        if e2 > e:
            _extend(q, e2, occ_e, sub, out)


def _branch(args) -> list:
    closed, e, occ, cand = args
    out: list = []
    _extend(closed, e, occ, cand, out)
    return out


def mine_closed(db: TransactionDb, cfg: MinerConfig, jobs: int = 1) -> list[Pattern]:
    """All closed itemsets with ``min_support <= support``, filtered by ``max_support``.

    Max support is an output filter only; it never prunes the search.
    Output is sorted lexicographically by item tuple, independent of ``jobs``.
    """
    if len(db) == 0:
        raise ValueError("empty transaction database")
    occ = item_occurrences(db.transactions)
    ranges = tuple((a.start, a.count) for a in db.actions)
    n = len(db)
    full = (1 << n) - 1
    S, U = cfg.min_support, cfg.max_support
    out: list = []
    if n >= S:
        root = tuple(i for i in sorted(occ) if occ[i] == full)
        cand = [i for i in sorted(occ) if occ[i] != full and occ[i].bit_count() >= S]
        if root and (U is None or n <= U):
            out.append((root, n, tuple(a.count for a in db.actions)))
        tasks = [(root, e, full, cand) for e in cand]
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(
                jobs, initializer=_init_worker, initargs=(occ, S, U, ranges)
            ) as pool:
                for part in pool.map(_branch, tasks, chunksize=max(1, len(tasks) // (4 * jobs))):
                    out.extend(part)
        else:
            _init_worker(occ, S, U, ranges)
            for task in tasks:
                out.extend(_branch(task))
    out.sort(key=lambda r: r[0])
    log.debug("mined %d closed itemsets from %d transactions", len(out), n)
    return [Pattern(items, supp, freqs) for items, supp, freqs in out]


def contains(pattern_items, transaction_items) -> bool:
    """Linear-merge subset test on two ascending item sequences."""
    if not pattern_items:
        raise ValueError("empty pattern")
    it = iter(transaction_items)
    for p in pattern_items:
        for x in it:
            if x == p:
                break
            if x > p:
                return False
        else:
            return False
    return True


def count_frequencies(pattern: Pattern | tuple, db: TransactionDb) -> tuple[int, ...]:
    """F(t|A_j) for every action j, by direct containment tests."""
    items = pattern.items if isinstance(pattern, Pattern) else tuple(pattern)
    counts = [0] * len(db.actions)
    for t in db.transactions:
        if contains(items, t.items):
            counts[t.action_index] += 1
    return tuple(counts)


def dump_patterns(patterns, path: str | Path) -> None:
    Path(path).write_text("".join(f"{p.support}: {' '.join(map(str, p.items))}\n" for p in patterns))


def load_patterns(path: str | Path, db: TransactionDb | None = None) -> list[Pattern]:
    """Read a pattern dump; per-action frequencies are recounted when ``db`` is given."""
    out = []
    for lineno, ln in enumerate(Path(path).read_text().splitlines(), start=1):
        if not ln.strip():
            continue
        head, _, tail = ln.partition(":")
        try:
            items = tuple(int(x) for x in tail.split())
            supp = int(head)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed pattern line") from None
        freqs = count_frequencies(items, db) if db is not None else ()
        out.append(Pattern(items, supp, freqs))
    return out
