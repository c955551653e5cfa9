"""Relevance scoring and greedy selection of mined patterns.

A pattern's relevance is its discriminability (one minus the normalized
class entropy) times its representativity (closeness of its action
distribution to the ideal one for the best class). Selection greedily adds
the pattern with the highest gain, i.e. relevance minus its worst
redundancy-weighted overlap with already selected patterns.

KL divergences use the natural log and no smoothing: mass on an action that
the second distribution gives zero probability makes the divergence
infinite. Frequencies are integers, so probability ratios are formed from
integer products; proportional frequency profiles then give log ratios of
exactly zero.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .miner import Pattern

log = logging.getLogger(__name__)

# Gains within this distance of the best are ties; a best gain at or below it
# means nothing relevant is left. Absorbs rounding only.
GAIN_EPS = 1e-12


@dataclass(frozen=True)
class SelectorConfig:
    k: int = 100
    max_candidates: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_candidates is not None and self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")


@dataclass(frozen=True)
class PatternStats:
    pattern: Pattern
    p_action: np.ndarray
    p_class: np.ndarray
    prob: float
    discriminability: float
    representativity: float

    @property
    def relevance(self) -> float:
        return self.discriminability * self.representativity

    @property
    def freqs(self) -> np.ndarray:
        return np.asarray(self.pattern.per_action_freq, dtype=np.int64)


# ---------------------------------------------------------------------------
# Scalar scores
# ---------------------------------------------------------------------------

def class_posterior(freqs: Sequence[int], labels: Sequence[int], num_classes: int) -> np.ndarray:
    """p(c|t) for c = 1..num_classes, from per-action frequencies."""
    freqs = np.asarray(freqs, dtype=float)
    total = freqs.sum()
    if total <= 0:
        raise ValueError("pattern has zero total frequency")
    per_class = np.bincount(np.asarray(labels) - 1, weights=freqs, minlength=num_classes)
    return per_class / total


def action_posterior(freqs: Sequence[int]) -> np.ndarray:
    freqs = np.asarray(freqs, dtype=float)
    total = freqs.sum()
    if total <= 0:
        raise ValueError("pattern has zero total frequency")
    return freqs / total


def discriminability(p_class: Sequence[float], num_classes: int) -> float:
    """1 + sum_c p log p / log(num_classes), clamped to [0, 1]."""
    if num_classes < 2:
        raise ValueError("discriminability needs at least two classes")
    p = np.asarray(p_class, dtype=float)
    p = p[p > 0]
    d = 1.0 + float(np.sum(p * np.log(p))) / math.log(num_classes)
    return min(1.0, max(0.0, d))


def representativity(freqs: Sequence[int], labels: Sequence[int], num_classes: int | None = None) -> float:
    """max_c exp(-KL(uniform over class-c actions || p(A|t))).

    Takes raw per-action frequencies; the divergence for class c is infinite
    (term 0) as soon as one of its actions has zero frequency.
    """
    freqs = np.asarray(freqs, dtype=float)
    labels = np.asarray(labels)
    total = freqs.sum()
    if total <= 0:
        raise ValueError("pattern has zero total frequency")
    best = 0.0
    for c in np.unique(labels):
        f = freqs[labels == c]
        if (f == 0).any():
            continue
        n_c = len(f)
        # (1/N_c) / p(A_j|t) = total / (N_c * F_j)
        kl = float(np.mean(np.log(total / (n_c * f))))
        best = max(best, math.exp(-kl))
    return min(1.0, best)


def _kl_to_merged(f: np.ndarray, tot: float, merged: np.ndarray, merged_tot: float) -> float:
    mask = f > 0
    ratio = (f[mask] * merged_tot) / (merged[mask] * tot)
    return float(np.sum((f[mask] / tot) * np.log(ratio)))


def redundancy(s: PatternStats, t: PatternStats) -> float:
    """exp(-[p(t) KL(p(A|t) || p(A|t,s)) + p(s) KL(p(A|s) || p(A|t,s))])."""
    fs, ft = s.freqs.astype(float), t.freqs.astype(float)
    merged = fs + ft
    mtot = merged.sum()
    kl_t = _kl_to_merged(ft, ft.sum(), merged, mtot)
    kl_s = _kl_to_merged(fs, fs.sum(), merged, mtot)
    return math.exp(-(t.prob * kl_t + s.prob * kl_s))


def gain(t: PatternStats, selected: Sequence[PatternStats]) -> float:
    """Relevance of ``t`` minus its largest redundancy penalty against ``selected``."""
    st = t.relevance
    if not selected:
        return st
    return st - max(redundancy(s, t) * min(st, s.relevance) for s in selected)


def pattern_stats(patterns: Sequence[Pattern], labels: Sequence[int], num_classes: int) -> list[PatternStats]:
    """Scores for every candidate; p(t) is normalized over the whole candidate list."""
    grand = sum(sum(p.per_action_freq) for p in patterns)
    out = []
    for p in patterns:
        pc = class_posterior(p.per_action_freq, labels, num_classes)
        out.append(
            PatternStats(
                pattern=p,
                p_action=action_posterior(p.per_action_freq),
                p_class=pc,
                prob=sum(p.per_action_freq) / grand,
                discriminability=discriminability(pc, num_classes),
                representativity=representativity(p.per_action_freq, labels, num_classes),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Vectorized scoring used by the greedy loop
# ---------------------------------------------------------------------------

def _score_matrix(F: np.ndarray, labels: np.ndarray, num_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """Discriminability and representativity for every row of ``F`` (patterns x actions)."""
    tot = F.sum(axis=1)
    per_class = np.zeros((len(F), num_classes))
    for c in range(1, num_classes + 1):
        per_class[:, c - 1] = F[:, labels == c].sum(axis=1)
    pc = per_class / tot[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(pc > 0, pc * np.log(pc), 0.0)
    disc = np.clip(1.0 + plogp.sum(axis=1) / math.log(num_classes), 0.0, 1.0)

    rep = np.zeros(len(F))
    for c in np.unique(labels):
        sub = F[:, labels == c]
        ok = (sub > 0).all(axis=1)
        if not ok.any():
            continue
        n_c = sub.shape[1]
        kl = np.log(tot[ok, None] / (n_c * sub[ok])).mean(axis=1)
        rep[ok] = np.maximum(rep[ok], np.exp(-kl))
    return disc, np.minimum(rep, 1.0)


def _redundancy_row(F: np.ndarray, tot: np.ndarray, prob: np.ndarray, fs: np.ndarray, tot_s: float,
                    prob_s: float) -> np.ndarray:
    """R(s, t) for one pattern ``s`` (frequencies ``fs``) against every row ``t`` of ``F``.

    On actions where ``s`` is absent the merged distribution is ``F / gtot``,
    so the log ratio there is the same ``log(gtot / tot)`` for the whole row
    and only the columns with ``fs > 0`` need elementwise work.
    """
    cols = fs > 0
    Fc = F[:, cols]
    fc = fs[cols]
    gtot = tot + tot_s
    G = Fc + fc
    outside = tot - Fc.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        kl_t = np.where(outside > 0, (outside / tot) * np.log(gtot / tot), 0.0)
        rt = (Fc * gtot[:, None]) / (G * tot[:, None])
        kl_t = kl_t + np.where(Fc > 0, (Fc / tot[:, None]) * np.log(rt), 0.0).sum(axis=1)
        rs = (fc * gtot[:, None]) / (G * tot_s)
        kl_s = ((fc / tot_s) * np.log(rs)).sum(axis=1)
    return np.exp(-(prob * kl_t + prob_s * kl_s))


def select_top_k(
    patterns: Sequence[Pattern],
    labels: Sequence[int],
    num_classes: int,
    cfg: SelectorConfig,
) -> list[Pattern]:
    """Greedy top-K selection by gain; returns patterns in selection order.

    Stops early once the best remaining gain is not positive. Ties go to the
    lexicographically smallest item tuple.
    """
    if not patterns:
        raise ValueError("no candidate patterns")
    if num_classes < 2:
        raise ValueError("selection needs at least two classes")
    labels = np.asarray(labels)
    F = np.array([p.per_action_freq for p in patterns], dtype=float)
    if F.shape[1] != len(labels):
        raise ValueError("per-action frequencies do not match the number of actions")
    tot = F.sum(axis=1)
    if (tot <= 0).any():
        raise ValueError("candidate pattern with zero total frequency")
    prob = tot / tot.sum()
    disc, rep = _score_matrix(F, labels, num_classes)
    relevance = disc * rep
    # rank[i] = lexicographic position of pattern i
    order = sorted(range(len(patterns)), key=lambda i: patterns[i].items)
    rank = np.empty(len(patterns), dtype=np.int64)
    rank[order] = np.arange(len(patterns))

    active = np.ones(len(patterns), dtype=bool)
    if cfg.max_candidates is not None and cfg.max_candidates < len(patterns):
        keep = np.lexsort((rank, -relevance))[: cfg.max_candidates]
        active[:] = False
        active[keep] = True

    # penalties only grow, so a candidate whose gain reaches GAIN_EPS is out for good
    active &= relevance > GAIN_EPS
    penalty = np.zeros(len(patterns))
    chosen: list[int] = []
    while len(chosen) < cfg.k and active.any():
        g = np.where(active, relevance - penalty, -np.inf)
        best = g.max()
        if best <= GAIN_EPS:
            break
        tied = np.flatnonzero(active & (g >= best - GAIN_EPS))
        pick = int(tied[np.argmin(rank[tied])])
        chosen.append(pick)
        active[pick] = False
        idx = np.flatnonzero(active)
        r = _redundancy_row(F[idx], tot[idx], prob[idx], F[pick], tot[pick], prob[pick])
        penalty[idx] = np.maximum(penalty[idx], r * np.minimum(relevance[idx], relevance[pick]))
        active[idx] = relevance[idx] - penalty[idx] > GAIN_EPS
    log.debug("selected %d of %d candidates", len(chosen), len(patterns))
    return [patterns[i] for i in chosen]


def relevance_scores(patterns: Sequence[Pattern], labels: Sequence[int], num_classes: int) -> np.ndarray:
    F = np.array([p.per_action_freq for p in patterns], dtype=float)
    disc, rep = _score_matrix(F, np.asarray(labels), num_classes)
    return disc * rep


def dump_selected(patterns: Sequence[Pattern], scores: Sequence[float], path: str | Path) -> None:
    lines = [
        f"{rank} {score:.6f} : {' '.join(map(str, p.items))}\n"
        for rank, (p, score) in enumerate(zip(patterns, scores), start=1)
    ]
    Path(path).write_text("".join(lines))


def load_selected(path: str | Path) -> list[tuple[int, ...]]:
    """Item tuples of a selected-pattern file, in rank order."""
    rows = []
    for lineno, ln in enumerate(Path(path).read_text().splitlines(), start=1):
        if not ln.strip():
            continue
        head, sep, tail = ln.partition(":")
        if not sep or len(head.split()) != 2:
            raise ValueError(f"{path}:{lineno}: expected '<rank> <score> : items'")
        rows.append((int(head.split()[0]), tuple(int(x) for x in tail.split())))
    rows.sort()
    return [items for _, items in rows]
