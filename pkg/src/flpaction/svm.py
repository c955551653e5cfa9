"""Square-root histogram intersection kernel and a one-vs-one SMO SVM.

The binary solver is SMO on a precomputed kernel with second-order working
set selection (maximal violating ``i``, then the ``j`` giving the largest
objective decrease). It solves

    min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= reg,  y'a = 0,   Q_ij = y_i y_j K_ij

and stops when the maximal KKT violation ``m(a) - M(a)`` drops below ``tol``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

TAU = 1e-12


@dataclass(frozen=True)
class SvmConfig:
    reg: float = 1.0
    tol: float = 1e-3
    max_passes: int = 100

    def __post_init__(self):
        if self.reg <= 0 or self.tol <= 0 or self.max_passes < 1:
            raise ValueError("reg and tol must be > 0, max_passes >= 1")


def kernel(l, m) -> float:
    """sum_i min(sqrt(L_i), sqrt(M_i))."""
    l = np.asarray(getattr(l, "counts", l), dtype=float)
    m = np.asarray(getattr(m, "counts", m), dtype=float)
    if l.shape != m.shape:
        raise ValueError(f"histogram length mismatch: {l.shape} vs {m.shape}")
    return float(np.minimum(np.sqrt(l), np.sqrt(m)).sum())


def kernel_matrix(A, B=None) -> np.ndarray:
    """Kernel between every row of ``A`` and every row of ``B`` (default ``A``)."""
    sa = np.sqrt(np.asarray(A, dtype=float))
    sb = sa if B is None else np.sqrt(np.asarray(B, dtype=float))
    if sa.shape[1] != sb.shape[1]:
        raise ValueError("histogram length mismatch")
    out = np.empty((len(sa), len(sb)))
    for i, row in enumerate(sa):
        out[i] = np.minimum(row, sb).sum(axis=1)
    return out


@dataclass
class BinarySolution:
    alpha: np.ndarray
    bias: float
    iterations: int
    converged: bool
    kkt_gap: float
    objective: list[float] = field(default_factory=list)


def _violation_sets(alpha, y, reg):
    up = ((y > 0) & (alpha < reg)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < reg))
    return up, low


def kkt_gap(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, reg: float) -> float:
    """m(a) - M(a): the largest KKT violation of a dual point."""
    G = (y[:, None] * y[None, :] * K) @ alpha - 1.0
    up, low = _violation_sets(alpha, y, reg)
    v = -y * G
    if not up.any() or not low.any():
        return 0.0
    return float(v[up].max() - v[low].min())


def dual_objective(K, y, alpha) -> float:
    """sum(a) - 1/2 a'Qa, the quantity SMO increases."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def smo(K: np.ndarray, y: np.ndarray, cfg: SvmConfig, track_objective: bool = False) -> BinarySolution:
    """Solve the binary soft-margin dual on a precomputed kernel matrix."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    reg = cfg.reg
    Q = y[:, None] * y[None, :] * K
    diag = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    max_iter = cfg.max_passes * max(n, 1)
    obj = [0.0] if track_objective else []
    it = 0
    gap = np.inf
    while it < max_iter:
        up, low = _violation_sets(alpha, y, reg)
        v = -y * G
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(v[up])])
        m = v[i]
        gap = m - v[low].min()
        if gap < cfg.tol:
            break
        # second-order choice of j among violating low candidates
        cand = low & (v < m)
        b = m - v[cand]
        a = diag[i] + diag[cand] - 2.0 * K[i, cand]
        a = np.where(a > 0, a, TAU)
        jj = np.flatnonzero(cand)
        j = int(jj[np.argmin(-(b * b) / a)])

        ai_old, aj_old = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > reg:
                    ai, aj = reg, reg - diff
            elif aj > reg:
                aj, ai = reg, reg + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > reg:
                if ai > reg:
                    ai, aj = reg, total - reg
            elif aj < 0:
                aj, ai = 0.0, total
            if total > reg:
                if aj > reg:
                    aj, ai = reg, total - reg
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += Q[:, i] * (ai - ai_old) + Q[:, j] * (aj - aj_old)
        it += 1
        if track_objective:
            # G = Qa - e, so sum(a) - a'Qa/2 = (sum(a) - a'G) / 2
            obj.append(0.5 * (alpha.sum() - alpha @ G))

    converged = gap < cfg.tol
    # bias from free vectors, else midpoint of the feasible interval
    v = -y * G
    free = (alpha > 0) & (alpha < reg)
    if free.any():
        bias = float(v[free].mean())
    else:
        up, low = _violation_sets(alpha, y, reg)
        hi = v[up].max() if up.any() else 0.0
        lo = v[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2)
    if not converged:
        log.warning("SMO stopped after %d iterations with KKT gap %.3g", it, gap)
    return BinarySolution(alpha, bias, it, bool(converged), float(gap), obj)


# ---------------------------------------------------------------------------
# One-vs-one multi-class model
# ---------------------------------------------------------------------------

@dataclass
class PairModel:
    """Binary machine for classes ``pos`` (+1) and ``neg`` (-1)."""

    pos: int
    neg: int
    sv_index: list[int]      # rows of the model's support-vector table
    coef: list[float]        # alpha_i * y_i
    bias: float
    degenerate: bool = False

    def decision(self, K_sv: np.ndarray) -> np.ndarray:
        """Decision values given kernels against the model's support-vector table."""
        if not self.sv_index:
            return np.full(K_sv.shape[0], self.bias)
        return K_sv[:, self.sv_index] @ np.asarray(self.coef) + self.bias


@dataclass
class OvoSvm:
    classes: list[int]
    support_vectors: np.ndarray          # (num_sv, K) histograms
    pairs: list[PairModel]
    report: dict = field(default_factory=dict)

    @property
    def num_features(self) -> int:
        return self.support_vectors.shape[1]

    def decision_values(self, X) -> np.ndarray:
        """(num_samples, num_pairs) decision values; positive favours ``pair.pos``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.num_features:
            raise ValueError(f"feature length {X.shape[1]} != model length {self.num_features}")
        K_sv = kernel_matrix(X, self.support_vectors) if len(self.support_vectors) else np.zeros((len(X), 0))
        return np.column_stack([p.decision(K_sv) for p in self.pairs])

    def predict(self, X) -> np.ndarray:
        """Majority vote; ties by summed decision value, then smallest class id."""
        D = self.decision_values(X)
        idx = {c: k for k, c in enumerate(self.classes)}
        out = []
        for row in D:
            votes = np.zeros(len(self.classes))
            score = np.zeros(len(self.classes))
            for p, d in zip(self.pairs, row):
                winner = p.pos if d > 0 else p.neg
                votes[idx[winner]] += 1
                score[idx[p.pos]] += d
                score[idx[p.neg]] -= d
            # lexsort: last key is primary
            best = np.lexsort((np.arange(len(self.classes)), -score, -votes))[0]
            out.append(self.classes[best])
        return np.array(out)

    def pair(self, a: int, b: int) -> PairModel:
        for p in self.pairs:
            if (p.pos, p.neg) == (a, b):
                return p
        raise KeyError((a, b))


def train_ovo(X, labels, cfg: SvmConfig) -> OvoSvm:
    """One binary SMO machine per class pair on the precomputed kernel."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    classes = sorted(int(c) for c in np.unique(labels))
    if len(classes) < 2:
        raise ValueError("training needs at least two classes")
    K = kernel_matrix(X)
    pairs: list[PairModel] = []
    used: dict[int, int] = {}
    report = {"degenerate_pairs": [], "unconverged_pairs": [], "kkt_gap": {}}
    for a, b in combinations(classes, 2):
        idx = np.flatnonzero((labels == a) | (labels == b))
        y = np.where(labels[idx] == a, 1.0, -1.0)
        if (X[idx] == X[idx[0]]).all():
            # identical histograms on both sides: no margin to learn
            bias = float(np.sign(y.sum()))
            pairs.append(PairModel(a, b, [], [], bias, degenerate=True))
            report["degenerate_pairs"].append([a, b])
            continue
        sol = smo(K[np.ix_(idx, idx)], y, cfg)
        report["kkt_gap"][f"{a}-{b}"] = sol.kkt_gap
        if not sol.converged:
            report["unconverged_pairs"].append([a, b])
        sv = np.flatnonzero(sol.alpha > 0)
        rows = [used.setdefault(int(idx[k]), len(used)) for k in sv]
        pairs.append(PairModel(a, b, rows, [float(sol.alpha[k] * y[k]) for k in sv], sol.bias))
    order = sorted(used, key=used.get)
    return OvoSvm(classes, X[order] if order else np.zeros((0, X.shape[1])), pairs, report)


# ---------------------------------------------------------------------------
# Trained pipeline model and its file format
# ---------------------------------------------------------------------------

MODEL_FORMAT = "flpaction-model/1"


@dataclass
class TrainedModel:
    """Everything needed to classify a new skeleton sequence."""

    config: dict
    reference_lengths: tuple[float, ...]
    selected: list[tuple[int, ...]]
    svm: OvoSvm

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "config": self.config,
            "reference_lengths": list(self.reference_lengths),
            "selected_patterns": [list(p) for p in self.selected],
            "classes": self.svm.classes,
            "support_vectors": self.svm.support_vectors.astype(np.int64).tolist(),
            "pairs": [
                {
                    "pos": p.pos,
                    "neg": p.neg,
                    "sv_index": p.sv_index,
                    "coef": p.coef,
                    "bias": p.bias,
                    "degenerate": p.degenerate,
                }
                for p in self.svm.pairs
            ],
            "training_report": self.svm.report,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TrainedModel:
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {d.get('format')!r}")
        k = len(d["selected_patterns"])
        sv = np.asarray(d["support_vectors"], dtype=float).reshape(-1, k)
        pairs = [
            PairModel(p["pos"], p["neg"], list(p["sv_index"]), list(p["coef"]), p["bias"], p["degenerate"])
            for p in d["pairs"]
        ]
        svm = OvoSvm(list(d["classes"]), sv, pairs, d.get("training_report", {}))
        return cls(d["config"], tuple(d["reference_lengths"]), [tuple(p) for p in d["selected_patterns"]], svm)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> TrainedModel:
        return cls.from_dict(json.loads(Path(path).read_text()))
