"""End-to-end training, evaluation and cross-validation."""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bof import BagOfFlps, bags_from_db, encode_db, write_features
from .config import PipelineConfig
from .features import EncoderConfig, encode_frames
from .miner import Pattern, dump_patterns, mine_closed
from .selection import dump_selected, load_selected, relevance_scores, select_top_k
from .skeleton import ReferenceLengths, SkeletonSequence, fit_reference_lengths, normalize
from .svm import TrainedModel, train_ovo
from .transactions import TransactionDb, WindowConfig, assemble_db, build_transactions, dump_db, load_db

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    """An error raised inside a named pipeline stage."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def _part_items(args) -> np.ndarray:
    seq, ref, enc = args
    return encode_frames(normalize(seq, ref).frames, enc)


def part_items(
    sequences: Sequence[SkeletonSequence], ref: ReferenceLengths, enc: EncoderConfig, jobs: int = 1
) -> list[np.ndarray]:
    """Normalized part-state items (num_frames, 7) for every sequence, in input order."""
    tasks = [(s, ref, enc) for s in sequences]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_part_items, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_part_items(t) for t in tasks]


def transaction_db(
    sequences: Sequence[SkeletonSequence],
    ref: ReferenceLengths,
    cfg: PipelineConfig,
    num_classes: int | None = None,
    jobs: int = 1,
) -> TransactionDb:
    items = part_items(sequences, ref, cfg.encoder, jobs)
    per_action = [
        (build_transactions(fr, cfg.windows, j), s.label, s.subject)
        for j, (fr, s) in enumerate(zip(items, sequences))
    ]
    return assemble_db(per_action, cfg.encoder.ndf, num_classes)


def extract(train: Sequence[SkeletonSequence], cfg: PipelineConfig, num_classes: int | None = None, jobs: int = 1):
    """Reference lengths fitted on ``train`` and the training transaction database."""
    ref = fit_reference_lengths(list(train))
    return ref, transaction_db(train, ref, cfg, num_classes, jobs)


def mine(db: TransactionDb, cfg: PipelineConfig, jobs: int = 1) -> list[Pattern]:
    return mine_closed(db, cfg.miner, jobs)


def select(patterns: Sequence[Pattern], db: TransactionDb, cfg: PipelineConfig) -> tuple[list[Pattern], np.ndarray]:
    """Selected patterns in selection order and their relevance scores."""
    if not patterns:
        raise ValueError("no closed patterns within the support bounds; lower min_support or raise max_support")
    selected = select_top_k(patterns, db.labels, db.num_classes, cfg.selector)
    if not selected:
        raise ValueError("no pattern has positive relevance")
    return selected, relevance_scores(selected, db.labels, db.num_classes)


def fit(db: TransactionDb, selected: Sequence, ref: ReferenceLengths, cfg: PipelineConfig) -> TrainedModel:
    """Bag-of-FLPs histograms for the training actions and the one-vs-one SVM."""
    X = encode_db(db, selected)
    svm = train_ovo(X, db.labels, cfg.svm)
    conf = cfg.to_dict()
    conf["num_classes"] = db.num_classes
    return TrainedModel(conf, tuple(ref.lengths), [tuple(getattr(p, "items", p)) for p in selected], svm)


# ---------------------------------------------------------------------------
# Train / evaluate
# ---------------------------------------------------------------------------

@dataclass
class TrainResult:
    model: TrainedModel
    db: TransactionDb
    patterns: list[Pattern]
    selected: list[Pattern]
    timings: dict[str, float] = field(default_factory=dict)


def run_train(
    cfg: PipelineConfig,
    sequences: Sequence[SkeletonSequence],
    out_dir: str | Path | None = None,
    jobs: int = 1,
) -> TrainResult:
    """Run extraction, mining, selection and SVM training on the training split.

    With ``out_dir`` the stage dumps and ``model.json`` are written there.
    """
    timings: dict[str, float] = {}
    train, _ = cfg.split(sequences)
    if not train:
        raise PipelineError("split", ValueError("training split is empty"))
    num_classes = max(s.label for s in sequences)
    with _stage("extract", timings):
        ref, db = extract(train, cfg, num_classes, jobs)
    with _stage("mine", timings):
        patterns = mine(db, cfg, jobs)
    with _stage("select", timings):
        selected, scores = select(patterns, db, cfg)
    with _stage("train", timings):
        model = fit(db, selected, ref, cfg)
    log.info("trained on %d actions: %d patterns mined, %d selected", len(db.actions), len(patterns), len(selected))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_reference(ref, out / "reference.json")
        dump_db(db, out / "transactions.txt")
        dump_patterns(patterns, out / "patterns.txt")
        dump_selected(selected, scores, out / "selected.txt")
        write_features(bags_from_db(db, selected), out / "features.csv")
        model.save(out / "model.json")
    return TrainResult(model, db, patterns, selected, timings)


def train_from_dumps(cfg: PipelineConfig, out_dir: str | Path) -> TrainedModel:
    """Refit the classifier from ``reference.json``, ``transactions.txt`` and ``selected.txt``."""
    out = Path(out_dir)
    ref = read_reference(out / "reference.json")
    db = load_db(out / "transactions.txt")
    selected = load_selected(out / "selected.txt")
    return fit(db, selected, ref, cfg)


def write_reference(ref: ReferenceLengths, path: Path) -> None:
    path.write_text(json.dumps({"reference_lengths": list(ref.lengths)}, indent=1) + "\n")


def read_reference(path: Path) -> ReferenceLengths:
    return ReferenceLengths(tuple(json.loads(Path(path).read_text())["reference_lengths"]))


def model_config(model: TrainedModel) -> PipelineConfig:
    return PipelineConfig.from_dict(model.config)


def featurize(model: TrainedModel, sequences: Sequence[SkeletonSequence], jobs: int = 1) -> np.ndarray:
    """Bag-of-FLPs histograms (num_sequences, K) under the model's own settings."""
    cfg = model_config(model)
    ref = ReferenceLengths(tuple(model.reference_lengths))
    db = transaction_db(sequences, ref, cfg, jobs=jobs)
    return encode_db(db, model.selected)


def predict(model: TrainedModel, sequences: Sequence[SkeletonSequence], jobs: int = 1) -> np.ndarray:
    return model.svm.predict(featurize(model, sequences, jobs))


TIMINGS_FILE = "timings.json"


@dataclass
class EvalReport:
    accuracy: float                     # percent
    per_class: dict[int, float | None]  # percent per true class; None without test samples
    confusion: list[list[int]]          # rows: true class 1..n, columns: predicted
    num_selected: int
    num_test: int
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        """Report fields. Wall-clock timings vary between runs, so unless
        ``include_timings`` is set the ``timings`` field only names the
        companion file that holds them."""
        d = {
            "accuracy": self.accuracy,
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "confusion": self.confusion,
            "num_classes": len(self.confusion),
            "num_selected": self.num_selected,
            "num_test": self.num_test,
        }
        d["timings"] = dict(self.timings) if include_timings else TIMINGS_FILE
        return d

    def confusion_csv(self) -> str:
        n = len(self.confusion)
        head = "true\\pred," + ",".join(str(c) for c in range(1, n + 1))
        rows = [f"{i + 1}," + ",".join(str(v) for v in row) for i, row in enumerate(self.confusion)]
        return "\n".join([head, *rows]) + "\n"


def make_report(y_true, y_pred, num_classes: int, num_selected: int, timings=None) -> EvalReport:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    conf = np.zeros((num_classes, num_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        conf[t - 1, p - 1] += 1
    total = int(conf.sum())
    per_class = {}
    for c in range(1, num_classes + 1):
        n = int(conf[c - 1].sum())
        per_class[c] = 100.0 * int(conf[c - 1, c - 1]) / n if n else None
    acc = 100.0 * int(np.trace(conf)) / total if total else 0.0
    return EvalReport(acc, per_class, conf.tolist(), num_selected, total, dict(timings or {}))


def run_evaluate(
    model: TrainedModel,
    sequences: Sequence[SkeletonSequence],
    out_dir: str | Path | None = None,
    jobs: int = 1,
    split: bool = True,
    inline_timings: bool = False,
    extra_timings: dict[str, float] | None = None,
) -> EvalReport:
    """Classify the test split (or every sequence with ``split=False``) and report.

    By default ``report.json`` holds only run-independent fields and the
    stage timings go to ``timings.json``, so reports of identical runs are
    byte-identical. ``extra_timings`` (e.g. the training stages) are merged in.
    """
    timings: dict[str, float] = dict(extra_timings or {})
    cfg = model_config(model)
    test = cfg.split(sequences)[1] if split else list(sequences)
    if not test:
        raise PipelineError("split", ValueError("test split is empty"))
    with _stage("featurize", timings):
        X = featurize(model, test, jobs)
    with _stage("classify", timings):
        pred = model.svm.predict(X)
    y = np.array([s.label for s in test])
    num_classes = max(int(model.config.get("num_classes", 0)), *model.svm.classes, int(y.max()))
    report = make_report(y, pred, num_classes, len(model.selected), timings)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report.to_dict(inline_timings), indent=1, sort_keys=True) + "\n")
        (out / "confusion.csv").write_text(report.confusion_csv())
        (out / TIMINGS_FILE).write_text(json.dumps(timings, indent=1, sort_keys=True) + "\n")
        write_features(
            [BagOfFlps(tuple(int(v) for v in row), s.label, s.subject) for row, s in zip(X, test)],
            out / "test_features.csv",
        )
    return report


def pair_accuracy(model: TrainedModel, X, labels, a: int, b: int) -> float:
    """Accuracy of the (a, b) one-vs-one machine on the samples of those two classes."""
    labels = np.asarray(labels)
    mask = (labels == a) | (labels == b)
    if not mask.any():
        raise ValueError(f"no samples of classes {a} or {b}")
    lo, hi = min(a, b), max(a, b)
    pair = model.svm.pair(lo, hi)
    k = list(model.svm.pairs).index(pair)
    d = model.svm.decision_values(np.asarray(X)[mask])[:, k]
    pred = np.where(d > 0, lo, hi)
    return float(np.mean(pred == labels[mask]))


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

@dataclass
class CrossvalResult:
    best: PipelineConfig
    scores: list[tuple[PipelineConfig, float | None]]
    fit_subjects: tuple[int, ...]
    val_subjects: tuple[int, ...]


def validation_split(subjects: Sequence[int], seed: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Two thirds of the training subjects for fitting, one third for validation."""
    subjects = sorted(set(subjects))
    if len(subjects) < 3:
        raise ValueError("cross-validation needs at least 3 training subjects")
    perm = np.random.default_rng(seed).permutation(len(subjects))
    n_fit = int(round(2 * len(subjects) / 3))
    fit_s = tuple(sorted(subjects[i] for i in perm[:n_fit]))
    val_s = tuple(sorted(subjects[i] for i in perm[n_fit:]))
    return fit_s, val_s


def run_crossval(
    configs: Sequence[PipelineConfig],
    sequences: Sequence[SkeletonSequence],
    jobs: int = 1,
) -> CrossvalResult:
    """Grid search on a subject-wise 2/3 - 1/3 split of the training subjects.

    Returns the config with the best validation accuracy; ties go to the
    smaller K, then the smaller NDF, then grid order. The returned config
    keeps the original train/test split.
    """
    if not configs:
        raise ValueError("empty parameter grid")
    base = configs[0]
    train, _ = base.split(sequences)
    fit_s, val_s = validation_split([s.subject for s in train], base.seed)
    scores: list[tuple[PipelineConfig, float | None]] = []
    for cfg in configs:
        inner = cfg.replace(train_subjects=fit_s, test_subjects=None)
        try:
            res = run_train(inner, train, jobs=jobs)
            rep = run_evaluate(res.model, train, jobs=jobs)
            acc = rep.accuracy
        except PipelineError as exc:
            log.warning("config skipped: %s", exc)
            acc = None
        scores.append((cfg, acc))
        log.info("k=%d ndf=%d window=%d -> %s", cfg.selector.k, cfg.encoder.ndf, cfg.windows.window, acc)
    valid = [(i, c, a) for i, (c, a) in enumerate(scores) if a is not None]
    if not valid:
        raise PipelineError("crossval", ValueError("no configuration could be trained"))
    _, best, _ = min(valid, key=lambda r: (-r[2], r[1].selector.k, r[1].encoder.ndf, r[0]))
    return CrossvalResult(best, scores, fit_s, val_s)
