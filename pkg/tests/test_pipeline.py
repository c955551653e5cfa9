from __future__ import annotations

import json

import numpy as np
import pytest

import flpaction.pipeline as pl
from flpaction.config import load_config, preset_path
from flpaction.miner import dump_patterns, load_patterns
from flpaction.pipeline import (
    PipelineError,
    make_report,
    mine,
    run_crossval,
    run_evaluate,
    run_train,
    select,
    train_from_dumps,
    validation_split,
)
from flpaction.skeleton import load_manifest
from flpaction.svm import TrainedModel
from flpaction.transactions import load_db


@pytest.fixture(scope="module")
def synth(synthetic_manifest):
    cfg, _ = load_config(preset_path("synthetic"))
    return cfg, load_manifest(synthetic_manifest)


# --- reports -------------------------------------------------------------------

def test_report_perfect():
    rep = make_report([1, 1, 1, 2, 2, 2], [1, 1, 1, 2, 2, 2], 2, 5)
    assert rep.accuracy == 100.0
    assert rep.confusion == [[3, 0], [0, 3]]


def test_report_constant_predictor():
    y = np.repeat([1, 2, 3, 4], 5)
    rep = make_report(y, np.full(20, 3), 4, 5)
    assert rep.accuracy == 25.0
    assert rep.per_class == {1: 0.0, 2: 0.0, 3: 100.0, 4: 0.0}


def test_report_row_sums(rng):
    y = rng.integers(1, 6, size=200)
    p = rng.integers(1, 6, size=200)
    rep = make_report(y, p, 6, 1)
    conf = np.array(rep.confusion)
    assert conf.sum(axis=1).tolist() == [int((y == c).sum()) for c in range(1, 7)]
    assert rep.accuracy == pytest.approx(100 * np.trace(conf) / conf.sum())
    assert rep.per_class[6] is None
    d = rep.to_dict()
    assert {"accuracy", "per_class", "confusion", "timings"} <= set(d)
    assert d["timings"] == "timings.json"
    assert rep.confusion_csv().splitlines()[0] == "true\\pred,1,2,3,4,5,6"


# --- train / evaluate --------------------------------------------------------

def test_train_evaluate_synthetic(synth, tmp_path):
    cfg, seqs = synth
    res = run_train(cfg, seqs, tmp_path / "m")
    assert {f.name for f in (tmp_path / "m").iterdir()} >= {
        "model.json", "transactions.txt", "patterns.txt", "selected.txt", "features.csv", "reference.json"}
    # trained on the training subjects only
    assert {a.subject for a in res.db.actions} == {1, 2, 3}
    assert res.model.config["selection"]["k"] == 200
    rep = run_evaluate(res.model, seqs, tmp_path / "r", inline_timings=True)
    assert rep.num_test == 24
    d = json.loads((tmp_path / "r" / "report.json").read_text())
    assert set(d["timings"]) == {"featurize", "classify"}
    assert np.array(d["confusion"]).sum(axis=1).tolist() == [6, 6, 6, 6]
    lines = (tmp_path / "r" / "confusion.csv").read_text().splitlines()
    assert len(lines) == 5


def test_stage_dumps_reproduce_end_to_end(synth, tmp_path):
    cfg, seqs = synth
    res = run_train(cfg, seqs, tmp_path)
    db = load_db(tmp_path / "transactions.txt")
    assert db == res.db
    pats = load_patterns(tmp_path / "patterns.txt", db)
    assert pats == res.patterns
    selected, _ = select(pats, db, cfg)
    assert selected == res.selected
    refit = train_from_dumps(cfg, tmp_path)
    assert refit.dumps() == res.model.dumps()
    assert TrainedModel.load(tmp_path / "model.json").dumps() == res.model.dumps()


def test_parallel_jobs_identical(synth, tmp_path):
    cfg, seqs = synth
    a = run_train(cfg, seqs, jobs=1).model
    b = run_train(cfg, seqs, jobs=3).model
    assert a.dumps() == b.dumps()
    ra = run_evaluate(a, seqs, tmp_path / "a", jobs=1)
    rb = run_evaluate(b, seqs, tmp_path / "b", jobs=3)
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    assert ra.confusion == rb.confusion


def test_stage_errors_are_named(synth):
    cfg, seqs = synth
    with pytest.raises(PipelineError, match=r"\[split\]"):
        run_train(cfg.replace(train_subjects=(99,)), seqs)
    with pytest.raises(PipelineError, match=r"\[select\]"):
        run_train(cfg.replace(**{"miner.min_support": 10_000, "miner.max_support": None}), seqs)
    model = run_train(cfg, seqs).model
    with pytest.raises(PipelineError, match="test split is empty"):
        run_evaluate(model, [s for s in seqs if s.subject <= 3])


def test_mine_respects_support_bounds(synth):
    cfg, seqs = synth
    res = run_train(cfg, seqs)
    assert all(3 <= p.support <= 60 for p in res.patterns)
    assert res.patterns == mine(res.db, cfg)


# --- cross-validation --------------------------------------------------------

def test_validation_split():
    fit, val = validation_split([1, 2, 3, 4, 5, 6], seed=0)
    assert len(fit) == 4 and len(val) == 2 and set(fit) | set(val) == set(range(1, 7))
    assert validation_split([1, 2, 3, 4, 5, 6], seed=0) == (fit, val)
    with pytest.raises(ValueError):
        validation_split([1, 2], 0)


def test_crossval_singleton(synth):
    cfg, seqs = synth
    res = run_crossval([cfg], seqs)
    assert res.best == cfg
    assert len(res.scores) == 1 and res.scores[0][1] is not None


@pytest.fixture
def fake_accuracy(monkeypatch):
    """Replace training with a lookup of validation accuracy by (k, ndf)."""
    table = {}

    class Fake:
        def __init__(self, value):
            self.model = value
            self.accuracy = value

    monkeypatch.setattr(pl, "run_train", lambda cfg, seqs, jobs=1: Fake(table[(cfg.selector.k, cfg.encoder.ndf)]))
    monkeypatch.setattr(pl, "run_evaluate", lambda acc, seqs, jobs=1: Fake(acc))
    return table


def test_crossval_argmax(synth, fake_accuracy):
    cfg, seqs = synth
    grid = [cfg.replace(**{"selector.k": k}) for k in (50, 100, 200)]
    fake_accuracy.update({(50, 200): 60.0, (100, 200): 75.0, (200, 200): 70.0})
    assert run_crossval(grid, seqs).best.selector.k == 100


def test_crossval_ties(synth, fake_accuracy):
    cfg, seqs = synth
    grid = [cfg.replace(**{"selector.k": k, "encoder.ndf": n}) for k in (200, 100) for n in (300, 100)]
    fake_accuracy.update({(200, 300): 80.0, (200, 100): 80.0, (100, 300): 80.0, (100, 100): 80.0})
    best = run_crossval(grid, seqs).best
    assert (best.selector.k, best.encoder.ndf) == (100, 100)


def test_crossval_empty(synth):
    with pytest.raises(ValueError):
        run_crossval([], synth[1])
