from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from flpaction.config import load_config, preset_path
from flpaction.pipeline import transaction_db
from flpaction.skeleton import fit_reference_lengths, load_manifest
from flpaction.synth import generate_synthetic, phases, tempo_factor


def test_counts(tmp_path):
    m = generate_synthetic(tmp_path, num_classes=4, subjects=6, instances=2, frames=40, seed=1)
    assert len(list((tmp_path / "skeletons").glob("*.txt"))) == 48
    assert len(m.read_text().splitlines()) == 49  # header + 48 rows
    seqs = load_manifest(m)
    assert {s.num_frames for s in seqs} == {40}
    assert sorted(Counter(s.label for s in seqs).values()) == [12] * 4


def test_deterministic(tmp_path):
    a = generate_synthetic(tmp_path / "a", num_classes=3, subjects=2, instances=1, frames=10, seed=5)
    b = generate_synthetic(tmp_path / "b", num_classes=3, subjects=2, instances=1, frames=10, seed=5)
    c = generate_synthetic(tmp_path / "c", num_classes=3, subjects=2, instances=1, frames=10, seed=6)
    files = sorted(p.relative_to(a.parent) for p in a.parent.rglob("*.txt"))
    assert files
    for f in files:
        assert (a.parent / f).read_bytes() == (b.parent / f).read_bytes()
    assert any((a.parent / f).read_bytes() != (c.parent / f).read_bytes() for f in files)


def test_rejects_bad_counts(tmp_path):
    with pytest.raises(ValueError):
        generate_synthetic(tmp_path, subjects=0)


def test_phase_orders():
    assert tempo_factor(40) == 7 and tempo_factor(42) == 11
    base = phases(1, 40)
    for mode in ("tempo", "reverse"):
        assert sorted(phases(2, 40, mode)) == sorted(base)
        assert not np.array_equal(phases(2, 40, mode), base)
    with pytest.raises(ValueError):
        phases(2, 40, "sideways")


def _pair_multisets(tmp_path, mode, window):
    m = generate_synthetic(tmp_path / mode, num_classes=2, subjects=2, instances=2, frames=40, seed=0,
                           noise=0.0, pair_mode=mode)
    seqs = load_manifest(m)
    cfg, _ = load_config(preset_path("synthetic"))
    cfg = cfg.replace(**{"windows.window": window})
    db = transaction_db(seqs, fit_reference_lengths(seqs), cfg)
    out = {}
    for j, s in enumerate(seqs):
        out[(s.label, s.subject, s.instance)] = Counter(t.items for t in db.action_transactions(j))
    return out


@pytest.mark.parametrize("mode", ["tempo", "reverse"])
def test_pair_collapses_without_temporal_window(tmp_path, mode):
    ms = _pair_multisets(tmp_path, mode, 1)
    for subject in (1, 2):
        for inst in (1, 2):
            assert ms[(1, subject, inst)] == ms[(2, subject, inst)]


def test_tempo_pair_differs_with_window(tmp_path):
    ms = _pair_multisets(tmp_path, "tempo", 3)
    assert all(ms[(1, s, i)] != ms[(2, s, i)] for s in (1, 2) for i in (1, 2))


def test_exact_reversal_never_separable_by_windows(tmp_path):
    # windows are sets, so reversing time maps window s onto window T-C-s
    ms = _pair_multisets(tmp_path, "reverse", 3)
    assert all(ms[(1, s, i)] == ms[(2, s, i)] for s in (1, 2) for i in (1, 2))
