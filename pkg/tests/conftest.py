from __future__ import annotations

import numpy as np
import pytest

from flpaction.skeleton import NUM_LIMBS, SkeletonSequence
from flpaction.synth import BASE_LENGTHS, pose


def random_frames(rng: np.random.Generator, n: int = 5) -> np.ndarray:
    """Valid skeleton frames with random limb directions and lengths."""
    out = []
    for _ in range(n):
        d = rng.normal(size=(NUM_LIMBS, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        lengths = BASE_LENGTHS * rng.uniform(0.7, 1.3, NUM_LIMBS)
        out.append(pose(d, lengths, root=rng.uniform(-1, 1, 3)))
    return np.stack(out)


def random_sequence(rng, n=5, label=1, subject=1, instance=1) -> SkeletonSequence:
    return SkeletonSequence(random_frames(rng, n), label, subject, instance)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_manifest(tmp_path_factory):
    from flpaction.synth import generate_synthetic

    return generate_synthetic(tmp_path_factory.mktemp("synth"), seed=0)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
