"""Synthetic skeleton actions for desk-scale experiments.

Each class is a periodic motion program: limb directions are smooth
functions of a phase in [0, 1) and joints are placed by walking the limb
tree from HipCenter. Subjects differ by limb-length scaling, instances by
amplitude, global position and coordinate noise.

Classes 1 and 2 form an order pair. Class 1 performs its program once over
the clip. Class 2 visits exactly the same sampled phases but in the order
``n -> k*n mod N`` (``k`` coprime to ``N``), i.e. the same motion repeated
``k`` times faster. Without noise both classes contain the same multiset of
poses, so single-frame features cannot tell them apart while multi-frame
windows can. ``pair_mode="reverse"`` instead makes class 2 the exact time
reversal of class 1.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .skeleton import J, LIMB_ORDER, LIMBS, NUM_JOINTS, NUM_LIMBS, write_canonical, write_manifest

BASE_LENGTHS = np.array([0.25, 0.18, 0.28, 0.25, 0.18, 0.28, 0.25, 0.45, 0.10, 0.42, 0.40, 0.10, 0.42, 0.40])

DOWN = np.array([0.0, -1.0, 0.0])
UP = np.array([0.0, 1.0, 0.0])


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


REST = np.array([
    UP,                      # ShoulderCenter -> Head
    [-1.0, 0.0, 0.0],        # -> ShoulderLeft
    DOWN, DOWN,              # left upper arm, forearm
    [1.0, 0.0, 0.0],         # -> ShoulderRight
    DOWN, DOWN,              # right upper arm, forearm
    UP,                      # HipCenter -> ShoulderCenter
    _unit([-1.0, -0.5, 0.0]),
    DOWN, DOWN,              # left thigh, shin
    _unit([1.0, -0.5, 0.0]),
    DOWN, DOWN,              # right thigh, shin
])


def _sagittal(angle: float, up: bool = False) -> np.ndarray:
    """Direction rotated by ``angle`` (radians) from straight down (or up) towards +z."""
    if up:
        return np.array([0.0, math.cos(angle), math.sin(angle)])
    return np.array([0.0, -math.cos(angle), math.sin(angle)])


def _lift(phase: float) -> float:
    """Smooth 0 -> 1 -> 0 profile over one period."""
    return 0.5 * (1.0 - math.cos(2.0 * math.pi * phase))


def limb_directions(label: int, phase: float, amp: float = 1.0) -> np.ndarray:
    """Unit direction of every limb for class ``label`` at ``phase``."""
    d = REST.copy()
    # classes beyond the first four reuse the programs with a narrower range
    r = amp * _lift(phase) * (1.0 - 0.3 * ((label - 1) // 4))
    kind = (label - 1) % 4
    if kind in (0, 1):
        # both arms raised forward (right higher) with a slight trunk lean
        d[5] = _sagittal(math.radians(150) * r)
        d[6] = _sagittal(math.radians(165) * r)
        d[2] = _sagittal(math.radians(90) * r)
        d[3] = _sagittal(math.radians(110) * r)
        d[7] = _sagittal(math.radians(25) * r, up=True)
    elif kind == 2:
        # bow: trunk and head tilt forward, arms hang
        d[7] = _sagittal(math.radians(60) * r, up=True)
        d[0] = _sagittal(math.radians(75) * r, up=True)
        d[2] = d[3] = d[5] = d[6] = _sagittal(math.radians(20) * r)
    else:
        # left kick with a counter-swing of the left arm
        d[9] = _sagittal(math.radians(70) * r)
        d[10] = _sagittal(math.radians(35) * r)
        d[2] = _sagittal(-math.radians(45) * r)
        d[3] = _sagittal(-math.radians(30) * r)
    return d


def pose(directions: np.ndarray, lengths: np.ndarray, root=(0.0, 0.9, 2.5)) -> np.ndarray:
    """Forward kinematics over the limb tree, plus the five unused joints."""
    out = np.zeros((NUM_JOINTS, 3))
    out[J["HipCenter"]] = root
    for l in LIMB_ORDER:
        p, c = LIMBS[l]
        out[c] = out[p] + lengths[l] * directions[l]
    out[J["Spine"]] = out[J["HipCenter"]] + 0.4 * (out[J["ShoulderCenter"]] - out[J["HipCenter"]])
    out[J["HandLeft"]] = out[J["WristLeft"]] + 0.08 * directions[3]
    out[J["HandRight"]] = out[J["WristRight"]] + 0.08 * directions[6]
    foot = _unit([0.0, -0.3, 1.0])
    out[J["FootLeft"]] = out[J["AnkleLeft"]] + 0.1 * foot
    out[J["FootRight"]] = out[J["AnkleRight"]] + 0.1 * foot
    return out


def tempo_factor(num_frames: int) -> int:
    """Smallest k >= 7 coprime to ``num_frames``."""
    k = 7
    while math.gcd(k, num_frames) != 1:
        k += 1
    return k


def phases(label: int, num_frames: int, pair_mode: str = "tempo") -> np.ndarray:
    """Sampled program phases for one clip of class ``label``."""
    n = np.arange(num_frames)
    if (label - 1) % 4 != 1:
        return n / num_frames
    if pair_mode == "tempo":
        return (tempo_factor(num_frames) * n % num_frames) / num_frames
    if pair_mode == "reverse":
        return n[::-1] / num_frames
    raise ValueError(f"unknown pair_mode {pair_mode!r}")


def subject_lengths(subject: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 0, subject])
    return BASE_LENGTHS * rng.uniform(0.85, 1.15) * rng.uniform(0.95, 1.05, NUM_LIMBS)


def generate_sequence(
    label: int, subject: int, instance: int, num_frames: int, seed: int,
    noise: float = 0.01, pair_mode: str = "tempo",
) -> np.ndarray:
    """Frames (num_frames, 20, 3) for one synthetic clip; fully determined by the arguments."""
    lengths = subject_lengths(subject, seed)
    # amplitude and placement depend on the take, not the class, so the two
    # members of the order pair share them
    take = np.random.default_rng([seed, 1, subject, instance])
    amp = take.uniform(0.9, 1.05)
    root = np.array([0.0, 0.9, 2.5]) + take.uniform([-0.4, -0.05, -0.4], [0.4, 0.05, 0.4])
    frames = np.stack([
        pose(limb_directions(label, ph, amp), lengths, root)
        for ph in phases(label, num_frames, pair_mode)
    ])
    if noise > 0:
        frames = frames + np.random.default_rng([seed, 2, label, subject, instance]).normal(0.0, noise, frames.shape)
    return frames


def generate_synthetic(
    out_dir: str | Path,
    num_classes: int = 4,
    subjects: int = 6,
    instances: int = 2,
    frames: int = 40,
    seed: int = 0,
    noise: float = 0.01,
    pair_mode: str = "tempo",
) -> Path:
    """Write canonical skeleton files plus ``manifest.csv``; returns the manifest path."""
    if min(num_classes, subjects, instances, frames) < 1:
        raise ValueError("all counts must be >= 1")
    out_dir = Path(out_dir)
    (out_dir / "skeletons").mkdir(parents=True, exist_ok=True)
    rows = []
    for label in range(1, num_classes + 1):
        for subject in range(1, subjects + 1):
            for instance in range(1, instances + 1):
                name = f"skeletons/a{label:02d}_s{subject:02d}_e{instance:02d}_skeleton.txt"
                data = generate_sequence(label, subject, instance, frames, seed, noise, pair_mode)
                write_canonical(out_dir / name, data)
                rows.append((name, label, subject, instance))
    manifest = out_dir / "manifest.csv"
    write_manifest(manifest, rows)
    return manifest
