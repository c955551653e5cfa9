"""Quantized limb orientations and their mapping to per-part state items."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .skeleton import LIMB_CHILDREN, LIMB_PARENTS, NUM_PARTS, PARTS, DEGENERATE_EPS, SkeletonError

NUM_LIMB_STATES = 27

DEFAULT_DOF_WEIGHTS = tuple(float(len(p)) for p in PARTS)


def part_budgets(ndf: int, weights) -> tuple[int, ...]:
    """Split ``ndf`` states across the parts proportionally to ``weights``.

    Each part gets at least one state. Rounding overshoot is taken from the
    largest budget (lowest index on ties) until the total fits in ``ndf``.
    """
    w = np.asarray(weights, dtype=float)
    budgets = [max(1, int(round(ndf * x / w.sum()))) for x in w]
    while sum(budgets) > ndf:
        i = max(range(len(budgets)), key=lambda k: (budgets[k], -k))
        if budgets[i] == 1:
            raise ValueError(f"ndf={ndf} too small for {len(budgets)} parts")
        budgets[i] -= 1
    return tuple(budgets)


@dataclass(frozen=True)
class EncoderConfig:
    threshold: float = 0.15
    ndf: int = 600
    dof_weights: tuple[float, ...] = DEFAULT_DOF_WEIGHTS
    budgets: tuple[int, ...] = field(init=False, repr=False, compare=False)
    offsets: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.ndf < NUM_PARTS:
            raise ValueError(f"ndf must be >= {NUM_PARTS}, got {self.ndf}")
        weights = tuple(float(x) for x in self.dof_weights)
        if len(weights) != NUM_PARTS or min(weights) <= 0:
            raise ValueError(f"dof_weights must be {NUM_PARTS} positive numbers")
        object.__setattr__(self, "dof_weights", weights)
        budgets = part_budgets(self.ndf, weights)
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "offsets", tuple(int(x) for x in np.cumsum((0,) + budgets[:-1])))


def limb_unit_vector(child_pos, parent_pos) -> np.ndarray:
    """Unit vector from the parent (reference) joint to the child joint."""
    d = np.asarray(child_pos, dtype=float) - np.asarray(parent_pos, dtype=float)
    dist = np.linalg.norm(d)
    if dist <= DEGENERATE_EPS:
        raise SkeletonError("degenerate limb: joints coincide")
    return d / dist


def quantize_axis(delta, threshold: float):
    """Three-level quantization: 0 inside [-threshold, threshold], else the sign."""
    delta = np.asarray(delta)
    q = np.where(delta > threshold, 1, -1)
    q = np.where(np.abs(delta) <= threshold, 0, q)
    return int(q) if q.ndim == 0 else q


def limb_state(unit_vec, threshold: float):
    """Pack the three quantized axes into a state in [0, 26] (x outermost)."""
    q = np.asarray(quantize_axis(np.asarray(unit_vec, dtype=float), threshold)) + 1
    s = q[..., 0] * 9 + q[..., 1] * 3 + q[..., 2]
    return int(s) if np.ndim(s) == 0 else s


def limb_states(frames: np.ndarray, threshold: float) -> np.ndarray:
    """Limb states for a batch of frames: (n, 20, 3) -> (n, 14)."""
    frames = np.asarray(frames, dtype=float)
    d = frames[:, LIMB_CHILDREN] - frames[:, LIMB_PARENTS]
    dist = np.linalg.norm(d, axis=-1, keepdims=True)
    if (dist <= DEGENERATE_EPS).any():
        raise SkeletonError("degenerate limb: joints coincide")
    return limb_state(d / dist, threshold)


def part_items(states: np.ndarray, config: EncoderConfig) -> np.ndarray:
    """Map limb states (n, 14) to part items (n, 7) in (offset_p, offset_p + budget_p]."""
    states = np.asarray(states, dtype=np.int64)
    out = np.empty((len(states), NUM_PARTS), dtype=np.int64)
    for p, limbs in enumerate(PARTS):
        raw = np.zeros(len(states), dtype=np.int64)
        for m, l in enumerate(limbs):
            raw += states[:, l] * NUM_LIMB_STATES**m
        out[:, p] = config.offsets[p] + raw % config.budgets[p] + 1
    return out


def encode_frame(frame: np.ndarray, config: EncoderConfig) -> tuple[int, ...]:
    """Seven part-state items for one normalized frame of 20 joints."""
    items = encode_frames(np.asarray(frame)[None], config)[0]
    return tuple(int(x) for x in items)


def encode_frames(frames: np.ndarray, config: EncoderConfig) -> np.ndarray:
    return part_items(limb_states(frames, config.threshold), config)
