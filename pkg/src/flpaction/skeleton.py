"""Kinect skeleton topology, file loaders and limb-length normalization.

Joint indices follow the 20-joint Kinect (SDK v1) order used by the MSR
datasets. Five joints (hands, feet, spine) are unreliable and carry no limb;
the remaining 15 joints form a tree of 14 limbs rooted at HipCenter.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

NUM_JOINTS = 20

JOINT_NAMES = (
    "HipCenter", "Spine", "ShoulderCenter", "Head",
    "ShoulderLeft", "ElbowLeft", "WristLeft", "HandLeft",
    "ShoulderRight", "ElbowRight", "WristRight", "HandRight",
    "HipLeft", "KneeLeft", "AnkleLeft", "FootLeft",
    "HipRight", "KneeRight", "AnkleRight", "FootRight",
)
J = {name: i for i, name in enumerate(JOINT_NAMES)}

UNUSED_JOINTS = frozenset(J[n] for n in ("HandLeft", "HandRight", "FootLeft", "FootRight", "Spine"))
USED_JOINTS = tuple(i for i in range(NUM_JOINTS) if i not in UNUSED_JOINTS)
ROOT = J["HipCenter"]
HEAD = J["Head"]

# (parent, child); the child is the "current" joint and the parent the sphere center.
LIMBS = tuple(
    (J[p], J[c])
    for p, c in (
        ("ShoulderCenter", "Head"),
        ("ShoulderCenter", "ShoulderLeft"),
        ("ShoulderLeft", "ElbowLeft"),
        ("ElbowLeft", "WristLeft"),
        ("ShoulderCenter", "ShoulderRight"),
        ("ShoulderRight", "ElbowRight"),
        ("ElbowRight", "WristRight"),
        ("HipCenter", "ShoulderCenter"),
        ("HipCenter", "HipLeft"),
        ("HipLeft", "KneeLeft"),
        ("KneeLeft", "AnkleLeft"),
        ("HipCenter", "HipRight"),
        ("HipRight", "KneeRight"),
        ("KneeRight", "AnkleRight"),
    )
)
NUM_LIMBS = len(LIMBS)
LIMB_PARENTS = np.array([p for p, _ in LIMBS])
LIMB_CHILDREN = np.array([c for _, c in LIMBS])

# Limb memberships of the seven body parts; limb 7 (HipCenter-ShoulderCenter)
# is shared by the two torso parts.
PARTS = (
    (0,),          # Head - ShoulderCenter
    (1, 2, 3),     # left arm
    (4, 5, 6),     # right arm
    (7, 8),        # ShoulderCenter - HipCenter - HipLeft
    (9, 10),       # left leg
    (7, 11),       # ShoulderCenter - HipCenter - HipRight
    (12, 13),      # right leg
)
NUM_PARTS = len(PARTS)

DEGENERATE_EPS = 1e-9


class SkeletonError(ValueError):
    """Malformed skeleton data or a degenerate skeleton."""


def _tree_order() -> tuple[int, ...]:
    """Limb indices ordered so every limb's parent joint is placed first."""
    children: dict[int, list[int]] = {}
    for l, (p, _) in enumerate(LIMBS):
        children.setdefault(p, []).append(l)
    order, stack, seen = [], [ROOT], {ROOT}
    while stack:
        joint = stack.pop(0)
        for l in children.get(joint, []):
            c = LIMBS[l][1]
            if c in seen:
                raise SkeletonError("limb graph has a cycle")
            seen.add(c)
            order.append(l)
            stack.append(c)
    if seen != set(USED_JOINTS) or len(order) != NUM_LIMBS:
        raise SkeletonError("limb tree does not span the used joints")
    return tuple(order)


LIMB_ORDER = _tree_order()


@dataclass(frozen=True)
class SkeletonSequence:
    """One action instance: ``frames`` has shape (num_frames, 20, 3)."""

    frames: np.ndarray
    label: int
    subject: int
    instance: int
    path: str = ""

    def __post_init__(self):
        # private read-only copy; the caller's array is left untouched
        frames = np.array(self.frames, dtype=float)
        if frames.ndim != 3 or frames.shape[1:] != (NUM_JOINTS, 3) or len(frames) < 1:
            raise SkeletonError(f"expected (n>=1, 20, 3) frames, got {frames.shape}")
        if not np.isfinite(frames).all():
            raise SkeletonError("non-finite joint coordinate")
        if self.label < 1:
            raise SkeletonError(f"class label must be >= 1, got {self.label}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    def with_frames(self, frames: np.ndarray) -> SkeletonSequence:
        return SkeletonSequence(frames, self.label, self.subject, self.instance, self.path)


@dataclass(frozen=True)
class ReferenceLengths:
    lengths: tuple[float, ...]

    def __post_init__(self):
        if len(self.lengths) != NUM_LIMBS:
            raise SkeletonError(f"need {NUM_LIMBS} reference lengths")
        if not all(x > 0 for x in self.lengths):
            raise SkeletonError("reference lengths must be positive")


# ---------------------------------------------------------------------------
# File loading
# ---------------------------------------------------------------------------

def _floats(tokens: list[str], path, lineno: int) -> list[float]:
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise SkeletonError(f"{path}:{lineno}: bad number in {' '.join(tokens)!r}") from None
    if not all(np.isfinite(vals)):
        raise SkeletonError(f"{path}:{lineno}: non-finite coordinate")
    return vals


def _header(lines: list[str], path) -> tuple[int, int]:
    if not lines:
        raise SkeletonError(f"{path}:1: empty file")
    tok = lines[0].split()
    if len(tok) != 2 or not all(t.isdigit() for t in tok):
        raise SkeletonError(f"{path}:1: expected '<num_frames> <num_joints>' header")
    n, nj = int(tok[0]), int(tok[1])
    if nj != NUM_JOINTS:
        raise SkeletonError(f"{path}:1: expected {NUM_JOINTS} joints, got {nj}")
    if n < 1:
        raise SkeletonError(f"{path}:1: no frames")
    return n, nj


def read_canonical(path: str | Path) -> np.ndarray:
    """Read the canonical text format: a header then 20 ``x y z`` lines per frame."""
    lines = Path(path).read_text().splitlines()
    n, _ = _header(lines, path)
    body = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    if len(body) != n * NUM_JOINTS:
        where = body[-1][0] if body else 1
        raise SkeletonError(
            f"{path}:{where}: expected {n * NUM_JOINTS} coordinate lines, found {len(body)}"
        )
    out = np.empty((n * NUM_JOINTS, 3))
    for k, (lineno, ln) in enumerate(body):
        tok = ln.split()
        if len(tok) != 3:
            raise SkeletonError(f"{path}:{lineno}: expected 'x y z', got {len(tok)} fields")
        out[k] = _floats(tok, path, lineno)
    return out.reshape(n, NUM_JOINTS, 3)


def read_msr(path: str | Path) -> np.ndarray:
    """Read an MSR-style skeleton text file.

    Each frame starts with a row count followed by that many ``x y z conf``
    rows alternating between world and screen coordinates. Only the world
    rows are kept.
    """
    lines = Path(path).read_text().splitlines()
    n, _ = _header(lines, path)
    frames = np.empty((n, NUM_JOINTS, 3))
    i = 1
    for f in range(n):
        while i < len(lines) and not lines[i].strip():
            i += 1
        if i >= len(lines):
            raise SkeletonError(f"{path}:{i + 1}: unexpected end of file in frame {f}")
        tok = lines[i].split()
        if len(tok) != 1 or not tok[0].isdigit():
            raise SkeletonError(f"{path}:{i + 1}: expected per-frame row count")
        rows = int(tok[0])
        if rows != 2 * NUM_JOINTS:
            raise SkeletonError(f"{path}:{i + 1}: expected {2 * NUM_JOINTS} rows, got {rows}")
        i += 1
        for r in range(rows):
            if i >= len(lines):
                raise SkeletonError(f"{path}:{i + 1}: unexpected end of file in frame {f}")
            tok = lines[i].split()
            if len(tok) != 4:
                raise SkeletonError(f"{path}:{i + 1}: expected 'x y z conf', got {len(tok)} fields")
            vals = _floats(tok, path, i + 1)
            if r % 2 == 0:
                frames[f, r // 2] = vals[:3]
            i += 1
    return frames


def read_skeleton(path: str | Path, fmt: str = "auto") -> np.ndarray:
    """Load one skeleton file; ``fmt`` is ``canonical``, ``msr`` or ``auto``."""
    path = Path(path)
    if not path.is_file():
        raise SkeletonError(f"{path}: no such file")
    if fmt == "auto":
        with path.open() as fh:
            fh.readline()
            second = ""
            for ln in fh:
                if ln.strip():
                    second = ln
                    break
        fmt = "msr" if len(second.split()) == 1 else "canonical"
    if fmt == "canonical":
        return read_canonical(path)
    if fmt == "msr":
        return read_msr(path)
    raise ValueError(f"unknown skeleton format {fmt!r}")


def write_canonical(path: str | Path, frames: np.ndarray) -> None:
    frames = np.asarray(frames, dtype=float)
    lines = [f"{len(frames)} {NUM_JOINTS}"]
    for frame in frames:
        lines.extend(f"{x:.6f} {y:.6f} {z:.6f}" for x, y, z in frame)
    Path(path).write_text("\n".join(lines) + "\n")


MANIFEST_HEADER = ["path", "label", "subject", "instance"]


def load_manifest(manifest_path: str | Path, fmt: str = "auto", jobs: int = 1) -> list[SkeletonSequence]:
    """Load every sequence listed in a manifest CSV, in manifest order.

    Relative paths are resolved against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise SkeletonError(f"{manifest_path}: no such file")
    rows = []
    with manifest_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != MANIFEST_HEADER:
            raise SkeletonError(f"{manifest_path}:1: header must be {','.join(MANIFEST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 4:
                raise SkeletonError(f"{manifest_path}:{lineno}: expected 4 fields, got {len(row)}")
            path, *nums = (x.strip() for x in row)
            try:
                label, subject, instance = (int(x) for x in nums)
            except ValueError:
                raise SkeletonError(f"{manifest_path}:{lineno}: label/subject/instance must be integers") from None
            if min(label, subject, instance) < 1:
                raise SkeletonError(f"{manifest_path}:{lineno}: label/subject/instance must be positive")
            p = Path(path)
            if not p.is_absolute():
                p = manifest_path.parent / p
            rows.append((p, label, subject, instance))

    def load(row):
        p, label, subject, instance = row
        return SkeletonSequence(read_skeleton(p, fmt), label, subject, instance, str(p))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(load, rows))
    return [load(r) for r in rows]


def write_manifest(path: str | Path, rows) -> None:
    """Write ``(path, label, subject, instance)`` rows as a manifest CSV."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def limb_lengths(frames: np.ndarray) -> np.ndarray:
    """Per-frame limb lengths, shape (num_frames, 14)."""
    frames = np.asarray(frames)
    return np.linalg.norm(frames[:, LIMB_CHILDREN] - frames[:, LIMB_PARENTS], axis=-1)


def fit_reference_lengths(training: list[SkeletonSequence]) -> ReferenceLengths:
    """Mean length of every limb over all training frames."""
    if not training:
        raise SkeletonError("need at least one training sequence")
    total = np.zeros(NUM_LIMBS)
    count = 0
    for seq in training:
        total += limb_lengths(seq.frames).sum(axis=0)
        count += seq.num_frames
    mean = total / count
    bad = np.flatnonzero(mean <= DEGENERATE_EPS)
    if bad.size:
        names = ", ".join(f"{JOINT_NAMES[LIMBS[l][0]]}-{JOINT_NAMES[LIMBS[l][1]]}" for l in bad)
        raise SkeletonError(f"degenerate limb(s) in training data: {names}")
    return ReferenceLengths(tuple(float(x) for x in mean))


def normalize(seq: SkeletonSequence, ref: ReferenceLengths) -> SkeletonSequence:
    """Rescale every limb to its reference length, keeping directions.

    The tree is rebuilt from HipCenter outwards, then all 20 joints are
    translated so that Head sits at the origin. A zero-length limb reuses its
    direction from the closest earlier frame.
    """
    src = seq.frames
    out = src.copy()
    lengths = np.asarray(ref.lengths)
    last_dir: list[np.ndarray | None] = [None] * NUM_LIMBS
    for f in range(len(src)):
        frame = src[f]
        new = out[f]
        for l in LIMB_ORDER:
            p, c = LIMBS[l]
            d = frame[c] - frame[p]
            norm = np.linalg.norm(d)
            if norm > DEGENERATE_EPS:
                u = d / norm
                last_dir[l] = u
            elif last_dir[l] is not None:
                u = last_dir[l]
            else:
                raise SkeletonError(
                    f"{seq.path or 'sequence'}: frame {f}: zero-length limb "
                    f"{JOINT_NAMES[p]}-{JOINT_NAMES[c]} with no earlier direction"
                )
            new[c] = new[p] + lengths[l] * u
        # unused joints were never rebuilt and only receive the translation
        new -= new[HEAD].copy()
    return seq.with_frames(out)
