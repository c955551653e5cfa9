"""Pipeline configuration: an INI-style file with one section per stage.

Example::

    [pipeline]
    seed = 0

    [features]
    threshold = 0.15
    ndf = 600

    [windows]
    window = 3
    stride = 1

    [mining]
    min_support = 15
    max_support = 180

    [selection]
    k = 30000

    [svm]
    reg = 1.0

    [split]
    train_subjects = 1, 2, 3, 4, 5

An optional ``[grid]`` section lists candidate values (comma separated) for
cross-validation. Unknown sections or keys are errors.
"""
from __future__ import annotations

import configparser
import dataclasses
import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .features import DEFAULT_DOF_WEIGHTS, EncoderConfig
from .miner import MinerConfig
from .selection import SelectorConfig
from .svm import SvmConfig
from .transactions import WindowConfig


class ConfigError(ValueError):
    pass


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none") else int(text)


# section -> key -> (attribute path, parser)
SCHEMA = {
    "pipeline": {
        "seed": ("seed", int),
        "skeleton_format": ("skeleton_format", str),
    },
    "features": {
        "threshold": ("encoder.threshold", float),
        "ndf": ("encoder.ndf", int),
        "dof_weights": ("encoder.dof_weights", _floats),
    },
    "windows": {
        "window": ("windows.window", int),
        "stride": ("windows.stride", int),
    },
    "mining": {
        "min_support": ("miner.min_support", int),
        "max_support": ("miner.max_support", _opt_int),
    },
    "selection": {
        "k": ("selector.k", int),
        "max_candidates": ("selector.max_candidates", _opt_int),
    },
    "svm": {
        "reg": ("svm.reg", float),
        "tol": ("svm.tol", float),
        "max_passes": ("svm.max_passes", int),
    },
    "split": {
        "train_subjects": ("train_subjects", _ints),
        "test_subjects": ("test_subjects", _ints),
    },
}

# grid keys use the bare parameter names
GRID_KEYS = {key: (path, parse) for sec in SCHEMA.values() for key, (path, parse) in sec.items()
             if sec is not SCHEMA["split"] and sec is not SCHEMA["pipeline"]}


@dataclass(frozen=True)
class PipelineConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    windows: WindowConfig = field(default_factory=WindowConfig)
    miner: MinerConfig = field(default_factory=MinerConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    train_subjects: tuple[int, ...] | None = None
    test_subjects: tuple[int, ...] | None = None
    seed: int = 0
    skeleton_format: str = "auto"

    def __post_init__(self):
        if self.skeleton_format not in ("auto", "canonical", "msr"):
            raise ConfigError(f"skeleton_format must be auto, canonical or msr, got {self.skeleton_format!r}")
        if self.train_subjects is not None and self.test_subjects is not None:
            raise ConfigError("give either train_subjects or test_subjects, not both")
        for name in ("train_subjects", "test_subjects"):
            subj = getattr(self, name)
            if subj is not None:
                subj = tuple(int(s) for s in subj)
                if len(set(subj)) != len(subj):
                    raise ConfigError(f"{name} has duplicates")
                object.__setattr__(self, name, subj)

    def is_train_subject(self, subject: int) -> bool:
        if self.train_subjects is not None:
            return subject in self.train_subjects
        if self.test_subjects is not None:
            return subject not in self.test_subjects
        raise ConfigError("no split given: set train_subjects or test_subjects")

    def split(self, sequences):
        """(train, test) lists, each in input order."""
        train = [s for s in sequences if self.is_train_subject(s.subject)]
        test = [s for s in sequences if not self.is_train_subject(s.subject)]
        return train, test

    def replace(self, **changes) -> PipelineConfig:
        """Copy with dotted-path overrides, e.g. ``replace(**{"selector.k": 10})``."""
        parts: dict = {}
        top: dict = {}
        for path, value in changes.items():
            if "." in path:
                sub, attr = path.split(".")
                parts.setdefault(sub, {})[attr] = value
            else:
                top[path] = value
        for sub, vals in parts.items():
            top[sub] = dataclasses.replace(getattr(self, sub), **vals)
        return dataclasses.replace(self, **top)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "skeleton_format": self.skeleton_format,
            "features": {
                "threshold": self.encoder.threshold,
                "ndf": self.encoder.ndf,
                "dof_weights": list(self.encoder.dof_weights),
            },
            "windows": dataclasses.asdict(self.windows),
            "mining": dataclasses.asdict(self.miner),
            "selection": dataclasses.asdict(self.selector),
            "svm": dataclasses.asdict(self.svm),
            "split": {
                "train_subjects": list(self.train_subjects) if self.train_subjects is not None else None,
                "test_subjects": list(self.test_subjects) if self.test_subjects is not None else None,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> PipelineConfig:
        f = d["features"]
        split = d.get("split", {})
        return cls(
            encoder=EncoderConfig(f["threshold"], f["ndf"], tuple(f["dof_weights"])),
            windows=WindowConfig(**d["windows"]),
            miner=MinerConfig(**d["mining"]),
            selector=SelectorConfig(**d["selection"]),
            svm=SvmConfig(**d["svm"]),
            train_subjects=tuple(split["train_subjects"]) if split.get("train_subjects") is not None else None,
            test_subjects=tuple(split["test_subjects"]) if split.get("test_subjects") is not None else None,
            seed=d.get("seed", 0),
            skeleton_format=d.get("skeleton_format", "auto"),
        )

    def to_ini(self) -> str:
        d = self.to_dict()
        lines = ["[pipeline]", f"seed = {self.seed}", f"skeleton_format = {self.skeleton_format}", ""]
        for sec in ("features", "windows", "mining", "selection", "svm", "split"):
            lines.append(f"[{sec}]")
            for key, val in d[sec].items():
                if val is None:
                    continue
                if isinstance(val, list):
                    val = ", ".join(str(v) for v in val)
                lines.append(f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def _apply(values: dict[str, object]) -> PipelineConfig:
    try:
        return PipelineConfig().replace(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str, source: str = "<config>") -> tuple[PipelineConfig, dict[str, list]]:
    """Parse config text into a PipelineConfig and a (possibly empty) grid."""
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values: dict[str, object] = {}
    grid: dict[str, list] = {}
    for sec in cp.sections():
        if sec == "grid":
            for key, raw in cp.items(sec):
                if key not in GRID_KEYS:
                    raise ConfigError(f"{source}: unknown grid key {key!r}")
                path, parse = GRID_KEYS[key]
                try:
                    grid[path] = [parse(v) for v in raw.split(",") if v.strip()]
                except ValueError:
                    raise ConfigError(f"{source}: bad value in grid key {key!r}") from None
                if not grid[path]:
                    raise ConfigError(f"{source}: empty grid for {key!r}")
            continue
        if sec not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{sec}]")
            path, parse = SCHEMA[sec][key]
            try:
                values[path] = parse(raw)
            except ValueError:
                raise ConfigError(f"{source}: bad value for {sec}.{key}: {raw!r}") from None
    return _apply(values), grid


def load_config(path: str | Path) -> tuple[PipelineConfig, dict[str, list]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such file")
    return parse_config(path.read_text(), str(path))


def expand_grid(base: PipelineConfig, grid: dict[str, list]) -> list[PipelineConfig]:
    """Cartesian product of grid values applied to ``base``; invalid combinations are dropped."""
    if not grid:
        return [base]
    keys = sorted(grid)
    out = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        try:
            out.append(base.replace(**dict(zip(keys, combo))))
        except ValueError:
            continue
    return out


PRESETS_DIR = Path(__file__).with_name("presets")


def preset_path(name: str) -> Path:
    p = PRESETS_DIR / f"{name}.ini"
    if not p.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    return p
