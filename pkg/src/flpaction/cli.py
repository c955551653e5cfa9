"""Command-line interface: ``flpaction <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import PRESETS_DIR, ConfigError, PipelineConfig, expand_grid, load_config, preset_path
from .miner import dump_patterns, load_patterns
from .pipeline import (
    PipelineError,
    extract,
    mine,
    run_crossval,
    run_evaluate,
    run_train,
    select,
    train_from_dumps,
    write_reference,
)
from .selection import dump_selected
from .skeleton import SkeletonError, load_manifest
from .svm import TrainedModel
from .synth import generate_synthetic
from .transactions import dump_db, load_db

log = logging.getLogger("flpaction")

U64_MAX = 2**64 - 1


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _jobs(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("jobs must be >= 0")
    return v or (os.cpu_count() or 1)


def _config(args) -> tuple[PipelineConfig, dict]:
    """Load ``--config`` (a file or a preset name) and apply ``--seed``."""
    src = args.config
    path = Path(src)
    if not path.is_file():
        path = preset_path(src)
    cfg, grid = load_config(path)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg, grid


def _manifest(args, cfg: PipelineConfig):
    return load_manifest(args.manifest, fmt=cfg.skeleton_format, jobs=args.jobs)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    manifest = generate_synthetic(
        args.out, num_classes=args.classes, subjects=args.subjects, instances=args.instances,
        frames=args.frames, seed=args.seed or 0, noise=args.noise, pair_mode=args.pair_mode,
    )
    print(manifest)
    return 0


def cmd_extract(args) -> int:
    cfg, _ = _config(args)
    seqs = _manifest(args, cfg)
    train, _ = cfg.split(seqs)
    if not train:
        raise PipelineError("split", ValueError("training split is empty"))
    ref, db = extract(train, cfg, max(s.label for s in seqs), args.jobs)
    out = _out(args)
    write_reference(ref, out / "reference.json")
    dump_db(db, out / "transactions.txt")
    print(f"{len(db)} transactions from {len(db.actions)} actions -> {out / 'transactions.txt'}")
    return 0


def cmd_mine(args) -> int:
    cfg, _ = _config(args)
    out = _out(args)
    db = load_db(args.transactions or out / "transactions.txt")
    patterns = mine(db, cfg, args.jobs)
    dump_patterns(patterns, out / "patterns.txt")
    print(f"{len(patterns)} closed patterns -> {out / 'patterns.txt'}")
    return 0


def cmd_select(args) -> int:
    cfg, _ = _config(args)
    out = _out(args)
    db = load_db(args.transactions or out / "transactions.txt")
    patterns = load_patterns(args.patterns or out / "patterns.txt", db)
    selected, scores = select(patterns, db, cfg)
    dump_selected(selected, scores, out / "selected.txt")
    print(f"{len(selected)} patterns selected -> {out / 'selected.txt'}")
    return 0


def cmd_train(args) -> int:
    cfg, _ = _config(args)
    out = _out(args)
    if args.from_dumps:
        model = train_from_dumps(cfg, out)
        model.save(out / "model.json")
    else:
        if not args.manifest:
            raise ConfigError("--manifest is required unless --from-dumps is given")
        res = run_train(cfg, _manifest(args, cfg), out, args.jobs)
        model = res.model
        (out / "train_timings.json").write_text(json.dumps(res.timings, indent=1, sort_keys=True) + "\n")
    print(f"model with {len(model.selected)} patterns, classes {list(model.svm.classes)} -> {out / 'model.json'}")
    return 0


def cmd_evaluate(args) -> int:
    model = TrainedModel.load(args.model)
    cfg = PipelineConfig.from_dict(model.config)
    seqs = load_manifest(args.manifest, fmt=cfg.skeleton_format, jobs=args.jobs)
    report = run_evaluate(model, seqs, _out(args), args.jobs, split=not args.all, inline_timings=args.inline_timings)
    print(f"accuracy {report.accuracy:.2f}% on {report.num_test} actions")
    print(report.confusion_csv(), end="")
    return 0


def cmd_crossval(args) -> int:
    cfg, grid = _config(args)
    configs = expand_grid(cfg, grid)
    if not configs:
        raise ConfigError("the parameter grid has no valid combination")
    res = run_crossval(configs, _manifest(args, cfg), args.jobs)
    out = _out(args)
    (out / "best.ini").write_text(res.best.to_ini())
    summary = {
        "fit_subjects": list(res.fit_subjects),
        "validation_subjects": list(res.val_subjects),
        "results": [{"config": c.to_dict(), "accuracy": a} for c, a in res.scores],
        "best": res.best.to_dict(),
    }
    (out / "crossval.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    for c, a in res.scores:
        acc = "failed" if a is None else f"{a:.2f}%"
        print(f"T={c.encoder.threshold} NDF={c.encoder.ndf} C={c.windows.window} "
              f"S={c.miner.min_support} U={c.miner.max_support} K={c.selector.k}: {acc}")
    print(f"best -> {out / 'best.ini'}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    presets = ", ".join(sorted(p.stem for p in PRESETS_DIR.glob("*.ini")))
    ap = argparse.ArgumentParser(prog="flpaction", description="Skeleton action recognition with frequent limb patterns.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True, manifest=True, manifest_required=True):
        if config:
            p.add_argument("--config", required=True, help=f"config file or preset name ({presets})")
        if manifest:
            p.add_argument("--manifest", required=manifest_required, help="manifest CSV (path,label,subject,instance)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=_seed, default=None, help="override the config seed")
        p.add_argument("--jobs", type=_jobs, default=1, help="worker processes (0 = all cores)")

    p = sub.add_parser("synth", help="write a synthetic dataset")
    common(p, config=False, manifest=False)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--subjects", type=int, default=6)
    p.add_argument("--instances", type=int, default=2)
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--noise", type=float, default=0.01, help="coordinate noise std (metres)")
    p.add_argument("--pair-mode", choices=("tempo", "reverse"), default="tempo")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="normalize, encode and build the training transactions")
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("mine", help="mine closed patterns from a transaction dump")
    common(p, manifest=False)
    p.add_argument("--transactions", help="transaction dump (default: OUT/transactions.txt)")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("select", help="select the top-K relevant patterns")
    common(p, manifest=False)
    p.add_argument("--transactions", help="transaction dump (default: OUT/transactions.txt)")
    p.add_argument("--patterns", help="pattern dump (default: OUT/patterns.txt)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="run all training stages, or refit from stage dumps")
    common(p, manifest_required=False)
    p.add_argument("--from-dumps", action="store_true",
                   help="fit the classifier from reference.json, transactions.txt and selected.txt in OUT")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="classify the test split and write a report")
    p.add_argument("--model", required=True, help="model.json written by train")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=_jobs, default=1)
    p.add_argument("--all", action="store_true", help="evaluate every action, not only the test split")
    p.add_argument("--inline-timings", action="store_true", help="put wall-clock timings into report.json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("crossval", help="grid search over the config's [grid] section")
    common(p)
    p.set_defaults(func=cmd_crossval)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"flpaction: config error: {exc}", file=sys.stderr)
        return 2
    except (PipelineError, SkeletonError, ValueError, OSError) as exc:
        print(f"flpaction: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
