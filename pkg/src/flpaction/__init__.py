"""Skeleton-based action recognition with frequent limb patterns.

Frames are encoded as per-part limb-direction states, short windows of frames
become transactions, closed frequent itemsets are mined and filtered for
relevance, and each action is classified from its bag of pattern
occurrences with a histogram-intersection SVM.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .bof import BagOfFlps, encode_action, encode_db
from .config import ConfigError, PipelineConfig, load_config, parse_config, preset_path
from .features import EncoderConfig, encode_frame, encode_frames, limb_state, part_budgets
from .miner import MinerConfig, Pattern, mine_closed
from .pipeline import EvalReport, PipelineError, run_crossval, run_evaluate, run_train
from .selection import SelectorConfig, discriminability, redundancy, representativity, select_top_k
from .skeleton import (
    ReferenceLengths,
    SkeletonError,
    SkeletonSequence,
    fit_reference_lengths,
    load_manifest,
    normalize,
    read_skeleton,
)
from .svm import OvoSvm, SvmConfig, TrainedModel, kernel, kernel_matrix, smo, train_ovo
from .synth import generate_synthetic
from .transactions import Transaction, TransactionDb, WindowConfig, build_transactions

__all__ = [
    "BagOfFlps", "ConfigError", "EncoderConfig", "EvalReport", "MinerConfig", "OvoSvm", "Pattern",
    "PipelineConfig", "PipelineError", "ReferenceLengths", "SelectorConfig", "SkeletonError",
    "SkeletonSequence", "SvmConfig", "TrainedModel", "Transaction", "TransactionDb", "WindowConfig",
    "build_transactions", "discriminability", "encode_action", "encode_db", "encode_frame",
    "encode_frames", "fit_reference_lengths", "generate_synthetic", "kernel", "kernel_matrix",
    "limb_state", "load_config", "load_manifest", "mine_closed", "normalize", "parse_config",
    "part_budgets", "preset_path", "read_skeleton", "redundancy", "representativity",
    "run_crossval", "run_evaluate", "run_train", "select_top_k", "smo", "train_ovo",
]
