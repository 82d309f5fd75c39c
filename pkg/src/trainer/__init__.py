#!/usr/bin/env python3
"""
adsorbkit trainer

Training loop, optimizer, callbacks, checkpoints and the single, threaded
and multi-process data-parallel strategies.
"""

from .benchmark import BENCH_STRATEGIES, DEFAULT_BENCH_STRATEGY, ScalingRow, bench_scaling, scaling_workload, write_scaling_csv
from .callbacks import (
    CALLBACK_EVENTS,
    CSV_COLUMNS,
    Callback,
    CSVLogger,
    EarlyStopping,
    ModelCheckpoint,
    RunState,
    early_stopping,
    metrics_row,
)
from .checkpoint import Checkpoint, CheckpointInfo, load_checkpoint, save_checkpoint
from .comm import GradientLayout, RingMember, allreduce_mean, fnv1a_64, ring_allreduce
from .config import MONITORABLE_METRICS, STRATEGIES, TrainerConfig
from .optim import Adam, ExponentialDecay
from .strategies import (
    ProcessDDPStrategy,
    SingleStrategy,
    StepStats,
    Strategy,
    ThreadedDDPStrategy,
    build_strategy,
    shard_indices,
    shard_step,
)
from .trainer import TaskRun, Trainer

__all__ = [
    "Trainer",
    "TaskRun",
    "TrainerConfig",
    "STRATEGIES",
    "MONITORABLE_METRICS",
    "Adam",
    "ExponentialDecay",
    "Callback",
    "RunState",
    "CSVLogger",
    "EarlyStopping",
    "ModelCheckpoint",
    "early_stopping",
    "metrics_row",
    "CSV_COLUMNS",
    "CALLBACK_EVENTS",
    "Checkpoint",
    "CheckpointInfo",
    "save_checkpoint",
    "load_checkpoint",
    "allreduce_mean",
    "ring_allreduce",
    "RingMember",
    "GradientLayout",
    "fnv1a_64",
    "Strategy",
    "StepStats",
    "SingleStrategy",
    "ThreadedDDPStrategy",
    "ProcessDDPStrategy",
    "build_strategy",
    "shard_indices",
    "shard_step",
    "ScalingRow",
    "bench_scaling",
    "scaling_workload",
    "write_scaling_csv",
    "BENCH_STRATEGIES",
    "DEFAULT_BENCH_STRATEGY",
]
