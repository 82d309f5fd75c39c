#!/usr/bin/env python3
"""
Data-parallel scaling benchmark.

Trains the same synthetic IS2RE workload once per device count and
reports the fastest epoch after warm-up plus the speedup over one device.
"""

import csv
from dataclasses import astuple, dataclass, fields
from typing import IO, List, Optional, Sequence

import psutil

from src.exceptions import ValidationError
from src.logging import get_logger
from src.models import EGNNConfig, build_model
from src.structures import generate_synthetic
from src.tasks import DataModule, TaskKind

from .config import TrainerConfig
from .trainer import Trainer

logger = get_logger(__name__)

BENCH_STRATEGIES = ("process-ddp", "threaded-ddp")
DEFAULT_BENCH_STRATEGY = "process-ddp"


@dataclass(frozen=True)
class ScalingRow:
    devices: int
    epoch_time_s: float
    speedup: float


def scaling_workload(records: int = 256, seed: int = 0, batch_size: int = 64) -> DataModule:
    structures = generate_synthetic(records, 10, 20, seed=seed, id_prefix="bench")
    return DataModule(TaskKind.IS2RE, structures, structures[:batch_size], batch_size=batch_size)


def _epoch_time(
    devices: int,
    strategy: str,
    data: DataModule,
    epochs: int,
    seed: int,
    model_config: Optional[EGNNConfig],
) -> float:
    config = TrainerConfig(
        max_epochs=epochs,
        batch_size=data.batch_size,
        devices=devices,
        strategy=strategy,
        seed=seed,
    )
    trainer = Trainer(config, default_callbacks=False)
    run = trainer.fit(build_model(model_config, seed=seed), data)
    times = [row["epoch_time_s"] for row in run.history]
    measured = times[1:] if len(times) > 1 else times
    return min(measured)


def bench_scaling(
    devices_list: Sequence[int],
    epochs: int = 3,
    strategy: str = DEFAULT_BENCH_STRATEGY,
    records: int = 256,
    batch_size: int = 64,
    seed: int = 0,
    model_config: Optional[EGNNConfig] = None,
) -> List[ScalingRow]:
    """
    One row per entry of ``devices_list``; speedups are relative to one device.

    process-ddp is the default: threaded ranks share one interpreter lock, so
    threaded-ddp only measures the synchronization overhead.
    """
    devices_list = [int(d) for d in devices_list]
    if not devices_list or any(d < 1 for d in devices_list):
        raise ValidationError("Device counts must be positive integers", {"devices": devices_list})
    if epochs < 1:
        raise ValidationError("Benchmark needs at least one epoch", {"epochs": epochs})
    if strategy not in BENCH_STRATEGIES:
        raise ValidationError(f"Benchmark strategy must be one of {', '.join(BENCH_STRATEGIES)}")

    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    if max(devices_list) > cores:
        logger.warning(f"Benchmarking {max(devices_list)} devices on {cores} physical cores")

    data = scaling_workload(records, seed, batch_size)
    times = {}
    for devices in ([1] if 1 not in devices_list else []) + devices_list:
        if devices not in times:
            times[devices] = _epoch_time(devices, strategy, data, epochs, seed, model_config)
            logger.info(f"{strategy} x{devices}: {times[devices]:.3f}s per epoch")

    baseline = times[1]
    return [ScalingRow(d, times[d], baseline / times[d]) for d in devices_list]


def write_scaling_csv(rows: Sequence[ScalingRow], stream: IO[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([f.name for f in fields(ScalingRow)])
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in astuple(row)])


__all__ = [
    "ScalingRow",
    "bench_scaling",
    "scaling_workload",
    "write_scaling_csv",
    "BENCH_STRATEGIES",
    "DEFAULT_BENCH_STRATEGY",
]
