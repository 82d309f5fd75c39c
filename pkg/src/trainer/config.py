#!/usr/bin/env python3
"""Declarative trainer configuration."""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Mapping, Optional

from src.exceptions import ConfigValidationError

STRATEGIES = ("single", "threaded-ddp", "process-ddp")
MONITORABLE_METRICS = (
    "energy_mae_ev",
    "force_mae_ev_per_ang",
    "train_loss",
    "train_energy_mae_ev",
    "train_force_mae_ev_per_ang",
)


@dataclass(frozen=True)
class TrainerConfig:
    max_epochs: int = 10
    batch_size: int = 8
    devices: int = 1
    strategy: str = "single"
    accumulate_grad_batches: int = 1
    learning_rate: float = 0.003626
    gamma: float = 0.6878
    seed: int = 0
    checkpoint_dir: str = "checkpoints"
    log_path: str = "metrics.csv"
    early_stop_monitor: Optional[str] = None
    early_stop_patience: int = 3

    def __post_init__(self):
        self.validate()

    def validate(self):
        problems = {}
        if self.max_epochs < 0:
            problems["max_epochs"] = self.max_epochs
        if self.batch_size < 1:
            problems["batch_size"] = self.batch_size
        if self.devices < 1:
            problems["devices"] = self.devices
        if self.accumulate_grad_batches < 1:
            problems["accumulate_grad_batches"] = self.accumulate_grad_batches
        if not self.learning_rate > 0:
            problems["learning_rate"] = self.learning_rate
        if not 0 < self.gamma <= 1:
            problems["gamma"] = self.gamma
        if self.early_stop_patience < 0:
            problems["early_stop_patience"] = self.early_stop_patience
        if problems:
            raise ConfigValidationError("Invalid trainer settings", details=problems)
        if self.strategy not in STRATEGIES:
            raise ConfigValidationError(
                f"Unknown strategy '{self.strategy}'", valid_keys=STRATEGIES
            )
        if self.early_stop_monitor is not None and self.early_stop_monitor not in MONITORABLE_METRICS:
            raise ConfigValidationError(
                f"Unknown early-stop monitor '{self.early_stop_monitor}'",
                valid_keys=MONITORABLE_METRICS,
            )
        if self.strategy == "single" and self.devices != 1:
            raise ConfigValidationError(
                "strategy 'single' runs exactly one device", details={"devices": self.devices}
            )

    @property
    def world_size(self) -> int:
        return 1 if self.strategy == "single" else self.devices

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrainerConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigValidationError(
                f"Unknown trainer keys: {', '.join(unknown)}", valid_keys=known
            )
        return cls(**dict(data))

    def replace(self, **changes) -> "TrainerConfig":
        data = self.to_dict()
        data.update(changes)
        return TrainerConfig.from_dict(data)


__all__ = ["TrainerConfig", "STRATEGIES", "MONITORABLE_METRICS"]
