#!/usr/bin/env python3
"""
Training callbacks.

Hooks fire on the coordinator only, in this order within an epoch:
``on_train_batch_end`` (per batch), ``on_train_epoch_end``,
``on_validation_epoch_end``. ``on_fit_start`` and ``on_fit_end`` bracket
the run. Each hook receives the trainer and a read-only ``RunState``.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import TYPE_CHECKING, Any, Dict, List, Mapping, Optional, Sequence

from src.logging import get_logger
from src.utils import ensure_directory

if TYPE_CHECKING:  # pragma: no cover
    from .trainer import Trainer

logger = get_logger(__name__)

CSV_COLUMNS = ("epoch", "step", "split", "energy_mae_ev", "force_mae_ev_per_ang", "lr", "epoch_time_s")
CALLBACK_EVENTS = (
    "on_fit_start",
    "on_train_batch_end",
    "on_train_epoch_end",
    "on_validation_epoch_end",
    "on_fit_end",
)


@dataclass(frozen=True)
class RunState:
    epoch: int
    step: int
    metrics: Mapping[str, Any] = field(default_factory=lambda: MappingProxyType({}))

    @classmethod
    def of(cls, epoch: int, step: int, metrics: Optional[Mapping[str, Any]] = None) -> "RunState":
        return cls(epoch=epoch, step=step, metrics=MappingProxyType(dict(metrics or {})))


class Callback:
    """No-op base; override the hooks you need."""

    def on_fit_start(self, trainer: "Trainer", state: RunState):
        pass

    def on_train_batch_end(self, trainer: "Trainer", state: RunState):
        pass

    def on_train_epoch_end(self, trainer: "Trainer", state: RunState):
        pass

    def on_validation_epoch_end(self, trainer: "Trainer", state: RunState):
        pass

    def on_fit_end(self, trainer: "Trainer", state: RunState):
        pass

    def state_dict(self) -> Dict[str, Any]:
        return {}

    def load_state_dict(self, state: Mapping[str, Any]):
        pass


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_row(metrics: Mapping[str, Any]) -> List[str]:
    return [_format(metrics.get(column)) for column in CSV_COLUMNS]


class CSVLogger(Callback):
    """One validation row per completed epoch; header written once."""

    def __init__(self, path, append: bool = False):
        self.path = Path(path)
        self.append = append

    def on_fit_start(self, trainer, state):
        ensure_directory(self.path.parent)
        if self.append and self.path.is_file():
            return
        with open(self.path, "w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(CSV_COLUMNS)

    def on_validation_epoch_end(self, trainer, state):
        with open(self.path, "a", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(metrics_row(state.metrics))


def early_stopping(history: Sequence[float], patience: int) -> List[bool]:
    """
    Stop decision after each epoch: true once the value has gone
    ``patience + 1`` consecutive epochs without strictly decreasing.
    """
    decisions, best, wait = [], math.inf, 0
    for value in history:
        if value < best:
            best, wait = value, 0
        else:
            wait += 1
        decisions.append(wait >= patience + 1)
    return decisions


class EarlyStopping(Callback):
    def __init__(self, monitor: str = "energy_mae_ev", patience: int = 3):
        self.monitor = monitor
        self.patience = patience
        self.best = math.inf
        self.wait = 0

    def on_validation_epoch_end(self, trainer, state):
        value = state.metrics.get(self.monitor)
        if value is None:
            logger.warning(f"Early stopping monitor '{self.monitor}' missing from metrics")
            return
        if value < self.best:
            self.best, self.wait = value, 0
        else:
            self.wait += 1
        if self.wait >= self.patience + 1:
            logger.info(
                f"Early stopping at epoch {state.epoch}: {self.monitor} has not improved "
                f"for {self.wait} epochs (best {self.best:.6g})"
            )
            trainer.should_stop = True

    def state_dict(self):
        return {"best": self.best if math.isfinite(self.best) else None, "wait": self.wait}

    def load_state_dict(self, state):
        best = state.get("best")
        self.best = math.inf if best is None else float(best)
        self.wait = int(state.get("wait", 0))


class ModelCheckpoint(Callback):
    """
    Writes ``last.ckpt`` every epoch and, with a monitor, ``best.ckpt``
    whenever the monitored metric strictly improves.
    """

    def __init__(self, dirpath, monitor: Optional[str] = "energy_mae_ev"):
        self.dirpath = Path(dirpath)
        self.monitor = monitor
        self.best = math.inf
        self.last_path: Optional[Path] = None
        self.best_path: Optional[Path] = None

    def on_validation_epoch_end(self, trainer, state):
        ensure_directory(self.dirpath)
        if self.monitor is not None:
            value = state.metrics.get(self.monitor)
            if value is not None and value < self.best:
                self.best = value
                self.best_path = self.dirpath / "best.ckpt"
                trainer.save_checkpoint(self.best_path)
        # last.ckpt goes after best so it holds this callback's updated state
        self.last_path = self.dirpath / "last.ckpt"
        trainer.save_checkpoint(self.last_path)

    @property
    def paths(self) -> List[str]:
        return [str(p) for p in (self.best_path, self.last_path) if p is not None]

    def state_dict(self):
        return {"best": self.best if math.isfinite(self.best) else None}

    def load_state_dict(self, state):
        best = state.get("best")
        self.best = math.inf if best is None else float(best)


__all__ = [
    "Callback",
    "RunState",
    "CSVLogger",
    "EarlyStopping",
    "ModelCheckpoint",
    "early_stopping",
    "metrics_row",
    "CSV_COLUMNS",
    "CALLBACK_EVENTS",
]
