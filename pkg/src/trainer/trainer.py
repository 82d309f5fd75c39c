#!/usr/bin/env python3
"""
The training orchestrator.

Per epoch: a seeded shuffle, micro-steps through the strategy, an Adam
update every ``accumulate_grad_batches`` micro-steps (gradients averaged
over the window, a partial window flushed at epoch end), learning-rate
decay, validation, callbacks. The same loop runs on every process-ddp
rank; only the coordinator validates, logs and fires callbacks.
"""

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from src.exceptions import NonFiniteLossError
from src.logging import get_logger
from src.models import EnergyModel, build_model
from src.structures import AtomicStructure
from src.tasks import DataModule, Normalizer, TaskDataset, TaskKind, evaluate

from .callbacks import Callback, CSVLogger, EarlyStopping, ModelCheckpoint, RunState
from .checkpoint import CheckpointInfo, load_checkpoint, save_checkpoint
from .config import TrainerConfig
from .optim import Adam, ExponentialDecay
from .strategies import ProcessDDPStrategy, StepStats, Strategy, build_strategy

logger = get_logger(__name__)


@dataclass
class TaskRun:
    """Artifacts and per-epoch history of a ``fit`` call."""

    final_metrics: Dict[str, Any]
    checkpoint_paths: List[str]
    log_path: Optional[str]
    history: List[Dict[str, Any]] = field(default_factory=list)
    epochs_completed: int = 0
    stopped_early: bool = False


class Trainer:
    def __init__(
        self,
        config: Optional[TrainerConfig] = None,
        callbacks: Optional[Sequence[Callback]] = None,
        run_dir: Optional[Union[str, Path]] = None,
        default_callbacks: bool = True,
        log_level: str = "WARNING",
    ):
        self.config = config or TrainerConfig()
        self.config.validate()
        self.run_dir = Path(run_dir) if run_dir is not None else Path.cwd()
        self.log_level = log_level
        self.checkpoint_dir = self._resolve(self.config.checkpoint_dir)
        self.log_path = self._resolve(self.config.log_path)
        self._default_callbacks = default_callbacks
        self.user_callbacks = list(callbacks or [])
        self.callbacks: List[Callback] = []

        self.model: Optional[EnergyModel] = None
        self.params: Dict[str, np.ndarray] = {}
        self.optimizer: Optional[Adam] = None
        self.scheduler: Optional[ExponentialDecay] = None
        self.normalizer: Optional[Normalizer] = None
        self.task: Optional[TaskKind] = None
        self.rng = np.random.default_rng(self.config.seed)
        self.epoch = 0
        self.global_step = 0
        self.should_stop = False
        self.history: List[Dict[str, Any]] = []
        self.data_settings: Dict[str, Any] = {}

    def _resolve(self, path: str) -> Path:
        path = Path(path).expanduser()
        return path if path.is_absolute() else self.run_dir / path

    def _build_callbacks(self, resuming: bool) -> List[Callback]:
        callbacks = list(self.user_callbacks)
        if self._default_callbacks:
            callbacks.append(CSVLogger(self.log_path, append=resuming))
            if self.config.early_stop_monitor:
                callbacks.append(
                    EarlyStopping(self.config.early_stop_monitor, self.config.early_stop_patience)
                )
            callbacks.append(
                ModelCheckpoint(self.checkpoint_dir, monitor=self.config.early_stop_monitor or "energy_mae_ev")
            )
        return callbacks

    def _fire(self, event: str, state: RunState):
        for callback in self.callbacks:
            getattr(callback, event)(self, state)

    # -- state ---------------------------------------------------------------
    def _setup(self, model: EnergyModel, task: TaskKind, normalizer: Normalizer):
        self.model = model
        self.task = task
        self.normalizer = normalizer
        self.params = model.state_dict()
        self.optimizer = Adam(self.params, self.config.learning_rate)
        self.scheduler = ExponentialDecay(self.optimizer, self.config.learning_rate, self.config.gamma)

    def _restore(self, path: Union[str, Path]):
        checkpoint = load_checkpoint(path)
        self.model.load_state_dict(checkpoint.params)
        self.params = self.model.state_dict()
        if checkpoint.optimizer_state is not None:
            self.optimizer.load_state_dict(checkpoint.optimizer_state)
        if checkpoint.rng_state is not None:
            self.rng.bit_generator.state = checkpoint.rng_state
        self.normalizer = checkpoint.normalizer
        self.epoch = checkpoint.epoch
        self.global_step = checkpoint.global_step
        self.history = list(checkpoint.extra.get("history", []))
        states = checkpoint.extra.get("callbacks", {})
        for key, callback in self._callback_keys().items():
            if key in states:
                callback.load_state_dict(states[key])
        logger.info(f"Resumed from {path} at epoch {self.epoch}")

    def _callback_keys(self) -> Dict[str, Callback]:
        return {f"{i}:{type(c).__name__}": c for i, c in enumerate(self.callbacks)}

    def save_checkpoint(self, path: Union[str, Path]) -> CheckpointInfo:
        return save_checkpoint(
            path,
            self.model,
            self.optimizer,
            self.normalizer,
            self.config,
            epoch=self.epoch,
            global_step=self.global_step,
            rng_state=self.rng.bit_generator.state,
            extra={
                "task": self.task.value,
                "data": self.data_settings,
                "history": self.history,
                "callbacks": {key: c.state_dict() for key, c in self._callback_keys().items()},
            },
            params=self.params,
        )

    # -- loop ------------------------------------------------------------------
    def _apply(self, grad_sum: Dict[str, np.ndarray], window: int):
        averaged = {name: g / window for name, g in grad_sum.items()}
        self.params = self.optimizer.step(self.params, averaged)
        self.global_step += 1

    def _train_epoch(self, dataset: TaskDataset, strategy: Strategy) -> Dict[str, Optional[float]]:
        order = self.rng.permutation(len(dataset))
        size = self.config.batch_size
        batches = [order[i : i + size] for i in range(0, len(order), size)]
        accumulate = self.config.accumulate_grad_batches

        grad_sum: Optional[Dict[str, np.ndarray]] = None
        window = 0
        totals = StepStats(0.0, 0.0, 0.0)
        for number, indices in enumerate(batches, start=1):
            grads, stats = strategy.compute(self.model, self.params, dataset, indices, self.normalizer)
            if not math.isfinite(stats.loss):
                raise NonFiniteLossError(
                    f"Loss became non-finite at epoch {self.epoch + 1}",
                    step=self.global_step,
                    details={"batch": number},
                )
            if grad_sum is None:
                grad_sum = {name: np.array(g) for name, g in grads.items()}
            else:
                for name, g in grads.items():
                    grad_sum[name] += g
            window += 1
            if window == accumulate or number == len(batches):
                self._apply(grad_sum, window)
                grad_sum, window = None, 0

            totals.loss += stats.loss * stats.num_energies
            totals.energy_abs_sum += stats.energy_abs_sum
            totals.num_energies += stats.num_energies
            totals.force_abs_sum += stats.force_abs_sum
            totals.num_force_components += stats.num_force_components
            if strategy.is_coordinator:
                logger.debug(f"epoch {self.epoch + 1} batch {number}/{len(batches)} loss {stats.loss:.6f}")
                self._fire("on_train_batch_end", RunState.of(self.epoch, self.global_step, {"loss": stats.loss}))

        count = max(totals.num_energies, 1.0)
        return {
            "train_loss": totals.loss / count,
            "train_energy_mae_ev": totals.energy_abs_sum / count,
            "train_force_mae_ev_per_ang": (
                totals.force_abs_sum / totals.num_force_components if totals.num_force_components else None
            ),
        }

    def _loop(self, train: TaskDataset, val: Optional[TaskDataset], strategy: Strategy):
        self.scheduler.set_epoch(self.epoch)
        while self.epoch < self.config.max_epochs:
            lr = self.optimizer.lr
            started = time.perf_counter()
            train_metrics = self._train_epoch(train, strategy)
            epoch_time = time.perf_counter() - started
            self.epoch += 1
            self.scheduler.set_epoch(self.epoch)

            if strategy.is_coordinator:
                state = RunState.of(self.epoch, self.global_step, train_metrics)
                self._fire("on_train_epoch_end", state)
                self.model.load_state_dict(self.params)
                val_metrics = evaluate(
                    self.model, val, self.task, self.normalizer, batch_size=self.config.batch_size
                )
                row = {
                    "epoch": self.epoch,
                    "step": self.global_step,
                    "split": "val",
                    "energy_mae_ev": val_metrics.energy_mae_ev,
                    "force_mae_ev_per_ang": val_metrics.force_mae_ev_per_ang,
                    "lr": lr,
                    "epoch_time_s": epoch_time,
                }
                self.history.append({**row, **train_metrics})
                logger.info(
                    f"epoch {self.epoch}/{self.config.max_epochs} "
                    f"train_mae {train_metrics['train_energy_mae_ev']:.4f} eV "
                    f"val_mae {val_metrics.energy_mae_ev:.4f} eV lr {lr:.3g} ({epoch_time:.2f}s)"
                )
                self._fire("on_validation_epoch_end", RunState.of(self.epoch, self.global_step, {**row, **train_metrics}))

            if strategy.agree_stop(self.should_stop):
                self.should_stop = True
                break

    # -- public ----------------------------------------------------------------
    def fit(
        self,
        model: EnergyModel,
        data: DataModule,
        normalizer: Optional[Normalizer] = None,
        resume_from: Optional[Union[str, Path]] = None,
    ) -> TaskRun:
        """Train ``model`` in place and return the run artifacts."""
        config = self.config
        self.rng = np.random.default_rng(config.seed)
        self.epoch, self.global_step, self.should_stop, self.history = 0, 0, False, []
        self.callbacks = self._build_callbacks(resuming=resume_from is not None)
        self.data_settings = {"cutoff": data.cutoff, "max_neighbors": data.max_neighbors}
        self._setup(model, data.task, normalizer or Normalizer.fit(data.train_structures))
        if resume_from is not None:
            self._restore(resume_from)

        strategy = build_strategy(config.strategy, config.world_size)
        logger.info(
            f"Training {model.name} ({model.count_parameters()} parameters) on {data.task.value}: "
            f"{len(data.train)} train / {len(data.val)} val, strategy {strategy.name} x{strategy.world_size}"
        )
        try:
            if isinstance(strategy, ProcessDDPStrategy):
                strategy.launch(self._worker_payload(data))
            self._fire("on_fit_start", RunState.of(self.epoch, self.global_step))
            self._loop(data.train, data.val, strategy)
            self._fire("on_fit_end", RunState.of(self.epoch, self.global_step, self._final_metrics()))
        finally:
            strategy.teardown()

        model.load_state_dict(self.params)
        return TaskRun(
            final_metrics=self._final_metrics(),
            checkpoint_paths=[p for c in self.callbacks if isinstance(c, ModelCheckpoint) for p in c.paths],
            log_path=next((str(c.path) for c in self.callbacks if isinstance(c, CSVLogger)), None),
            history=list(self.history),
            epochs_completed=self.epoch,
            stopped_early=self.should_stop,
        )

    def _final_metrics(self) -> Dict[str, Any]:
        return dict(self.history[-1]) if self.history else {}

    def _worker_payload(self, data: DataModule) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "log_level": self.log_level,
            "model_name": self.model.name,
            "model_config": self.model.config_dict(),
            "params": {k: np.array(v) for k, v in self.params.items()},
            "optimizer_state": self.optimizer.state_dict(),
            "rng_state": self.rng.bit_generator.state,
            "epoch": self.epoch,
            "global_step": self.global_step,
            "normalizer": self.normalizer.to_dict(),
            "task": data.task.value,
            "train": [s.to_dict() for s in data.train_structures],
            "cutoff": data.cutoff,
            "max_neighbors": data.max_neighbors,
        }

    @classmethod
    def run_worker(cls, payload: Mapping[str, Any], strategy: Strategy):
        """Body of a non-coordinator process-ddp rank."""
        trainer = cls(TrainerConfig.from_dict(payload["config"]), default_callbacks=False)
        model = build_model(payload["model_config"], name=payload["model_name"], params=payload["params"])
        task = TaskKind.parse(payload["task"])
        trainer._setup(model, task, Normalizer.from_dict(payload["normalizer"]))
        trainer.optimizer.load_state_dict(payload["optimizer_state"])
        trainer.rng.bit_generator.state = payload["rng_state"]
        trainer.epoch = int(payload["epoch"])
        trainer.global_step = int(payload["global_step"])
        train = TaskDataset(
            [AtomicStructure.from_dict(r) for r in payload["train"]],
            task,
            payload["cutoff"],
            payload["max_neighbors"],
            name="train",
        )
        trainer._loop(train, None, strategy)


__all__ = ["Trainer", "TaskRun"]
