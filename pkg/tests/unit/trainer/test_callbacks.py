#!/usr/bin/env python3
"""
Unit tests for training callbacks.
"""

import csv
import math
from pathlib import Path

import pytest

from src.trainer import CSVLogger, EarlyStopping, ModelCheckpoint, RunState, early_stopping
from src.trainer.callbacks import CSV_COLUMNS, metrics_row


class FakeTrainer:
    """Just enough trainer for callbacks to act on."""

    def __init__(self):
        self.should_stop = False
        self.saved = []

    def save_checkpoint(self, path):
        Path(path).write_bytes(b"ckpt")
        self.saved.append(Path(path).name)


def state(epoch, **metrics):
    return RunState.of(epoch, epoch * 10, metrics)


class TestEarlyStoppingRule:
    """Test suite for the early_stopping decision rule."""

    def test_patience_three(self):
        """Test stopping after four epochs without a strict improvement."""
        history = [1.0, 0.9, 0.95, 0.9, 0.91, 0.92]
        assert early_stopping(history, 3) == [False, False, False, False, False, True]

    def test_patience_zero(self):
        """Test patience 0 stops at the first non-improvement."""
        assert early_stopping([3.0, 2.0, 2.0], 0) == [False, False, True]

    def test_improvement_resets(self):
        """Test a new best resets the wait counter."""
        assert not any(early_stopping([5, 6, 4, 5, 3, 4, 2], 1))


class TestEarlyStopping:
    """Test suite for the EarlyStopping callback."""

    def test_matches_rule(self):
        """Test the callback stops exactly where the rule says."""
        history = [1.0, 0.8, 0.85, 0.9, 0.8, 0.81]
        trainer = FakeTrainer()
        callback = EarlyStopping("energy_mae_ev", patience=2)
        stops = []
        for epoch, value in enumerate(history, start=1):
            callback.on_validation_epoch_end(trainer, state(epoch, energy_mae_ev=value))
            stops.append(trainer.should_stop)
        assert stops == early_stopping(history, 2)

    def test_missing_metric_is_ignored(self):
        """Test an absent monitor never stops the run."""
        trainer = FakeTrainer()
        callback = EarlyStopping("force_mae_ev_per_ang", patience=0)
        for epoch in range(1, 4):
            callback.on_validation_epoch_end(trainer, state(epoch, energy_mae_ev=1.0))
        assert not trainer.should_stop

    def test_state_round_trip(self):
        """Test best and wait survive state_dict/load_state_dict."""
        callback = EarlyStopping(patience=5)
        for epoch, value in enumerate([2.0, 1.0, 1.5], start=1):
            callback.on_validation_epoch_end(FakeTrainer(), state(epoch, energy_mae_ev=value))
        restored = EarlyStopping(patience=5)
        restored.load_state_dict(callback.state_dict())
        assert restored.best == 1.0 and restored.wait == 1

    def test_fresh_state_is_json_safe(self):
        """Test an untouched callback exports no infinity."""
        assert EarlyStopping().state_dict() == {"best": None, "wait": 0}
        restored = EarlyStopping()
        restored.load_state_dict({"best": None})
        assert math.isinf(restored.best)


class TestCSVLogger:
    """Test suite for CSVLogger."""

    def test_header_and_rows(self, temp_dir):
        """Test one header then one row per validation epoch."""
        path = temp_dir / "logs" / "metrics.csv"
        logger = CSVLogger(path)
        logger.on_fit_start(FakeTrainer(), state(0))
        for epoch in (1, 2):
            metrics = {"epoch": epoch, "step": epoch * 3, "split": "val", "energy_mae_ev": 0.5 / epoch, "lr": 0.01}
            logger.on_validation_epoch_end(FakeTrainer(), RunState.of(epoch, epoch * 3, metrics))
        rows = list(csv.reader(path.open()))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert rows[1][:3] == ["1", "3", "val"]
        assert float(rows[2][3]) == 0.25
        assert rows[1][4] == ""
        assert len(rows) == 3 and all(len(row) == len(CSV_COLUMNS) for row in rows)
        assert float(rows[2][5]) == 0.01

    def test_append_keeps_rows(self, temp_dir):
        """Test append mode does not rewrite an existing log."""
        path = temp_dir / "metrics.csv"
        path.write_text(",".join(CSV_COLUMNS) + "\n1,1,val,0.5,,0.01,0.1\n")
        CSVLogger(path, append=True).on_fit_start(FakeTrainer(), state(1))
        assert len(path.read_text().splitlines()) == 2

    def test_metrics_row_formats(self):
        """Test floats keep full precision and None becomes empty."""
        row = metrics_row({"epoch": 2, "energy_mae_ev": 0.1 + 0.2, "force_mae_ev_per_ang": None})
        assert row[0] == "2"
        assert float(row[3]) == 0.1 + 0.2
        assert row[4] == ""


class TestModelCheckpoint:
    """Test suite for ModelCheckpoint."""

    def test_best_and_last(self, temp_dir):
        """Test last.ckpt every epoch and best.ckpt on strict improvement."""
        trainer = FakeTrainer()
        callback = ModelCheckpoint(temp_dir / "ckpts", monitor="energy_mae_ev")
        for epoch, value in enumerate([0.5, 0.6, 0.4], start=1):
            callback.on_validation_epoch_end(trainer, state(epoch, energy_mae_ev=value))
        assert trainer.saved == ["best.ckpt", "last.ckpt", "last.ckpt", "best.ckpt", "last.ckpt"]
        assert callback.best == 0.4
        assert [Path(p).name for p in callback.paths] == ["best.ckpt", "last.ckpt"]

    def test_no_monitor(self, temp_dir):
        """Test without a monitor only last.ckpt is written."""
        trainer = FakeTrainer()
        callback = ModelCheckpoint(temp_dir, monitor=None)
        callback.on_validation_epoch_end(trainer, state(1, energy_mae_ev=0.1))
        assert trainer.saved == ["last.ckpt"]

    @pytest.mark.parametrize("best", [None, 0.25])
    def test_state_round_trip(self, temp_dir, best):
        """Test the best value survives a restore."""
        callback = ModelCheckpoint(temp_dir)
        callback.load_state_dict({"best": best})
        assert callback.state_dict() == {"best": best}
