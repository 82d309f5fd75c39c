#!/usr/bin/env python3
"""
adsorbkit tasks

IS2RE (relaxed energy) and S2EF (energy and forces) heads: losses,
forces as the negative energy gradient, target normalization, batching
and evaluation.
"""

from .data import DataModule, TaskBatch, TaskDataset
from .evaluate import EvaluationMetrics, evaluate
from .kinds import Normalizer, TaskKind
from .losses import energy_and_forces, is2re_loss, predict_forces, s2ef_loss
from .objective import ObjectiveResult, compute_objective, parameter_gradients

__all__ = [
    "TaskKind",
    "Normalizer",
    "TaskBatch",
    "TaskDataset",
    "DataModule",
    "is2re_loss",
    "s2ef_loss",
    "energy_and_forces",
    "predict_forces",
    "ObjectiveResult",
    "compute_objective",
    "parameter_gradients",
    "EvaluationMetrics",
    "evaluate",
]
