#!/usr/bin/env python3
"""
Training objective on one (possibly sharded) batch.

A data-parallel worker holding a shard of ``n_w`` of ``n`` graphs and
``a_w`` of ``a`` atoms scales its energy term by ``W * n_w / n`` and its
force term by ``W * a_w / a``. The mean of the W shard losses is then the
full-batch loss, and so is the mean of their gradients.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np

from src.graph import set_feature
from src.models import EnergyModel
from src.tensor import Tape, Tensor, grad
from src.tensor import functional as F

from .data import TaskBatch
from .kinds import Normalizer, TaskKind
from .losses import energy_and_forces, is2re_loss


@dataclass
class ObjectiveResult:
    """Loss tensor plus eV-scale error sums for metric bookkeeping."""

    loss: Tensor
    energy_abs_sum: float
    num_energies: int
    force_abs_sum: float = 0.0
    num_force_components: int = 0

    @property
    def loss_value(self) -> float:
        return self.loss.item()


def compute_objective(
    model: EnergyModel,
    params: Mapping[str, Tensor],
    batch: TaskBatch,
    task: TaskKind,
    normalizer: Normalizer,
    energy_scale: float = 1.0,
    force_scale: float = 1.0,
) -> ObjectiveResult:
    """
    Normalized-space L1 objective of ``batch``.

    For S2EF the positions are recorded on the parameters' tape and forces
    come from a differentiable ``-dE/dx``.
    """
    task = TaskKind.parse(task)
    target_e = Tensor(normalizer.normalize(batch.energies))
    graph = batch.graph

    if task.uses_forces:
        tape = next((t.tape for t in params.values() if t.tape is not None), None) or Tape()
        pos = tape.watch(graph.feature("node", "pos").detach())
        graph = set_feature(graph, "node", "pos", pos)
        pred_e, pred_f = energy_and_forces(model, graph, training=True, params=params)
    else:
        pred_e, pred_f = model.forward(graph, params), None

    loss = F.multiply(is2re_loss(pred_e, target_e), energy_scale)
    energy_abs = np.abs(pred_e.data - target_e.data) * normalizer.std
    result = ObjectiveResult(
        loss=loss, energy_abs_sum=float(energy_abs.sum()), num_energies=int(energy_abs.size)
    )

    if pred_f is not None:
        target_f = Tensor(normalizer.scale_forces(batch.forces))
        force_term = F.mean(F.abs(F.subtract(pred_f, target_f)))
        result.loss = F.add(loss, F.multiply(force_term, force_scale))
        force_abs = np.abs(pred_f.data - target_f.data) * normalizer.std
        result.force_abs_sum = float(force_abs.sum())
        result.num_force_components = int(force_abs.size)
    return result


def parameter_gradients(
    model: EnergyModel,
    params: Mapping[str, np.ndarray],
    batch: TaskBatch,
    task: TaskKind,
    normalizer: Normalizer,
    energy_scale: float = 1.0,
    force_scale: float = 1.0,
) -> Tuple[Dict[str, np.ndarray], ObjectiveResult]:
    """One forward/backward on a fresh tape; gradients keyed like ``params``."""
    tape = Tape()
    taped = {name: tape.variable(value) for name, value in params.items()}
    result = compute_objective(model, taped, batch, task, normalizer, energy_scale, force_scale)
    grads = grad(result.loss, list(taped.values()))
    return {name: g.numpy() for name, g in zip(taped, grads)}, result


__all__ = ["ObjectiveResult", "compute_objective", "parameter_gradients"]
