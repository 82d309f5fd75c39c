#!/usr/bin/env python3
"""De-normalized evaluation metrics over a split."""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Mapping, Optional, Sequence, Union

import numpy as np

from src.exceptions import DatasetError
from src.graph import set_feature
from src.models import EnergyModel
from src.structures import AtomicStructure
from src.tensor import Tape, Tensor

from .data import TaskDataset
from .kinds import Normalizer, TaskKind
from .losses import energy_and_forces


@dataclass(frozen=True)
class EvaluationMetrics:
    """Energy MAE in eV and, for S2EF, per-component force MAE in eV/Å."""

    energy_mae_ev: float
    force_mae_ev_per_ang: Optional[float]
    num_samples: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def evaluate(
    model: EnergyModel,
    split: Union[TaskDataset, Sequence[AtomicStructure]],
    task: Union[TaskKind, str],
    normalizer: Normalizer,
    batch_size: int = 8,
    params: Optional[Mapping[str, Tensor]] = None,
    **dataset_kwargs,
) -> EvaluationMetrics:
    """Run the model over ``split`` without touching its parameters."""
    task = TaskKind.parse(task)
    if not isinstance(split, TaskDataset):
        if not split:
            raise DatasetError("Cannot evaluate an empty split")
        split = TaskDataset(split, task, name="eval", **dataset_kwargs)

    energy_abs = force_abs = 0.0
    num_energies = num_components = 0
    for batch in split.batches(batch_size):
        graph = batch.graph
        if task.uses_forces:
            tape = Tape()
            pos = tape.watch(graph.feature("node", "pos").detach())
            pred_e, pred_f = energy_and_forces(
                model, set_feature(graph, "node", "pos", pos), training=False, params=params
            )
            forces = normalizer.unscale_forces(pred_f.data)
            force_abs += float(np.abs(forces - batch.forces).sum())
            num_components += forces.size
        else:
            pred_e = model.forward(graph, params)
        energies = normalizer.denormalize(pred_e.data)
        energy_abs += float(np.abs(energies - batch.energies).sum())
        num_energies += energies.size

    return EvaluationMetrics(
        energy_mae_ev=energy_abs / num_energies,
        force_mae_ev_per_ang=(force_abs / num_components) if task.uses_forces else None,
        num_samples=num_energies,
    )


__all__ = ["EvaluationMetrics", "evaluate"]
