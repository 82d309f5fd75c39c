#!/usr/bin/env python3
"""L1 task losses and forces as the negative energy gradient."""

from typing import Mapping, Optional, Tuple

from src.exceptions import ShapeMismatchError, TapeError
from src.graph import FeatureGraph
from src.models import EnergyModel
from src.tensor import Tensor, as_tensor, grad
from src.tensor import functional as F


def is2re_loss(pred, target) -> Tensor:
    """Mean absolute energy error."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.ndim != 1 or pred.shape != target.shape or pred.shape[0] < 1:
        raise ShapeMismatchError("is2re_loss", pred.shape, target.shape)
    return F.mean(F.abs(F.subtract(pred, target)))


def s2ef_loss(pred_e, target_e, pred_f, target_f) -> Tensor:
    """Energy MAE plus per-component force MAE, unit weights."""
    pred_f, target_f = as_tensor(pred_f), as_tensor(target_f)
    if pred_f.shape != target_f.shape or pred_f.ndim != 2 or pred_f.shape[1] != 3:
        raise ShapeMismatchError("s2ef_loss", pred_f.shape, target_f.shape)
    force_term = F.mean(F.abs(F.subtract(pred_f, target_f)))
    return F.add(is2re_loss(pred_e, target_e), force_term)


def energy_and_forces(
    model: EnergyModel,
    batch: FeatureGraph,
    training: bool = False,
    params: Optional[Mapping[str, Tensor]] = None,
) -> Tuple[Tensor, Tensor]:
    """
    Energies and ``-dE/dx`` for a batch whose ``pos`` feature is on a tape.

    With ``training`` the gradient graph is recorded, so a loss on the
    forces can be differentiated with respect to the parameters.
    """
    positions = batch.feature("node", "pos")
    if positions.tape is None:
        raise TapeError("predict_forces needs positions recorded on a tape")
    energies = model.forward(batch, params)
    (d_energy,) = grad(F.sum(energies), [positions], create_graph=training)
    return energies, F.negate(d_energy)


def predict_forces(
    model: EnergyModel,
    batch: FeatureGraph,
    training: bool = False,
    params: Optional[Mapping[str, Tensor]] = None,
) -> Tensor:
    """Per-atom forces ``(num_nodes, 3)``."""
    return energy_and_forces(model, batch, training, params)[1]


__all__ = ["is2re_loss", "s2ef_loss", "energy_and_forces", "predict_forces"]
