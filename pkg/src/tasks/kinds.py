#!/usr/bin/env python3
"""Task kinds and energy-target normalization."""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Mapping, Sequence

import numpy as np

from src.exceptions import ConfigValidationError, DatasetError
from src.structures import AtomicStructure


class TaskKind(str, Enum):
    IS2RE = "is2re"
    S2EF = "s2ef"

    @classmethod
    def parse(cls, value: Any) -> "TaskKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigValidationError(
                f"Unknown task '{value}'", valid_keys=[k.value for k in cls]
            ) from None

    @property
    def uses_forces(self) -> bool:
        return self is TaskKind.S2EF


@dataclass(frozen=True)
class Normalizer:
    """
    z-score of energy targets.

    Forces are divided by ``std`` only, so normalized forces stay the
    negative gradient of normalized energies.
    """

    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.mean) or not np.isfinite(self.std) or self.std <= 0:
            raise DatasetError("Normalizer needs a finite mean and positive std", asdict(self))

    @classmethod
    def fit(cls, structures: Sequence[AtomicStructure]) -> "Normalizer":
        """Statistics of the energies in ``structures`` (the training split)."""
        energies = [s.energy for s in structures]
        if not energies or any(e is None for e in energies):
            raise DatasetError("Every training record needs an energy label")
        energies = np.asarray(energies, dtype=np.float64)
        std = float(energies.std())
        return cls(mean=float(energies.mean()), std=std if std > 0 else 1.0)

    def normalize(self, energies):
        return (np.asarray(energies, dtype=np.float64) - self.mean) / self.std

    def denormalize(self, energies):
        return np.asarray(energies, dtype=np.float64) * self.std + self.mean

    def scale_forces(self, forces):
        return np.asarray(forces, dtype=np.float64) / self.std

    def unscale_forces(self, forces):
        return np.asarray(forces, dtype=np.float64) * self.std

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Normalizer":
        return cls(mean=float(data["mean"]), std=float(data["std"]))


__all__ = ["TaskKind", "Normalizer"]
