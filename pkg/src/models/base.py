#!/usr/bin/env python3
"""
Abstract energy model.

A model maps a batched FeatureGraph to one scalar energy per graph. Its
parameters live in a named map of tape-free Tensors; training passes
tape-recorded copies through ``forward(batch, params=...)`` instead of
mutating the model.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Mapping, Optional

import numpy as np

from src.exceptions import CheckpointError, ModelError
from src.graph import FeatureGraph
from src.tensor import Tensor


class EnergyModel(ABC):
    """Base class for every energy model."""

    name: str = "energy-model"

    def __init__(self, params: Mapping[str, Tensor]):
        self._params: Dict[str, Tensor] = {}
        self._set_params(params)

    def _set_params(self, params: Mapping[str, Any]):
        names = list(params)
        if len(set(names)) != len(names):
            raise ModelError("Parameter names must be unique")
        self._params = {name: Tensor(np.asarray(_values(value))) for name, value in params.items()}

    @property
    def params(self) -> Dict[str, Tensor]:
        return dict(self._params)

    @property
    def parameter_names(self):
        return list(self._params)

    @abstractmethod
    def config_dict(self) -> Dict[str, Any]:
        """Snapshot of the model configuration, JSON-serializable."""

    @abstractmethod
    def forward(self, batch: FeatureGraph, params: Optional[Mapping[str, Tensor]] = None) -> Tensor:
        """Energies, shape ``(batch.num_graphs,)``."""

    def __call__(self, batch: FeatureGraph, params: Optional[Mapping[str, Tensor]] = None) -> Tensor:
        return self.forward(batch, params)

    def count_parameters(self) -> int:
        return int(sum(t.size for t in self._params.values()))

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Writable copies of every parameter, in registration order."""
        return {name: t.numpy() for name, t in self._params.items()}

    def load_state_dict(self, state: Mapping[str, Any]):
        """Replace parameters; names and shapes must match exactly."""
        missing = [name for name in self._params if name not in state]
        unexpected = [name for name in state if name not in self._params]
        if missing or unexpected:
            raise CheckpointError(
                "Parameter names do not match the model",
                tensor=(missing or unexpected)[0],
                details={"missing": len(missing), "unexpected": len(unexpected)},
            )
        for name, current in self._params.items():
            shape = np.shape(_values(state[name]))
            if shape != current.shape:
                raise CheckpointError(
                    "Parameter shape does not match the model",
                    tensor=name,
                    details={"expected": current.shape, "given": shape},
                )
        self._set_params({name: state[name] for name in self._params})

    def __repr__(self) -> str:
        return f"{type(self).__name__}(parameters={self.count_parameters()})"


def _values(value: Any) -> Any:
    return value.data if isinstance(value, Tensor) else value


__all__ = ["EnergyModel"]
