#!/usr/bin/env python3
"""
adsorbkit models

The abstract energy-model interface and the E(n)-GNN backbone.
"""

from typing import Any, Dict, Mapping, Optional, Type, Union

from src.exceptions import ConfigValidationError

from .base import EnergyModel
from .egnn import EGNN, EGNNConfig, egnn_forward, egnn_layer, init_params, parameter_shapes

MODEL_REGISTRY: Dict[str, Type[EnergyModel]] = {"egnn": EGNN}


def build_model(
    config: Union[EGNNConfig, Mapping[str, Any], None] = None,
    seed: int = 0,
    name: str = "egnn",
    params: Optional[Mapping[str, Any]] = None,
) -> EnergyModel:
    """Instantiate a registered model from a config object or flat mapping."""
    if name not in MODEL_REGISTRY:
        raise ConfigValidationError(f"Unknown model '{name}'", valid_keys=MODEL_REGISTRY)
    if config is None or isinstance(config, EGNNConfig):
        model_config = config
    else:
        model_config = EGNNConfig.from_dict(config)
    return MODEL_REGISTRY[name](config=model_config, seed=seed, params=params)


__all__ = [
    "EnergyModel",
    "EGNN",
    "EGNNConfig",
    "init_params",
    "parameter_shapes",
    "egnn_layer",
    "egnn_forward",
    "build_model",
    "MODEL_REGISTRY",
]
