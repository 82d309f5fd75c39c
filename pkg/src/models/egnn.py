#!/usr/bin/env python3
"""
E(n)-equivariant graph network energy model.

Each layer keeps an invariant feature stream ``h`` and an equivariant
coordinate stream ``x``. For an edge j -> i:

    m_ij = EdgeMLP(h_i || h_j || |x_i - x_j|^2)
    x_i' = x_i + mean_j (x_i - x_j) * PosMLP(m_ij)
    h_i' = NodeMLP(h_i || sum_j m_ij)

Energies: embed atomic numbers, run the layers, project nodes, sum per
graph, then an output MLP down to one scalar.
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.exceptions import ConfigValidationError, MissingFeatureError
from src.graph import FeatureGraph, readout_sum, set_feature
from src.structures import Z_MAX
from src.tensor import Tensor
from src.tensor import functional as F

from .base import EnergyModel

SUPPORTED_ACTIVATIONS = ("relu",)
SUPPORTED_READOUTS = ("sum",)


@dataclass(frozen=True)
class EGNNConfig:
    """Architecture widths; ``embed_dim`` is also the message width."""

    embed_dim: int = 32
    num_layers: int = 3
    node_mlp_dims: Tuple[int, ...] = (48, 48)
    edge_mlp_dims: Tuple[int, ...] = (16, 16)
    pos_mlp_dims: Tuple[int, ...] = (64, 64)
    activation: str = "relu"
    readout: str = "sum"
    node_proj_depth: int = 2
    node_proj_hidden: int = 128
    out_depth: int = 3
    out_hidden: int = 64
    update_positions: bool = True

    def __post_init__(self):
        for name in ("node_mlp_dims", "edge_mlp_dims", "pos_mlp_dims"):
            object.__setattr__(self, name, tuple(int(d) for d in getattr(self, name)))
        self.validate()

    def validate(self):
        sizes = {
            "embed_dim": self.embed_dim,
            "num_layers": self.num_layers,
            "node_proj_depth": self.node_proj_depth,
            "node_proj_hidden": self.node_proj_hidden,
            "out_depth": self.out_depth,
            "out_hidden": self.out_hidden,
        }
        for name in ("node_mlp_dims", "edge_mlp_dims", "pos_mlp_dims"):
            for k, d in enumerate(getattr(self, name)):
                sizes[f"{name}[{k}]"] = d
        bad = {name: value for name, value in sizes.items() if int(value) < 1}
        if bad:
            raise ConfigValidationError("Model dimensions must be positive", details=bad)
        if self.activation not in SUPPORTED_ACTIVATIONS:
            raise ConfigValidationError(
                f"Unsupported activation '{self.activation}'", valid_keys=SUPPORTED_ACTIVATIONS
            )
        if self.readout not in SUPPORTED_READOUTS:
            raise ConfigValidationError(
                f"Unsupported readout '{self.readout}'", valid_keys=SUPPORTED_READOUTS
            )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for name in ("node_mlp_dims", "edge_mlp_dims", "pos_mlp_dims"):
            data[name] = list(data[name])
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EGNNConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigValidationError(f"Unknown model keys: {', '.join(unknown)}", valid_keys=known)
        return cls(**dict(data))


# -- parameter layout ---------------------------------------------------------


def _mlp_widths(config: EGNNConfig) -> List[Tuple[str, List[int]]]:
    """(prefix, [in, hidden..., out]) for every MLP, in parameter order."""
    d = config.embed_dim
    widths = []
    for layer in range(config.num_layers):
        widths.append((f"layers.{layer}.edge_mlp", [2 * d + 1, *config.edge_mlp_dims, d]))
        widths.append((f"layers.{layer}.pos_mlp", [d, *config.pos_mlp_dims, 1]))
        widths.append((f"layers.{layer}.node_mlp", [2 * d, *config.node_mlp_dims, d]))
    proj = [d] + [config.node_proj_hidden] * config.node_proj_depth
    widths.append(("node_proj", proj))
    out = [proj[-1]] + [config.out_hidden] * (config.out_depth - 1) + [1]
    widths.append(("output", out))
    return widths


def parameter_shapes(config: EGNNConfig) -> Dict[str, Tuple[int, ...]]:
    shapes: Dict[str, Tuple[int, ...]] = {"embedding.weight": (Z_MAX, config.embed_dim)}
    for prefix, dims in _mlp_widths(config):
        for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            shapes[f"{prefix}.{k}.weight"] = (fan_in, fan_out)
            shapes[f"{prefix}.{k}.bias"] = (fan_out,)
    return shapes


def init_params(config: EGNNConfig, seed: int) -> Dict[str, Tensor]:
    """
    Weights uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``, biases zero.

    The embedding table counts ``Z_MAX`` as its fan-in.
    """
    rng = np.random.default_rng(seed)
    params: Dict[str, Tensor] = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".bias"):
            params[name] = Tensor(np.zeros(shape))
            continue
        bound = 1.0 / np.sqrt(shape[0])
        params[name] = Tensor(rng.uniform(-bound, bound, size=shape))
    return params


# -- forward pass ---------------------------------------------------------------


def _mlp(x: Tensor, params: Mapping[str, Tensor], prefix: str, depth: int, final_activation: bool) -> Tensor:
    for k in range(depth):
        x = F.add(F.matmul(x, params[f"{prefix}.{k}.weight"]), params[f"{prefix}.{k}.bias"])
        if k < depth - 1 or final_activation:
            x = F.relu(x)
    return x


def egnn_layer(
    h: Tensor,
    x: Tensor,
    src: np.ndarray,
    dst: np.ndarray,
    params: Mapping[str, Tensor],
    config: EGNNConfig = EGNNConfig(),
    layer: int = 0,
) -> Tuple[Tensor, Tensor]:
    """One message-passing step; returns ``(h', x')``."""
    num_nodes = h.shape[0]
    prefix = f"layers.{layer}"
    edge_depth = len(config.edge_mlp_dims) + 1
    pos_depth = len(config.pos_mlp_dims) + 1
    node_depth = len(config.node_mlp_dims) + 1

    h_i, h_j = F.gather_rows(h, dst), F.gather_rows(h, src)
    diff = F.subtract(F.gather_rows(x, dst), F.gather_rows(x, src))
    dist2 = F.sum(F.square(diff), axis=1, keepdims=True)
    messages = _mlp(F.concat([h_i, h_j, dist2], axis=1), params, f"{prefix}.edge_mlp", edge_depth, True)

    if config.update_positions:
        weights = _mlp(messages, params, f"{prefix}.pos_mlp", pos_depth, False)
        shift = F.scatter_add_rows(F.multiply(diff, weights), dst, num_nodes)
        degree = np.maximum(np.bincount(dst, minlength=num_nodes), 1).astype(np.float64)
        x = F.add(x, F.divide(shift, Tensor(degree.reshape(-1, 1))))

    aggregated = F.scatter_add_rows(messages, dst, num_nodes)
    h = _mlp(F.concat([h, aggregated], axis=1), params, f"{prefix}.node_mlp", node_depth, False)
    return h, x


def egnn_forward(
    batch: FeatureGraph, params: Mapping[str, Tensor], config: EGNNConfig = EGNNConfig()
) -> Tensor:
    """Energies of every graph in ``batch``, shape ``(num_graphs,)``."""
    for name in ("atomic_numbers", "pos"):
        if name not in batch.ndata:
            raise MissingFeatureError(f"Model input needs node feature '{name}'")
    numbers = np.rint(batch.ndata["atomic_numbers"].data).astype(np.int64)
    h = F.gather_rows(params["embedding.weight"], numbers - 1)
    x = batch.ndata["pos"]

    for layer in range(config.num_layers):
        h, x = egnn_layer(h, x, batch.src, batch.dst, params, config, layer)

    h = _mlp(h, params, "node_proj", config.node_proj_depth, True)
    pooled = readout_sum(set_feature(batch, "node", "h", h), "h")
    energy = _mlp(pooled, params, "output", config.out_depth, False)
    return F.reshape(energy, (batch.num_graphs,))


class EGNN(EnergyModel):
    """E(n)-GNN energy model with its own parameter map."""

    name = "egnn"

    def __init__(
        self,
        config: Optional[EGNNConfig] = None,
        seed: int = 0,
        params: Optional[Mapping[str, Tensor]] = None,
    ):
        self.config = config or EGNNConfig()
        super().__init__(init_params(self.config, seed))
        if params is not None:
            self.load_state_dict(params)

    def config_dict(self) -> Dict[str, Any]:
        return self.config.to_dict()

    def forward(self, batch: FeatureGraph, params: Optional[Mapping[str, Tensor]] = None) -> Tensor:
        return egnn_forward(batch, self._params if params is None else params, self.config)


__all__ = [
    "EGNNConfig",
    "EGNN",
    "init_params",
    "parameter_shapes",
    "egnn_layer",
    "egnn_forward",
]
