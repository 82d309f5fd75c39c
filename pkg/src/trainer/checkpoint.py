#!/usr/bin/env python3
"""
Single-file checkpoints.

Layout: 8-byte magic, little-endian u64 header length, UTF-8 JSON header,
then every tensor as little-endian float64 in header order. The header
holds names and shapes, configs, the normalizer, optimizer scalars, the
epoch counter and the numpy RNG state.
"""

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np

from src.exceptions import CheckpointError
from src.logging import get_logger
from src.models import EnergyModel
from src.tasks import Normalizer
from src.utils import ensure_directory

from .config import TrainerConfig
from .optim import Adam

logger = get_logger(__name__)

MAGIC = b"ADSKCKPT"
FORMAT_VERSION = 1
_LENGTH = struct.Struct("<Q")
_F64 = np.dtype("<f8")


@dataclass(frozen=True)
class CheckpointInfo:
    """What ``save_checkpoint`` wrote."""

    path: str
    version: int
    epoch: int
    num_tensors: int
    num_bytes: int


@dataclass
class Checkpoint:
    params: Dict[str, np.ndarray]
    optimizer_state: Optional[Dict[str, Any]]
    normalizer: Normalizer
    trainer_config: Dict[str, Any]
    model_name: str
    model_config: Dict[str, Any]
    epoch: int = 0
    global_step: int = 0
    rng_state: Optional[Dict[str, Any]] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def save_checkpoint(
    path: Union[str, Path],
    model: EnergyModel,
    optimizer: Optional[Adam],
    normalizer: Normalizer,
    config: Union[TrainerConfig, Mapping[str, Any]],
    epoch: int = 0,
    global_step: int = 0,
    rng_state: Optional[Mapping[str, Any]] = None,
    extra: Optional[Mapping[str, Any]] = None,
    params: Optional[Mapping[str, np.ndarray]] = None,
) -> CheckpointInfo:
    path = Path(path)
    ensure_directory(path.parent)

    tensors: Dict[str, np.ndarray] = {}
    for name, value in (params if params is not None else model.state_dict()).items():
        tensors[f"params/{name}"] = np.asarray(value, dtype=np.float64)
    optimizer_header = None
    if optimizer is not None:
        state = optimizer.state_dict()
        for moment in ("m", "v"):
            for name, value in state[moment].items():
                tensors[f"{moment}/{name}"] = value
        optimizer_header = {k: state[k] for k in ("lr", "t", "betas", "eps")}

    header = {
        "format_version": FORMAT_VERSION,
        "epoch": int(epoch),
        "global_step": int(global_step),
        "model": {"name": model.name, "config": model.config_dict()},
        "trainer_config": config.to_dict() if isinstance(config, TrainerConfig) else dict(config),
        "normalizer": normalizer.to_dict(),
        "optimizer": optimizer_header,
        "rng_state": rng_state,
        "extra": dict(extra or {}),
        "tensors": [{"name": name, "shape": list(value.shape)} for name, value in tensors.items()],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(_LENGTH.pack(len(header_bytes)))
        f.write(header_bytes)
        for value in tensors.values():
            f.write(np.ascontiguousarray(value, dtype=_F64).tobytes())
    os.replace(tmp, path)

    info = CheckpointInfo(
        path=str(path),
        version=FORMAT_VERSION,
        epoch=int(epoch),
        num_tensors=len(tensors),
        num_bytes=path.stat().st_size,
    )
    logger.debug(f"Saved checkpoint {path} (epoch {epoch}, {len(tensors)} tensors)")
    return info


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"Not a checkpoint file: {path}")
    offset = len(MAGIC)
    (header_length,) = _LENGTH.unpack_from(raw, offset)
    offset += _LENGTH.size
    try:
        header = json.loads(raw[offset : offset + header_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Corrupt checkpoint header: {path}") from e
    offset += header_length

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            "Unsupported checkpoint version", details={"expected": FORMAT_VERSION, "given": version}
        )

    tensors: Dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + count * _F64.itemsize
        if end > len(raw):
            raise CheckpointError("Checkpoint payload is truncated", tensor=entry["name"])
        tensors[entry["name"]] = np.frombuffer(raw[offset:end], dtype=_F64).reshape(shape).astype(np.float64)
        offset = end
    if offset != len(raw):
        raise CheckpointError("Checkpoint has trailing bytes", details={"extra": len(raw) - offset})

    def group(prefix: str) -> Dict[str, np.ndarray]:
        return {k[len(prefix) :]: v for k, v in tensors.items() if k.startswith(prefix)}

    optimizer_state = None
    if header.get("optimizer") is not None:
        optimizer_state = dict(header["optimizer"], m=group("m/"), v=group("v/"))

    return Checkpoint(
        params=group("params/"),
        optimizer_state=optimizer_state,
        normalizer=Normalizer.from_dict(header["normalizer"]),
        trainer_config=header["trainer_config"],
        model_name=header["model"]["name"],
        model_config=header["model"]["config"],
        epoch=int(header["epoch"]),
        global_step=int(header.get("global_step", 0)),
        rng_state=header.get("rng_state"),
        extra=header.get("extra", {}),
    )


__all__ = ["Checkpoint", "CheckpointInfo", "save_checkpoint", "load_checkpoint", "FORMAT_VERSION"]
