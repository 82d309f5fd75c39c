#!/usr/bin/env python3
"""Point-cloud sampling, pair featurization and padded batching."""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.exceptions import PointCloudError, ValidationError
from src.structures import TAG_ADSORBATE, TAG_BULK, TAG_SURFACE, Z_MAX, AtomicStructure
from src.tensor import Tensor, as_tensor
from src.tensor import functional as F

PAIR_FEATURE_WIDTH = 2 * Z_MAX
DEFAULT_NUM_SUBSTRATE = 8


def pair_features(center_z: int, neighbor_z: int) -> np.ndarray:
    """
    Two-block one-hot: a one at ``center_z - 1`` and at
    ``Z_MAX + neighbor_z - 1``; width ``2 * Z_MAX``.
    """
    for name, z in (("center_z", center_z), ("neighbor_z", neighbor_z)):
        if int(z) != z or not 1 <= z <= Z_MAX:
            raise ValidationError(f"{name} must be an atomic number in [1, {Z_MAX}]", {name: z})
    vector = np.zeros(PAIR_FEATURE_WIDTH, dtype=np.float64)
    vector[int(center_z) - 1] = 1.0
    vector[Z_MAX + int(neighbor_z) - 1] = 1.0
    return vector


def _pair_block(center_z: np.ndarray, neighbor_z: np.ndarray) -> np.ndarray:
    m, k = center_z.size, neighbor_z.size
    block = np.zeros((m, k, PAIR_FEATURE_WIDTH), dtype=np.float64)
    block[np.arange(m), :, center_z - 1] = 1.0
    block[:, np.arange(k), Z_MAX + neighbor_z - 1] = 1.0
    return block


@dataclass(frozen=True, eq=False)
class PointCloudSample:
    """Centers, neighbors and their pair features for one structure."""

    source_id: str
    center_indices: np.ndarray
    neighbor_indices: np.ndarray
    positions_centers: np.ndarray
    positions_neighbors: np.ndarray
    pair_features: np.ndarray
    energy: Optional[float] = None

    @property
    def num_centers(self) -> int:
        return int(self.center_indices.size)

    @property
    def num_neighbors(self) -> int:
        return int(self.neighbor_indices.size)


def sample_point_cloud(
    structure: AtomicStructure, num_substrate: int = DEFAULT_NUM_SUBSTRATE, seed: int = 0
) -> PointCloudSample:
    """
    Build the point cloud of ``structure``.

    Centers are the adsorbate atoms then the surface atoms. Neighbors are
    the centers followed by ``min(num_substrate, #bulk)`` bulk atoms drawn
    uniformly without replacement (kept in index order).
    """
    if num_substrate < 0:
        raise ValidationError("num_substrate must be non-negative", {"num_substrate": num_substrate})
    tags = structure.tags
    adsorbate = np.flatnonzero(tags == TAG_ADSORBATE)
    if adsorbate.size == 0:
        raise PointCloudError(
            "Structure has no adsorbate atoms to describe", {"record_id": structure.id}
        )
    surface = np.flatnonzero(tags == TAG_SURFACE)
    bulk = np.flatnonzero(tags == TAG_BULK)

    rng = np.random.default_rng(seed)
    take = min(num_substrate, bulk.size)
    sampled = np.sort(rng.choice(bulk, size=take, replace=False)) if take else bulk[:0]

    centers = np.concatenate([adsorbate, surface])
    neighbors = np.concatenate([centers, sampled])
    numbers = structure.atomic_numbers
    return PointCloudSample(
        source_id=structure.id,
        center_indices=centers,
        neighbor_indices=neighbors,
        positions_centers=structure.positions[centers],
        positions_neighbors=structure.positions[neighbors],
        pair_features=_pair_block(numbers[centers], numbers[neighbors]),
        energy=structure.energy,
    )


@dataclass(frozen=True, eq=False)
class PointCloudBatch:
    """
    Zero-padded batch of point clouds.

    ``positions`` stacks the padded centers (first ``M_max`` rows) and the
    padded neighbors (next ``K_max`` rows). ``mask[b, m, k]`` is true for
    real (center, neighbor) pairs.
    """

    features: Tensor
    positions: Tensor
    mask: np.ndarray
    energies: Optional[Tensor]
    source_ids: List[str]

    @property
    def batch_size(self) -> int:
        return int(self.mask.shape[0])


def batch_point_clouds(samples: Sequence[PointCloudSample]) -> PointCloudBatch:
    if not samples:
        raise PointCloudError("Cannot batch an empty list of point clouds")
    m_max = max(s.num_centers for s in samples)
    k_max = max(s.num_neighbors for s in samples)
    b = len(samples)

    features = np.zeros((b, m_max, k_max, PAIR_FEATURE_WIDTH), dtype=np.float64)
    positions = np.zeros((b, m_max + k_max, 3), dtype=np.float64)
    mask = np.zeros((b, m_max, k_max), dtype=bool)
    for i, s in enumerate(samples):
        m, k = s.num_centers, s.num_neighbors
        features[i, :m, :k] = s.pair_features
        positions[i, :m] = s.positions_centers
        positions[i, m_max : m_max + k] = s.positions_neighbors
        mask[i, :m, :k] = True
    mask.setflags(write=False)

    energies = None
    if all(s.energy is not None for s in samples):
        energies = Tensor([s.energy for s in samples])
    return PointCloudBatch(
        features=Tensor(features),
        positions=Tensor(positions),
        mask=mask,
        energies=energies,
        source_ids=[s.source_id for s in samples],
    )


def _expand_mask(mask: np.ndarray, ndim: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    return mask.reshape(mask.shape + (1,) * (ndim - mask.ndim))


def masked_sum(values, mask: np.ndarray) -> Tensor:
    """Sum of ``values[b, m, k, ...]`` over valid (m, k) pairs, per batch element."""
    values = as_tensor(values)
    if values.shape[:3] != tuple(np.shape(mask)):
        raise PointCloudError(
            "values and mask disagree on (batch, center, neighbor) extent",
            {"values": values.shape, "mask": np.shape(mask)},
        )
    kept = F.masked_fill(values, ~_expand_mask(mask, values.ndim), 0.0)
    return F.sum(F.sum(kept, axis=1), axis=1)


def masked_mean(values, mask: np.ndarray) -> Tensor:
    """``masked_sum`` divided by the number of valid pairs (at least 1)."""
    values = as_tensor(values)
    counts = np.maximum(np.asarray(mask, dtype=bool).sum(axis=(1, 2)), 1).astype(np.float64)
    total = masked_sum(values, mask)
    return F.divide(total, Tensor(counts.reshape((-1,) + (1,) * (total.ndim - 1))))


__all__ = [
    "PointCloudSample",
    "PointCloudBatch",
    "sample_point_cloud",
    "pair_features",
    "batch_point_clouds",
    "masked_sum",
    "masked_mean",
    "PAIR_FEATURE_WIDTH",
    "DEFAULT_NUM_SUBSTRATE",
]
