#!/usr/bin/env python3
"""Seeded devset selection and dataset splitting."""

from typing import List, Sequence, Tuple

import numpy as np

from src.exceptions import SplitError

from .atoms import AtomicStructure
from .io import DatasetManifest

FRACTION_TOLERANCE = 1e-9


def make_devset(
    dataset: Sequence[AtomicStructure], n: int, seed: int, split: str = "devset"
) -> Tuple[List[AtomicStructure], DatasetManifest]:
    """
    Pick ``n`` distinct records by a seeded shuffle.

    The selection depends only on the dataset order, ``n`` and ``seed``.
    Stratification is uniform random; no balancing by adsorbate.
    """
    if not 0 < n <= len(dataset):
        raise SplitError(
            f"Devset size must be in [1, {len(dataset)}]",
            {"requested": n, "available": len(dataset)},
        )
    order = np.random.default_rng(seed).permutation(len(dataset))[:n]
    devset = [dataset[i] for i in order]
    return devset, DatasetManifest.for_records(devset, split=split, seed=seed)


def split_dataset(
    dataset: Sequence[AtomicStructure], fractions: Sequence[float], seed: int
) -> List[List[AtomicStructure]]:
    """
    Partition ``dataset`` into disjoint splits of the given fractions.

    Sizes are ``floor(f * n)``; whatever rounding leaves over goes to the
    first split.
    """
    fractions = [float(f) for f in fractions]
    if not fractions or any(f <= 0 for f in fractions):
        raise SplitError("Split fractions must be positive", {"fractions": fractions})
    if abs(sum(fractions) - 1.0) > FRACTION_TOLERANCE:
        raise SplitError("Split fractions must sum to 1", {"sum": sum(fractions)})

    total = len(dataset)
    sizes = [int(np.floor(f * total + FRACTION_TOLERANCE)) for f in fractions]
    sizes[0] += total - sum(sizes)

    order = np.random.default_rng(seed).permutation(total)
    splits = []
    start = 0
    for size in sizes:
        splits.append([dataset[i] for i in order[start : start + size]])
        start += size
    return splits


__all__ = ["make_devset", "split_dataset"]
