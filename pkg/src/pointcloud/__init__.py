#!/usr/bin/env python3
"""
adsorbkit point clouds

Atom-centered point-cloud view of an adsorbate system: adsorbate and
surface atoms are centers; neighbors are those atoms plus a seeded sample
of subsurface atoms. Each (center, neighbor) pair carries a two-block
one-hot of the atomic numbers. Batches are zero-padded and masked.
"""

from .clouds import (
    DEFAULT_NUM_SUBSTRATE,
    PAIR_FEATURE_WIDTH,
    PointCloudBatch,
    PointCloudSample,
    batch_point_clouds,
    masked_mean,
    masked_sum,
    pair_features,
    sample_point_cloud,
)

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
