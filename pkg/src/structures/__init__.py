#!/usr/bin/env python3
"""
adsorbkit structures

Atomic-structure records, JSON-Lines datasets, seeded splits, synthetic
labelled data and the bundled devsets.
"""

from .atoms import (
    MIN_SEPARATION,
    TAG_ADSORBATE,
    TAG_BULK,
    TAG_SURFACE,
    VALID_TAGS,
    Z_MAX,
    AtomicStructure,
)
from .devsets import (
    DEVSET_RECIPES,
    SHIPPED_DEVSET_DIR,
    build_devset,
    devset_path,
    load_devset,
    shipped_devset,
)
from .io import DatasetManifest, encode_dataset, load_dataset, save_dataset
from .splits import make_devset, split_dataset
from .synthetic import SyntheticPotential, assign_tags, generate_synthetic

__all__ = [
    "AtomicStructure",
    "Z_MAX",
    "MIN_SEPARATION",
    "TAG_BULK",
    "TAG_SURFACE",
    "TAG_ADSORBATE",
    "VALID_TAGS",
    "DatasetManifest",
    "load_dataset",
    "save_dataset",
    "encode_dataset",
    "make_devset",
    "split_dataset",
    "SyntheticPotential",
    "assign_tags",
    "generate_synthetic",
    "DEVSET_RECIPES",
    "build_devset",
    "devset_path",
    "load_devset",
    "SHIPPED_DEVSET_DIR",
    "shipped_devset",
]
