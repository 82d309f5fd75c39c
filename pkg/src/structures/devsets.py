#!/usr/bin/env python3
"""
Bundled miniature devsets.

Each devset is defined by a fixed generation recipe (seed, pool size,
atom counts). A source checkout can carry the generated files under
``data/devsets``; otherwise the first request materializes them as
JSON-Lines plus a manifest under the cache directory. Either copy is only
used after its checksum matches the manifest.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from src.exceptions import DatasetError
from src.logging import get_logger
from src.utils import ensure_directory, file_checksum

from .atoms import AtomicStructure
from .io import DatasetManifest, load_dataset, save_dataset
from .splits import make_devset
from .synthetic import generate_synthetic

logger = get_logger(__name__)

DEFAULT_DEVSET_DIR = Path("~/.cache/adsorbkit/devsets")
# Committed copies, used when no cache directory is configured
SHIPPED_DEVSET_DIR = Path(__file__).resolve().parents[2] / "data" / "devsets"
# Read when no cache_dir is passed
DEVSET_DIR_ENV = "ADSORBKIT_DEVSET_DIR"


@dataclass(frozen=True)
class DevsetRecipe:
    """How to rebuild a devset: a seeded pool, then a seeded subsample."""

    seed: int
    pool_size: int
    size: int
    atoms_min: int
    atoms_max: int
    with_forces: bool


DEVSET_RECIPES: Dict[str, DevsetRecipe] = {
    "is2re": DevsetRecipe(seed=2022, pool_size=1000, size=100, atoms_min=6, atoms_max=14, with_forces=False),
    "s2ef": DevsetRecipe(seed=2023, pool_size=1000, size=100, atoms_min=6, atoms_max=14, with_forces=True),
}


def _strip_forces(structure: AtomicStructure) -> AtomicStructure:
    return AtomicStructure(
        id=structure.id,
        atomic_numbers=structure.atomic_numbers,
        positions=structure.positions,
        tags=structure.tags,
        energy=structure.energy,
        cell=structure.cell,
    )


def build_devset(name: str) -> Tuple[List[AtomicStructure], DatasetManifest]:
    """Run a devset recipe in memory."""
    recipe = DEVSET_RECIPES.get(name)
    if recipe is None:
        raise DatasetError(f"Unknown devset '{name}'", {"available": ", ".join(DEVSET_RECIPES)})
    pool = generate_synthetic(
        recipe.pool_size, recipe.atoms_min, recipe.atoms_max, recipe.seed, id_prefix=name
    )
    if not recipe.with_forces:
        pool = [_strip_forces(s) for s in pool]
    return make_devset(pool, recipe.size, recipe.seed, split=f"{name}-devset")


def _matches_manifest(path: Path) -> bool:
    manifest_path = DatasetManifest.default_location(path)
    if not (path.is_file() and manifest_path.is_file()):
        return False
    return file_checksum(path) == DatasetManifest.read(manifest_path).checksum


def shipped_devset(name: str) -> Optional[Path]:
    """The repository copy of devset ``name``, if present and intact."""
    path = SHIPPED_DEVSET_DIR / f"{name}_devset.jsonl"
    if not path.is_file():
        return None
    if _matches_manifest(path):
        return path
    logger.warning(f"Shipped devset {path} does not match its manifest, ignoring it")
    return None


def devset_path(name: str, cache_dir: Optional[Union[str, Path]] = None) -> Path:
    """
    Path of devset ``name``.

    An explicit ``cache_dir`` or ``$ADSORBKIT_DEVSET_DIR`` wins; otherwise
    the copy under ``data/devsets`` is used when it verifies, and the
    default cache is the last resort. Missing or corrupt cache files are
    rebuilt from the recipe.
    """
    if name not in DEVSET_RECIPES:
        raise DatasetError(f"Unknown devset '{name}'", {"available": ", ".join(DEVSET_RECIPES)})
    cache_dir = cache_dir or os.environ.get(DEVSET_DIR_ENV)
    if not cache_dir:
        shipped = shipped_devset(name)
        if shipped is not None:
            return shipped
    directory = ensure_directory(cache_dir or DEFAULT_DEVSET_DIR)
    path = directory / f"{name}_devset.jsonl"
    manifest_path = DatasetManifest.default_location(path)

    if path.is_file() and manifest_path.is_file():
        if _matches_manifest(path):
            return path
        logger.warning(f"Cached devset {path} failed its checksum, rebuilding")

    structures, manifest = build_devset(name)
    save_dataset(structures, path)
    manifest.with_path(path).write(manifest_path)
    logger.info(f"Materialized {name} devset ({len(structures)} records) at {path}")
    return path


def load_devset(name: str, cache_dir: Optional[Union[str, Path]] = None) -> List[AtomicStructure]:
    return load_dataset(devset_path(name, cache_dir))


__all__ = [
    "DevsetRecipe",
    "DEVSET_RECIPES",
    "SHIPPED_DEVSET_DIR",
    "build_devset",
    "devset_path",
    "load_devset",
    "shipped_devset",
]
