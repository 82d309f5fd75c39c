#!/usr/bin/env python3
"""
Shared pytest fixtures and configuration for the adsorbkit test suite.
"""

import os
import tempfile
from pathlib import Path
from typing import Generator, List

import numpy as np
import psutil
import pytest

from src.models import EGNNConfig, build_model
from src.structures import AtomicStructure, generate_synthetic, save_dataset

# ============================================================================
# Pytest Plugin Hooks
# ============================================================================


def pytest_report_header(config):
    """Add environment info to the pytest header."""
    return [
        f"numpy: {np.__version__}",
        f"CPU cores: {psutil.cpu_count(logical=False)} physical / {psutil.cpu_count()} logical",
    ]


# ============================================================================
# Environment Isolation
# ============================================================================


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path_factory):
    """Strip ADSORBKIT_* settings and point the devset cache at a temp dir."""
    for key in list(os.environ):
        if key.startswith("ADSORBKIT_"):
            monkeypatch.delenv(key)
    cache = tmp_path_factory.getbasetemp() / "devset-cache"
    monkeypatch.setenv("ADSORBKIT_DEVSET_DIR", str(cache))
    yield


@pytest.fixture(scope="session")
def devset_cache(tmp_path_factory) -> Path:
    """Session-wide devset cache, shared so each recipe materializes once."""
    return tmp_path_factory.getbasetemp() / "devset-cache"


# ============================================================================
# Temporary Directories
# ============================================================================


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


# ============================================================================
# Structures and Datasets
# ============================================================================


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_structures() -> List[AtomicStructure]:
    """Twelve labelled synthetic structures with 4-7 atoms each."""
    return generate_synthetic(12, 4, 7, seed=5)


@pytest.fixture
def small_dataset_file(temp_dir: Path, small_structures) -> Path:
    return save_dataset(small_structures, temp_dir / "small.jsonl")


@pytest.fixture
def water_like() -> AtomicStructure:
    """Three atoms, one per tag, with energy and forces."""
    return AtomicStructure(
        id="tri-0",
        atomic_numbers=[8, 1, 1],
        positions=[[0.0, 0.0, 0.0], [0.96, 0.0, 0.0], [-0.24, 0.93, 0.0]],
        tags=[2, 1, 0],
        energy=-1.25,
        forces=[[0.1, 0.0, 0.0], [-0.05, 0.02, 0.0], [-0.05, -0.02, 0.0]],
    )


# ============================================================================
# Models
# ============================================================================


@pytest.fixture(scope="session")
def tiny_config() -> EGNNConfig:
    """A narrow two-layer network that keeps gradient checks fast."""
    return EGNNConfig(
        embed_dim=6,
        num_layers=2,
        node_mlp_dims=(7,),
        edge_mlp_dims=(5,),
        pos_mlp_dims=(4,),
        node_proj_depth=2,
        node_proj_hidden=8,
        out_depth=2,
        out_hidden=5,
    )


@pytest.fixture
def tiny_model(tiny_config):
    return build_model(tiny_config, seed=3)
