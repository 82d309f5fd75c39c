#!/usr/bin/env python3
"""
Task datasets, batches and data modules.

Radius graphs are built once per record; a batch is the disjoint union
of its records' graphs plus the matching labels.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from src.exceptions import DatasetError
from src.graph import DEFAULT_CUTOFF, DEFAULT_MAX_NEIGHBORS, FeatureGraph, batch_graphs, radius_graph
from src.logging import get_logger
from src.structures import AtomicStructure, load_dataset, load_devset

from .kinds import TaskKind

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class TaskBatch:
    """A batched graph with raw (eV, eV/Å) labels."""

    graph: FeatureGraph
    ids: List[str]
    energies: np.ndarray
    forces: Optional[np.ndarray]

    @property
    def num_graphs(self) -> int:
        return self.graph.num_graphs

    @property
    def num_atoms(self) -> int:
        return self.graph.num_nodes

    def __len__(self) -> int:
        return self.num_graphs


class TaskDataset:
    """Validated records of one split plus their cached radius graphs."""

    def __init__(
        self,
        structures: Sequence[AtomicStructure],
        task: Union[TaskKind, str],
        cutoff: float = DEFAULT_CUTOFF,
        max_neighbors: Optional[int] = DEFAULT_MAX_NEIGHBORS,
        name: str = "split",
    ):
        self.task = TaskKind.parse(task)
        self.name = name
        if not structures:
            raise DatasetError(f"The {name} split is empty")
        for s in structures:
            if s.energy is None:
                raise DatasetError("Record has no energy label", {"record_id": s.id, "split": name})
            if self.task.uses_forces and s.forces is None:
                raise DatasetError(
                    "S2EF needs force labels on every record", {"record_id": s.id, "split": name}
                )
        self.structures = list(structures)
        self.cutoff = cutoff
        self.max_neighbors = max_neighbors
        self.graphs = [radius_graph(s, cutoff, max_neighbors) for s in self.structures]

    def __len__(self) -> int:
        return len(self.structures)

    def batch(self, indices: Sequence[int]) -> TaskBatch:
        indices = [int(i) for i in indices]
        if not indices:
            raise DatasetError("Cannot build an empty batch", {"split": self.name})
        chosen = [self.structures[i] for i in indices]
        forces = None
        if self.task.uses_forces:
            forces = np.concatenate([s.forces for s in chosen], axis=0)
        return TaskBatch(
            graph=batch_graphs([self.graphs[i] for i in indices]),
            ids=[s.id for s in chosen],
            energies=np.asarray([s.energy for s in chosen], dtype=np.float64),
            forces=forces,
        )

    def batches(self, batch_size: int, order: Optional[Sequence[int]] = None) -> List[TaskBatch]:
        order = np.arange(len(self)) if order is None else np.asarray(order)
        return [self.batch(order[i : i + batch_size]) for i in range(0, len(order), batch_size)]


class DataModule:
    """Train and validation datasets for one task."""

    def __init__(
        self,
        task: Union[TaskKind, str],
        train: Sequence[AtomicStructure],
        val: Sequence[AtomicStructure],
        batch_size: int = 8,
        cutoff: float = DEFAULT_CUTOFF,
        max_neighbors: Optional[int] = DEFAULT_MAX_NEIGHBORS,
    ):
        self.task = TaskKind.parse(task)
        self.batch_size = int(batch_size)
        self.cutoff = cutoff
        self.max_neighbors = max_neighbors
        self.train_structures = list(train)
        self.val_structures = list(val)
        self.train = TaskDataset(train, self.task, cutoff, max_neighbors, name="train")
        self.val = TaskDataset(val, self.task, cutoff, max_neighbors, name="val")

    @classmethod
    def from_devset(
        cls,
        task: Union[TaskKind, str],
        batch_size: int = 8,
        cache_dir: Optional[Union[str, Path]] = None,
        **kwargs,
    ) -> "DataModule":
        """The bundled devset of ``task`` serves as both train and val split."""
        task = TaskKind.parse(task)
        devset = load_devset(task.value, cache_dir)
        return cls(task, devset, devset, batch_size=batch_size, **kwargs)

    @classmethod
    def from_paths(
        cls,
        task: Union[TaskKind, str],
        train_path: Union[str, Path],
        val_path: Optional[Union[str, Path]] = None,
        batch_size: int = 8,
        **kwargs,
    ) -> "DataModule":
        train = load_dataset(train_path)
        val = load_dataset(val_path) if val_path else train
        logger.info(f"Loaded {len(train)} train / {len(val)} val records")
        return cls(task, train, val, batch_size=batch_size, **kwargs)


__all__ = ["TaskBatch", "TaskDataset", "DataModule"]
