#!/usr/bin/env python3
"""Catalyst + adsorbate structure records."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from src.exceptions import StructureValidationError

Z_MAX = 100
MIN_SEPARATION = 1e-6  # Å

TAG_BULK = 0
TAG_SURFACE = 1
TAG_ADSORBATE = 2
VALID_TAGS = (TAG_BULK, TAG_SURFACE, TAG_ADSORBATE)


def _as_matrix(value: Any, record_id: str, name: str, rows: Optional[int] = None) -> np.ndarray:
    try:
        array = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise StructureValidationError(
            f"{name} is not numeric", record_id=record_id, field=name
        ) from e
    if array.size == 0 and rows == 0:
        array = array.reshape(0, 3)
    if array.ndim != 2 or array.shape[1] != 3:
        raise StructureValidationError(
            f"{name} must be an N x 3 array, got shape {array.shape}",
            record_id=record_id,
            field=name,
        )
    if rows is not None and array.shape[0] != rows:
        raise StructureValidationError(
            f"{name} has {array.shape[0]} rows for {rows} atoms",
            record_id=record_id,
            field=name,
        )
    if not np.all(np.isfinite(array)):
        raise StructureValidationError(
            f"{name} contains non-finite values", record_id=record_id, field=name
        )
    return array


@dataclass(frozen=True)
class AtomicStructure:
    """
    One catalyst + adsorbate system.

    Tags: 0 = subsurface bulk, 1 = surface, 2 = adsorbate.
    Units: positions and cell in Å, energy in eV, forces in eV/Å.
    """

    id: str
    atomic_numbers: np.ndarray
    positions: np.ndarray
    tags: np.ndarray
    energy: Optional[float] = None
    forces: Optional[np.ndarray] = None
    cell: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.validate()

    @property
    def num_atoms(self) -> int:
        return int(self.atomic_numbers.shape[0])

    def validate(self):
        """Check every invariant; raise StructureValidationError naming the field."""
        rid = self.id
        if not isinstance(rid, str) or not rid:
            raise StructureValidationError("id must be a non-empty string", record_id=str(rid), field="id")

        numbers = np.asarray(self.atomic_numbers)
        if numbers.ndim != 1 or numbers.size == 0:
            raise StructureValidationError(
                "atomic_numbers must be a non-empty list", record_id=rid, field="atomic_numbers"
            )
        if not np.all(np.equal(np.mod(numbers, 1), 0)):
            raise StructureValidationError(
                "atomic_numbers must be integers", record_id=rid, field="atomic_numbers"
            )
        numbers = numbers.astype(np.int64)
        if numbers.min() < 1 or numbers.max() > Z_MAX:
            raise StructureValidationError(
                f"atomic numbers must lie in [1, {Z_MAX}]", record_id=rid, field="atomic_numbers"
            )
        n = numbers.shape[0]

        tags = np.asarray(self.tags)
        if tags.ndim != 1 or tags.shape[0] != n:
            raise StructureValidationError(
                f"tags has {tags.shape[0] if tags.ndim else 0} entries for {n} atoms",
                record_id=rid,
                field="tags",
            )
        tags = tags.astype(np.int64)
        if not np.all(np.isin(tags, VALID_TAGS)):
            raise StructureValidationError("tags must be 0, 1 or 2", record_id=rid, field="tags")

        positions = _as_matrix(self.positions, rid, "positions", n)
        if n > 1:
            deltas = positions[:, None, :] - positions[None, :, :]
            dist = np.sqrt((deltas**2).sum(axis=-1))
            np.fill_diagonal(dist, np.inf)
            if dist.min() < MIN_SEPARATION:
                raise StructureValidationError(
                    "two atoms are closer than 1e-6 Å", record_id=rid, field="positions"
                )

        forces = None
        if self.forces is not None:
            forces = _as_matrix(self.forces, rid, "forces", n)

        cell = None
        if self.cell is not None:
            cell = np.array(self.cell, dtype=np.float64)
            if cell.shape != (3, 3) or not np.all(np.isfinite(cell)):
                raise StructureValidationError("cell must be a finite 3 x 3 array", record_id=rid, field="cell")

        energy = self.energy
        if energy is not None:
            energy = float(energy)
            if not np.isfinite(energy):
                raise StructureValidationError("energy is not finite", record_id=rid, field="energy")

        # normalize storage (frozen dataclass, so go through object.__setattr__)
        for name, value in (
            ("atomic_numbers", numbers),
            ("tags", tags),
            ("positions", positions),
            ("forces", forces),
            ("cell", cell),
            ("energy", energy),
        ):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    def with_positions(self, positions: np.ndarray) -> "AtomicStructure":
        """Copy with new positions; labels are kept as-is."""
        return AtomicStructure(
            id=self.id,
            atomic_numbers=self.atomic_numbers,
            positions=positions,
            tags=self.tags,
            energy=self.energy,
            forces=self.forces,
            cell=self.cell,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "atomic_numbers": [int(z) for z in self.atomic_numbers],
            "positions": self.positions.tolist(),
            "tags": [int(t) for t in self.tags],
            "energy": self.energy,
            "forces": None if self.forces is None else self.forces.tolist(),
            "cell": None if self.cell is None else self.cell.tolist(),
        }

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "AtomicStructure":
        rid = str(record.get("id", "")) if isinstance(record, dict) else ""
        if not isinstance(record, dict):
            raise StructureValidationError("record is not a JSON object", record_id=rid)
        for key in ("id", "atomic_numbers", "positions", "tags"):
            if key not in record:
                raise StructureValidationError(f"missing field '{key}'", record_id=rid, field=key)
        return cls(
            id=str(record["id"]),
            atomic_numbers=np.asarray(record["atomic_numbers"]),
            positions=record["positions"],
            tags=np.asarray(record["tags"]),
            energy=record.get("energy"),
            forces=record.get("forces"),
            cell=record.get("cell"),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, AtomicStructure):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(self.id)
