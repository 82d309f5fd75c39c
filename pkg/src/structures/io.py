#!/usr/bin/env python3
"""
JSON-Lines dataset files and their manifests.

One AtomicStructure per line, UTF-8, "\\n"-separated. Units are Å, eV and
eV/Å throughout.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import List, Optional, Union

from src.config.config_loader import ConfigLoader
from src.exceptions import DatasetError, DatasetFormatError, StructureValidationError
from src.logging import get_logger
from src.utils import ensure_directory, file_checksum

from .atoms import AtomicStructure

logger = get_logger(__name__)


def load_dataset(path: Union[str, Path]) -> List[AtomicStructure]:
    """
    Read and validate every record of a JSON-Lines dataset, in file order.

    Raises:
        DatasetError: File is missing
        DatasetFormatError: A line is not UTF-8 or not a JSON object (carries the line number)
        StructureValidationError: A record breaks a structure invariant
    """
    path = Path(path).expanduser()
    if not path.is_file():
        raise DatasetError(f"Dataset file not found: {path}")

    structures = []
    with open(path, "rb") as f:
        for line_number, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw.decode("utf-8"))
            except UnicodeDecodeError as e:
                raise DatasetFormatError(
                    f"Invalid UTF-8 in {path.name}: {e.reason}", line=line_number
                ) from e
            except json.JSONDecodeError as e:
                raise DatasetFormatError(
                    f"Malformed JSON in {path.name}: {e.msg}", line=line_number
                ) from e
            if not isinstance(record, dict):
                raise DatasetFormatError(
                    f"Line is not a JSON object in {path.name}", line=line_number
                )
            try:
                structures.append(AtomicStructure.from_dict(record))
            except StructureValidationError as e:
                e.details.setdefault("line", line_number)
                raise

    logger.debug(f"Loaded {len(structures)} structures from {path}")
    return structures


def encode_dataset(structures: List[AtomicStructure]) -> bytes:
    """Exact bytes ``save_dataset`` writes for ``structures``."""
    lines = [json.dumps(s.to_dict(), separators=(",", ":")) + "\n" for s in structures]
    return "".join(lines).encode("utf-8")


def save_dataset(structures: List[AtomicStructure], path: Union[str, Path]) -> Path:
    """Write structures as JSON-Lines; output is byte-stable for equal input."""
    path = Path(path).expanduser()
    ensure_directory(path.parent)
    path.write_bytes(encode_dataset(structures))
    logger.debug(f"Wrote {len(structures)} structures to {path}")
    return path


@dataclass(frozen=True)
class DatasetManifest:
    """Provenance record written next to a dataset file."""

    path: str
    record_count: int
    split: str
    seed: Optional[int]
    checksum: str

    @classmethod
    def for_file(
        cls, path: Union[str, Path], record_count: int, split: str, seed: Optional[int]
    ) -> "DatasetManifest":
        if record_count <= 0:
            raise DatasetError("Manifest needs at least one record", {"path": str(path)})
        return cls(
            path=str(Path(path)),
            record_count=int(record_count),
            split=split,
            seed=seed,
            checksum=file_checksum(path),
        )

    @classmethod
    def for_records(
        cls,
        structures: List[AtomicStructure],
        split: str,
        seed: Optional[int],
        path: Union[str, Path] = "",
    ) -> "DatasetManifest":
        """Manifest of an in-memory dataset; checksum equals that of its saved file."""
        if not structures:
            raise DatasetError("Manifest needs at least one record", {"split": split})
        return cls(
            path=str(path),
            record_count=len(structures),
            split=split,
            seed=seed,
            checksum=hashlib.sha256(encode_dataset(structures)).hexdigest(),
        )

    def with_path(self, path: Union[str, Path]) -> "DatasetManifest":
        return replace(self, path=str(Path(path)))

    @staticmethod
    def default_location(dataset_path: Union[str, Path]) -> Path:
        dataset_path = Path(dataset_path)
        return dataset_path.with_name(dataset_path.name + ".manifest.json")

    def write(self, manifest_path: Optional[Union[str, Path]] = None) -> Path:
        target = Path(manifest_path) if manifest_path else self.default_location(self.path)
        ConfigLoader.save_json(asdict(self), target)
        return target

    @classmethod
    def read(cls, manifest_path: Union[str, Path]) -> "DatasetManifest":
        try:
            data = ConfigLoader.load_json(manifest_path)
            return cls(**data)
        except FileNotFoundError as e:
            raise DatasetError(f"Manifest not found: {manifest_path}") from e
        except (TypeError, json.JSONDecodeError) as e:
            raise DatasetFormatError(f"Unreadable manifest {manifest_path}: {e}") from e

    def verify(self) -> bool:
        """True when the dataset file still matches the recorded checksum."""
        path = Path(self.path)
        return path.is_file() and file_checksum(path) == self.checksum


__all__ = ["load_dataset", "save_dataset", "encode_dataset", "DatasetManifest"]
