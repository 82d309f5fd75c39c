#!/usr/bin/env python3
"""
Synthetic catalyst + adsorbate data with exact labels.

Energies come from a shifted-force Lennard-Jones pair potential and forces
are its analytic negative gradient, so F = -dE/dx holds to rounding error.
Nothing here is periodic.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.exceptions import DatasetError, ValidationError
from src.logging import get_logger

from .atoms import TAG_ADSORBATE, TAG_BULK, TAG_SURFACE, AtomicStructure

logger = get_logger(__name__)

SYNTHETIC_Z_RANGE = (1, 20)
BOX_SIZE = 10.0  # Å
DEFAULT_MIN_DISTANCE = 1.8  # Å
ADSORBATE_FRACTION = 0.2
SURFACE_FRACTION = 0.3
_PLACEMENT_ATTEMPTS = 2000


@dataclass(frozen=True)
class SyntheticPotential:
    """
    Shifted-force Lennard-Jones with element-dependent well depth.

    ``V_sf(r) = V(r) - V(rc) - (r - rc) V'(rc)`` for ``r <= rc`` and zero
    beyond, so both energy and force go continuously to zero at the cutoff.
    Pair well depth is the geometric mean of per-element depths.
    """

    sigma: float = 2.0
    cutoff: float = 6.0
    epsilon_base: float = 0.02  # eV

    def element_epsilon(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64)
        return self.epsilon_base * (1.0 + (z % 5))

    def _lj(self, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Unit-depth LJ value and derivative d/dr."""
        s6 = (self.sigma / r) ** 6
        value = 4.0 * (s6 * s6 - s6)
        derivative = 4.0 * (-12.0 * s6 * s6 + 6.0 * s6) / r
        return value, derivative

    def pair_energy(self, r, eps=1.0) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        v, _ = self._lj(r)
        vc, dvc = self._lj(np.float64(self.cutoff))
        shifted = v - vc - (r - self.cutoff) * dvc
        return np.where(r <= self.cutoff, eps * shifted, 0.0)

    def pair_derivative(self, r, eps=1.0) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        _, dv = self._lj(r)
        _, dvc = self._lj(np.float64(self.cutoff))
        return np.where(r <= self.cutoff, eps * (dv - dvc), 0.0)

    def energy_and_forces(
        self, atomic_numbers: np.ndarray, positions: np.ndarray
    ) -> Tuple[float, np.ndarray]:
        positions = np.asarray(positions, dtype=np.float64)
        n = positions.shape[0]
        forces = np.zeros_like(positions)
        if n < 2:
            return 0.0, forces

        i, j = np.triu_indices(n, k=1)
        delta = positions[i] - positions[j]
        r = np.sqrt((delta**2).sum(axis=1))
        eps_atom = self.element_epsilon(atomic_numbers)
        eps = np.sqrt(eps_atom[i] * eps_atom[j])

        energy = float(self.pair_energy(r, eps).sum())
        # dE/dx_i = V'(r) (x_i - x_j) / r; the force is its negative
        pair_force = (-self.pair_derivative(r, eps) / r)[:, None] * delta
        np.add.at(forces, i, pair_force)
        np.add.at(forces, j, -pair_force)
        return energy, forces

    def energy(self, atomic_numbers: np.ndarray, positions: np.ndarray) -> float:
        return self.energy_and_forces(atomic_numbers, positions)[0]

    def label(self, structure: AtomicStructure) -> AtomicStructure:
        """Copy of ``structure`` with energy and forces from this potential."""
        energy, forces = self.energy_and_forces(structure.atomic_numbers, structure.positions)
        return AtomicStructure(
            id=structure.id,
            atomic_numbers=structure.atomic_numbers,
            positions=structure.positions,
            tags=structure.tags,
            energy=energy,
            forces=forces,
            cell=structure.cell,
        )

    def equilibrium_distance(self, tol: float = 1e-13) -> float:
        """Separation where the pair force vanishes (independent of element)."""
        lo, hi = 0.5 * self.sigma, self.cutoff
        # derivative is negative inside the well minimum, positive outside
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.pair_derivative(mid) < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < tol:
                break
        return 0.5 * (lo + hi)


def assign_tags(positions: np.ndarray) -> np.ndarray:
    """
    Role tags by height: the top 20% of atoms (rounded up) are adsorbate,
    the next 30% (rounded up) surface, the rest bulk. Ties keep index order.
    """
    n = positions.shape[0]
    order = np.argsort(-positions[:, 2], kind="stable")
    n_ads = int(np.ceil(ADSORBATE_FRACTION * n))
    n_surf = min(int(np.ceil(SURFACE_FRACTION * n)), n - n_ads)
    tags = np.full(n, TAG_BULK, dtype=np.int64)
    tags[order[:n_ads]] = TAG_ADSORBATE
    tags[order[n_ads : n_ads + n_surf]] = TAG_SURFACE
    return tags


def _place_atoms(rng: np.random.Generator, count: int, min_distance: float) -> np.ndarray:
    placed: List[np.ndarray] = []
    for _ in range(count):
        for _attempt in range(_PLACEMENT_ATTEMPTS):
            candidate = rng.uniform(0.0, BOX_SIZE, size=3)
            if not placed:
                break
            gaps = np.sqrt(((np.asarray(placed) - candidate) ** 2).sum(axis=1))
            if gaps.min() >= min_distance:
                break
        else:
            raise DatasetError(
                "Could not place atoms at the requested separation",
                {"atoms": count, "min_distance": min_distance, "box": BOX_SIZE},
            )
        placed.append(candidate)
    return np.asarray(placed)


def generate_synthetic(
    n: int,
    atoms_min: int,
    atoms_max: int,
    seed: int,
    min_distance: float = DEFAULT_MIN_DISTANCE,
    potential: SyntheticPotential = None,
    id_prefix: str = "syn",
) -> List[AtomicStructure]:
    """
    Generate ``n`` labelled structures.

    Atom counts are uniform in ``[atoms_min, atoms_max]``, atomic numbers
    uniform in [1, 20], positions uniform in a 10 Å box with at least
    ``min_distance`` between atoms.
    """
    if not 2 <= atoms_min <= atoms_max:
        raise ValidationError(
            "Need 2 <= atoms_min <= atoms_max", {"atoms_min": atoms_min, "atoms_max": atoms_max}
        )
    potential = potential or SyntheticPotential()
    rng = np.random.default_rng(seed)

    structures = []
    for k in range(n):
        count = int(rng.integers(atoms_min, atoms_max + 1))
        numbers = rng.integers(SYNTHETIC_Z_RANGE[0], SYNTHETIC_Z_RANGE[1] + 1, size=count)
        positions = _place_atoms(rng, count, min_distance)
        energy, forces = potential.energy_and_forces(numbers, positions)
        structures.append(
            AtomicStructure(
                id=f"{id_prefix}-{seed}-{k:05d}",
                atomic_numbers=numbers,
                positions=positions,
                tags=assign_tags(positions),
                energy=energy,
                forces=forces,
            )
        )
    logger.debug(f"Generated {n} synthetic structures (seed={seed})")
    return structures


__all__ = [
    "SyntheticPotential",
    "assign_tags",
    "generate_synthetic",
    "SYNTHETIC_Z_RANGE",
    "BOX_SIZE",
    "DEFAULT_MIN_DISTANCE",
]
