#!/usr/bin/env python3
"""
Unit tests for task datasets, batches, data modules and evaluation.
"""

import numpy as np
import pytest

from src.exceptions import DatasetError
from src.structures import AtomicStructure, save_dataset
from src.tasks import DataModule, Normalizer, TaskDataset, TaskKind, evaluate


class TestTaskDataset:
    """Test suite for TaskDataset."""

    def test_batch_labels(self, small_structures):
        """Test a batch carries ids, energies and concatenated forces."""
        dataset = TaskDataset(small_structures, "s2ef")
        batch = dataset.batch([3, 0])
        assert batch.ids == [small_structures[3].id, small_structures[0].id]
        np.testing.assert_array_equal(batch.energies, [small_structures[3].energy, small_structures[0].energy])
        assert batch.forces.shape == (batch.num_atoms, 3)
        np.testing.assert_array_equal(batch.forces[: small_structures[3].num_atoms], small_structures[3].forces)
        assert len(batch) == 2

    def test_is2re_has_no_forces(self, small_structures):
        """Test IS2RE batches omit forces."""
        assert TaskDataset(small_structures, "is2re").batch([0]).forces is None

    def test_batches_cover_order(self, small_structures):
        """Test batches walk the given order in chunks."""
        dataset = TaskDataset(small_structures, "is2re")
        batches = dataset.batches(5, order=list(reversed(range(12))))
        assert [len(b) for b in batches] == [5, 5, 2]
        assert batches[0].ids[0] == small_structures[11].id

    def test_empty_split(self):
        """Test an empty split is refused."""
        with pytest.raises(DatasetError):
            TaskDataset([], "is2re")

    def test_missing_energy(self):
        """Test every record needs an energy."""
        s = AtomicStructure("u", [1], [[0.0, 0.0, 0.0]], [2])
        with pytest.raises(DatasetError):
            TaskDataset([s], "is2re")

    def test_s2ef_needs_forces(self):
        """Test S2EF refuses records without forces."""
        s = AtomicStructure("e", [1], [[0.0, 0.0, 0.0]], [2], energy=0.1)
        with pytest.raises(DatasetError):
            TaskDataset([s], "s2ef")

    def test_empty_batch(self, small_structures):
        """Test an empty index list is refused."""
        with pytest.raises(DatasetError):
            TaskDataset(small_structures, "is2re").batch([])

    def test_graph_settings(self, small_structures):
        """Test cutoff and neighbor cap reach the cached graphs."""
        dataset = TaskDataset(small_structures, "is2re", cutoff=3.0, max_neighbors=1)
        assert all(np.all(g.in_degree() <= 1) for g in dataset.graphs)


class TestDataModule:
    """Test suite for DataModule."""

    def test_from_paths(self, temp_dir, small_structures):
        """Test train and val files load into their splits."""
        train = save_dataset(small_structures[:8], temp_dir / "train.jsonl")
        val = save_dataset(small_structures[8:], temp_dir / "val.jsonl")
        module = DataModule.from_paths("s2ef", train, val, batch_size=4)
        assert len(module.train) == 8 and len(module.val) == 4
        assert module.task is TaskKind.S2EF

    def test_val_defaults_to_train(self, small_dataset_file):
        """Test a missing val path reuses the train file."""
        module = DataModule.from_paths("is2re", small_dataset_file)
        assert len(module.val) == len(module.train)

    def test_from_devset(self, devset_cache):
        """Test the devset serves as both splits."""
        module = DataModule.from_devset("is2re", batch_size=16, cache_dir=devset_cache)
        assert len(module.train) == len(module.val) == 100
        assert module.batch_size == 16


class TestEvaluate:
    """Test suite for evaluate."""

    def test_is2re_mae(self, tiny_model, small_structures):
        """Test the energy MAE equals a direct computation."""
        normalizer = Normalizer.fit(small_structures)
        metrics = evaluate(tiny_model, small_structures, "is2re", normalizer, batch_size=5)
        dataset = TaskDataset(small_structures, "is2re")
        batch = dataset.batch(range(len(dataset)))
        expected = np.abs(normalizer.denormalize(tiny_model(batch.graph).data) - batch.energies).mean()
        assert metrics.energy_mae_ev == pytest.approx(expected, rel=1e-12)
        assert metrics.force_mae_ev_per_ang is None
        assert metrics.num_samples == len(small_structures)

    def test_batch_size_independent(self, tiny_model, small_structures):
        """Test metrics do not depend on the evaluation batch size."""
        normalizer = Normalizer(mean=-0.5, std=2.0)
        a = evaluate(tiny_model, small_structures, "s2ef", normalizer, batch_size=1)
        b = evaluate(tiny_model, small_structures, "s2ef", normalizer, batch_size=12)
        assert a.energy_mae_ev == pytest.approx(b.energy_mae_ev, rel=1e-10)
        assert a.force_mae_ev_per_ang == pytest.approx(b.force_mae_ev_per_ang, rel=1e-10)

    def test_model_untouched(self, tiny_model, small_structures):
        """Test evaluation leaves parameters unchanged."""
        before = tiny_model.state_dict()
        evaluate(tiny_model, small_structures, "s2ef", Normalizer())
        after = tiny_model.state_dict()
        assert all(np.array_equal(before[k], after[k]) for k in before)

    def test_empty_split(self, tiny_model):
        """Test evaluating nothing fails."""
        with pytest.raises(DatasetError):
            evaluate(tiny_model, [], "is2re", Normalizer())
