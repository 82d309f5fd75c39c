#!/usr/bin/env python3
"""
Unit tests for the training objective and its sharded form.
"""

import numpy as np
import pytest

from src.tasks import Normalizer, TaskDataset, TaskKind, compute_objective, parameter_gradients
from src.tensor import Tensor, finite_difference
from src.trainer.strategies import shard_indices


@pytest.fixture(params=[TaskKind.IS2RE, TaskKind.S2EF], ids=lambda t: t.value)
def task(request):
    return request.param


@pytest.fixture
def dataset(small_structures, task):
    return TaskDataset(small_structures[:7], task)


@pytest.fixture
def normalizer(small_structures):
    return Normalizer.fit(small_structures)


def loss_value(model, params, batch, task, normalizer):
    tensors = {k: Tensor(v) for k, v in params.items()}
    return compute_objective(model, tensors, batch, task, normalizer).loss_value


class TestComputeObjective:
    """Test suite for compute_objective."""

    def test_metrics_in_ev(self, tiny_model, dataset, task, normalizer):
        """Test error sums are reported in de-normalized units."""
        batch = dataset.batch(range(len(dataset)))
        result = compute_objective(tiny_model, tiny_model.params, batch, task, normalizer)
        energies = normalizer.denormalize(tiny_model(batch.graph).data)
        assert result.energy_abs_sum == pytest.approx(np.abs(energies - batch.energies).sum())
        assert result.num_energies == len(dataset)
        if task.uses_forces:
            assert result.num_force_components == 3 * batch.num_atoms
        else:
            assert result.num_force_components == 0

    def test_energy_scale(self, tiny_model, small_structures, normalizer):
        """Test energy_scale multiplies the IS2RE loss."""
        batch = TaskDataset(small_structures[:3], "is2re").batch([0, 1, 2])
        base = compute_objective(tiny_model, tiny_model.params, batch, "is2re", normalizer)
        scaled = compute_objective(tiny_model, tiny_model.params, batch, "is2re", normalizer, energy_scale=2.5)
        assert scaled.loss_value == pytest.approx(2.5 * base.loss_value)


class TestParameterGradients:
    """Test suite for parameter_gradients."""

    def test_matches_finite_difference(self, tiny_model, dataset, task, normalizer):
        """Test loss gradients (through forces for S2EF) match central differences."""
        batch = dataset.batch([0, 1, 2])
        params = tiny_model.state_dict()
        grads, result = parameter_gradients(tiny_model, params, batch, task, normalizer)
        assert result.loss_value == pytest.approx(loss_value(tiny_model, params, batch, task, normalizer))

        for name in ("layers.0.edge_mlp.0.weight", "layers.1.pos_mlp.0.weight", "output.0.weight"):
            def f(value, name=name):
                trial = dict(params)
                trial[name] = value.data
                return loss_value(tiny_model, trial, batch, task, normalizer)

            numeric = finite_difference(f, params[name], h=1e-6).data
            np.testing.assert_allclose(grads[name], numeric, rtol=1e-4, atol=1e-7)

    def test_gradient_keys(self, tiny_model, dataset, task, normalizer):
        """Test gradients come back for every parameter with matching shapes."""
        params = tiny_model.state_dict()
        grads, _ = parameter_gradients(tiny_model, params, dataset.batch([0]), task, normalizer)
        assert list(grads) == list(params)
        assert all(grads[k].shape == params[k].shape for k in params)

    @pytest.mark.parametrize("world_size", [2, 3, 4])
    def test_sharded_mean_equals_full_batch(self, tiny_model, dataset, task, normalizer, world_size):
        """Test the mean of scaled shard losses and gradients is the full-batch result."""
        indices = list(range(len(dataset)))
        params = tiny_model.state_dict()
        full_grads, full = parameter_gradients(tiny_model, params, dataset.batch(indices), task, normalizer)

        total_atoms = sum(s.num_atoms for s in dataset.structures)
        losses, grads = [], []
        for shard in shard_indices(indices, world_size):
            shard_atoms = sum(dataset.structures[i].num_atoms for i in shard)
            g, result = parameter_gradients(
                tiny_model,
                params,
                dataset.batch(shard),
                task,
                normalizer,
                energy_scale=world_size * len(shard) / len(indices),
                force_scale=world_size * shard_atoms / total_atoms,
            )
            losses.append(result.loss_value)
            grads.append(g)

        assert np.mean(losses) == pytest.approx(full.loss_value, rel=1e-12)
        for name in params:
            np.testing.assert_allclose(
                np.mean([g[name] for g in grads], axis=0), full_grads[name], rtol=1e-8, atol=1e-12
            )

    def test_params_untouched(self, tiny_model, dataset, task, normalizer):
        """Test computing gradients leaves the parameter arrays alone."""
        params = tiny_model.state_dict()
        before = {k: v.copy() for k, v in params.items()}
        parameter_gradients(tiny_model, params, dataset.batch([0, 1]), task, normalizer)
        assert all(np.array_equal(params[k], before[k]) for k in params)
