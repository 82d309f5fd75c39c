#!/usr/bin/env python3
"""
Unit tests for radius graphs, batching and readout.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.exceptions import GraphError, ValidationError
from src.graph import FeatureGraph, batch_graphs, radius_graph, readout_sum, set_feature
from src.structures import AtomicStructure, generate_synthetic


def brute_force_edges(structure, cutoff, max_neighbors):
    """Reference neighbor list: sorted (src, dst) pairs."""
    pos = structure.positions
    edges = []
    for i in range(structure.num_atoms):
        candidates = []
        for j in range(structure.num_atoms):
            d = float(np.linalg.norm(pos[i] - pos[j]))
            if j != i and d <= cutoff:
                candidates.append((d, j))
        candidates.sort()
        if max_neighbors is not None:
            candidates = candidates[:max_neighbors]
        edges.extend((j, i) for _, j in candidates)
    return sorted(edges)


class TestRadiusGraph:
    """Test suite for radius_graph."""

    @pytest.mark.parametrize("cutoff, max_neighbors", [(6.0, 50), (4.0, None), (5.0, 3), (3.0, 0)])
    def test_matches_brute_force(self, cutoff, max_neighbors):
        """Test edges equal a brute-force neighbor search."""
        for s in generate_synthetic(6, 6, 14, seed=21):
            graph = radius_graph(s, cutoff, max_neighbors)
            assert sorted(zip(graph.src.tolist(), graph.dst.tolist())) == brute_force_edges(
                s, cutoff, max_neighbors
            )

    def test_edge_ordering_and_distances(self, small_structures):
        """Test edges are grouped by destination and sorted by distance."""
        graph = radius_graph(small_structures[0], cutoff=8.0)
        d = graph.edata["distance"].data[:, 0]
        pos = small_structures[0].positions
        np.testing.assert_allclose(d, np.linalg.norm(pos[graph.src] - pos[graph.dst], axis=1))
        assert np.all(np.diff(graph.dst) >= 0)
        for node in range(graph.num_nodes):
            assert np.all(np.diff(d[graph.dst == node]) >= 0)
        assert d.max() <= 8.0

    def test_node_features(self, water_like):
        """Test the graph carries atomic numbers and positions."""
        graph = radius_graph(water_like)
        np.testing.assert_array_equal(graph.ndata["atomic_numbers"].data, [8, 1, 1])
        np.testing.assert_array_equal(graph.ndata["pos"].data, water_like.positions)
        assert graph.edata["distance"].shape == (6, 1)

    def test_isolated_atom(self):
        """Test a single atom gives a graph with no edges."""
        graph = radius_graph(AtomicStructure("one", [6], [[0.0, 0.0, 0.0]], [2]))
        assert graph.num_edges == 0
        assert graph.edata["distance"].shape == (0, 1)

    def test_neighbor_cap_keeps_nearest(self):
        """Test the cap keeps the closest neighbors, ties broken by index."""
        positions = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [-2.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        s = AtomicStructure("line", [1, 1, 1, 1], positions, [0, 0, 1, 2])
        graph = radius_graph(s, cutoff=6.0, max_neighbors=2)
        into_zero = graph.src[graph.dst == 0].tolist()
        assert into_zero == [3, 1]

    @pytest.mark.parametrize("kwargs", [{"cutoff": 0.0}, {"cutoff": -1.0}, {"max_neighbors": -1}])
    def test_bad_arguments(self, water_like, kwargs):
        """Test non-positive cutoffs and negative caps are rejected."""
        with pytest.raises(ValidationError):
            radius_graph(water_like, **kwargs)


class TestBatching:
    """Test suite for batch_graphs and readout_sum."""

    def test_offsets_and_counts(self, small_structures):
        """Test batched indices are offset and counts recorded."""
        graphs = [radius_graph(s) for s in small_structures[:4]]
        batch = batch_graphs(graphs)
        assert batch.num_graphs == 4
        assert batch.num_nodes == sum(g.num_nodes for g in graphs)
        assert batch.num_edges == sum(g.num_edges for g in graphs)
        np.testing.assert_array_equal(batch.batch_num_nodes, [g.num_nodes for g in graphs])
        np.testing.assert_array_equal(batch.batch_num_edges, [g.num_edges for g in graphs])
        offset = graphs[0].num_nodes
        np.testing.assert_array_equal(
            batch.src[graphs[0].num_edges : graphs[0].num_edges + graphs[1].num_edges],
            graphs[1].src + offset,
        )

    def test_unbatch_restores_members(self, small_structures):
        """Test unbatch inverts batch_graphs."""
        graphs = [radius_graph(s) for s in small_structures[:5]]
        for original, member in zip(graphs, batch_graphs(graphs).unbatch()):
            assert member.num_nodes == original.num_nodes
            np.testing.assert_array_equal(member.src, original.src)
            np.testing.assert_array_equal(member.dst, original.dst)
            for name in original.ndata:
                np.testing.assert_array_equal(member.ndata[name].data, original.ndata[name].data)
            np.testing.assert_array_equal(member.edata["distance"].data, original.edata["distance"].data)

    def test_nested_batches(self, small_structures):
        """Test batching batches keeps every member graph."""
        graphs = [radius_graph(s) for s in small_structures[:4]]
        nested = batch_graphs([batch_graphs(graphs[:2]), batch_graphs(graphs[2:])])
        flat = batch_graphs(graphs)
        assert nested.num_graphs == 4
        np.testing.assert_array_equal(nested.graph_ids, flat.graph_ids)
        np.testing.assert_array_equal(nested.src, flat.src)

    def test_schema_mismatch(self, small_structures):
        """Test graphs with different features cannot be batched."""
        a = radius_graph(small_structures[0])
        b = set_feature(radius_graph(small_structures[1]), "node", "extra", np.zeros(small_structures[1].num_atoms))
        with pytest.raises(GraphError):
            batch_graphs([a, b])

    def test_empty_batch(self):
        """Test batching nothing fails."""
        with pytest.raises(GraphError):
            batch_graphs([])

    def test_readout_sum(self):
        """Test readout sums node rows per member graph."""
        g1 = FeatureGraph(num_nodes=2, src=[], dst=[], ndata={"h": [[1.0, 2.0], [3.0, 4.0]]})
        g2 = FeatureGraph(num_nodes=1, src=[], dst=[], ndata={"h": [[10.0, 20.0]]})
        out = readout_sum(batch_graphs([g1, g2]), "h")
        np.testing.assert_array_equal(out.data, [[4.0, 6.0], [10.0, 20.0]])

    def test_readout_vector_feature(self):
        """Test a 1-d node feature reads out as a column."""
        g = FeatureGraph(num_nodes=3, src=[], dst=[], ndata={"e": [1.0, 2.0, 3.0]})
        np.testing.assert_array_equal(readout_sum(g, "e").data, [[6.0]])


def random_structure(seed, num_atoms):
    rng = np.random.default_rng(seed)
    return AtomicStructure(
        id=f"r-{seed}",
        atomic_numbers=rng.integers(1, 30, size=num_atoms),
        positions=rng.uniform(0.0, 6.0, size=(num_atoms, 3)),
        tags=rng.integers(0, 3, size=num_atoms),
    )


class TestRadiusGraphPermutation:
    """Relabelling atoms relabels the neighbor list and nothing else."""

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(0, 2**16),
        num_atoms=st.integers(2, 12),
        max_neighbors=st.sampled_from([None, 1, 3]),
        data=st.data(),
    )
    def test_edges_follow_permutation(self, seed, num_atoms, max_neighbors, data):
        structure = random_structure(seed, num_atoms)
        perm = np.array(data.draw(st.permutations(range(num_atoms))))
        permuted = AtomicStructure(
            id=structure.id,
            atomic_numbers=structure.atomic_numbers[perm],
            positions=structure.positions[perm],
            tags=structure.tags[perm],
        )

        base = radius_graph(structure, cutoff=3.0, max_neighbors=max_neighbors)
        moved = radius_graph(permuted, cutoff=3.0, max_neighbors=max_neighbors)
        base_edges = {
            (int(s), int(d)): float(length)
            for s, d, length in zip(base.src, base.dst, base.edata["distance"].data[:, 0])
        }
        moved_edges = {
            (int(perm[s]), int(perm[d])): float(length)
            for s, d, length in zip(moved.src, moved.dst, moved.edata["distance"].data[:, 0])
        }
        assert moved_edges.keys() == base_edges.keys()
        for edge, length in base_edges.items():
            assert moved_edges[edge] == pytest.approx(length, rel=1e-12)
        np.testing.assert_array_equal(moved.in_degree(), base.in_degree()[perm])


OPERATIONS = st.one_of(
    st.tuples(st.just("set"), st.sampled_from(["node", "edge"]), st.sampled_from(["h", "m", "x"]), st.integers(1, 4)),
    st.tuples(st.just("batch"), st.integers(1, 3)),
)


class TestFeatureGraphInterleavings:
    """Any mix of set_feature and batch_graphs keeps the stores consistent."""

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**16), operations=st.lists(OPERATIONS, max_size=6))
    def test_widths_and_counts(self, seed, operations):
        rng = np.random.default_rng(seed)
        graph = radius_graph(random_structure(seed, int(rng.integers(2, 7))), cutoff=3.0)
        widths = {("node", "pos"): 3, ("node", "atomic_numbers"): None, ("edge", "distance"): 1}
        member_nodes = [graph.num_nodes]
        member_edges = [graph.num_edges]

        for operation in operations:
            if operation[0] == "set":
                _, domain, name, width = operation
                rows = graph.num_nodes if domain == "node" else graph.num_edges
                graph = set_feature(graph, domain, name, rng.normal(size=(rows, width)))
                widths[(domain, name)] = width
            else:
                copies = operation[1]
                graph = batch_graphs([graph] * copies)
                member_nodes *= copies
                member_edges *= copies

            assert graph.num_graphs == len(member_nodes)
            np.testing.assert_array_equal(graph.batch_num_nodes, member_nodes)
            np.testing.assert_array_equal(graph.batch_num_edges, member_edges)
            for (domain, name), width in widths.items():
                value = graph.feature(domain, name)
                assert value.shape[0] == (graph.num_nodes if domain == "node" else graph.num_edges)
                if width is not None:
                    assert value.shape[1:] == (width,)

        members = graph.unbatch()
        assert [g.num_nodes for g in members] == member_nodes
        assert [g.num_edges for g in members] == member_edges
