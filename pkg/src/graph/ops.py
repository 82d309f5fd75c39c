#!/usr/bin/env python3
"""Radius-graph construction, batching and per-graph readout."""

from typing import Optional, Sequence

import numpy as np

from src.exceptions import GraphError, ValidationError
from src.structures import AtomicStructure
from src.tensor import Tensor
from src.tensor import functional as F

from .feature_graph import FeatureGraph

DEFAULT_CUTOFF = 6.0  # Å
DEFAULT_MAX_NEIGHBORS = 50


def radius_graph(
    structure: AtomicStructure,
    cutoff: float = DEFAULT_CUTOFF,
    max_neighbors: Optional[int] = DEFAULT_MAX_NEIGHBORS,
) -> FeatureGraph:
    """
    Directed neighbor graph of ``structure``.

    Edge j -> i exists iff ``0 < |x_i - x_j| <= cutoff``, keeping the
    ``max_neighbors`` nearest j per i (ties go to the lower index).
    ``max_neighbors=None`` keeps all. No periodic images are considered.
    Edges are ordered by destination, then by distance.
    """
    if cutoff <= 0:
        raise ValidationError("cutoff must be positive", {"cutoff": cutoff})
    if max_neighbors is not None and max_neighbors < 0:
        raise ValidationError("max_neighbors must be non-negative", {"max_neighbors": max_neighbors})

    positions = structure.positions
    n = structure.num_atoms
    deltas = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((deltas**2).sum(axis=-1))

    src, dst, lengths = [], [], []
    candidates = np.arange(n)
    for i in range(n):
        row = dist[i]
        keep = (row > 0) & (row <= cutoff)
        neighbors = candidates[keep]
        # lexsort sorts by the last key first
        neighbors = neighbors[np.lexsort((neighbors, row[neighbors]))]
        if max_neighbors is not None:
            neighbors = neighbors[:max_neighbors]
        src.extend(neighbors.tolist())
        dst.extend([i] * len(neighbors))
        lengths.extend(row[neighbors].tolist())

    return FeatureGraph(
        num_nodes=n,
        src=src,
        dst=dst,
        ndata={
            "atomic_numbers": Tensor(structure.atomic_numbers),
            "pos": Tensor(positions),
        },
        edata={"distance": Tensor(np.asarray(lengths, dtype=np.float64).reshape(-1, 1))},
    )


def _schema(graph: FeatureGraph):
    return (
        {name: value.shape[1:] for name, value in graph.ndata.items()},
        {name: value.shape[1:] for name, value in graph.edata.items()},
    )


def batch_graphs(graphs: Sequence[FeatureGraph]) -> FeatureGraph:
    """
    Disjoint union of ``graphs``.

    Node indices are offset cumulatively and features concatenated along
    the leading axis. Already-batched inputs keep their member graphs.
    """
    if not graphs:
        raise GraphError("Cannot batch an empty list of graphs")
    schema = _schema(graphs[0])
    for k, graph in enumerate(graphs[1:], start=1):
        if _schema(graph) != schema:
            raise GraphError(
                "Graphs in a batch must share feature names and trailing shapes",
                {"index": k, "expected": schema, "given": _schema(graph)},
            )

    src, dst, graph_ids = [], [], []
    node_offset = graph_offset = 0
    for graph in graphs:
        src.append(graph.src + node_offset)
        dst.append(graph.dst + node_offset)
        graph_ids.append(graph.graph_ids + graph_offset)
        node_offset += graph.num_nodes
        graph_offset += graph.num_graphs

    def stack(store: str):
        names = getattr(graphs[0], store)
        return {name: F.concat([getattr(g, store)[name] for g in graphs], axis=0) for name in names}

    return FeatureGraph(
        num_nodes=node_offset,
        src=np.concatenate(src),
        dst=np.concatenate(dst),
        ndata=stack("ndata"),
        edata=stack("edata"),
        graph_ids=np.concatenate(graph_ids),
        num_graphs=graph_offset,
    )


def readout_sum(graph: FeatureGraph, name: str) -> Tensor:
    """Per-graph sum of node feature ``name``: shape ``(num_graphs, width)``."""
    value = graph.feature("node", name)
    if value.ndim == 1:
        value = F.reshape(value, (value.shape[0], 1))
    return F.scatter_add_rows(value, graph.graph_ids, graph.num_graphs)


__all__ = ["radius_graph", "batch_graphs", "readout_sum", "DEFAULT_CUTOFF", "DEFAULT_MAX_NEIGHBORS"]
