#!/usr/bin/env python3
"""
FeatureGraph: nodes, directed edges and name-keyed feature stores.

Every node feature has leading dimension ``num_nodes`` and every edge
feature leading dimension ``num_edges``. The check runs on every
construction, so no FeatureGraph can hold a mis-sized feature.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import List, Mapping, Optional

import numpy as np

from src.exceptions import FeatureDimensionError, GraphError, MissingFeatureError
from src.tensor import Tensor, as_tensor
from src.tensor import functional as F

NODE = "node"
EDGE = "edge"
DOMAINS = (NODE, EDGE)


def _index_array(values) -> np.ndarray:
    array = np.asarray(values if values is not None else [], dtype=np.int64).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FeatureGraph:
    """
    A (possibly batched) directed graph with dictionary-style feature access.

    Edge ``k`` runs from ``src[k]`` to ``dst[k]``. Batched graphs carry
    ``graph_ids`` (non-decreasing, within ``[0, num_graphs)``); per-graph node
    and edge counts are derived from them.
    """

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    ndata: Mapping[str, Tensor] = field(default_factory=dict)
    edata: Mapping[str, Tensor] = field(default_factory=dict)
    graph_ids: Optional[np.ndarray] = None
    num_graphs: int = 1

    def __post_init__(self):
        n = int(self.num_nodes)
        if n < 0:
            raise GraphError("num_nodes must be non-negative", {"num_nodes": n})
        src = _index_array(self.src)
        dst = _index_array(self.dst)
        if src.shape != dst.shape:
            raise GraphError("src and dst must have the same length", {"src": src.size, "dst": dst.size})
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise GraphError("Edge endpoint out of range", {"num_nodes": n})

        ndata = {name: as_tensor(v) for name, v in dict(self.ndata).items()}
        edata = {name: as_tensor(v) for name, v in dict(self.edata).items()}
        for name, value in ndata.items():
            _check_leading(NODE, name, value, n)
        for name, value in edata.items():
            _check_leading(EDGE, name, value, src.size)

        num_graphs = int(self.num_graphs)
        if self.graph_ids is None:
            graph_ids = np.zeros(n, dtype=np.int64)
            graph_ids.setflags(write=False)
            num_graphs = 1
        else:
            graph_ids = _index_array(self.graph_ids)
            if graph_ids.size != n:
                raise FeatureDimensionError("graph_ids", expected=n, given=graph_ids.size)
            if n and (np.any(np.diff(graph_ids) < 0) or graph_ids[0] < 0):
                raise GraphError("graph_ids must be non-decreasing")
            if num_graphs < 1 or (n and graph_ids[-1] >= num_graphs):
                raise GraphError("graph_ids exceed num_graphs", {"num_graphs": num_graphs})

        for name, value in (
            ("num_nodes", n),
            ("src", src),
            ("dst", dst),
            ("ndata", MappingProxyType(ndata)),
            ("edata", MappingProxyType(edata)),
            ("graph_ids", graph_ids),
            ("num_graphs", num_graphs),
        ):
            object.__setattr__(self, name, value)

    @property
    def num_edges(self) -> int:
        return int(self.src.size)

    @property
    def batch_num_nodes(self) -> np.ndarray:
        return np.bincount(self.graph_ids, minlength=self.num_graphs).astype(np.int64)

    @property
    def batch_num_edges(self) -> np.ndarray:
        """Edges per member graph, attributed by destination node."""
        return np.bincount(self.graph_ids[self.dst], minlength=self.num_graphs).astype(np.int64)

    def in_degree(self) -> np.ndarray:
        """Number of incoming edges per node."""
        return np.bincount(self.dst, minlength=self.num_nodes).astype(np.int64)

    def feature(self, domain: str, name: str) -> Tensor:
        store = self._store(domain)
        if name not in store:
            raise MissingFeatureError(
                f"No {domain} feature '{name}'", {"available": ", ".join(sorted(store)) or "none"}
            )
        return store[name]

    def _store(self, domain: str) -> Mapping[str, Tensor]:
        if domain == NODE:
            return self.ndata
        if domain == EDGE:
            return self.edata
        raise GraphError(f"Unknown feature domain '{domain}'", {"valid": ", ".join(DOMAINS)})

    def replace(self, **changes) -> "FeatureGraph":
        fields = {
            "num_nodes": self.num_nodes,
            "src": self.src,
            "dst": self.dst,
            "ndata": dict(self.ndata),
            "edata": dict(self.edata),
            "graph_ids": self.graph_ids,
            "num_graphs": self.num_graphs,
        }
        fields.update(changes)
        return FeatureGraph(**fields)

    def unbatch(self) -> List["FeatureGraph"]:
        """Split a batched graph back into its members (inverse of ``batch_graphs``)."""
        graphs = []
        node_start = edge_start = 0
        for count_n, count_e in zip(self.batch_num_nodes, self.batch_num_edges):
            node_stop, edge_stop = node_start + int(count_n), edge_start + int(count_e)
            graphs.append(
                FeatureGraph(
                    num_nodes=int(count_n),
                    src=self.src[edge_start:edge_stop] - node_start,
                    dst=self.dst[edge_start:edge_stop] - node_start,
                    ndata={k: F.slice_axis(v, 0, node_start, node_stop) for k, v in self.ndata.items()},
                    edata={k: F.slice_axis(v, 0, edge_start, edge_stop) for k, v in self.edata.items()},
                )
            )
            node_start, edge_start = node_stop, edge_stop
        return graphs

    def __repr__(self) -> str:
        return (
            f"FeatureGraph(num_nodes={self.num_nodes}, num_edges={self.num_edges}, "
            f"num_graphs={self.num_graphs}, ndata={sorted(self.ndata)}, edata={sorted(self.edata)})"
        )


def _check_leading(domain: str, name: str, value: Tensor, expected: int):
    given = value.shape[0] if value.ndim else None
    if given != expected:
        raise FeatureDimensionError(
            f"{domain} feature '{name}'", expected=expected, given=value.shape
        )


def set_feature(graph: FeatureGraph, domain: str, name: str, value) -> FeatureGraph:
    """Return ``graph`` with ``value`` stored under ``name`` in the node or edge store."""
    store = dict(graph._store(domain))
    store[name] = as_tensor(value)
    key = "ndata" if domain == NODE else "edata"
    return graph.replace(**{key: store})


__all__ = ["FeatureGraph", "set_feature", "NODE", "EDGE", "DOMAINS"]
