#!/usr/bin/env python3
"""
adsorbkit graph

Feature graphs with enforced node/edge feature sizes, radius-graph
construction, batching and sum readout.
"""

from .feature_graph import DOMAINS, EDGE, NODE, FeatureGraph, set_feature
from .ops import DEFAULT_CUTOFF, DEFAULT_MAX_NEIGHBORS, batch_graphs, radius_graph, readout_sum

__all__ = [
    "FeatureGraph",
    "set_feature",
    "NODE",
    "EDGE",
    "DOMAINS",
    "radius_graph",
    "batch_graphs",
    "readout_sum",
    "DEFAULT_CUTOFF",
    "DEFAULT_MAX_NEIGHBORS",
]
