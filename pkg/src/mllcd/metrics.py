"""Community-level evaluation measures (size, layer coverage, structure)."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .graph import MultilayerGraph
from .similarity import dispersion_f


@dataclass
class CommunityMetrics:
    size: int
    layers_covered: int
    per_layer_edges: dict[str, int]
    edge_count_stddev: float
    per_layer_avg_path_length: dict[str, float]
    per_layer_clustering: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "layers_covered": self.layers_covered,
            "per_layer_edges": dict(self.per_layer_edges),
            "edge_count_stddev": self.edge_count_stddev,
            "per_layer_avg_path_length": dict(self.per_layer_avg_path_length),
            "per_layer_clustering": dict(self.per_layer_clustering),
        }


def induced_layer_subgraph(g: MultilayerGraph, community: Iterable, layer) -> nx.Graph:
    """Community members present in ``layer`` plus the layer's edges among them."""
    li = g.layer_id(layer)
    idx = sorted({g.entity_id(c) for c in community})
    members = [i for i in idx if li in g.present_index(i)]
    sub = nx.Graph()
    sub.add_nodes_from(members)
    keep = set(members)
    for u in members:
        sub.add_edges_from((u, v) for v in g.adj_index(li, u) if v > u and v in keep)
    return sub


def avg_path_length(sub: nx.Graph) -> float:
    """Mean shortest-path length over the largest connected component.

    Ties between equally large components go to the one holding the lowest
    node id. Components with fewer than two nodes give 0.
    """
    if sub.number_of_nodes() < 2:
        return 0.0
    comps = sorted(nx.connected_components(sub), key=lambda c: (-len(c), min(c)))
    largest = comps[0]
    if len(largest) < 2:
        return 0.0
    return float(nx.average_shortest_path_length(sub.subgraph(largest)))


def community_metrics(g: MultilayerGraph, community: Iterable) -> CommunityMetrics:
    community = list(dict.fromkeys(str(c) for c in community))
    if not community:
        raise ValueError("community must be nonempty")
    for c in community:
        g.entity_id(c)
    edges, paths, clustering = {}, {}, {}
    for layer in g.layers:
        sub = induced_layer_subgraph(g, community, layer)
        edges[layer] = sub.number_of_edges()
        paths[layer] = avg_path_length(sub)
        clustering[layer] = float(nx.average_clustering(sub)) if sub.number_of_nodes() else 0.0
    return CommunityMetrics(
        size=len(community),
        layers_covered=sum(1 for c in edges.values() if c > 0),
        per_layer_edges=edges,
        edge_count_stddev=dispersion_f(edges),
        per_layer_avg_path_length=paths,
        per_layer_clustering=clustering,
    )


def solution_jaccard(c1: Iterable, c2: Iterable) -> float:
    """Node-set Jaccard similarity between two communities."""
    a, b = set(c1), set(c2)
    if not a and not b:
        raise ValueError("both communities are empty")
    return len(a & b) / len(a | b)


def size_stats(results: Sequence) -> tuple[float, float]:
    """Mean and population std dev of community sizes.

    Accepts detection results (anything with ``.size``) or plain integers.
    """
    if len(results) == 0:
        raise ValueError("no results")
    sizes = np.array([r if isinstance(r, (int, np.integer)) else r.size for r in results], dtype=float)
    return float(sizes.mean()), float(sizes.std())
