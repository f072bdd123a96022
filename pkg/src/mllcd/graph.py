"""Immutable multiplex graph and edge-list I/O.

Entities and layers are mapped to dense integer indices in first-seen order.
The same entity identifier denotes the same node in every layer, so coupling
edges between layer copies are implicit and never stored.
"""

from __future__ import annotations

import io
import logging
from collections.abc import Iterable, Mapping
from functools import cached_property
from typing import IO

import numpy as np

from . import kernels

logger = logging.getLogger(__name__)

FORMATS = ("canonical", "multinet")


class GraphError(ValueError):
    """Raised for invalid graph construction or unknown entities/layers."""


class ParseError(GraphError):
    """Raised when an edge list cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MultilayerGraph:
    """Undirected, unweighted multiplex graph.

    Build with :meth:`from_edges` or :func:`load_graph`. Instances are never
    mutated after construction and can be shared between detection runs.
    """

    def __init__(self, entities, layers, layer_adj, presence, dropped_duplicates=0):
        # Private; use from_edges(), which validates.
        self._entities: tuple[str, ...] = tuple(entities)
        self._layers: tuple[str, ...] = tuple(layers)
        self._entity_index = {e: i for i, e in enumerate(self._entities)}
        self._layer_index = {name: i for i, name in enumerate(self._layers)}
        # _adj[l][u] -> frozenset of neighbour indices in layer l
        self._adj: tuple[tuple[frozenset, ...], ...] = layer_adj
        self._presence: tuple[frozenset, ...] = presence
        self.dropped_duplicates = dropped_duplicates

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str, str]],
        presence: Mapping[str, Iterable[str]] | None = None,
        order: Iterable[str] = (),
    ) -> "MultilayerGraph":
        """Build a graph from ``(layer, u, v)`` triples.

        ``presence`` optionally registers entities in layers where they have
        no edges (isolated-in-layer nodes). ``order`` pre-assigns entity
        indices; otherwise indices follow first appearance.
        """
        entity_index: dict[str, int] = {}
        layer_index: dict[str, int] = {}
        edge_sets: list[set[tuple[int, int]]] = []
        present: list[set[int]] = []

        def ent(name):
            name = str(name)
            idx = entity_index.get(name)
            if idx is None:
                idx = entity_index[name] = len(entity_index)
                present.append(set())
            return idx

        def lay(name):
            name = str(name)
            idx = layer_index.get(name)
            if idx is None:
                idx = layer_index[name] = len(layer_index)
                edge_sets.append(set())
            return idx

        for name in order:
            ent(name)
        dropped = 0
        for layer, u, v in edges:
            if str(u) == str(v):
                raise GraphError(f"self-loop on {u!r} in layer {layer!r}")
            li, ui, vi = lay(layer), ent(u), ent(v)
            key = (ui, vi) if ui < vi else (vi, ui)
            if key in edge_sets[li]:
                dropped += 1
                continue
            edge_sets[li].add(key)
            present[ui].add(li)
            present[vi].add(li)

        for name, layer_names in (presence or {}).items():
            ei = ent(name)
            for layer in layer_names:
                present[ei].add(lay(layer))

        if not entity_index:
            raise GraphError("no edges")
        for name, ei in entity_index.items():
            if not present[ei]:
                raise GraphError(f"entity {name!r} is not present in any layer")

        n = len(entity_index)
        adj = []
        for li in range(len(layer_index)):
            nbrs: list[set[int]] = [set() for _ in range(n)]
            for a, b in edge_sets[li]:
                nbrs[a].add(b)
                nbrs[b].add(a)
            adj.append(tuple(frozenset(s) for s in nbrs))
        if dropped:
            logger.info("dropped %d duplicate edge(s)", dropped)
        return cls(
            entities=entity_index,
            layers=layer_index,
            layer_adj=tuple(adj),
            presence=tuple(frozenset(p) for p in present),
            dropped_duplicates=dropped,
        )

    # -- identifiers ------------------------------------------------------

    @property
    def entities(self) -> tuple[str, ...]:
        return self._entities

    @property
    def layers(self) -> tuple[str, ...]:
        return self._layers

    @property
    def n_entities(self) -> int:
        return len(self._entities)

    @property
    def n_layers(self) -> int:
        return len(self._layers)

    def entity_id(self, name) -> int:
        try:
            return self._entity_index[str(name)]
        except KeyError:
            raise GraphError(f"unknown entity {name!r}") from None

    def layer_id(self, name) -> int:
        try:
            return self._layer_index[str(name)]
        except KeyError:
            raise GraphError(f"unknown layer {name!r}") from None

    def has_entity(self, name) -> bool:
        return str(name) in self._entity_index

    # -- queries ----------------------------------------------------------

    def presence(self, u) -> frozenset[str]:
        """Layers in which entity ``u`` appears."""
        return frozenset(self._layers[i] for i in self._presence[self.entity_id(u)])

    def present_index(self, ui: int) -> frozenset[int]:
        return self._presence[ui]

    def layer_neighbors(self, u, layer) -> set[str]:
        ui, li = self.entity_id(u), self.layer_id(layer)
        return {self._entities[j] for j in self._adj[li][ui]}

    def multilayer_neighbors(self, u) -> set[str]:
        ui = self.entity_id(u)
        return {self._entities[j] for j in self._union_adj[ui]}

    def edges(self, layer=None) -> list[tuple[str, str, str]]:
        """Edges as ``(layer, u, v)`` with ``index(u) < index(v)``, layer-major."""
        layer_ids = range(self.n_layers) if layer is None else [self.layer_id(layer)]
        out = []
        for li in layer_ids:
            name = self._layers[li]
            for a, nbrs in enumerate(self._adj[li]):
                out.extend((name, self._entities[a], self._entities[b]) for b in sorted(nbrs) if b > a)
        return out

    def n_edges(self, layer=None) -> int:
        layer_ids = range(self.n_layers) if layer is None else [self.layer_id(layer)]
        return sum(len(s) for li in layer_ids for s in self._adj[li]) // 2

    def edge_set(self, layer) -> set[frozenset[str]]:
        return {frozenset((u, v)) for _, u, v in self.edges(layer)}

    # index-level views used by the engine and metrics
    def adj_index(self, li: int, ui: int) -> frozenset[int]:
        return self._adj[li][ui]

    @cached_property
    def _union_adj(self) -> tuple[frozenset[int], ...]:
        return tuple(
            frozenset().union(*(self._adj[li][u] for li in range(self.n_layers)))
            for u in range(self.n_entities)
        )

    def union_adj_index(self, ui: int) -> frozenset[int]:
        return self._union_adj[ui]

    # -- array views ------------------------------------------------------

    @cached_property
    def arrays(self) -> "GraphArrays":
        return GraphArrays.build(self)

    def __eq__(self, other):
        if not isinstance(other, MultilayerGraph):
            return NotImplemented
        return (
            set(self.entities) == set(other.entities)
            and set(self.layers) == set(other.layers)
            and all(self.edge_set(name) == other.edge_set(name) for name in self.layers)
            and all(self.presence(e) == other.presence(e) for e in self.entities)
        )

    __hash__ = object.__hash__

    def __repr__(self):
        return (
            f"MultilayerGraph(entities={self.n_entities}, layers={self.n_layers}, "
            f"edges={self.n_edges()})"
        )


class GraphArrays:
    """Flat CSR arrays over every (node, layer, neighbour) arc.

    Arcs of a node are sorted by (layer, neighbour) so a layer's neighbours form
    a contiguous sorted run. ``arc_sim`` holds the per-layer Jaccard similarity
    of each arc's endpoints.
    """

    __slots__ = ("n", "n_layers", "arc_ptr", "arc_nbr", "arc_layer", "arc_sim",
                 "union_ptr", "union_nbr")

    @classmethod
    def build(cls, g: MultilayerGraph) -> "GraphArrays":
        self = cls()
        n, L = g.n_entities, g.n_layers
        self.n, self.n_layers = n, L
        ptr = np.zeros(n + 1, dtype=np.int64)
        nbr, layer = [], []
        for u in range(n):
            count = 0
            for li in range(L):
                row = sorted(g.adj_index(li, u))
                nbr.extend(row)
                layer.extend([li] * len(row))
                count += len(row)
            ptr[u + 1] = ptr[u] + count
        self.arc_ptr = ptr
        self.arc_nbr = np.asarray(nbr, dtype=np.int64)
        self.arc_layer = np.asarray(layer, dtype=np.int64)
        self.arc_sim = kernels.arc_jaccard(self.arc_ptr, self.arc_nbr, self.arc_layer)

        uptr = np.zeros(n + 1, dtype=np.int64)
        unbr = []
        for u in range(n):
            row = sorted(g.union_adj_index(u))
            unbr.extend(row)
            uptr[u + 1] = uptr[u] + len(row)
        self.union_ptr = uptr
        self.union_nbr = np.asarray(unbr, dtype=np.int64)
        for name in cls.__slots__[2:]:
            getattr(self, name).setflags(write=False)
        return self


# -- edge-list I/O ------------------------------------------------------------


def _parse_lines(lines: Iterable[str], fmt: str):
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    weights_seen = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if fmt == "multinet":
            if line.startswith("*"):
                continue
            line = line.replace(",", " ")
        parts = line.split()
        if fmt == "multinet" and len(parts) == 4:
            try:
                float(parts[3])
            except ValueError:
                raise ParseError(f"non-numeric weight {parts[3]!r}", lineno) from None
            weights_seen += 1
            parts = parts[:3]
        if len(parts) != 3:
            raise ParseError(f"expected '<layer> <u> <v>', got {len(parts)} field(s)", lineno)
        layer, u, v = parts
        if u == v:
            raise ParseError(f"self-loop on {u!r}", lineno)
        yield layer, u, v
    if weights_seen:
        logger.warning("ignored weight column on %d edge line(s); graph is unweighted", weights_seen)


def load_graph(source: IO | str | bytes, format: str = "canonical") -> MultilayerGraph:
    """Parse an edge list from a text/byte stream (or a bytes/str payload)."""
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    else:
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        source = io.StringIO(data)
    try:
        return MultilayerGraph.from_edges(_parse_lines(source, format))
    except ParseError:
        raise
    except GraphError as exc:
        raise ParseError(str(exc)) from None


def read_graph(path, format: str = "canonical") -> MultilayerGraph:
    with open(path, "rb") as fh:
        return load_graph(fh, format)


def dumps(g: MultilayerGraph) -> str:
    """Serialize to canonical format: layer-major, entities in index order."""
    buf = io.StringIO()
    for layer, u, v in g.edges():
        buf.write(f"{layer} {u} {v}\n")
    return buf.getvalue()


def write_graph(g: MultilayerGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(g))


def layer_neighbors(g: MultilayerGraph, u, layer) -> set[str]:
    return g.layer_neighbors(u, layer)


def multilayer_neighbors(g: MultilayerGraph, u) -> set[str]:
    return g.multilayer_neighbors(u)
