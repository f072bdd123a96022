"""Per-layer Jaccard similarity and the layer-coverage biased similarity."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .graph import MultilayerGraph

if TYPE_CHECKING:
    from .engine import CommunityState

DISPERSIONS = ("population_stddev",)
SCOPES = ("covered", "all")


class BiasError(ValueError):
    pass


@dataclass(frozen=True)
class BiasConfig:
    """Bias factor ``beta`` plus the dispersion function settings.

    ``beta > 0`` rewards candidates that raise the spread of per-layer edge
    counts, ``beta < 0`` rewards candidates that even it out, ``0`` is
    unbiased. ``scope`` picks whether the dispersion runs over covered layers
    only (count >= 1, the default) or over every layer of the graph.
    """

    beta: float = 0.0
    dispersion: str = "population_stddev"
    scope: str = "covered"

    def __post_init__(self):
        beta = float(self.beta)
        if not (-1.0 <= beta <= 1.0):  # also rejects NaN
            raise BiasError(f"beta must lie in [-1, 1], got {self.beta!r}")
        object.__setattr__(self, "beta", beta + 0.0)  # -0.0 -> 0.0
        if self.dispersion not in DISPERSIONS:
            raise BiasError(f"unknown dispersion {self.dispersion!r}; expected one of {DISPERSIONS}")
        if self.scope not in SCOPES:
            raise BiasError(f"unknown dispersion scope {self.scope!r}; expected one of {SCOPES}")

    @property
    def covered_only(self) -> bool:
        return self.scope == "covered"


def jaccard_sim(g: MultilayerGraph, u, v, layer) -> float:
    """Jaccard coefficient of the neighbour sets of ``u`` and ``v`` in ``layer``.

    Zero when both neighbour sets are empty.
    """
    li = g.layer_id(layer)
    nu = g.adj_index(li, g.entity_id(u))
    nv = g.adj_index(li, g.entity_id(v))
    union = len(nu | nv)
    if union == 0:
        return 0.0
    return len(nu & nv) / union


def dispersion_f(edge_counts: Mapping | Iterable[int], scope: str = "covered") -> float:
    """Population standard deviation of per-layer edge counts.

    With ``scope="covered"`` only layers holding at least one edge take part;
    fewer than two participating layers gives 0.
    """
    values = edge_counts.values() if isinstance(edge_counts, Mapping) else edge_counts
    vals = np.asarray(list(values), dtype=np.float64)
    if scope == "covered":
        vals = vals[vals > 0]
    elif scope != "all":
        raise BiasError(f"unknown dispersion scope {scope!r}")
    if vals.size < 2:
        return 0.0
    return float(np.std(vals))


def edges_to_members(g: MultilayerGraph, u, members: Iterable) -> dict[str, int]:
    """Per-layer number of edges from ``u`` to any entity in ``members``."""
    ui = g.entity_id(u)
    idx = {g.entity_id(m) for m in members}
    return {
        name: len(g.adj_index(li, ui) & idx)
        for li, name in enumerate(g.layers)
    }


def diversification_factor(g: MultilayerGraph, u, state: "CommunityState", cfg: BiasConfig) -> float:
    """``beta * (f(C + u) - f(C))`` over per-layer internal edge counts."""
    before = {name: state.internal_edge_counts.get(name, 0) for name in g.layers}
    gained = edges_to_members(g, u, state.community)
    after = {name: before[name] + gained[name] for name in g.layers}
    return cfg.beta * (dispersion_f(after, cfg.scope) - dispersion_f(before, cfg.scope))


def bias_multiplier(bf: float) -> float:
    """Scaled logistic ``2 / (1 + e^-bf)``; 1 at ``bf = 0``, bounded in (0, 2)."""
    return 2.0 / (1.0 + math.exp(-bf))


def biased_sim(g: MultilayerGraph, u, v, layer, cfg: BiasConfig, state: "CommunityState") -> float:
    """Similarity of shell node ``u`` and boundary node ``v`` in ``layer``, scaled
    by how much adding ``u`` to the community shifts layer-count dispersion."""
    if u not in state.shell:
        raise BiasError(f"{u!r} is not in the shell")
    if v not in state.boundary:
        raise BiasError(f"{v!r} is not in the boundary")
    sim = jaccard_sim(g, u, v, layer)
    if sim == 0.0:
        return 0.0
    return bias_multiplier(diversification_factor(g, u, state, cfg)) * sim
