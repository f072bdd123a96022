"""Greedy seed expansion maximizing the internal/external similarity ratio.

The loop keeps array state for the community ``C``, the shell ``S`` (outside
nodes adjacent to ``C`` that were never rejected) and, for every outside node,
its similarity mass and per-layer edge counts towards ``C``. Candidate scores
come from :func:`mllcd.kernels.evaluate_candidates`; the definition-level
functions :func:`lc_internal` and :func:`lc_external` are the slow path used by
``verify=True``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .graph import MultilayerGraph
from .similarity import BiasConfig, bias_multiplier, diversification_factor, jaccard_sim

TIE_TOL = 1e-12
VERIFY_TOL = 1e-9


class DetectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CommunityState:
    """Snapshot of a detection run (entity names, not indices)."""

    seed: str
    community: frozenset
    shell: frozenset
    boundary: frozenset
    internal_edge_counts: Mapping[str, int]
    rejected: frozenset = frozenset()

    @classmethod
    def build(cls, g: MultilayerGraph, seed, members: Iterable = (), rejected: Iterable = ()) -> "CommunityState":
        """State for community ``{seed} | members`` with ``rejected`` kept out of the shell."""
        seed = str(seed)
        g.entity_id(seed)
        community = frozenset({seed, *map(str, members)})
        rejected = frozenset(map(str, rejected)) - community
        for name in community | rejected:
            g.entity_id(name)
        shell = frozenset().union(*(g.multilayer_neighbors(c) for c in community)) - community - rejected
        boundary = frozenset(c for c in community if g.multilayer_neighbors(c) & shell)
        return cls(seed, community, shell, boundary, _internal_counts(g, community), rejected)

    def check(self, g: MultilayerGraph) -> None:
        """Raise AssertionError unless this state agrees with a from-scratch rebuild."""
        assert self.seed in self.community, "seed left the community"
        assert not (self.shell & self.community), "shell overlaps community"
        assert self.boundary <= self.community, "boundary outside community"
        fresh = CommunityState.build(g, self.seed, self.community, self.rejected)
        assert self.shell == fresh.shell, "shell differs from neighbourhood of community"
        assert self.boundary == fresh.boundary, "boundary differs from definition"
        counts = {k: v for k, v in self.internal_edge_counts.items() if v}
        assert counts == {k: v for k, v in fresh.internal_edge_counts.items() if v}, "edge counts drifted"


def _internal_counts(g: MultilayerGraph, community: Iterable[str]) -> dict[str, int]:
    idx = {g.entity_id(c) for c in community}
    return {
        name: sum(len(g.adj_index(li, u) & idx) for u in idx) // 2
        for li, name in enumerate(g.layers)
    }


class Objective:
    """Ratio ``internal / external`` with an explicit infinite case.

    When ``external == 0`` the value is infinite: it beats every finite value,
    and two infinite values are ordered by ``internal``.
    """

    __slots__ = ("internal", "external")

    def __init__(self, internal: float, external: float):
        self.internal = float(internal)
        self.external = float(external)

    @property
    def infinite(self) -> bool:
        return self.external == 0.0

    @property
    def value(self) -> float:
        return math.inf if self.infinite else self.internal / self.external

    def key(self):
        return (1, self.internal) if self.infinite else (0, self.value)

    def improves_on(self, other: "Objective", tol: float = 0.0) -> bool:
        """Strictly better than ``other`` by more than ``tol``."""
        if self.infinite != other.infinite:
            return self.infinite
        if self.infinite:
            return self.internal > other.internal + tol
        return self.value > other.value + tol

    def __lt__(self, other):
        return self.key() < other.key()

    def __le__(self, other):
        return self.key() <= other.key()

    def __gt__(self, other):
        return self.key() > other.key()

    def __ge__(self, other):
        return self.key() >= other.key()

    def __eq__(self, other):
        if not isinstance(other, Objective):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Objective(value={self.value!r}, internal={self.internal!r}, external={self.external!r})"


class TraceStep(NamedTuple):
    entity: str
    lc: float
    shell_size: int


@dataclass
class DetectionResult:
    seed: str
    beta: float | None
    community: tuple[str, ...]
    lc: float
    lc_int: float
    lc_ext: float
    per_layer_edges: dict[str, int]
    trace: list[TraceStep] = field(default_factory=list)
    rejected: int = 0
    iterations: int = 0
    termination: str = "converged"

    @property
    def size(self) -> int:
        return len(self.community)

    @property
    def layers_covered(self) -> int:
        return sum(1 for c in self.per_layer_edges.values() if c > 0)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "beta": self.beta,
            "community": list(self.community),
            "size": self.size,
            "lc": self.lc,
            "lc_int": self.lc_int,
            "lc_ext": self.lc_ext,
            "per_layer_edges": dict(self.per_layer_edges),
            "trace": [{"entity": t.entity, "lc": t.lc, "shell_size": t.shell_size} for t in self.trace],
            "rejected": self.rejected,
            "iterations": self.iterations,
            "termination": self.termination,
        }


# -- definition-level objective ---------------------------------------------------


def lc_internal(g: MultilayerGraph, state: CommunityState, cfg: BiasConfig | None = None) -> float:
    """Average unbiased similarity mass of internal edges per community member.

    Every undirected internal edge is counted from both endpoints. ``cfg`` is
    accepted for symmetry with :func:`lc_external`; the bias never applies here.
    """
    total = 0.0
    for v in state.community:
        for layer in g.layers:
            for u in g.layer_neighbors(v, layer) & state.community:
                total += jaccard_sim(g, u, v, layer)
    return total / len(state.community)


def lc_external(g: MultilayerGraph, state: CommunityState, cfg: BiasConfig | None = None) -> float:
    """Average (biased) similarity mass of boundary-to-shell edges per boundary node."""
    if not state.boundary or not state.shell:
        return 0.0
    use_bias = cfg is not None
    factor: dict[str, float] = {}
    total = 0.0
    for v in state.boundary:
        for layer in g.layers:
            for u in g.layer_neighbors(v, layer) & state.shell:
                sim = jaccard_sim(g, u, v, layer)
                if use_bias:
                    if u not in factor:
                        factor[u] = bias_multiplier(diversification_factor(g, u, state, cfg))
                    sim *= factor[u]
                total += sim
    return total / len(state.boundary)


def lc_objective(g: MultilayerGraph, state: CommunityState, cfg: BiasConfig | None = None) -> Objective:
    return Objective(lc_internal(g, state, cfg), lc_external(g, state, cfg))


def select_best(lc_int: np.ndarray, lc_ext: np.ndarray) -> int:
    """Index of the best candidate: highest objective (ties within TIE_TOL), then
    highest internal value (same tolerance), then lowest position."""
    inf = lc_ext == 0.0
    if inf.any():
        pool = np.flatnonzero(inf)
    else:
        ratio = lc_int / lc_ext
        pool = np.flatnonzero(ratio >= ratio.max() - TIE_TOL)
    sub = lc_int[pool]
    pool = pool[sub >= sub.max() - TIE_TOL]
    return int(pool[0])


# -- detection --------------------------------------------------------------------


class _Workspace:
    def __init__(self, g: MultilayerGraph, seed: int, cfg: BiasConfig | None):
        self.g = g
        self.arr = g.arrays
        n, L = g.n_entities, g.n_layers
        self.seed = seed
        self.in_c = np.zeros(n, dtype=np.bool_)
        self.in_s = np.zeros(n, dtype=np.bool_)
        self.rejected = np.zeros(n, dtype=np.bool_)
        self.w = np.zeros(n)
        self.k = np.zeros((n, L), dtype=np.int64)
        self.counts = np.zeros(L, dtype=np.int64)
        self.cnt_s = np.zeros(n, dtype=np.int64)
        self.internal_sum = 0.0
        self.members: list[int] = []
        self.shell: set[int] = set()
        self.size_b = 0
        self.use_bias = cfg is not None
        self.beta = cfg.beta if cfg is not None else 0.0
        self.covered_only = cfg.covered_only if cfg is not None else True
        self.add(seed)

    def _arcs(self, v):
        a = self.arr
        lo, hi = a.arc_ptr[v], a.arc_ptr[v + 1]
        return a.arc_nbr[lo:hi], a.arc_layer[lo:hi], a.arc_sim[lo:hi]

    def _union(self, v):
        a = self.arr
        return a.union_nbr[a.union_ptr[v]:a.union_ptr[v + 1]]

    def add(self, v: int) -> None:
        self.internal_sum += self.w[v]
        self.counts += self.k[v]
        self.in_c[v] = True
        self.members.append(v)
        if self.in_s[v]:
            self.in_s[v] = False
            self.shell.discard(v)
        nbr, layer, sim = self._arcs(v)
        for x, li, s in zip(nbr.tolist(), layer.tolist(), sim.tolist()):
            if not self.in_c[x]:
                self.w[x] += s
                self.k[x, li] += 1
        count = 0
        for x in self._union(v).tolist():
            if self.in_c[x]:
                self.cnt_s[x] -= 1  # v was one of x's shell neighbours
            elif not self.rejected[x]:
                count += 1
                if not self.in_s[x]:
                    self.in_s[x] = True
                    self.shell.add(x)
        self.cnt_s[v] = count
        self._refresh_boundary()

    def reject(self, v: int) -> None:
        self.in_s[v] = False
        self.shell.discard(v)
        self.rejected[v] = True
        for c in self._union(v).tolist():
            if self.in_c[c]:
                self.cnt_s[c] -= 1
        self._refresh_boundary()

    def _refresh_boundary(self):
        self.size_b = int(np.count_nonzero(self.cnt_s[self.members] > 0))

    def shell_array(self) -> np.ndarray:
        return np.array(sorted(self.shell), dtype=np.int64)

    def current(self) -> Objective:
        ext = kernels.shell_external(
            self.shell_array(), self.w, self.k, self.counts, self.size_b,
            self.beta, self.use_bias, self.covered_only,
        )
        return Objective(2.0 * self.internal_sum / len(self.members), ext)

    def evaluate(self, cands: np.ndarray):
        a = self.arr
        return kernels.evaluate_candidates(
            cands, cands, self.in_c, self.in_s, self.rejected, self.w, self.k, self.counts,
            self.cnt_s, self.internal_sum, len(self.members), self.size_b,
            a.arc_ptr, a.arc_nbr, a.arc_layer, a.arc_sim, a.union_ptr, a.union_nbr,
            self.beta, self.use_bias, self.covered_only,
        )

    def snapshot(self) -> CommunityState:
        ents = self.g.entities
        members = self.members
        return CommunityState(
            seed=ents[self.seed],
            community=frozenset(ents[i] for i in members),
            shell=frozenset(ents[i] for i in self.shell),
            boundary=frozenset(ents[i] for i in members if self.cnt_s[i] > 0),
            internal_edge_counts=dict(zip(self.g.layers, self.counts.tolist())),
            rejected=frozenset(ents[i] for i in np.flatnonzero(self.rejected)),
        )


def detect(
    g: MultilayerGraph,
    seed,
    cfg: BiasConfig | None = BiasConfig(),
    *,
    max_size: int | None = None,
    verify: bool = False,
    on_step: Callable[[CommunityState, Objective], None] | None = None,
) -> DetectionResult:
    """Grow the local community of ``seed``.

    Each iteration scores every shell node by the objective of ``C + v``, takes
    the best one, and accepts it only if it strictly raises both the objective
    and the internal value; otherwise it is dropped from the shell for good.
    Stops when the shell is empty or ``max_size`` members are reached.

    ``cfg=None`` switches the bias machinery off entirely (plain similarity).
    ``verify`` re-derives state and objective from scratch after every
    iteration and raises :class:`DetectionError` on disagreement.
    """
    seed_id = g.entity_id(seed)
    if max_size is not None and max_size < 1:
        raise ValueError("max_size must be >= 1")
    ws = _Workspace(g, seed_id, cfg)
    current = ws.current()
    trace: list[TraceStep] = []
    n_rejected = 0
    iterations = 0
    termination = "converged"
    ents = g.entities

    if verify:
        _verify(g, ws, current, cfg)

    while ws.shell:
        if max_size is not None and len(ws.members) >= max_size:
            termination = "max_size"
            break
        cands = ws.shell_array()
        lc_int, lc_ext, _ = ws.evaluate(cands)
        best = select_best(lc_int, lc_ext)
        v = int(cands[best])
        proposal = Objective(lc_int[best], lc_ext[best])
        iterations += 1
        # differences inside TIE_TOL are rounding noise, not an improvement
        if proposal.improves_on(current, TIE_TOL) and proposal.internal > current.internal + TIE_TOL:
            ws.add(v)
            current = ws.current()
            trace.append(TraceStep(ents[v], current.value, len(ws.shell)))
        else:
            ws.reject(v)
            n_rejected += 1
            current = ws.current()
        if verify:
            _verify(g, ws, current, cfg)
        if on_step is not None:
            on_step(ws.snapshot(), current)

    return DetectionResult(
        seed=ents[seed_id],
        beta=None if cfg is None else cfg.beta,
        community=tuple(ents[i] for i in ws.members),
        lc=current.value,
        lc_int=current.internal,
        lc_ext=current.external,
        per_layer_edges=dict(zip(g.layers, ws.counts.tolist())),
        trace=trace,
        rejected=n_rejected,
        iterations=iterations,
        termination=termination,
    )


def _verify(g, ws: _Workspace, current: Objective, cfg) -> None:
    state = ws.snapshot()
    try:
        state.check(g)
    except AssertionError as exc:
        raise DetectionError(f"state inconsistent: {exc}") from None
    li = lc_internal(g, state, cfg)
    le = lc_external(g, state, cfg)
    if abs(li - current.internal) > VERIFY_TOL or abs(le - current.external) > VERIFY_TOL:
        raise DetectionError(
            f"incremental objective ({current.internal}, {current.external}) "
            f"!= recomputed ({li}, {le})"
        )
