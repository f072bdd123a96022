"""Seed x beta sweeps, their aggregate tables, and a planted multiplex generator."""

from __future__ import annotations

import csv
import json
import os
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .engine import detect
from .graph import GraphError, MultilayerGraph
from .io import dump_json
from .metrics import size_stats, solution_jaccard
from .similarity import BiasConfig, BiasError, dispersion_f

DEFAULT_GRID = tuple(round(i / 10, 1) for i in range(-10, 11))


def normalize_grid(grid: Sequence[float]) -> list[float]:
    out = []
    for b in grid:
        b = round(float(b), 12) + 0.0
        if not (-1.0 <= b <= 1.0):
            raise BiasError(f"beta must lie in [-1, 1], got {b!r}")
        if b not in out:
            out.append(b)
    if not out:
        raise ValueError("empty beta grid")
    return out


def parse_grid(text: str) -> list[float]:
    """``"-1:1:0.1"`` (inclusive range) or ``"-1,0,1"``."""
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ValueError(f"bad grid range {text!r}; expected start:stop:step") from None
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(round((stop - start) / step)) + 1
        return normalize_grid(start + i * step for i in range(count))
    try:
        return normalize_grid(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        if isinstance(exc, BiasError):
            raise
        raise ValueError(f"bad grid {text!r}") from None


@dataclass
class SweepRecord:
    seed: str
    beta: float
    community: list[str]
    size: int
    layers_covered: int
    edge_count_stddev: float
    lc: float
    iterations: int


@dataclass
class SweepReport:
    grid: list[float]
    seeds: list[str]
    per_beta_sizes: dict[float, tuple[float, float]]
    per_beta_layer_distribution: dict[float, list[int]]
    cross_beta_jaccard: list[list[float]]
    per_beta_edge_stddev: dict[float, list[float]]
    records: list[SweepRecord] = field(repr=False, default_factory=list)

    @classmethod
    def from_records(cls, grid, seeds, records: Sequence[SweepRecord]) -> "SweepReport":
        """Aggregate per-(seed, beta) records; the only place tables are derived."""
        grid = list(grid)
        seeds = list(seeds)
        cell = {(r.beta, r.seed): r for r in records}
        sizes, layers, stddev = {}, {}, {}
        for b in grid:
            rows = [cell[(b, s)] for s in seeds]
            sizes[b] = size_stats([r.size for r in rows])
            layers[b] = sorted((r.layers_covered for r in rows), reverse=True)
            stddev[b] = [r.edge_count_stddev for r in rows]
        sets = {key: set(r.community) for key, r in cell.items()}
        jac = [[1.0] * len(grid) for _ in grid]
        for i, a in enumerate(grid):
            for j in range(i + 1, len(grid)):
                b = grid[j]
                val = float(np.mean([solution_jaccard(sets[(a, s)], sets[(b, s)]) for s in seeds]))
                jac[i][j] = jac[j][i] = val
        return cls(grid, seeds, sizes, layers, jac, stddev, list(records))

    def mean_layers(self, beta: float) -> float:
        return float(np.mean(self.per_beta_layer_distribution[beta]))

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "seeds": self.seeds,
            "per_beta_sizes": [
                {"beta": b, "mean": m, "sd": sd} for b, (m, sd) in self.per_beta_sizes.items()
            ],
            "per_beta_layer_distribution": [
                {"beta": b, "layers_covered": v} for b, v in self.per_beta_layer_distribution.items()
            ],
            "cross_beta_jaccard": self.cross_beta_jaccard,
            "per_beta_edge_stddev": [
                {"beta": b, "edge_count_stddev": v} for b, v in self.per_beta_edge_stddev.items()
            ],
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepReport":
        records = [SweepRecord(**{**r, "lc": float(r["lc"])}) for r in data["records"]]
        return cls.from_records(data["grid"], data["seeds"], records)

    def write_csv(self, directory) -> list[Path]:
        """Write ``sizes.csv``, ``layers.csv`` and ``jaccard.csv`` into ``directory``."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        order = {s: i for i, s in enumerate(self.seeds)}
        recs = sorted(self.records, key=lambda r: (self.grid.index(r.beta), order[r.seed]))
        paths = [out / "sizes.csv", out / "layers.csv", out / "jaccard.csv"]
        with open(paths[0], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["beta", "seed", "size"])
            w.writerows((_fmt(r.beta), r.seed, r.size) for r in recs)
        with open(paths[1], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["beta", "seed", "layers_covered"])
            w.writerows((_fmt(r.beta), r.seed, r.layers_covered) for r in recs)
        with open(paths[2], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["beta_a", "beta_b", "mean_jaccard"])
            for i, a in enumerate(self.grid):
                for j, b in enumerate(self.grid):
                    w.writerow((_fmt(a), _fmt(b), _fmt(self.cross_beta_jaccard[i][j])))
        return paths


def _fmt(x: float) -> str:
    return format(x, ".12g")


# -- running ----------------------------------------------------------------------

_WORKER_GRAPH: MultilayerGraph | None = None


def _init_worker(g):
    global _WORKER_GRAPH
    _WORKER_GRAPH = g


def _seed_job(args):
    return _run_seed(_WORKER_GRAPH, *args)


def _run_seed(g, seed, grid, scope, max_size, verify=False) -> list[SweepRecord]:
    out = []
    for b in grid:
        res = detect(g, seed, BiasConfig(beta=b, scope=scope), max_size=max_size, verify=verify)
        out.append(SweepRecord(
            seed=res.seed,
            beta=b,
            community=list(res.community),
            size=res.size,
            layers_covered=res.layers_covered,
            edge_count_stddev=dispersion_f(res.per_layer_edges),
            lc=res.lc,
            iterations=res.iterations,
        ))
    return out


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("MLLCD_WORKERS", "1")))
    except ValueError:
        return 1


def run_sweep(
    g: MultilayerGraph,
    seeds: Sequence[str] | str = "all",
    grid: Sequence[float] = DEFAULT_GRID,
    cfg: BiasConfig = BiasConfig(),
    *,
    workers: int | None = None,
    max_size: int | None = None,
    verify: bool = False,
) -> SweepReport:
    """Run one detection per (seed, beta) and aggregate.

    ``cfg`` is a template: only its dispersion settings are used, ``beta``
    comes from the grid. Results do not depend on ``workers``.
    """
    grid = normalize_grid(grid)
    if isinstance(seeds, str):
        if seeds != "all":
            raise ValueError("seeds must be 'all' or a list of entities")
        seeds = list(g.entities)
    else:
        seeds = [str(s) for s in seeds]
    if not seeds:
        raise ValueError("empty seed list")
    for s in seeds:
        g.entity_id(s)
    workers = default_workers() if workers is None else max(1, int(workers))

    jobs = [(s, grid, cfg.scope, max_size, verify) for s in seeds]
    if workers == 1 or len(seeds) == 1:
        chunks = [_run_seed(g, *job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(g,)) as pool:
            chunks = list(pool.map(_seed_job, jobs))
    records = [r for chunk in chunks for r in chunk]
    return SweepReport.from_records(grid, seeds, records)


def save_report(report: SweepReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json(report.to_dict()))


def load_report(path) -> SweepReport:
    """Read a report written by :func:`save_report` or by ``mllcd sweep``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return SweepReport.from_dict(data.get("report", data))


# -- synthetic data ---------------------------------------------------------------


def _per_layer(p, layers, name):
    vals = np.atleast_1d(np.asarray(p, dtype=float))
    if vals.size == 1:
        vals = np.full(layers, vals[0])
    if vals.shape != (layers,):
        raise ValueError(f"{name} needs one probability per layer ({layers}), got {len(vals)}")
    if np.any((vals < 0) | (vals > 1)) or np.any(np.isnan(vals)):
        raise ValueError(f"{name} probabilities must lie in [0, 1]")
    return vals


def generate_planted_multiplex(
    n_communities: int,
    nodes_per_community: int,
    layers: int,
    p_in: float | Sequence[float],
    p_out: float | Sequence[float],
    seed: int | None = 0,
) -> tuple[MultilayerGraph, dict[str, int]]:
    """Planted-partition multiplex: each layer draws its own edges independently.

    Returns the graph and a ground-truth map entity -> community id. Nodes that
    end up with no edge in any layer are absent from both.
    """
    if n_communities < 1 or nodes_per_community < 1 or layers < 1:
        raise ValueError("sizes must be positive")
    pin = _per_layer(p_in, layers, "p_in")
    pout = _per_layer(p_out, layers, "p_out")
    rng = np.random.default_rng(seed)
    n = n_communities * nodes_per_community
    block = np.repeat(np.arange(n_communities), nodes_per_community)
    same = block[:, None] == block[None, :]
    iu = np.triu_indices(n, k=1)
    names = [f"n{i}" for i in range(n)]
    edges = []
    for li in range(layers):
        prob = np.where(same, pin[li], pout[li])
        draw = rng.random((n, n)) < prob
        for a, b in zip(*(ix[draw[iu]] for ix in iu)):
            edges.append((f"L{li + 1}", names[a], names[b]))
    if not edges:
        raise GraphError("no edges")
    used = sorted({i for _, u, v in edges for i in (int(u[1:]), int(v[1:]))})
    g = MultilayerGraph.from_edges(edges, order=[names[i] for i in used])
    truth = {names[i]: int(block[i]) for i in used}
    return g, truth


def ground_truth_communities(truth: dict[str, int]) -> dict[int, set[str]]:
    out: dict[int, set[str]] = {}
    for node, c in truth.items():
        out.setdefault(c, set()).add(node)
    return out
