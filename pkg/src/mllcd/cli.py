"""``mllcd`` command line: detect, sweep, stats, compare, generate.

Every failure prints one line ``mllcd: error[<kind>]: <message>`` to stderr
and exits nonzero (2 missing file, 3 parse error, 4 unknown seed, 5 invalid
beta, 1 anything else).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys

from . import __version__
from .engine import detect
from .graph import GraphError, ParseError, dumps, read_graph
from .harness import (
    DEFAULT_GRID,
    generate_planted_multiplex,
    load_report,
    parse_grid,
    run_sweep,
)
from .io import dump_json
from .metrics import community_metrics, solution_jaccard
from .similarity import BiasConfig, BiasError

EXIT_ERROR = 1
EXIT_NOT_FOUND = 2
EXIT_PARSE = 3
EXIT_SEED = 4
EXIT_BETA = 5


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _meta(args) -> dict:
    return {
        "tool": "mllcd",
        "version": __version__,
        "command": args.command,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _load(args):
    try:
        return read_graph(args.graph, args.format)
    except FileNotFoundError:
        raise CliError("not-found", f"graph file not found: {args.graph}", EXIT_NOT_FOUND) from None
    except (ParseError, UnicodeDecodeError) as exc:
        raise CliError("parse", f"{args.graph}: {exc}", EXIT_PARSE) from None


def _beta(text: str) -> float:
    try:
        return BiasConfig(beta=float(text)).beta
    except (ValueError, BiasError):
        raise CliError("beta", f"invalid beta {text!r}: must be a number in [-1, 1]", EXIT_BETA) from None


def _grid(text: str | None) -> list[float]:
    if text is None:
        return list(DEFAULT_GRID)
    try:
        return parse_grid(text)
    except (ValueError, BiasError) as exc:
        raise CliError("beta", f"invalid beta grid {text!r}: {exc}; values must lie in [-1, 1]", EXIT_BETA) from None


def _check_seed(g, seed):
    if not g.has_entity(seed):
        raise CliError("seed", f"unknown seed {seed!r}", EXIT_SEED)


def _emit(text: str, output: str | None):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


# -- subcommands ------------------------------------------------------------------


def cmd_detect(args) -> int:
    cfg = BiasConfig(beta=_beta(args.beta), scope=args.scope)
    g = _load(args)
    _check_seed(g, args.seed)
    res = detect(g, args.seed, cfg, max_size=args.max_size, verify=args.debug_verify)
    if args.output_format == "text":
        lines = [
            f"seed\t{res.seed}",
            f"beta\t{res.beta:g}",
            f"size\t{res.size}",
            f"community\t{' '.join(res.community)}",
            f"lc\t{res.lc:.12g}",
            f"lc_int\t{res.lc_int:.12g}",
            f"lc_ext\t{res.lc_ext:.12g}",
            f"termination\t{res.termination}",
        ]
        _emit("\n".join(lines) + "\n", args.output)
    elif args.output_format == "csv":
        rows = ["step,entity,lc,shell_size"]
        rows += [f"{i},{t.entity},{t.lc:.12g},{t.shell_size}" for i, t in enumerate(res.trace, 1)]
        _emit("\n".join(rows) + "\n", args.output)
    else:
        _emit(dump_json({"result": res.to_dict(), "meta": _meta(args)}), args.output)
    return 0


def cmd_sweep(args) -> int:
    grid = _grid(args.grid)
    g = _load(args)
    seeds = "all" if args.seeds in (None, "all") else _split(args.seeds)
    if seeds != "all":
        for s in seeds:
            _check_seed(g, s)
    report = run_sweep(g, seeds, grid, BiasConfig(scope=args.scope), workers=args.workers,
                       max_size=args.max_size, verify=args.debug_verify)
    if args.output_format == "csv":
        if args.output in (None, "-"):
            raise CliError("usage", "csv output needs --output DIRECTORY", EXIT_ERROR)
        report.write_csv(args.output)
    else:
        _emit(dump_json({"report": report.to_dict(), "meta": _meta(args)}), args.output)
    return 0


def cmd_stats(args) -> int:
    if args.report:
        report = _read_report(args.report)
        rows = [
            {"beta": b, "mean_size": m, "sd_size": sd, "mean_layers_covered": report.mean_layers(b)}
            for b, (m, sd) in report.per_beta_sizes.items()
        ]
        if args.output_format == "csv":
            text = "beta,mean_size,sd_size,mean_layers_covered\n" + "".join(
                f"{r['beta']:.12g},{r['mean_size']:.12g},{r['sd_size']:.12g},{r['mean_layers_covered']:.12g}\n"
                for r in rows
            )
        elif args.output_format == "text":
            text = "beta\tmean\tsd\tlayers\n" + "".join(
                f"{r['beta']:+.1f}\t{r['mean_size']:.2f}\t{r['sd_size']:.2f}\t{r['mean_layers_covered']:.2f}\n"
                for r in rows
            )
        else:
            text = dump_json({"sizes": rows, "meta": _meta(args)})
        _emit(text, args.output)
        return 0

    if not args.graph:
        raise CliError("usage", "stats needs --report or --graph", EXIT_ERROR)
    g = _load(args)
    if args.community:
        community = _split(args.community)
        for c in community:
            _check_seed(g, c)
    elif args.seed:
        _check_seed(g, args.seed)
        community = detect(g, args.seed, BiasConfig(beta=_beta(args.beta), scope=args.scope)).community
    else:
        raise CliError("usage", "stats needs --community or --seed", EXIT_ERROR)
    m = community_metrics(g, community)
    if args.output_format == "text":
        lines = [f"size\t{m.size}", f"layers_covered\t{m.layers_covered}",
                 f"edge_count_stddev\t{m.edge_count_stddev:.12g}"]
        lines += [
            f"layer {layer}\tedges={m.per_layer_edges[layer]}\t"
            f"apl={m.per_layer_avg_path_length[layer]:.6g}\tcc={m.per_layer_clustering[layer]:.6g}"
            for layer in g.layers
        ]
        _emit("\n".join(lines) + "\n", args.output)
    else:
        _emit(dump_json({"community": list(community), "metrics": m.to_dict(), "meta": _meta(args)}), args.output)
    return 0


def cmd_compare(args) -> int:
    if args.report:
        report = _read_report(args.report)
        labels = [f"{b:.12g}" for b in report.grid]
        matrix = report.cross_beta_jaccard
    elif args.communities and len(args.communities) >= 2:
        sets = [_split(c) for c in args.communities]
        labels = [str(i) for i in range(len(sets))]
        matrix = [[solution_jaccard(a, b) for b in sets] for a in sets]
    else:
        raise CliError("usage", "compare needs --report or at least two --communities", EXIT_ERROR)
    if args.output_format == "csv":
        text = "a,b,mean_jaccard\n" + "".join(
            f"{labels[i]},{labels[j]},{matrix[i][j]:.12g}\n"
            for i in range(len(labels)) for j in range(len(labels))
        )
    elif args.output_format == "text":
        text = "\t" + "\t".join(labels) + "\n" + "".join(
            labels[i] + "\t" + "\t".join(f"{v:.3f}" for v in row) + "\n" for i, row in enumerate(matrix)
        )
    else:
        text = dump_json({"labels": labels, "jaccard": matrix, "meta": _meta(args)})
    _emit(text, args.output)
    return 0


def cmd_generate(args) -> int:
    try:
        g, truth = generate_planted_multiplex(
            args.communities, args.size, args.layers,
            _floats(args.p_in), _floats(args.p_out), args.rng_seed,
        )
    except GraphError as exc:
        raise CliError("generate", str(exc), EXIT_ERROR) from None
    _emit(dumps(g), args.output)
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            fh.write(dump_json(truth))
    return 0


def _floats(text: str):
    vals = [float(x) for x in _split(text)]
    return vals[0] if len(vals) == 1 else vals


def _read_report(path):
    try:
        return load_report(path)
    except FileNotFoundError:
        raise CliError("not-found", f"report not found: {path}", EXIT_NOT_FOUND) from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CliError("parse", f"{path}: not a sweep report ({exc})", EXIT_PARSE) from None


# -- parser -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_ERROR, f"mllcd: error[usage]: {message} (see {self.prog} --help)\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mllcd", description="Local community detection on multiplex networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def graph_args(sp, required=True):
        sp.add_argument("--graph", required=required, help="edge list file")
        sp.add_argument("--format", choices=["canonical", "multinet"], default="canonical")

    def out_args(sp, formats=("json", "csv", "text")):
        sp.add_argument("--output", "-o", default="-", help="output path ('-' for stdout)")
        sp.add_argument("--output-format", choices=formats, default="json")

    def bias_args(sp):
        sp.add_argument("--scope", choices=["covered", "all"], default="covered",
                        help="layers entering the edge-count dispersion")
        sp.add_argument("--max-size", type=int, default=None)
        sp.add_argument("--debug-verify", action="store_true",
                        help="recompute state from scratch each iteration (slow)")

    sp = sub.add_parser("detect", help="local community of one seed")
    graph_args(sp)
    sp.add_argument("--seed", required=True)
    sp.add_argument("--beta", default="0.0")
    bias_args(sp)
    out_args(sp)
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("sweep", help="all seeds x beta grid")
    graph_args(sp)
    sp.add_argument("--seeds", default="all", help="'all' or comma-separated entities")
    sp.add_argument("--grid", default=None, help="start:stop:step or comma list, e.g. --grid=-1:1:0.5 (default -1:1:0.1)")
    sp.add_argument("--workers", type=int, default=None, help="default: $MLLCD_WORKERS or 1")
    bias_args(sp)
    out_args(sp, ("json", "csv"))
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("stats", help="community metrics or per-beta size table")
    graph_args(sp, required=False)
    sp.add_argument("--report", help="sweep report JSON")
    sp.add_argument("--community", help="comma-separated entities")
    sp.add_argument("--seed")
    sp.add_argument("--beta", default="0.0")
    sp.add_argument("--scope", choices=["covered", "all"], default="covered")
    out_args(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("compare", help="Jaccard similarity between solutions")
    sp.add_argument("--report", help="sweep report JSON")
    sp.add_argument("--communities", nargs="+", help="comma-separated entity lists")
    out_args(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("generate", help="planted-partition multiplex")
    sp.add_argument("--communities", type=int, default=4)
    sp.add_argument("--size", type=int, default=10, help="nodes per community")
    sp.add_argument("--layers", type=int, default=3)
    sp.add_argument("--p-in", default="0.9", help="one value or one per layer")
    sp.add_argument("--p-out", default="0.05", help="one value or one per layer")
    sp.add_argument("--rng-seed", type=int, default=0)
    sp.add_argument("--output", "-o", default="-")
    sp.add_argument("--truth", help="write ground-truth JSON here")
    sp.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="mllcd: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"mllcd: error[{exc.kind}]: {exc}", file=sys.stderr)
        return exc.code
    except (GraphError, BiasError, ValueError, OSError) as exc:
        print(f"mllcd: error[{type(exc).__name__}]: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
