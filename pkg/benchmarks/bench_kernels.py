"""Compare the numba kernels against the pure-numpy fallback.

Times a full single-beta sweep (every node as seed) on a planted multiplex with
each backend, after one warm-up run so JIT compilation is not counted, and checks
that both backends produce the same communities.

    python3 benchmarks/bench_kernels.py --communities 10 --size 20 --layers 4 --repeat 1
"""

import argparse
import time

from mllcd import BiasConfig, detect, kernels
from mllcd.harness import generate_planted_multiplex


def run_all(g, beta):
    return [detect(g, s, BiasConfig(beta)).community for s in g.entities]


def timed(g, beta, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = run_all(g, beta)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--communities", type=int, default=6)
    ap.add_argument("--size", type=int, default=15)
    ap.add_argument("--layers", type=int, default=4)
    ap.add_argument("--p-in", type=float, default=0.6)
    ap.add_argument("--p-out", type=float, default=0.02)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rng-seed", type=int, default=0)
    args = ap.parse_args()

    g, _ = generate_planted_multiplex(args.communities, args.size, args.layers, args.p_in, args.p_out,
                                      seed=args.rng_seed)
    print(f"graph: {g.n_entities} nodes, {g.n_layers} layers, {g.n_edges()} edges, beta={args.beta}")

    results = {}
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            detect(g, g.entities[0], BiasConfig(args.beta))  # warm-up / JIT
            secs, out = timed(g, args.beta, args.repeat)
        results[name] = out
        print(f"{name:>6}: {secs:8.3f} s  ({secs / g.n_entities * 1e3:.2f} ms per seed)")

    if len(results) == 2:
        same = results["numba"] == results["numpy"]
        print(f"backends agree: {same}")
    else:
        print("numba not available; only the numpy backend was timed")


if __name__ == "__main__":
    main()
