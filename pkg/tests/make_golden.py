"""Regenerate golden files from the brute-force oracle: python tests/make_golden.py"""

import json
import math
import sys
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from mllcd import read_graph  # noqa: E402
from oracle import oracle_detect  # noqa: E402

CASES = [("bridge.txt", "a", 0.0), ("bridge.txt", "d", 1.0)]


def main():
    for fname, seed, beta in CASES:
        g = read_graph(HERE / "data" / fname)
        community, trace = oracle_detect(g, seed, beta)
        doc = {
            "graph": fname,
            "seed": seed,
            "beta": beta,
            "community": sorted(community, key=g.entities.index),
            "trace": [[e, "inf" if math.isinf(lc) else float(f"{lc:.12g}"), s] for e, lc, s in trace],
        }
        out = HERE / "golden" / f"detect_{Path(fname).stem}_{seed}_beta{beta:g}.json"
        out.write_text(json.dumps(doc, indent=2) + "\n")
        print("wrote", out)


if __name__ == "__main__":
    main()
