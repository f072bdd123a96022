import numpy as np
import pytest

from mllcd import MultilayerGraph, load_graph


def random_multiplex(rng: np.random.Generator, max_nodes=12, max_layers=3) -> MultilayerGraph:
    """Random multiplex with 2..max_nodes nodes, 1..max_layers layers, per-layer density."""
    while True:
        n = int(rng.integers(2, max_nodes + 1))
        L = int(rng.integers(1, max_layers + 1))
        edges = []
        for li in range(L):
            p = rng.uniform(0.1, 0.8)
            for a in range(n):
                for b in range(a + 1, n):
                    if rng.random() < p:
                        edges.append((f"L{li}", f"v{a}", f"v{b}"))
        if edges:
            return MultilayerGraph.from_edges(edges)


BRIDGE = """\
L1 a b
L1 b c
L1 a c
L1 c d
L1 d e
L1 e f
L1 d f
"""


@pytest.fixture
def bridge_graph():
    return load_graph(BRIDGE)


@pytest.fixture
def triangle():
    return load_graph("L1 a b\nL1 b c\nL1 a c\n")


# -- acceptance report --------------------------------------------------------------
# Tests tagged @pytest.mark.acceptance(n, "title") are grouped by criterion and
# summarised as one PASS/FAIL/SKIP line each at the end of the run.

_ACCEPTANCE: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        n, title = mark.args
        entry = _ACCEPTANCE.setdefault(n, {"title": title, "outcomes": []})
        entry["outcomes"].append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[n]
        outcomes = entry["outcomes"]
        if "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"{status}  criterion {n}: {entry['title']}")
