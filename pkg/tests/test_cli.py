import json
import subprocess
import sys
from pathlib import Path

import pytest

from mllcd.cli import main

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"
BRIDGE = str(DATA / "bridge.txt")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_detect_json(capsys):
    code, out, err = run(capsys, "detect", "--graph", BRIDGE, "--seed", "a", "--beta", "0.0", "--output", "-")
    assert code == 0, err
    doc = json.loads(out)
    assert "a" in doc["result"]["community"]
    assert doc["result"]["lc"] == "inf"
    assert "timestamp" in doc["meta"]


@pytest.mark.parametrize("golden", sorted(GOLDEN.glob("detect_*.json")), ids=lambda p: p.stem)
def test_detect_matches_golden(capsys, golden):
    case = json.loads(golden.read_text())
    code, out, _ = run(capsys, "detect", "--graph", str(DATA / case["graph"]), "--seed", case["seed"],
                       "--beta", str(case["beta"]))
    assert code == 0
    res = json.loads(out)["result"]
    assert res["community"] == case["community"]
    got = [[t["entity"], t["lc"], t["shell_size"]] for t in res["trace"]]
    assert got == case["trace"]


def test_detect_output_stable_apart_from_meta(capsys, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert run(capsys, "detect", "--graph", BRIDGE, "--seed", "d", "--beta", "-0.4", "-o", str(path))[0] == 0
        doc = json.loads(path.read_text())
        del doc["meta"]
        outs.append(json.dumps(doc, sort_keys=True))
    assert outs[0] == outs[1]


@pytest.mark.parametrize(
    "argv, code, kind",
    [
        (["detect", "--graph", BRIDGE, "--seed", "a", "--beta", "1.5"], 5, "beta"),
        (["detect", "--graph", BRIDGE, "--seed", "a", "--beta", "abc"], 5, "beta"),
        (["detect", "--graph", "/nonexistent/g.txt", "--seed", "a"], 2, "not-found"),
        (["detect", "--graph", BRIDGE, "--seed", "zz"], 4, "seed"),
        (["sweep", "--graph", BRIDGE, "--grid", "0,3"], 5, "beta"),
        (["sweep", "--graph", BRIDGE, "--seeds", "a,qq", "--grid", "0"], 4, "seed"),
    ],
)
def test_error_paths(capsys, argv, code, kind):
    got, out, err = run(capsys, *argv)
    assert got == code
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith(f"mllcd: error[{kind}]: ")
    if kind == "beta":
        assert "[-1, 1]" in lines[0]


def test_usage_error_single_line(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["detect", "--graph", BRIDGE])
    assert exc.value.code == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and err.startswith("mllcd: error[usage]: ")


def test_parse_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("L1 a b\nL1 c c\n")
    code, _, err = run(capsys, "detect", "--graph", str(bad), "--seed", "a")
    assert code == 3
    assert err.startswith("mllcd: error[parse]:") and "line 2" in err


def test_detect_text_and_csv(capsys):
    code, out, _ = run(capsys, "detect", "--graph", BRIDGE, "--seed", "a", "--output-format", "text")
    assert code == 0 and "community\ta b c" in out
    code, out, _ = run(capsys, "detect", "--graph", BRIDGE, "--seed", "a", "--output-format", "csv")
    assert out.splitlines()[0] == "step,entity,lc,shell_size"


def test_sweep_stats_compare(capsys, tmp_path):
    report = tmp_path / "sweep.json"
    code, _, err = run(capsys, "sweep", "--graph", BRIDGE, "--grid=-1,0,1", "-o", str(report))
    assert code == 0, err
    doc = json.loads(report.read_text())["report"]
    assert doc["grid"] == [-1.0, 0.0, 1.0]
    assert len(doc["records"]) == 18

    code, out, _ = run(capsys, "stats", "--report", str(report))
    rows = json.loads(out)["sizes"]
    assert [r["beta"] for r in rows] == [-1.0, 0.0, 1.0]
    assert rows[1]["mean_size"] == 3.0

    code, out, _ = run(capsys, "compare", "--report", str(report), "--output-format", "csv")
    assert code == 0 and out.startswith("a,b,mean_jaccard\n")

    code, _, _ = run(capsys, "sweep", "--graph", BRIDGE, "--grid", "0", "--output-format", "csv",
                     "-o", str(tmp_path / "tables"))
    assert code == 0
    assert {p.name for p in (tmp_path / "tables").iterdir()} == {"sizes.csv", "layers.csv", "jaccard.csv"}


def test_stats_community_and_compare_sets(capsys):
    code, out, _ = run(capsys, "stats", "--graph", BRIDGE, "--community", "a,b,c")
    m = json.loads(out)["metrics"]
    assert m["per_layer_clustering"]["L1"] == 1.0 and m["size"] == 3
    code, out, _ = run(capsys, "stats", "--graph", BRIDGE, "--seed", "e", "--beta", "0.3")
    assert json.loads(out)["metrics"]["size"] == 3
    code, out, _ = run(capsys, "compare", "--communities", "a,b,c", "b,c,d")
    assert json.loads(out)["jaccard"][0][1] == 0.5


def test_generate(capsys, tmp_path):
    graph, truth = tmp_path / "g.txt", tmp_path / "t.json"
    code, _, _ = run(capsys, "generate", "--communities", "2", "--size", "4", "--layers", "2",
                     "--p-in", "1", "--p-out", "0", "-o", str(graph), "--truth", str(truth))
    assert code == 0
    assert len(graph.read_text().splitlines()) == 24
    assert len(json.loads(truth.read_text())) == 8
    code, _, err = run(capsys, "generate", "--p-in", "0", "--p-out", "0")
    assert code != 0 and err.startswith("mllcd: error[")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mllcd", "detect", "--graph", BRIDGE, "--seed", "b"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["seed"] == "b"
