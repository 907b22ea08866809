import json
import subprocess
import sys

import pytest

from dscert.cli import RunConfig, main
from dscert.profile import SCALED

T = "1009"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_exit_codes(fixtures, capsys):
    code, out, _ = run(["graph", "validate", str(fixtures / "valid_graph.json")], capsys)
    assert code == 0 and json.loads(out)["valid"]
    code, out, _ = run(["graph", "validate", str(fixtures / "broken_5c.json")], capsys)
    rep = json.loads(out)
    assert code == 1 and [v["condition"] for v in rep["violations"]] == ["5c"]
    code, _, _ = run(["graph", "validate", str(fixtures / "missing.json")], capsys)
    assert code == 2


def test_validate_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run(["graph", "validate", str(bad)], capsys)[0] == 2


def test_quality(fixtures, capsys):
    code, out, _ = run(["graph", "quality", str(fixtures / "valid_graph.json"), "--profile", "scaled"], capsys)
    assert code == 0 and "product" in json.loads(out)["quality"]


def test_pipeline_and_verify(fixtures, tmp_path, capsys):
    trace = tmp_path / "trace.json"
    code, _, err = run(["pipeline", "run", str(fixtures / "valid_graph.json"), "--t", T, "--out", str(trace)], capsys)
    assert code == 0 and "case d-" in err
    assert run(["trace", "verify", str(trace)], capsys)[0] == 0
    d = json.loads(trace.read_text())
    row = next(r for c in d["certificates"] for r in c["inequalities"])
    row["rhs"] = {"lo": "999999/1", "hi": "999999/1"}
    trace.write_text(json.dumps(d, sort_keys=True, indent=1) + "\n")
    assert run(["trace", "verify", str(trace)], capsys)[0] == 1


def test_pipeline_precondition(tmp_path, capsys):
    g = {"mu": {"a": "1/1", "b": "1/1"}, "V": [["a", [["2", 1]]]], "W": [["b", [["3", 1]]]],
         "E": [], "P": [], "f": {}, "g": {}}
    path = tmp_path / "empty.json"
    path.write_text(json.dumps(g))
    assert run(["pipeline", "run", str(path), "--t", T], capsys)[0] == 4


def test_ds_overlap_csv(capsys):
    code, out, _ = run(["ds", "overlap", "--q-max", "50", "--psi", "const:1/2"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# dscert ds overlap") and "seed=0" in lines[0]
    body = [l.split(",") for l in lines if not l.startswith("#")][1:]
    assert len(body) == 50 * 49 // 2
    assert all(r[2] == "0" for r in body if r[4] == "0")


def test_ds_anatomy_and_catlin(capsys):
    code, out, _ = run(["ds", "anatomy", "--x", "100", "--t", "1", "--c", "1"], capsys)
    row = out.splitlines()[-1].split(",")
    assert code == 0 and row[3] == "3"
    code, out, _ = run(["ds", "catlin", "--psi", "reciprocal", "--q", "6"], capsys)
    assert code == 0 and out.splitlines()[-1].split(",")[1] == "1/18"


def test_ds_measure_second_moment_counterexample(capsys):
    assert run(["ds", "measure", "--q-min", "2", "--q-max", "60"], capsys)[0] == 0
    code, out, _ = run(["ds", "second-moment", "--X", "2"], capsys)
    assert code == 0 and "Y=5" in out and out.splitlines()[-1].startswith("1,0,0,0")
    code, out, _ = run(["ds", "counterexample", "--n", "8", "--x-scale", "10000"], capsys)
    d = json.loads(out)
    assert code == 0 and d["pairs_failing"] == 0 and d["in_range"]


def test_reproducible_bytes(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        main(["ds", "second-moment", "--psi", "const:1/2", "--X", "2", "--t", "1,2", "--seed", "7", "--out", str(p)])
    assert a.read_bytes() == b.read_bytes()
    g1, g2 = tmp_path / "g1.json", tmp_path / "g2.json"
    for p in (g1, g2):
        main(["graph", "generate", "--seed", "4", "--out", str(p)])
    assert g1.read_bytes() == g2.read_bytes()


def test_run_config_precision_floor():
    with pytest.raises(ValueError):
        RunConfig(SCALED, "scaled", 16, 4096, 0, None)
    assert main(["ds", "anatomy", "--precision", "16"]) == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "dscert.cli", "ds", "catlin"], capture_output=True, text=True)
    assert out.returncode == 0 and "1/18" in out.stdout
