import csv
import io
import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema
import pytest

from twoenum.cli import main
from twoenum.graphs import WeightedGraph, build_gn

SCHEMAS = Path(__file__).parents[1] / "src/twoenum/schemas"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv,expected", [
    (["count", "gn", "--n", "1"], "3/2"),
    (["count", "teeth", "--n", "2"], "16"),
    (["count", "teeth", "--n", "2", "--c", "n+1"], None),
    (["count", "fortress", "--n", "1", "--c", "n+1"], "2"),
    (["count", "fortress", "--n", "2", "--c", "n-1"], "20"),
    (["count", "aztec-rect", "--m", "1", "--k", "2", "--keep", "1"], "2"),
])
def test_count(capsys, argv, expected):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    if expected is not None:
        assert out.strip() == expected


def test_count_engines_agree(capsys):
    outs = {run(capsys, "count", "gn", "--n", "2", "--engine", e)[1] for e in ("brute", "pfaffian", "both")}
    assert len(outs) == 1


def test_fortress_needs_fixed_bottom(capsys):
    code, _, err = run(capsys, "count", "fortress", "--n", "1")
    assert code == 2 and "fixed" in err


def test_enumerate_csv(capsys):
    code, out, _ = run(capsys, "enumerate", "--n", "3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 208
    assert sum(Fraction(r["weight_minus"]) for r in rows) == 512


def test_enumerate_fixed(capsys):
    _, out, _ = run(capsys, "enumerate", "--n", "2", "--fix-c", "n+1", "--format", "csv")
    assert len(out.strip().splitlines()) == 1 + 3


def test_enumerate_json_schema(capsys):
    _, out, _ = run(capsys, "enumerate", "--n", "2", "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, json.loads((SCHEMAS / "enumerate.schema.json").read_text()))
    assert data["count"] == len(data["rows"]) == 12


@pytest.mark.parametrize("target", ["1", "2", "3", "remarks"])
def test_verify_small(capsys, target):
    code, out, _ = run(capsys, "verify", target, "--n", "1..2")
    assert code == 0 and "all identities hold" in out


@pytest.mark.parametrize("target", ["lemma", "recursion", "partition"])
def test_verify_other_targets(capsys, target):
    code, out, _ = run(capsys, "verify", target, "--n", "1..2")
    assert code == 0 and "FAIL" not in out


def test_guardrail(capsys, monkeypatch):
    code, _, err = run(capsys, "verify", "1", "--n", "5")
    assert code == 2 and "TWOENUM_MAX_N" in err
    monkeypatch.setenv("TWOENUM_MAX_N", "5")
    assert main(["count", "teeth", "--n", "5", "--c", "n+1", "--engine", "pfaffian"]) == 0
    monkeypatch.delenv("TWOENUM_MAX_N")
    assert main(["count", "teeth", "--n", "5", "--c", "n+1", "--engine", "pfaffian", "--allow-large"]) == 0


def test_reduce_and_replay(capsys, tmp_path):
    trace = tmp_path / "t.json"
    code, out, _ = run(capsys, "reduce", "--n", "2", "--trace", str(trace))
    assert code == 0 and "cumulative factor: 15/8" in out
    jsonschema.validate(json.loads(trace.read_text()), json.loads((SCHEMAS / "trace.schema.json").read_text()))
    code, out, _ = run(capsys, "reduce", "--replay", str(trace))
    assert code == 0 and "15/8" in out
    data = json.loads(trace.read_text())
    data["steps"][0]["factor"] = "7"
    trace.write_text(json.dumps(data))
    code, _, _ = run(capsys, "reduce", "--replay", str(trace))
    assert code != 0


def test_export_graph(capsys, tmp_path):
    out_file = tmp_path / "g.json"
    assert main(["export-graph", "gn", "--n", "2", "--out", str(out_file)]) == 0
    data = json.loads(out_file.read_text())
    jsonschema.validate(data, json.loads((SCHEMAS / "graph.schema.json").read_text()))
    assert WeightedGraph.from_dict(data) == build_gn(2)


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["count", "gn", "--n", "1", "--bogus"])
    assert exc.value.code == 2


def test_output_is_byte_identical():
    cmd = [sys.executable, "-m", "twoenum", "enumerate", "--n", "2", "--format", "json"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and first
