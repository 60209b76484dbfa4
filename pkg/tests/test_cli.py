import json
import subprocess
import sys
from pathlib import Path

import pytest

from percept import fixture_bytes
from percept.cli import main
from percept.perception import check_conjunction
from percept.report import render_report

NAMES = ["r1_admissions", "r2_admissions", "r1_tutoring", "r2_online", "equal_rows", "cyclic", "grid_admissions"]


@pytest.fixture
def files(tmp_path):
    out = {}
    for n in NAMES:
        p = tmp_path / f"{n}.json"
        p.write_bytes(fixture_bytes(n))
        out[n] = str(p)
    return out


def run(capsysbinary, *argv):
    code = main([str(a) for a in argv])
    cap = capsysbinary.readouterr()
    return code, cap.out, cap.err.decode()


def test_validate(files, capsysbinary):
    code, out, _ = run(capsysbinary, "validate", files["r1_admissions"])
    assert code == 0 and out == b"ok: graph acyclic, 5 edges\n"
    code, out, err = run(capsysbinary, "validate", files["cyclic"])
    assert code == 3 and out == b""
    assert "A -> B -> C -> A" in err and err.count("\n") == 1


def test_usage_errors(files, capsysbinary):
    assert run(capsysbinary, "compare", files["r1_admissions"])[0] == 2
    assert run(capsysbinary, "validate", "/nonexistent.json")[0] == 2
    assert run(capsysbinary, "bogus")[0] == 2
    assert run(capsysbinary, "validate", files["r1_admissions"], "--nope")[0] == 2
    assert run(capsysbinary, "distribution", files["r1_admissions"], "--do", "Z")[0] == 2


def test_compare_unfaithful(files, capsysbinary):
    code, out, _ = run(
        capsysbinary, "compare", files["r1_admissions"], files["r2_admissions"],
        "--metric", "w2", "--agg", "max", "--epsilon", "0.01", "--interventions", files["grid_admissions"],
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "percept/1"
    assert {"receivers", "metric", "aggregation", "epsilon", "interventions", "aggregate_distance", "perception", "kind"} <= set(doc)
    assert doc["kind"] == "unfaithful" and doc["perception"] is True
    assert [i["do"] for i in doc["interventions"]] == [{}, {"Z": 0.0}, {"Z": 1.0}]


def test_compare_is_symmetric(files, capsysbinary):
    ab = json.loads(run(capsysbinary, "compare", files["r1_tutoring"], files["r2_online"])[1])
    ba = json.loads(run(capsysbinary, "compare", files["r2_online"], files["r1_tutoring"])[1])
    assert ab["aggregate_distance"] == ba["aggregate_distance"] and ab["kind"] == ba["kind"] == "inconsistent"
    assert ab["receivers"] == ba["receivers"][::-1]


def test_observational_flag(files, capsysbinary):
    doc = json.loads(run(capsysbinary, "compare", files["r1_admissions"], files["r2_admissions"], "--observational")[1])
    assert [i["do"] for i in doc["interventions"]] == [{}]


def test_build_and_distribution(files, capsysbinary):
    doc = json.loads(run(capsysbinary, "build", files["r1_admissions"])[1])
    assert doc["factorization"] == "P(Y|X1,X2)·P(X2|Z)·P(X1|X2,Z)·P(Z)"
    assert {(e["from"], e["to"]) for e in doc["edges"]} == {("Z", "X1"), ("Z", "X2"), ("X2", "X1"), ("X1", "Y"), ("X2", "Y")}
    low = json.loads(run(capsysbinary, "build", files["equal_rows"], "--level", "low")[1])
    assert len(low["edges"]) == 6
    doc = json.loads(run(capsysbinary, "distribution", files["r1_admissions"], "--do", "Z=1")[1])
    assert doc["do"] == {"Z": 1.0} and abs(doc["mean"][1] - 0.95) < 1e-12
    code, out, _ = run(capsysbinary, "build", files["r1_admissions"], "--format", "text")
    assert code == 0 and b"Z -> X1: 0.8" in out


def test_sample_csv(files, capsysbinary, tmp_path):
    code, out, _ = run(capsysbinary, "sample", files["r1_admissions"], "-n", "5", "--seed", "1")
    assert code == 0
    lines = out.decode().split("\r\n")
    assert lines[0] == "Z,X1,X2,Y" and len(lines) == 7
    target = tmp_path / "s.csv"
    run(capsysbinary, "sample", files["r1_admissions"], "-n", "5", "--seed", "1", "-o", target)
    assert target.read_bytes() == out


def test_consistency(files, capsysbinary):
    doc = json.loads(run(capsysbinary, "consistency", files["equal_rows"])[1])
    assert doc["pass"] is True and doc["tau"] == "mean"
    doc = json.loads(run(capsysbinary, "consistency", files["equal_rows"], "--tau", "sum")[1])
    assert doc["pass"] is False
    assert all(not r["pass"] for r in doc["rows"] if r["do"])


def test_pib(files, capsysbinary):
    doc = json.loads(run(capsysbinary, "pib", "--reference", files["r1_admissions"], files["r1_admissions"], files["r2_admissions"])[1])
    assert [r["id"] for r in doc["ranking"]] == ["r2_admissions", "r1_admissions"]


def test_fallacy(capsysbinary):
    code, out, _ = run(capsysbinary, "fallacy", "--joint", "0.1", "--pa", "0.05", "--pb", "0.9", "--format", "text")
    assert code == 0 and b"VIOLATED" in out
    code, out, _ = run(capsysbinary, "fallacy", "--joint", "0.04", "--pa", "0.05", "--pb", "0.9", "--format", "text")
    assert b"VIOLATED" not in out
    assert run(capsysbinary, "fallacy", "--joint", "2", "--pa", "0.05", "--pb", "0.9")[0] == 3


def test_render_report_deterministic():
    v = check_conjunction(0.1, 0.05, 0.9)
    assert render_report(v) == render_report(v)
    assert json.loads(render_report(v))["violated"] is True


def test_module_entry_point(files):
    res = subprocess.run(
        [sys.executable, "-m", "percept", "validate", files["r2_admissions"]], capture_output=True
    )
    assert res.returncode == 0 and res.stdout == b"ok: graph acyclic, 4 edges\n"
