import csv
import json
import subprocess
import sys

import pytest

from pwqnet import fixtures, jsonio
from pwqnet.cli import EXIT_MATH, EXIT_OK, EXIT_PRECOND, EXIT_SOLVER, EXIT_STRUCT, main


def fx(name):
    return str(fixtures.fixture_path(name))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- validate / lift / build / eval -----------------------------------------

def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", "--input", fx("eq16.json"))
    assert code == EXIT_OK
    assert json.loads(out.strip()) == {"ok": True, "segments": 3, "violations": 0}


def test_validate_violation(capsys):
    code, out, _ = run(capsys, "validate", "--input", fx("nonconvex.json"))
    lines = [json.loads(s) for s in out.strip().splitlines()]
    assert code == EXIT_MATH
    assert lines[0]["kind"] == "slope" and lines[-1]["violations"] == 1


@pytest.mark.parametrize("method, alpha0", [("alg1", -56 / 3), ("qp", -22.0)])
def test_lift(capsys, tmp_path, method, alpha0):
    out_path = tmp_path / "h.json"
    code, out, _ = run(capsys, "lift", "--input", fx("eq16.json"), "--method", method,
                       "--output", str(out_path))
    res = json.loads(out)
    assert code == EXIT_OK and res["conditions"]["feasible"]
    assert res["lift"]["alpha"][0] == pytest.approx(alpha0, abs=1e-6)
    assert json.loads(out_path.read_text())["pieces"][0]["alpha"] == pytest.approx(alpha0, abs=1e-6)
    if method == "qp":
        assert res["solver"]["status"] == "optimal"


def test_lift_invalid_function(capsys):
    code, _, err = run(capsys, "lift", "--input", fx("nonconvex.json"))
    assert code == EXIT_PRECOND and "error" in err


def test_lift_unbounded_cost(capsys, tmp_path):
    cost = tmp_path / "cost.json"
    H = [[2.0 if i == k and i % 2 == 0 else 0.0 for k in range(6)] for i in range(6)]
    cost.write_text(json.dumps({"kind": "quadratic", "H": H, "g": [0, 0, 0, 1, 0, 0]}))
    code, out, _ = run(capsys, "lift", "--input", fx("eq16.json"), "--method", "qp",
                       "--cost", str(cost))
    assert code == EXIT_SOLVER
    assert json.loads(out)["solver"]["status"] == "unbounded"


def test_lift_cost_with_alg1(capsys, tmp_path):
    code, _, _ = run(capsys, "lift", "--input", fx("eq16.json"), "--cost", "x.json")
    assert code == EXIT_STRUCT


@pytest.mark.parametrize("arch, extra, width", [("maxout", ["--lift", fx("eq17_lift.json")], 2),
                                                ("relu", [], 6)])
def test_build_and_eval(capsys, tmp_path, arch, extra, width):
    net = tmp_path / "net.json"
    code, out, _ = run(capsys, "build", "--input", fx("eq16.json"), "--arch", arch,
                       "--output", str(net), *extra)
    assert code == EXIT_OK and json.loads(out)["hidden_width"] == width
    code, out, _ = run(capsys, "eval", "--input", fx("eq16.json"), "--net", str(net),
                       "--lift", fx("eq17_lift.json"), "--x", "0", "1")
    res = json.loads(out)
    assert res["phi"] == [0.0, 5.0]
    assert res["net"] == pytest.approx([0.0, 5.0], abs=1e-12)
    assert len(res["h"]) == 2


def test_build_zero_lift_infeasible(capsys):
    code, _, err = run(capsys, "build", "--input", fx("eq16.json"), "--lift",
                       fx("eq16_zero_lift.json"))
    assert code == EXIT_PRECOND and "dominance" in err


def test_build_maxout_needs_lift(capsys):
    assert run(capsys, "build", "--input", fx("eq16.json"))[0] == EXIT_STRUCT


def test_eval_outside_domain(capsys):
    assert run(capsys, "eval", "--input", fx("eq16.json"), "--x", "3")[0] == EXIT_STRUCT


# -- verify ---------------------------------------------------------------------

def test_verify_lift(capsys):
    code, out, _ = run(capsys, "verify", "--input", fx("eq16.json"), "--lift", fx("eq17_lift.json"))
    assert code == EXIT_OK and json.loads(out)["verdict"] == "certified"


def test_verify_zero_lift(capsys):
    code, out, _ = run(capsys, "verify", "--input", fx("eq16.json"), "--lift",
                       fx("eq16_zero_lift.json"))
    res = json.loads(out)
    assert code == EXIT_MATH and res["verdict"] == "counterexample"
    assert -1 < res["witness"]["x"][0] < 1


def test_verify_pipeline_invalid(capsys):
    code, _, err = run(capsys, "verify", "--input", fx("nonconvex.json"))
    assert code == EXIT_PRECOND and "[validate]" in err


def test_verify_pipeline(capsys):
    code, out, _ = run(capsys, "verify", "--input", fx("eq16.json"))
    assert code == EXIT_OK and json.loads(out)["verdict"] == "certified"


def test_verify_net(capsys, tmp_path):
    net = tmp_path / "net.json"
    run(capsys, "build", "--input", fx("eq16.json"), "--arch", "relu", "--output", str(net))
    code, out, _ = run(capsys, "verify", "--input", fx("eq16.json"), "--net", str(net),
                       "--samples", "5000")
    assert code == EXIT_OK and json.loads(out)["verdict"] == "sampled_pass"


def test_verify_nd(capsys):
    code, out, _ = run(capsys, "verify", "--nd", "--input", fx("ocp2d_reconstructed_phi.json"),
                       "--lift", fx("ocp2d_h.json"), "--samples", "500")
    res = json.loads(out)
    assert code == EXIT_OK and res["verdict"] == "sampled_pass"
    assert res["samples_used"] > 6 * 500
    code, out, _ = run(capsys, "verify", "--nd", "--input", fx("ocp2d_reconstructed_phi.json"),
                       "--lift", fx("ocp2d_h.json"), "--samples", "500", "--gamma", "0")
    assert code == EXIT_MATH


def test_verify_gamma_search(capsys):
    code, out, _ = run(capsys, "verify", "--nd", "--gamma-search", "--samples", "300",
                       "--input", fx("ocp2d_reconstructed_phi.json"), "--lift", fx("ocp2d_h.json"))
    res = json.loads(out)
    assert code == EXIT_OK and res["gamma"] is not None and len(res["profile"]) == 13


def test_verify_lift_and_net_conflict(capsys):
    assert run(capsys, "verify", "--input", fx("eq16.json"), "--lift", "a", "--net", "b")[0] \
        == EXIT_STRUCT


# -- structural errors ----------------------------------------------------------

@pytest.mark.parametrize("content", ["{not json", "[1, 2]", '{"breakpoints": [0, 1]}'])
def test_bad_input_files(capsys, tmp_path, content):
    p = tmp_path / "f.json"
    p.write_text(content)
    code, _, err = run(capsys, "validate", "--input", str(p))
    assert code == EXIT_STRUCT and err.startswith("error")


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "validate", "--input", str(tmp_path / "nope.json"))
    assert code == EXIT_STRUCT and "cannot read" in err


def test_bad_weights(capsys, tmp_path):
    p = tmp_path / "net.json"
    p.write_text(json.dumps({"layers": [], "output": {"W": [[1.0]]}}))
    code, _, err = run(capsys, "eval", "--input", fx("eq16.json"), "--net", str(p), "--x", "0")
    assert code == EXIT_STRUCT and "$.output" in err


def test_bad_arguments(capsys):
    assert run(capsys, "lift", "--input", fx("eq16.json"), "--method", "simplex")[0] == EXIT_STRUCT
    assert run(capsys)[0] == EXIT_STRUCT


def test_tolerance_override(capsys, tmp_path, monkeypatch):
    # continuity jump of 1e-7: rejected by default, accepted with a loose eps_c
    p = tmp_path / "f.json"
    p.write_text(jsonio.dumps({"breakpoints": [-1, 0, 1], "segments": [
        {"q": 1, "l": 0, "c": 0}, {"q": 1, "l": 0, "c": 1e-7}]}))
    assert run(capsys, "validate", "--input", str(p))[0] == EXIT_MATH
    monkeypatch.setenv("PWQ_TOL_OVERRIDE", '{"eps_c": 1e-6}')
    assert run(capsys, "validate", "--input", str(p))[0] == EXIT_OK
    monkeypatch.setenv("PWQ_TOL_OVERRIDE", '{"eps_c": -1}')
    assert run(capsys, "validate", "--input", str(p))[0] == EXIT_STRUCT


# -- export-samples and repro ----------------------------------------------

def test_export_samples(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "export-samples", "--input", fx("eq16.json"), "--lift",
                     fx("eq17_lift.json"), "--grid", "10", "--output", str(out))
    rows = list(csv.reader(out.open()))
    assert code == EXIT_OK
    assert rows[0][:5] == ["x", "phi", "h", "phi_plus_h", "net"] and len(rows[0]) == 11
    assert len(rows) == 1 + 12        # grid plus the two interior breakpoints
    assert all(r[4] != "" for r in rows[1:])


def test_export_samples_without_lift(capsys, tmp_path):
    out = tmp_path / "s.csv"
    run(capsys, "export-samples", "--input", fx("eq16.json"), "--output", str(out))
    rows = list(csv.reader(out.open()))
    assert rows[1][2] == rows[1][3] == rows[1][4] == ""


def test_repro_1d(capsys, tmp_path):
    code, out, _ = run(capsys, "repro", "--example", "1d", "--outdir", str(tmp_path / "r"))
    assert code == EXIT_OK and "FAIL" not in out
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert summary["passed"] and len(summary["checks"]) >= 10


def test_repro_2d(capsys, tmp_path):
    code, out, _ = run(capsys, "repro", "--example", "2d", "--outdir", str(tmp_path / "r"))
    assert code == EXIT_OK and fixtures.RECONSTRUCTED_NOTE in out
    assert json.loads((tmp_path / "r" / "summary.json").read_text())["caveat"]


def test_repro_outdir_under_file(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "repro", "--example", "1d", "--outdir", str(blocker / "sub"))
    assert code == EXIT_STRUCT and "not writable" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "pwqnet", "validate", "--input", fx("eq16.json")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and '"ok": true' in res.stdout
