import json

import pytest

from dnlab.cli import main


def run(tmp_path, *argv, name="r.json"):
    out = tmp_path / name
    out.unlink(missing_ok=True)
    code = main(list(argv) + ["--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_lift_default(tmp_path):
    code, text = run(tmp_path, "lift", "--D", "5", "--source", "dihedral:-23", "--bound", "500")
    assert code == 0
    rep = json.loads(text)
    assert rep["status"] == "pass" and rep["schema_version"] == "1.0"
    table = (tmp_path / "r.lift.txt").read_text().splitlines()
    assert table[1].split() == ["1", "1", "1"]


def test_lift_requested_coefficients(tmp_path):
    code, text = run(tmp_path, "lift", "--bound", "100", "--coeff", "59:a", "--coeff", "2")
    assert code == 0
    # 59 = x^2 + xy + 6y^2 splits into principal primes of Q(sqrt -23): c(59) = 2;
    # 2 is inert in Q(sqrt 5): c(2)^2 - 2 chi0(2) = 1 - 2
    assert json.loads(text)["constants"]["requested"] == {"59:a": "2", "2": "-1"}


def test_lift_config_errors(tmp_path, capsys):
    assert main(["lift", "--D", "6"]) == 2
    assert main(["lift", "--bound", "10", "--coeff", "59:a"]) == 2
    assert "needs bound >= 59" in capsys.readouterr().err
    assert main(["lift", "--source", "modular:23"]) == 2
    assert main(["lift", "--source", "file:/nonexistent.q", "--level", "23"]) == 2
    assert main(["lift", "--bound", "-3"]) == 2
    assert main(["frobnicate"]) == 2


def test_lift_file_source(tmp_path):
    from dnlab.forms import dihedral_coeffs, export_qexp
    f0 = dihedral_coeffs(-23, 60)
    path = tmp_path / "f0.q"
    export_qexp(f0.values, path)
    code, text = run(tmp_path, "lift", "--source", f"file:{path}", "--level", "23", "--nebentypus", "-23",
                     "--bound", "60")
    assert code == 0
    code2, text2 = run(tmp_path, "lift", "--bound", "60", name="s.json")
    assert json.loads(text)["checks"] == json.loads(text2)["checks"]


def test_weil_cases(tmp_path):
    assert run(tmp_path, "weil", "hecke-split", "--p", "3", "--D", "13")[0] == 0
    assert run(tmp_path, "weil", "hecke-inert", "--p", "3", "--D", "5")[0] == 0
    assert run(tmp_path, "weil", "pft", "--p", "5", "--char", "4")[0] == 0
    assert run(tmp_path, "weil", "consistency", "--p", "5", "--D", "5")[0] == 0
    assert main(["weil", "pft", "--p", "2"]) == 2
    assert main(["weil", "pft", "--p", "3", "--D", "3"]) == 2
    assert main(["weil", "hecke-inert", "--p", "3", "--D", "13"]) == 2
    assert main(["weil", "pft", "--p", "5", "--char", "3"]) == 2


def test_csv_format(tmp_path):
    code, text = run(tmp_path, "weil", "hecke-split", "--format", "csv", name="r.csv")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("identity,lhs,rhs")
    assert len(lines) == 7


def test_config_file(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"p": 5, "D": 29, "samples": 100}))
    code, text = run(tmp_path, "weil", "hecke-split", "--config", str(conf))
    assert code == 0
    assert "D=29 p=5" in json.loads(text)["report"]
    # explicit flags win
    code, text = run(tmp_path, "weil", "hecke-split", "--config", str(conf), "--D", "41")
    assert "D=41 p=5" in json.loads(text)["report"]
    conf.write_text(json.dumps({"colour": 1}))
    assert main(["weil", "hecke-split", "--config", str(conf)]) == 2
    conf.write_text(json.dumps({"tol": -1}))
    assert main(["weil", "hecke-split", "--config", str(conf)]) == 2
    conf.write_text("[1,")
    assert main(["weil", "hecke-split", "--config", str(conf)]) == 2


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("DNLAB_THREADS", "two")
    assert main(["weil", "hecke-split"]) == 2
    monkeypatch.setenv("DNLAB_THREADS", "1")
    assert run(tmp_path, "weil", "hecke-split")[0] == 0


def test_deterministic_reports(tmp_path):
    a = run(tmp_path, "weil", "consistency", "--p", "3", "--seed", "4", name="a.json")[1]
    b = run(tmp_path, "weil", "consistency", "--p", "3", "--seed", "4", name="b.json")[1]
    assert a == b


@pytest.fixture(scope="module")
def stark_default(tmp_path_factory):
    d = tmp_path_factory.mktemp("stark")
    cache = d / "delta.json"
    code = main(["stark", "--out", str(d / "r.json"), "--delta-cache", str(cache)])
    return code, json.loads((d / "r.json").read_text()), cache


def test_stark_default(stark_default):
    code, rep, cache = stark_default
    assert code == 0
    checks = {c["identity"]: c for c in rep["checks"]}
    assert checks["petersson_vs_3logeps"]["pass"]
    assert checks["Reg_L = 3 log^2 eps"]["pass"]
    assert json.loads(cache.read_text())["delta"]
    # the independence heuristic is reported as a warning
    assert rep["n_warnings"] == 1


def test_stark_partial_and_cache(stark_default, tmp_path):
    _, full, cache = stark_default
    assert main(["stark", "--skip-delta-search", "--out", str(tmp_path / "p.json")]) == 3
    assert json.loads((tmp_path / "p.json").read_text())["status"] == "partial"
    code, text = run(tmp_path, "stark", "--skip-delta-search", "--delta-cache", str(cache))
    assert code == 0
    assert json.loads(text) == full


def test_stark_quadrature_tolerance(tmp_path):
    code, text = run(tmp_path, "stark", "--quad-tol", "1e-15", "--skip-delta-search")
    assert code == 1
    checks = {c["identity"]: c for c in json.loads(text)["checks"]}
    assert not checks["petersson quadrature converged"]["pass"]
