# tests/test_cli.py

import json
import os

import pytest

import cli
from conftest import DATA_DIR


def data(name):
    return os.path.join(DATA_DIR, name)


def run_json(argv, tmp_path, environ=None):
    out = tmp_path / "report.json"
    code = cli.main(argv + ["--format", "json", "--output", str(out)], environ or {})
    report = json.loads(out.read_text(encoding="utf-8")) if out.exists() else None
    return code, report


def test_linvariant_of_a_cocycle(tmp_path):
    code, report = run_json(["linvariant", "--cocycle", data("periodic_p3.json"), "--branch", "u:3",
                             "--depth", "5", "--precision", "12"], tmp_path)
    assert code == 0
    assert report["depth"] == 5
    assert report["config"]["branch"] == ["u:3"]
    assert report["config"]["inputs"]["cocycle"].endswith("periodic_p3.json")


def test_linvariant_of_a_tate_curve(tmp_path):
    code, report = run_json(["linvariant", "--j", "1/243", "--p", "3", "--branch", "iwasawa",
                             "--precision", "10"], tmp_path)
    assert code == 0
    assert report["ord"] == 5
    assert report["l_invariant"] == report["ratio"]


def test_tate_q_without_a_branch(tmp_path):
    code, report = run_json(["tate-q", "--j", "3^-2 * 2 + O(3^8)"], tmp_path)
    assert code == 0
    assert report["ord"] == 2
    assert "log" not in report


def test_theta_tsv(tmp_path):
    out = tmp_path / "theta.tsv"
    code = cli.main(["theta", "--data", data("gross_uniform.json"), "--level", "n=[0]", "--format", "tsv",
                     "--output", str(out)], {})
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    rows = [line.split() for line in lines if not line.startswith("#")]
    assert rows[0] == ["level", "element", "theta"]
    assert len(rows) == 3


def test_lfun_eval(tmp_path):
    code, report = run_json(["lfun-eval", "--data", data("gross_uniform.json"), "--chi", data("chi_quadratic.json"),
                             "--precision", "12"], tmp_path)
    assert code == 0
    assert report["theta"].startswith("0 + O(5^")


def test_lfun_deriv_reports_the_leading_term(tmp_path):
    code, report = run_json(["lfun-deriv", "--data", data("gross_periodic.json"), "--branch", "u:3", "--order", "1",
                             "--depth", "7", "--precision", "12"], tmp_path)
    assert code == 0
    assert [row[0] for row in report["rows"]] == [0, 1]
    assert report["leading_term"]["rank"] == 1
    assert report["leading_term"]["agreement"] >= 6
    assert report["leading_term"]["main_agreement"] is None
    assert report["leading_term"]["l_invariant_digits"][0] >= 10


def test_lfun_deriv_checks_the_main_term_when_the_branch_kills_qtilde(tmp_path):
    code, report = run_json(["lfun-deriv", "--data", data("gross_periodic.json"), "--branch", "u:12", "--order", "1",
                             "--depth", "7", "--precision", "12"], tmp_path)
    assert code == 0
    assert report["leading_term"]["main_agreement"] >= 6


def test_local_factor(tmp_path):
    code, report = run_json(["local-factor", "--params", data("local_toric.json")], tmp_path)
    assert code == 0
    assert report["value"] == "3/4"


def test_check_passes(tmp_path):
    code, report = run_json(["check", "multiplier", "--precision", "12"], tmp_path)
    assert code == 0
    assert report["passed"] is True
    assert report["suites"] == ["multiplier"]


def test_precision_resolution(tmp_path):
    env = {"PADICX_PRECISION": "9"}
    _, report = run_json(["check", "multiplier"], tmp_path, env)
    assert report["config"]["precision"] == 9
    _, report = run_json(["check", "multiplier", "--precision", "11"], tmp_path, env)
    assert report["config"]["precision"] == 11


@pytest.mark.parametrize("argv", [
    ["linvariant"],
    ["linvariant", "--cocycle", "x.json", "--j", "1/3"],
    ["check", "nosuch"],
    ["check", "--precision", "1"],
    ["theta", "--data", "x.json", "--format", "xml"],
    ["linvariant", "--cocycle", "periodic_p3.json", "--branch", "bogus"],
    ["linvariant", "--cocycle", "periodic_p3.json"],
])
def test_usage_errors_exit_3(argv, capsys):
    argv = [data(a) if a.endswith("p3.json") else a for a in argv]
    assert cli.main(argv, {}) == 3
    assert "Usage error" in capsys.readouterr().err


def test_bad_environment_is_a_usage_error():
    assert cli.main(["check", "multiplier"], {"PADICX_PRECISION": "many"}) == 3


def test_validation_errors_exit_1(capsys):
    assert cli.main(["linvariant", "--j", "5", "--p", "3", "--branch", "iwasawa"], {}) == 1
    assert "IntegralJInvariant" in capsys.readouterr().err
    assert cli.main(["theta", "--data", data("missing.json")], {}) == 1
    assert "InvalidFile" in capsys.readouterr().err
