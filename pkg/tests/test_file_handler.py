# tests/test_file_handler.py

import json
import os
from fractions import Fraction

import pytest

import errors
import file_handler
import harmonic
from conftest import N


def test_level_labels():
    assert file_handler.parse_level("n=[1, 2]") == (1, 2)
    assert file_handler.parse_level("n=[]") == ()
    assert file_handler.level_label((1, 2)) == "n=[1,2]"
    with pytest.raises(errors.InvalidFile):
        file_handler.parse_level("1,2")


def test_unreadable_files(tmp_path):
    with pytest.raises(errors.InvalidFile):
        file_handler.read_json(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{\"p\": ", encoding="utf-8")
    with pytest.raises(errors.InvalidFile):
        file_handler.read_json(str(broken))


def test_schema_violations_are_listed(tmp_path):
    path = tmp_path / "cocycle.json"
    path.write_text(json.dumps({"p": "three", "kind": "spiral"}), encoding="utf-8")
    with pytest.raises(errors.InvalidFile) as info:
        file_handler.load_cocycle(str(path), N)
    assert len(info.value.violations) == 2


def test_load_cocycles(data_dir):
    boundary = file_handler.load_cocycle(os.path.join(data_dir, "boundary_p5.json"), N)
    assert boundary.p == 5
    assert harmonic.validate(boundary).ok
    periodic = file_handler.load_cocycle(os.path.join(data_dir, "periodic_p3.json"), N)
    assert periodic.qtilde.v == 1
    assert harmonic.validate(periodic).ok


def test_periodic_cocycle_needs_qtilde(tmp_path):
    path = tmp_path / "cocycle.json"
    path.write_text(json.dumps({"p": 3, "kind": "periodic", "atoms": {"1": "1", "2": "-1"}}), encoding="utf-8")
    with pytest.raises(errors.InvalidFile):
        file_handler.load_cocycle(str(path), N)


def test_load_ingested_data(data_dir):
    data, cocycles = file_handler.load_gross_data(os.path.join(data_dir, "gross_uniform.json"), N)
    assert cocycles == []
    assert data.levels() == [(0,), (1,), (2,)]
    assert data.validate() == []
    chi = file_handler.load_character(os.path.join(data_dir, "chi_quadratic.json"), data.tower)
    assert chi.angles == (Fraction(1, 2),)
    direction = file_handler.load_direction(os.path.join(data_dir, "direction.json"), 5, N)
    assert direction.s[0].is_close(1, N)


def test_missing_alpha(tmp_path, data_dir):
    path = tmp_path / "gross.json"
    tower = os.path.join(data_dir, "tower_cyclic_p5.json")
    path.write_text(json.dumps({"tower": tower, "values": {"n=[0]": {"0": "1"}}}), encoding="utf-8")
    with pytest.raises(errors.InvalidFile):
        file_handler.load_gross_data(str(path), N)


def test_load_local_params(data_dir):
    m = file_handler.load_local_params(os.path.join(data_dir, "local_toric.json"))
    assert m.operation == "toric"
    assert m.case == "inert-special"
    assert m.params["abs_varpi"] == "1/3"


REPORT = {"p": 3, "columns": ["k", "value"], "rows": [[0, "1"], [1, "a|b"]]}


def test_render_json_is_sorted():
    text = file_handler.render(REPORT, "json")
    assert json.loads(text)["rows"] == [[0, "1"], [1, "a|b"]]
    assert text.index("\"columns\"") < text.index("\"p\"")


def test_render_tsv():
    lines = file_handler.render(REPORT, "tsv").splitlines()
    assert lines[0] == "# p = 3"
    assert lines[1].split() == ["k", "value"]
    assert lines[3].split("\t") == ["1", "a|b"]


def test_render_html():
    html = file_handler.render(REPORT, "html", "Series")
    assert "<table>" in html
    assert "<strong>p</strong>" in html
    assert "<title>Series</title>" in html


def test_render_key_value_report():
    lines = file_handler.render({"l_invariant": "x", "depth": 4}, "tsv").splitlines()
    assert lines[0].split() == ["key", "value"]
    assert lines[1].split() == ["depth", "4"]


def test_unknown_format():
    with pytest.raises(errors.UsageError):
        file_handler.render(REPORT, "xml")
