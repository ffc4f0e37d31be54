import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from diagah.cli import element_from_spec, main
from diagah.demos import build_demo, goodearl
from diagah.errors import ParseError, UnknownDemo, ValidationError
from diagah.sysfile import dump_system, load_system, parse_system

DATA = Path(__file__).parent / "data"


def run(argv, capsys):
    status = main(argv)
    out = capsys.readouterr()
    return status, out.out, out.err


def test_parse_shipped_demo():
    sys_ = parse_system(DATA / "goodearl3.yaml")
    assert sys_.n_stages == 3
    assert [sys_.summand(i, 0).size for i in (1, 2, 3)] == [1, 5, 25]


def test_parse_nonunital_names_bond():
    with pytest.raises(ValidationError) as exc:
        parse_system(DATA / "nonunital.yaml")
    assert any("bond 1" in v for v in exc.value.violations)


def test_parse_errors_carry_location(tmp_path):
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ParseError):
        parse_system(empty)
    with pytest.raises(ParseError, match=r"bad_map.yaml:11: field 'maps'\[1\]"):
        parse_system(DATA / "bad_map.yaml")
    with pytest.raises(ParseError):
        parse_system(tmp_path / "missing.yaml")


def test_roundtrip_all_demos():
    for name in ("goodearl", "identity", "two-summand"):
        s = build_demo(name, 3)
        again = load_system(dump_system(s))
        for b1, b2 in zip(s.bonds, again.bonds):
            assert b1.partial.keys() == b2.partial.keys()
            for key in b1.partial:
                for m1, m2 in zip(b1.partial[key].maps, b2.partial[key].maps):
                    assert np.array_equal(m1.table, m2.table)


def test_unknown_demo():
    with pytest.raises(UnknownDemo):
        build_demo("cantor")


def test_validate_command(capsys):
    status, out, _ = run(["validate", "--input", str(DATA / "goodearl3.yaml")], capsys)
    assert status == 0 and "valid, 3 stages" in out
    status, out, _ = run(["validate", "--input", str(DATA / "nonunital.yaml")], capsys)
    assert status == 1 and "not unital" in out


def test_simplicity_command(capsys):
    status, out, _ = run(["simplicity", "--demo", "goodearl", "--horizon", "4"], capsys)
    assert status == 0 and "0 not covered" in out
    status, out, _ = run(["simplicity", "--demo", "identity", "--horizon", "6", "--format", "csv"], capsys)
    assert status == 2 and out.splitlines()[1].endswith("FAIL,6")
    status, out, _ = run(["simplicity", "--demo", "goodearl", "--center", "0.5", "--radius", "0.1",
                          "--horizon", "4"], capsys)
    assert status == 0 and "Covered, j0 = 2" in out


def test_property_p_command(capsys, tmp_path):
    cert_path = tmp_path / "cert.json"
    status, out, _ = run(["property-p", "--demo", "goodearl", "--eps", "0.3", "--x0", "0.5",
                          "--horizon", "4", "--certificate", str(cert_path)], capsys)
    assert status == 0 and "claimed bound 2 eps = 0.6" in out
    assert json.loads(cert_path.read_text())["certified_stage"] == 2
    status, out, _ = run(["property-p", "--demo", "identity", "--eps", "0.3", "--x0", "0.5",
                          "--horizon", "6"], capsys)
    assert status == 2 and out.startswith("undetermined")


def test_corner_command(capsys):
    status, out, _ = run(["corner", "--demo", "goodearl", "--eps", "0.3", "--x0", "0.5", "--format", "csv"], capsys)
    assert status == 0 and "achieved," in out
    status, _, _ = run(["corner", "--demo", "identity", "--eps", "0.1", "--x0", "0.5"], capsys)
    assert status == 2


def test_invert_command(capsys, tmp_path):
    status, out, _ = run(["invert-approx", "--demo", "goodearl", "--stages", "3", "--element", "const:1",
                          "--eps", "0.1"], capsys)
    assert status == 0 and "distance (recomputed) = 0.0" in out
    trace = tmp_path / "trace.json"
    status, out, _ = run(["invert-approx", "--input", str(DATA / "goodearl3.yaml"), "--element",
                          "shift:0.5", "--eps", "0.1", "--trace", str(trace)], capsys)
    assert status == 0
    assert json.loads(trace.read_text())["distance"] < 0.1


def test_errors_exit_one(capsys):
    status, _, err = run(["validate", "--input", "/nonexistent.yaml"], capsys)
    assert status == 1 and "error" in err
    status, _, _ = run(["property-p", "--demo", "goodearl", "--eps", "-1"], capsys)
    assert status == 1
    status, _, _ = run(["simplicity", "--demo", "goodearl", "--horizon", "9"], capsys)
    assert status == 1


def test_reports_are_deterministic(capsys):
    argv = ["invert-approx", "--demo", "goodearl", "--stages", "3", "--element", "shift:0.5", "--eps", "0.1"]
    assert run(argv, capsys) == run(argv, capsys)


def test_demo_command_writes_yaml(capsys, tmp_path):
    out = tmp_path / "ts.yaml"
    assert main(["demo", "two-summand", "--stages", "3", "--out", str(out)]) == 0
    assert parse_system(out).n_stages == 3


def test_element_specs():
    X = goodearl(2).summand(1, 0).space
    assert element_from_spec("coord", X, 1).values[-1, 0, 0] == 1.0
    assert element_from_spec("bump:0.5:0.1", X, 2).values[50, 1, 1] == 1.0
    with pytest.raises(ParseError):
        element_from_spec("wiggle", X, 1)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "diagah", "validate", "--demo", "two-summand"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "valid" in proc.stdout
