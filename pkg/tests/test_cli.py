import json

import numpy as np
import pytest

from conftest import GOLDEN
from wkexpansion.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFY, main
from wkexpansion.polycore import MultiPoly


@pytest.fixture
def ho_file(tmp_path):
    f = tmp_path / "ho.json"
    f.write_text(json.dumps({"dim": 1, "terms": [{"coeff": "1/2", "exponents": [2]}]}))
    return str(f)


def test_expand_writes_golden_w2(tmp_path, ho_file):
    out = tmp_path / "out"
    assert main(["expand", "--potential", ho_file, "--order", "2", "--out", str(out)]) == EXIT_OK
    assert (out / "W2.txt").read_text() == (GOLDEN / "harmonic_W2.txt").read_text()
    assert json.loads((out / "summary.json").read_text())[2]["terms"] == 4


def test_expand_order_zero(tmp_path, ho_file):
    out = tmp_path / "k0"
    assert main(["expand", "--potential", ho_file, "--order", "0", "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.glob("W*.txt")) == ["W0.txt"]
    w0 = MultiPoly.parse((out / "W0.txt").read_text())
    assert str(w0) == "1"


def test_expand_ymqm_parity_summary(tmp_path):
    out = tmp_path / "ym"
    assert main(["expand", "--potential", "ymqm", "--order", "4", "--out", str(out)]) == EXIT_OK
    rows = json.loads((out / "summary.json").read_text())
    assert [r["p_parity"] for r in rows] == ["even", "odd", "even", "odd", "even"]


def test_partition_harmonic_matches_closed_form(tmp_path, ho_file):
    out = tmp_path / "z"
    args = ["partition", "--potential", ho_file, "--order", "4", "--hbar", "1",
            "--tmin", "0.1", "--tmax", "0.5", "--tsteps", "5", "--basis-size", "400", "--omega", "1", "--out", str(out)]
    assert main(args) == EXIT_OK
    text = (out / "partition.csv").read_text()
    assert text.startswith("# potential=")
    data = np.genfromtxt(text.splitlines()[1:], delimiter=",", names=True)
    x = data["t"]
    np.testing.assert_allclose(data["Z_exact"], 1 / (2 * np.sinh(x / 2)), rtol=1e-10)
    assert np.max(np.abs(data["Zsum"] / data["Z_exact"] - 1)) <= 1e-6


def test_partition_is_deterministic(tmp_path):
    args = ["partition", "--potential", "quartic", "--order", "2", "--tmin", "0.5", "--tsteps", "3", "--basis-size", "60"]
    outs = []
    for name in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / name)]) == EXIT_OK
        outs.append((tmp_path / name / "partition.csv").read_bytes())
    assert outs[0] == outs[1]


def test_partition_small_t_needs_larger_basis(capsys):
    args = ["partition", "--potential", "quartic", "--tmin", "0.05", "--tsteps", "1", "--basis-size", "20"]
    assert main(args) == EXIT_NUMERICAL
    assert "basis size" in capsys.readouterr().err


def test_partition_ymqm_full_space_fails_with_hint(capsys):
    assert main(["partition", "--potential", "ymqm", "--tsteps", "1"]) == EXIT_NUMERICAL
    assert "--box" in capsys.readouterr().err


def test_partition_ymqm_box(capsys):
    assert main(["partition", "--potential", "ymqm", "--box", "3,3", "--tsteps", "1", "--tmin", "1"]) == EXIT_OK
    assert "domain=box:3.0,3.0" in capsys.readouterr().out


@pytest.mark.parametrize("args", [
    ["expand", "--potential", "missing.json"],
    ["expand", "--potential", "harmonic", "--order", "9"],
    ["partition", "--potential", "harmonic", "--tsteps", "0"],
    ["partition", "--potential", "harmonic", "--tmin", "-1"],
    ["partition", "--potential", "ymqm", "--box", "1,2,3"],
    ["expand"],
    ["bogus"],
    [],
])
def test_config_errors(args):
    assert main(args) == EXIT_CONFIG


def test_bad_json_reports_line(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text('{"dim": 1,\n "terms": [}\n')
    assert main(["expand", "--potential", str(f)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize("case", ["forms", "stationary", "ymqm", "ho", "momentum"])
def test_verify_cases_pass(case, tmp_path):
    assert main(["verify", case, "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / f"verify_{case}.json").read_text())
    assert report["passed"]


def test_verify_flag_form_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--verify", "stationary", "--seed", "5", "--out", str(a)]) == EXIT_OK
    assert main(["verify", "stationary", "--seed", "5", "--out", str(b)]) == EXIT_OK
    assert (a / "verify_stationary.json").read_bytes() == (b / "verify_stationary.json").read_bytes()


def test_verify_ymqm_reports_order_four(tmp_path):
    main(["verify", "ymqm", "--out", str(tmp_path)])
    checks = {c["name"]: c for c in json.loads((tmp_path / "verify_ymqm.json").read_text())["checks"]}
    assert checks["first_correction_order[ymqm]"]["value"] == 4


def test_verify_quartic_reports_literal_scaling_failure(tmp_path):
    """The absolute-error ratio criterion fails (ratio 2^(K+1)); the exit code says so."""
    assert main(["verify", "quartic", "--out", str(tmp_path)]) == EXIT_VERIFY
    checks = json.loads((tmp_path / "verify_quartic.json").read_text())["checks"]
    assert all(c["passed"] for c in checks if c["name"].startswith("rel_error_ratio"))
    assert not any(c["passed"] for c in checks if c["name"].startswith("abs_error_ratio"))
