import json

import pytest

from quartic_melnikov.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify(capsys):
    code, out, _ = call(capsys, "classify", "--a", "-1")
    assert code == 0
    assert json.loads(out)["regime"] == "saddle-loop"


def test_series_example(capsys):
    code, out, _ = call(capsys, "series", "--a", "1/2", "--order", "4")
    assert code == 0
    assert json.loads(out)["I0"]["h^2"] == "71/48"


@pytest.mark.parametrize("a", ["0", "8/9"])
def test_excluded_parameter_exit_1(capsys, a):
    code, _, err = call(capsys, "classify", "--a", a)
    assert code == 1 and "excluded" in err


def test_usage_errors_exit_64(capsys):
    assert call(capsys, "classify", "--a", "1", "--bogus")[0] == 64
    assert call(capsys, "nonsense")[0] == 64
    assert call(capsys, "classify", "--a", "x")[0] == 64


def test_integrals_csv(capsys):
    code, out, _ = call(capsys, "integrals", "--a", "-1", "--annulus", "unique", "--h-grid", "0.005:0.02:3",
                        "--derivatives")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "h,I0,I1,I2,dI0,dI1,dI2"
    assert len(lines) == 4 and lines[1].startswith("0.005,")


def test_level_outside_annulus_exit_1(capsys):
    code, _, err = call(capsys, "integrals", "--a", "-1", "--annulus", "unique", "--h-grid", "0.1:0.2:2")
    assert code == 1 and "LevelOutsideAnnulus" in err


def test_melnikov_with_oracle(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"f": {"x^0*y^1": "1"}, "g": {"x^0*y^1": "1/2", "x^1*y^1": "2"}}))
    code, out, _ = call(capsys, "melnikov", "--a", "-1", "--spec", str(spec), "--check-quadrature",
                        "--residuals-csv", str(tmp_path / "res.csv"))
    data = json.loads(out)
    assert code == 0 and data["melnikov"]["k"] == 1
    assert all(float(r["relative_error"]) < 1e-7 for r in data["oracle"])
    assert (tmp_path / "res.csv").read_text().startswith("annulus,h,closed_form")


def test_zeros_and_curve(tmp_path, capsys):
    form = tmp_path / "form.json"
    form.write_text(json.dumps({"k": 1, "alpha": ["-1/100", "1"]}))
    code, out, _ = call(capsys, "zeros", "--a", "-1", "--annulus", "unique", "--form", str(form), "--grid", "32")
    data = json.loads(out)
    assert code == 0 and data["count"] == 1 and data["bound"] == 7
    svg = tmp_path / "c.svg"
    code, out, _ = call(capsys, "curve", "--a", "-1", "--annulus", "unique", "--form", str(form),
                        "--h-grid", "0.001:0.03:5", "--svg", str(svg))
    assert code == 0 and out.splitlines()[0] == "h,M" and len(out.splitlines()) == 6
    assert svg.read_text().startswith("<svg")


def test_bounds_table(capsys):
    code, out, _ = call(capsys, "bounds", "--a", "3/4", "--n", "1")
    assert code == 0 and "interior-origin" in out and "exterior" in out
    code, out, _ = call(capsys, "bounds", "--a", "3/4", "--n", "2", "--format", "csv")
    assert "exterior,2,12" in out


def test_thm5_needs_a_for_other_targets(capsys):
    assert call(capsys, "thm5", "--target", "3")[0] == 1


def test_verify_exact_suite_and_determinism(tmp_path, capsys):
    code, out, _ = call(capsys, "verify", "--suite", "exact", "--seed", "7", "--json")
    assert code == 0
    first = json.loads(out)
    assert first["summary"] == "2/2 criteria passed"
    code, out2, _ = call(capsys, "series", "--a", "3/4", "--order", "6")
    code, out3, _ = call(capsys, "series", "--a", "3/4", "--order", "6")
    assert out2 == out3


def test_output_file(tmp_path, capsys):
    code, out, _ = call(capsys, "annuli", "--a", "2", "--output-dir", str(tmp_path), "--out", "ann.json")
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "ann.json").read_text())["regime"] == "global-center"
