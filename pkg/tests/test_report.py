import numpy as np
import pytest
from hypothesis import given, strategies as st

from krflab.errors import MalformedCSV
from krflab.report import csv_text, emit_report, envelope_violations, fmt, read_csv, svg_chart


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def test_fmt_nan():
    assert fmt(float("nan")) == "nan"


def test_csv_round_trip(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(csv_text(("t", "scalar_min", "env_scalar"), [(0.0, -0.5, -0.5), (0.1, -0.4, -0.45)]))
    tab = read_csv(p)
    np.testing.assert_array_equal(tab["scalar_min"], [-0.5, -0.4])


@pytest.mark.parametrize(
    "text",
    ["", "t,a\n", "a,b\n1,2\n", "t,a\n1,2\n3\n", "t,a\n1,x\n"],
)
def test_malformed(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(MalformedCSV):
        read_csv(p)


def test_missing_file(tmp_path):
    with pytest.raises(MalformedCSV):
        read_csv(tmp_path / "nope.csv")


def test_envelope_violations_sign_convention():
    tab = {
        "t": np.array([0.0, 1.0]),
        "scalar_min": np.array([-1.0, -0.2]),
        "env_scalar": np.array([-1.0, -0.3]),
        "scalar_max": np.array([3.0, 4.0]),
        "env_scalar_upper": np.array([3.0, 3.5]),
        "ricci_min": np.array([0.1, 0.2]),
        "env_ricci": np.array([np.nan, np.nan]),
    }
    v = envelope_violations(tab)
    assert v["scalar_min"] == 0.0
    assert v["scalar_max"] == pytest.approx(0.5)
    assert "ricci_min" not in v


def test_svg_is_wellformed():
    import xml.etree.ElementTree as ET

    svg = svg_chart([0, 1, 2], [("a", [1, 2, np.nan], False), ("b", [0, 0, 0], True)], "demo")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2


def test_emit_report(tmp_path):
    p = tmp_path / "run.csv"
    p.write_text(csv_text(("t", "scalar_min", "env_scalar"), [(0.0, -0.5, -0.5), (1.0, -0.1, -0.2)]))
    out = emit_report([p], tmp_path / "rep")
    names = sorted(q.name for q in out)
    assert names == ["run_scalar_min.svg", "summary.txt"]
    assert "run\tscalar_min\t0" in (tmp_path / "rep" / "summary.txt").read_text()
    with pytest.raises(MalformedCSV):
        emit_report([], tmp_path / "rep")
