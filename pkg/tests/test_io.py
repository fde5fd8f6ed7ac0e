import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from covbal import simulate
from covbal.errors import InputError
from covbal.io import dataset_from_columns, format_float, read_columns, to_json, write_csv


def test_csv_round_trip(tmp_path):
    d = simulate.generate(simulate.S2)
    path = tmp_path / "s2.csv"
    write_csv(d, path)
    cols = read_columns(path)
    back = dataset_from_columns(cols, "y", "w", ["x1", "x2", "x3"], "z")
    np.testing.assert_array_equal(back.covariates, d.covariates)
    np.testing.assert_array_equal(back.outcome, d.outcome)
    np.testing.assert_array_equal(back.instrument, d.instrument)
    assert back.names == d.names


def test_shipped_fixture_matches_generator():
    from golden_cases import FIXTURES

    cols = read_columns(FIXTURES / "s1.csv")
    d = dataset_from_columns(cols, "y", "w", ["x1", "x2", "x3"])
    np.testing.assert_array_equal(d.outcome, simulate.generate(simulate.S1).outcome)


@pytest.mark.parametrize(
    "body, message",
    [
        ("y,w,x\n1,1,\n2,0,1\n", "missing"),
        ("y,w,x\n1,1,abc\n", "non-numeric"),
        ("y,w,x\n1,1\n", "expected 3 fields"),
        ("y,w,y\n1,1,1\n", "duplicate"),
        ("y,w,x\n", "no data rows"),
        ("", "empty"),
    ],
)
def test_bad_csv(tmp_path, body, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(InputError, match=message):
        read_columns(path)


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="cannot open"):
        read_columns(tmp_path / "nope.csv")


def test_unknown_column(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("y,w,x\n1,1,0\n2,0,1\n")
    with pytest.raises(InputError, match="columns not found"):
        dataset_from_columns(read_columns(path), "y", "w", ["q"])


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    with pytest.raises(ValueError):
        format_float(float("nan"))


def test_json_layout():
    text = to_json({"b": [1, 2.5], "a": None, "c": {"z": True, "y": "s"}, "d": []})
    assert text == (
        '{\n  "a": null,\n  "b": [\n    1,\n    2.5\n  ],\n'
        '  "c": {\n    "y": "s",\n    "z": true\n  },\n  "d": []\n}\n'
    )


json_values = st.recursive(
    st.none()
    | st.booleans()
    | st.integers(-(2**53), 2**53)
    | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(max_size=8),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=6), inner, max_size=4),
    max_leaves=20,
)


@given(json_values)
def test_json_round_trip_is_byte_identical(obj):
    text = to_json(obj)
    assert to_json(json.loads(text)) == text
