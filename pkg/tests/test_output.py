import json

import numpy as np
from hypothesis import given, strategies as st

from haldane_hqc.output import fmt, header_lines, read_csv, write_csv, write_json


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_roundtrips(x):
    assert float(fmt(x)) == x


def test_csv_roundtrip(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["n", "e", "ok"], [(1, 0.1, True), (np.int64(2), np.float64(-3.5), False)],
                  header_lines({"seed": 1, "axis": "z"}))
    header, rows = read_csv(p)
    assert header == ["axis: z", "seed: 1"]
    assert rows == [{"n": "1", "e": "0.10000000000000001", "ok": "true"},
                    {"n": "2", "e": "-3.5", "ok": "false"}]


def test_json_plain_values(tmp_path):
    doc = {"u": np.array([[1 + 2j, 0], [0, 1]]), "x": np.float64(0.5), "k": np.int32(3), "b": np.bool_(True)}
    p = write_json(tmp_path / "a.json", doc)
    back = json.loads(p.read_text())
    assert back["u"] == [[[1.0, 2.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
    assert back["x"] == 0.5 and back["k"] == 3 and back["b"] is True
    assert list(back) == sorted(back)
