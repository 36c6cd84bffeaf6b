from __future__ import annotations

import json
import os
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from f2lab import io
from f2lab.gf2_core import GroupSpec, span
from f2lab.setops import GroupSet


def header(p=2, n=3, **kw):
    return {"schema": io.SCHEMA, "kind": "set", "p": p, "n": n, **kw}


@given(st.sampled_from([(2, 1), (2, 3), (2, 5), (3, 2), (5, 2)]), st.data())
def test_round_trip_is_byte_exact(pn, data):
    g = GroupSpec(*pn)
    bits = np.array(data.draw(st.lists(st.booleans(), min_size=g.order, max_size=g.order)), dtype=bool)
    S = GroupSet(g, bits)
    for enc in ("hexmask", "points"):
        text = io.dumps(io.set_to_json(S, enc))
        back = io.set_from_json(json.loads(text))
        assert back == S
        assert io.dumps(io.set_to_json(back, enc)) == text


def test_hexmask_layout():
    g = GroupSpec(2, 3)
    S = GroupSet.from_points(g, [0, 2, 5, 7])
    assert io.set_to_json(S)["data"] == "a5"


def test_points_accept_digit_lists():
    S = io.set_from_json(header(p=3, n=2, encoding="points", data=[[1, 0], [0, 2], 4]))
    assert S.points().tolist() == [1, 4, 6]
    assert io.set_from_json(header(encoding="points", data=[])).card == 0


@pytest.mark.parametrize(
    "obj,err",
    [
        (header(encoding="hexmask", data="a5ff"), io.MaskLengthError),
        (header(n=2, encoding="hexmask", data="f1"), io.StrayBitsError),
        (header(p=4, encoding="points", data=[]), io.NotPrimeError),
        (header(p=3, n=2, encoding="points", data=[[1, 3]]), io.DigitRangeError),
        (header(encoding="points", data=[8]), io.DigitRangeError),
        (header(encoding="points", data=[[1, 0]]), io.FormatError),
        (header(encoding="hexmask", data="zz"), io.FormatError),
        (header(encoding="base64", data=""), io.FormatError),
        ({**header(encoding="points", data=[]), "schema": "other/9"}, io.FormatError),
        ({**header(encoding="points", data=[]), "kind": "subspace"}, io.FormatError),
        ({"schema": io.SCHEMA, "kind": "set", "p": 2, "encoding": "points", "data": []}, io.FormatError),
    ],
)
def test_malformed_sets(obj, err):
    with pytest.raises(err):
        io.set_from_json(obj)


def test_error_names_field():
    with pytest.raises(io.FormatError) as exc:
        io.set_from_json(header(encoding="points", data=[1, True]))
    assert exc.value.field == "data[1]"


def test_subspace_round_trip():
    g = GroupSpec(3, 3)
    V = span([5, 7], g)
    back = io.subspace_from_json(json.loads(io.dumps(io.subspace_to_json(V))))
    assert back == V
    with pytest.raises(io.DigitRangeError):
        io.subspace_from_json({"schema": io.SCHEMA, "kind": "subspace", "p": 3, "n": 3, "basis": [27]})


def test_jsonable_rationals_and_arrays():
    out = io.jsonable({"a": Fraction(3, 8), "b": np.arange(3), "c": np.int64(4)})
    assert out == {"a": "3/8", "b": [0, 1, 2], "c": 4}


def test_atomic_write_leaves_no_temp(tmp_path):
    path = tmp_path / "sub" / "s.json"
    S = GroupSet.from_points(GroupSpec(2, 4), [1, 9])
    io.write_set(path, S, "points")
    io.write_set(path, S)
    assert io.read_set(path) == S
    assert os.listdir(path.parent) == ["s.json"]


def test_invalid_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema": \n  oops}')
    with pytest.raises(io.FormatError, match="line 2"):
        io.read_set(path)


def test_parse_rational():
    assert io.parse_rational("3/8") == Fraction(3, 8)
    assert io.parse_rational("0.25") == Fraction(1, 4)
    with pytest.raises(ValueError):
        io.parse_rational("1/0")
