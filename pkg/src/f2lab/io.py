"""JSON artifacts: sets, subspaces, colorings and reports, written atomically.

Set files look like

    {"schema": "f2lab/1", "kind": "set", "p": 2, "n": 3,
     "encoding": "hexmask", "data": "a5"}

with ``hexmask`` the little-endian bit-packed indicator (bit i of byte
i // 8 is element i) or ``points``, a sorted list of element indices (digit
lists are accepted on input).
"""

from __future__ import annotations

import dataclasses
import enum
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .gf2_core import Coset, GroupSpec, Subspace, is_prime
from .setops import GroupSet

SCHEMA = "f2lab/1"


class FormatError(ValueError):
    """A malformed artifact; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class NotPrimeError(FormatError):
    pass


class DigitRangeError(FormatError):
    pass


class MaskLengthError(FormatError):
    pass


class StrayBitsError(FormatError):
    pass


def _ambient(obj: dict) -> GroupSpec:
    for key in ("p", "n"):
        if not isinstance(obj.get(key), int) or isinstance(obj.get(key), bool):
            raise FormatError("missing or non-integer", key)
    p, n = obj["p"], obj["n"]
    if not is_prime(p):
        raise NotPrimeError(f"{p} is not prime", "p")
    if n < 0:
        raise FormatError("must be nonnegative", "n")
    return GroupSpec(p, n)


def _check_header(obj: Any, kind: str) -> None:
    if not isinstance(obj, dict):
        raise FormatError("top level must be an object")
    if obj.get("schema") != SCHEMA:
        raise FormatError(f"expected {SCHEMA!r}, got {obj.get('schema')!r}", "schema")
    if obj.get("kind", kind) != kind:
        raise FormatError(f"expected kind {kind!r}, got {obj.get('kind')!r}", "kind")


def set_to_json(S: GroupSet, encoding: str = "hexmask") -> dict:
    g = S.ambient
    if encoding == "hexmask":
        data: Any = np.packbits(S.bits, bitorder="little").tobytes().hex()
    elif encoding == "points":
        data = S.points().tolist()
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    return {"schema": SCHEMA, "kind": "set", "p": g.p, "n": g.n, "encoding": encoding, "data": data}


def set_from_json(obj: Any) -> GroupSet:
    _check_header(obj, "set")
    g = _ambient(obj)
    g.check_dense()
    enc, data = obj.get("encoding"), obj.get("data")
    if enc == "hexmask":
        if not isinstance(data, str):
            raise FormatError("hexmask must be a string", "data")
        try:
            raw = bytes.fromhex(data)
        except ValueError as exc:
            raise FormatError(f"not hexadecimal ({exc})", "data") from None
        want = (g.order + 7) // 8
        if len(raw) != want:
            raise MaskLengthError(f"{len(raw)} bytes for {g.order} elements (need {want})", "data")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        if bits[g.order :].any():
            raise StrayBitsError(f"bits set beyond element {g.order - 1}", "data")
        return GroupSet(g, bits[: g.order].astype(bool))
    if enc == "points":
        if not isinstance(data, list):
            raise FormatError("points must be a list", "data")
        idx = []
        for k, x in enumerate(data):
            if isinstance(x, list):
                if len(x) != g.n:
                    raise FormatError(f"point {k} has {len(x)} digits, expected {g.n}", f"data[{k}]")
                if any(not isinstance(c, int) or not 0 <= c < g.p for c in x):
                    raise DigitRangeError(f"point {k} has a digit outside [0, {g.p})", f"data[{k}]")
                idx.append(g.index(x))
            elif isinstance(x, int) and not isinstance(x, bool):
                if not 0 <= x < g.order:
                    raise DigitRangeError(f"index {x} outside [0, {g.order})", f"data[{k}]")
                idx.append(x)
            else:
                raise FormatError("points are integers or digit lists", f"data[{k}]")
        return GroupSet.from_indices(g, np.array(idx, dtype=np.int64))
    raise FormatError(f"unknown encoding {enc!r}", "encoding")


def subspace_to_json(V: Subspace) -> dict:
    g = V.ambient
    return {"schema": SCHEMA, "kind": "subspace", "p": g.p, "n": g.n, "basis": list(V.basis)}


def subspace_from_json(obj: Any) -> Subspace:
    from .gf2_core import span

    _check_header(obj, "subspace")
    g = _ambient(obj)
    basis = obj.get("basis")
    if not isinstance(basis, list):
        raise FormatError("basis must be a list", "basis")
    vs = []
    for k, x in enumerate(basis):
        if isinstance(x, list):
            if len(x) != g.n or any(not isinstance(c, int) or not 0 <= c < g.p for c in x):
                raise DigitRangeError(f"bad digit vector {x}", f"basis[{k}]")
            x = g.index(x)
        if not isinstance(x, int) or not 0 <= x < g.order:
            raise DigitRangeError(f"{x!r} is not an element of F_{g.p}^{g.n}", f"basis[{k}]")
        vs.append(x)
    return span(vs, g)


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def jsonable(obj: Any) -> Any:
    """Plain JSON data for reports: rationals become "P/Q" strings."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, GroupSet):
        return set_to_json(obj)
    if isinstance(obj, Subspace):
        return subspace_to_json(obj)
    if isinstance(obj, Coset):
        return {"rep": obj.rep, "base": subspace_to_json(obj.base)}
    if isinstance(obj, GroupSpec):
        return {"p": obj.p, "n": obj.n}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load(path: str | os.PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def read_set(path: str | os.PathLike) -> GroupSet:
    return set_from_json(_load(path))


def write_set(path: str | os.PathLike, S: GroupSet, encoding: str = "hexmask") -> None:
    write_atomic(path, dumps(set_to_json(S, encoding)))


def read_subspace(path: str | os.PathLike) -> Subspace:
    return subspace_from_json(_load(path))


def parse_rational(text: str) -> Fraction:
    """'P/Q', an integer, or a terminating decimal, read exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"{text!r} is not a rational like 3/8 or 0.25") from None
