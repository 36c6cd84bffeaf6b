"""Linear algebra over F_p^n: group elements, canonical subspaces, cosets.

Elements of F_p^n are stored as plain integers: the point with digits
``(x_0, ..., x_{n-1})`` is ``sum(x_i * p**i)``.  For p = 2 this is the usual
bit mask and addition is XOR.  Integer order on these indices is the order
used everywhere for "lexicographically least" (the last coordinate is the most
significant one).

Subspaces are kept in a reduced echelon form keyed on the *highest* nonzero
digit of each row.  With that choice the coordinate map of a subspace is
monotone, so the least element of a coset is simply its reduced form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_ORDER = 1 << 28


class AmbientMismatch(ValueError):
    """Two objects live in different groups."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class GroupSpec:
    """The additive group F_p^n."""

    p: int
    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p!r}")
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n!r}")

    @property
    def order(self) -> int:
        return self.p**self.n

    def check_dense(self, limit: int | None = None) -> None:
        """Refuse dense arrays larger than ``limit`` (default MAX_ORDER)."""
        limit = MAX_ORDER if limit is None else limit
        if self.order > limit:
            raise ValueError(
                f"F_{self.p}^{self.n} has {self.order} elements, above the dense cap {limit}"
            )

    # -- scalar element arithmetic -------------------------------------------------

    def check(self, x: int) -> int:
        x = int(x)
        if not 0 <= x < self.order:
            raise ValueError(f"{x} is not an element of F_{self.p}^{self.n}")
        return x

    def digits(self, x: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.n):
            x, r = divmod(x, self.p)
            out.append(r)
        return tuple(out)

    def index(self, digits: Sequence[int]) -> int:
        if len(digits) != self.n:
            raise ValueError(f"expected {self.n} digits, got {len(digits)}")
        x = 0
        for d in reversed(digits):
            d = int(d)
            if not 0 <= d < self.p:
                raise ValueError(f"digit {d} out of range for p={self.p}")
            x = x * self.p + d
        return x

    def add(self, x: int, y: int) -> int:
        if self.p == 2:
            return x ^ y
        return self.index([(a + b) % self.p for a, b in zip(self.digits(x), self.digits(y))])

    def neg(self, x: int) -> int:
        if self.p == 2:
            return x
        return self.index([(-a) % self.p for a in self.digits(x)])

    def sub(self, x: int, y: int) -> int:
        return self.add(x, self.neg(y))

    def scale(self, a: int, x: int) -> int:
        a %= self.p
        if self.p == 2:
            return x if a else 0
        return self.index([(a * d) % self.p for d in self.digits(x)])

    def dot(self, x: int, y: int) -> int:
        if self.p == 2:
            return (x & y).bit_count() & 1
        return sum(a * b for a, b in zip(self.digits(x), self.digits(y))) % self.p

    def weight(self, x: int) -> int:
        if self.p == 2:
            return x.bit_count()
        return sum(1 for d in self.digits(x) if d)

    def format(self, x: int) -> str:
        """Digits written x_0 x_1 ... x_{n-1}."""
        return "".join(str(d) for d in self.digits(x)) if self.n else "()"

    def projective_rep(self, x: int) -> int:
        """Generator of the line through x whose highest nonzero digit is 1."""
        if x == 0:
            raise ValueError("0 spans no line")
        if self.p == 2:
            return x
        top = _digit(x, _top_digit_pos(x, self.p), self.p)
        return self.scale(pow(top, -1, self.p), x)

    # -- vectorised helpers -------------------------------------------------------

    def elements(self) -> np.ndarray:
        self.check_dense()
        return np.arange(self.order, dtype=np.int64)

    def digit_array(self, xs: np.ndarray) -> np.ndarray:
        """(len(xs), n) array of digits."""
        return _digits_array(np.asarray(xs, dtype=np.int64), self.p, self.n)

    def from_digit_array(self, ds: np.ndarray) -> np.ndarray:
        return np.asarray(ds, dtype=np.int64) @ _powers(self.p, self.n)

    def add_array(self, xs: np.ndarray, t: int | np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.p == 2:
            return xs ^ np.asarray(t, dtype=np.int64)
        td = self.digit_array(np.atleast_1d(np.asarray(t, dtype=np.int64)))
        return self.from_digit_array((self.digit_array(xs) + td) % self.p)

    def neg_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.p == 2:
            return xs
        return self.from_digit_array((-self.digit_array(xs)) % self.p)

    def scale_array(self, a: int, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        a %= self.p
        if self.p == 2:
            return xs if a else np.zeros_like(xs)
        return self.from_digit_array((a * self.digit_array(xs)) % self.p)

    def dot_array(self, xs: np.ndarray, y: int) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.p == 2:
            return _popcount_parity(xs & y)
        return (self.digit_array(xs) @ np.asarray(self.digits(y), dtype=np.int64)) % self.p

    def projective_points(self) -> np.ndarray:
        """Canonical generators of all 1-dim subspaces, ascending."""
        xs = self.elements()[1:]
        if self.p == 2:
            return xs
        ds = self.digit_array(xs)
        top = ds[np.arange(len(xs)), _top_positions(ds)]
        return xs[top == 1]


def _popcount_parity(xs: np.ndarray) -> np.ndarray:
    xs = xs.astype(np.uint64)
    for s in (32, 16, 8, 4, 2, 1):
        xs = xs ^ (xs >> np.uint64(s))
    return (xs & np.uint64(1)).astype(np.int64)


def _top_positions(ds: np.ndarray) -> np.ndarray:
    nz = ds != 0
    return ds.shape[1] - 1 - np.argmax(nz[:, ::-1], axis=1)


@lru_cache(maxsize=None)
def _powers(p: int, n: int) -> np.ndarray:
    return np.array([p**i for i in range(n)], dtype=np.int64)


def _digits_array(xs: np.ndarray, p: int, n: int) -> np.ndarray:
    out = np.empty(xs.shape + (n,), dtype=np.int64)
    rest = xs.copy()
    for i in range(n):
        out[..., i] = rest % p
        rest //= p
    return out


def _digit(x: int, pos: int, p: int) -> int:
    return (x // p**pos) % p


def _top_digit_pos(x: int, p: int) -> int:
    pos = -1
    i = 0
    while x:
        if x % p:
            pos = i
        x //= p
        i += 1
    return pos


# -- echelon form ---------------------------------------------------------------


def _rref(vs: Iterable[int], g: GroupSpec) -> tuple[int, ...]:
    """Canonical basis of span(vs), rows sorted by ascending pivot."""
    p = g.p
    if p == 2:
        rows: dict[int, int] = {}
        for v in vs:
            v = int(v)
            for b in sorted(rows, reverse=True):
                if (v >> b) & 1:
                    v ^= rows[b]
            if v:
                b = v.bit_length() - 1
                for b2 in rows:
                    if (rows[b2] >> b) & 1:
                        rows[b2] ^= v
                rows[b] = v
        return tuple(rows[b] for b in sorted(rows))

    drows: dict[int, list[int]] = {}
    for v in vs:
        d = list(g.digits(int(v)))
        for b in sorted(drows, reverse=True):
            c = d[b]
            if c:
                r = drows[b]
                d = [(x - c * y) % p for x, y in zip(d, r)]
        nz = [i for i, x in enumerate(d) if x]
        if nz:
            b = nz[-1]
            inv = pow(d[b], -1, p)
            d = [(x * inv) % p for x in d]
            for b2, r in drows.items():
                c = r[b]
                if c:
                    drows[b2] = [(x - c * y) % p for x, y in zip(r, d)]
            drows[b] = d
    return tuple(g.index(drows[b]) for b in sorted(drows))


def _pivot(row: int, g: GroupSpec) -> int:
    if g.p == 2:
        return row.bit_length() - 1
    return _top_digit_pos(row, g.p)


@dataclass(frozen=True)
class Subspace:
    """A linear subspace held by its canonical reduced echelon basis.

    Build instances with :func:`span`; the constructor trusts its input.
    """

    ambient: GroupSpec
    basis: tuple[int, ...]
    pivots: tuple[int, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pivots", tuple(_pivot(r, self.ambient) for r in self.basis))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def codim(self) -> int:
        return self.ambient.n - self.dim

    @property
    def size(self) -> int:
        return self.ambient.p**self.dim

    @property
    def group(self) -> GroupSpec:
        """F_p^dim, the group this subspace is isomorphic to."""
        return GroupSpec(self.ambient.p, self.dim)

    def reduce(self, x: int) -> int:
        """Least element of the coset x + V."""
        g = self.ambient
        if g.p == 2:
            for b, r in zip(reversed(self.pivots), reversed(self.basis)):
                if (x >> b) & 1:
                    x ^= r
            return x
        d = list(g.digits(x))
        for b, r in zip(reversed(self.pivots), reversed(self.basis)):
            c = d[b]
            if c:
                d = [(a - c * e) % g.p for a, e in zip(d, g.digits(r))]
        return g.index(d)

    def __contains__(self, x: int) -> bool:
        return self.reduce(int(x)) == 0

    def coords(self, x: int) -> int:
        """Coordinates of x (which must lie in V) as an element of F_p^dim."""
        if x not in self:
            raise ValueError(f"{x} is not in the subspace")
        p = self.ambient.p
        return sum(_digit(x, b, p) * p**j for j, b in enumerate(self.pivots))

    def from_coords(self, c: int) -> int:
        g = self.ambient
        x = 0
        for j, r in enumerate(self.basis):
            cj = _digit(c, j, g.p)
            if cj:
                x = g.add(x, g.scale(cj, r))
        return x

    def reduce_array(self, xs: np.ndarray) -> np.ndarray:
        g = self.ambient
        xs = np.asarray(xs, dtype=np.int64)
        if g.p == 2:
            xs = xs.copy()
            for b, r in zip(reversed(self.pivots), reversed(self.basis)):
                xs ^= ((xs >> b) & 1) * r
            return xs
        ds = g.digit_array(xs)
        for b, r in zip(reversed(self.pivots), reversed(self.basis)):
            ds = (ds - ds[:, b : b + 1] * np.asarray(g.digits(r), dtype=np.int64)) % g.p
        return g.from_digit_array(ds)

    def coords_array(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`coords`; members are not re-checked."""
        g = self.ambient
        xs = np.asarray(xs, dtype=np.int64)
        out = np.zeros_like(xs)
        for j, b in enumerate(self.pivots):
            out += ((xs // g.p**b) % g.p) * g.p**j
        return out

    def from_coords_array(self, cs: np.ndarray) -> np.ndarray:
        g = self.ambient
        cs = np.asarray(cs, dtype=np.int64)
        if g.p == 2:
            out = np.zeros_like(cs)
            for j, r in enumerate(self.basis):
                out ^= ((cs >> j) & 1) * r
            return out
        cd = _digits_array(cs, g.p, self.dim)
        rows = np.array([g.digits(r) for r in self.basis], dtype=np.int64).reshape(self.dim, g.n)
        return g.from_digit_array((cd @ rows) % g.p)

    def elements(self) -> np.ndarray:
        """All members, ascending."""
        return self.from_coords_array(np.arange(self.size, dtype=np.int64))

    def complement_reps(self) -> np.ndarray:
        """Canonical representatives of all cosets of V, ascending."""
        g = self.ambient
        free = [i for i in range(g.n) if i not in set(self.pivots)]
        cs = np.arange(g.p ** len(free), dtype=np.int64)
        cd = _digits_array(cs, g.p, len(free))
        return np.sort(cd @ np.array([g.p**i for i in free], dtype=np.int64).reshape(len(free)))

    def annihilator(self) -> "Subspace":
        """{y : y.x = 0 for all x in V} under the standard dot product."""
        g = self.ambient
        piv = set(self.pivots)
        rows_d = [g.digits(r) for r in self.basis]
        out = []
        for j in range(g.n):
            if j in piv:
                continue
            d = [0] * g.n
            d[j] = 1
            for rd, b in zip(rows_d, self.pivots):
                d[b] = (-rd[j]) % g.p
            out.append(g.index(d))
        return span(out, g)

    def is_subspace_of(self, other: "Subspace") -> bool:
        _same(self.ambient, other.ambient)
        return all(r in other for r in self.basis)

    def format(self) -> str:
        return "<" + ", ".join(self.ambient.format(r) for r in self.basis) + ">"


def _same(g: GroupSpec, h: GroupSpec) -> None:
    if g != h:
        raise AmbientMismatch(f"F_{g.p}^{g.n} vs F_{h.p}^{h.n}")


def span(vs: Iterable[int], ambient: GroupSpec) -> Subspace:
    vs = [ambient.check(v) for v in vs]
    return Subspace(ambient, _rref(vs, ambient))


def zero_space(ambient: GroupSpec) -> Subspace:
    return Subspace(ambient, ())


def full_space(ambient: GroupSpec) -> Subspace:
    return Subspace(ambient, tuple(ambient.p**i for i in range(ambient.n)))


def intersect(V: Subspace, W: Subspace) -> Subspace:
    _same(V.ambient, W.ambient)
    joint = span(V.annihilator().basis + W.annihilator().basis, V.ambient)
    return joint.annihilator()


def sum_spaces(V: Subspace, W: Subspace) -> Subspace:
    _same(V.ambient, W.ambient)
    return span(V.basis + W.basis, V.ambient)


@dataclass(frozen=True)
class Coset:
    """A translate rep + base; ``rep`` is always the least member."""

    base: Subspace
    rep: int

    @classmethod
    def of(cls, base: Subspace, x: int) -> "Coset":
        return cls(base, base.reduce(base.ambient.check(x)))

    @property
    def size(self) -> int:
        return self.base.size

    def __contains__(self, x: int) -> bool:
        return self.base.reduce(int(x)) == self.rep

    def elements(self) -> np.ndarray:
        return np.sort(self.base.ambient.add_array(self.base.elements(), self.rep))


def gaussian_binomial(n: int, k: int, q: int = 2) -> int:
    """Number of k-dim subspaces of F_q^n."""
    if not 0 <= k <= n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def enumerate_subspaces(V: Subspace, k: int) -> Iterator[Subspace]:
    """Every k-dim subspace of V once, ordered by pivot pattern then free digits."""
    m = V.dim
    if not 0 <= k <= m:
        raise ValueError(f"k={k} outside [0, {m}]")
    p = V.ambient.p
    for pivs in itertools.combinations(range(m), k):
        pivset = set(pivs)
        free_slots = [[i for i in range(b) if i not in pivset] for b in pivs]
        choices = [itertools.product(range(p), repeat=len(fs)) for fs in free_slots]
        for vals in itertools.product(*[list(c) for c in choices]):
            rows = []
            for b, fs, vs in zip(pivs, free_slots, vals):
                c = p**b
                for i, v in zip(fs, vs):
                    c += v * p**i
                rows.append(V.from_coords(c))
            yield Subspace(V.ambient, tuple(rows))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_uniform_subspace(n: int, d: int, seed=None, p: int = 2) -> Subspace:
    """Uniform d-dim subspace of F_p^n: span d random vectors, retry on rank loss."""
    if not 0 <= d <= n:
        raise ValueError(f"d={d} outside [0, {n}]")
    g = GroupSpec(p, n)
    rng = _rng(seed)
    while True:
        vs = rng.integers(0, g.order, size=d)
        V = Subspace(g, _rref((int(v) for v in vs), g))
        if V.dim == d:
            return V


@dataclass(frozen=True)
class InducedCoordinates:
    """Isomorphism between a subspace V and F_p^dim(V)."""

    space: Subspace

    @property
    def group(self) -> GroupSpec:
        return self.space.group

    def forward(self, x: int) -> int:
        return self.space.coords(x)

    def backward(self, c: int) -> int:
        return self.space.from_coords(c)

    def forward_array(self, xs: np.ndarray) -> np.ndarray:
        return self.space.coords_array(xs)

    def backward_array(self, cs: np.ndarray) -> np.ndarray:
        return self.space.from_coords_array(cs)

    def lift(self, W: Subspace) -> Subspace:
        """Image in the ambient group of a subspace of the induced group."""
        if W.ambient != self.group:
            raise AmbientMismatch("subspace is not in the induced group")
        return Subspace(self.space.ambient, tuple(self.backward(r) for r in W.basis))


def induced_coordinates(V: Subspace) -> InducedCoordinates:
    return InducedCoordinates(V)


def ell(a) -> int:
    """Least integer m >= 1 with 2**m * a >= 1."""
    a = Fraction(a) if not isinstance(a, float) else a
    if a <= 0:
        raise ValueError(f"ell needs a positive argument, got {a}")
    m = 1
    while 2**m * a < 1:
        m += 1
    return m
