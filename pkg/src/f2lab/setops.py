"""Dense subsets of F_p^n and the explicit constructions built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Iterable, Union

import numpy as np

from .gf2_core import AmbientMismatch, Coset, GroupSpec, Subspace, is_prime


@dataclass(frozen=True, eq=False)
class GroupSet:
    """A subset of F_p^n stored as a read-only boolean array over element indices."""

    ambient: GroupSpec
    bits: np.ndarray
    card: int = field(init=False)

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != (self.ambient.order,):
            raise ValueError(f"bitset length {bits.shape} != {self.ambient.order}")
        if bits.flags.writeable:
            bits = bits.copy()
            bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "card", int(bits.sum()))

    @classmethod
    def from_points(cls, ambient: GroupSpec, points: Iterable) -> "GroupSet":
        ambient.check_dense()
        bits = np.zeros(ambient.order, dtype=bool)
        for x in points:
            if isinstance(x, (tuple, list)):
                x = ambient.index(x)
            bits[ambient.check(x)] = True
        return cls(ambient, bits)

    @classmethod
    def from_indices(cls, ambient: GroupSpec, xs: np.ndarray) -> "GroupSet":
        ambient.check_dense()
        bits = np.zeros(ambient.order, dtype=bool)
        bits[np.asarray(xs, dtype=np.int64)] = True
        return cls(ambient, bits)

    @classmethod
    def empty(cls, ambient: GroupSpec) -> "GroupSet":
        ambient.check_dense()
        return cls(ambient, np.zeros(ambient.order, dtype=bool))

    @classmethod
    def full(cls, ambient: GroupSpec) -> "GroupSet":
        ambient.check_dense()
        return cls(ambient, np.ones(ambient.order, dtype=bool))

    @classmethod
    def of(cls, X: Union["GroupSet", Subspace, Coset]) -> "GroupSet":
        if isinstance(X, GroupSet):
            return X
        g = X.base.ambient if isinstance(X, Coset) else X.ambient
        return cls.from_indices(g, X.elements())

    def __len__(self) -> int:
        return self.card

    def __contains__(self, x: int) -> bool:
        return bool(self.bits[int(x)])

    def __iter__(self):
        return iter(int(x) for x in np.flatnonzero(self.bits))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GroupSet)
            and self.ambient == other.ambient
            and bool(np.array_equal(self.bits, other.bits))
        )

    def __hash__(self) -> int:
        return hash((self.ambient, np.packbits(self.bits).tobytes()))

    def __repr__(self) -> str:
        g = self.ambient
        return f"GroupSet(F_{g.p}^{g.n}, card={self.card})"

    def points(self) -> np.ndarray:
        return np.flatnonzero(self.bits).astype(np.int64)

    def _other(self, other: "GroupSet") -> np.ndarray:
        if self.ambient != other.ambient:
            raise AmbientMismatch("sets live in different groups")
        return other.bits

    def __or__(self, other: "GroupSet") -> "GroupSet":
        return GroupSet(self.ambient, self.bits | self._other(other))

    def __and__(self, other: "GroupSet") -> "GroupSet":
        return GroupSet(self.ambient, self.bits & self._other(other))

    def __sub__(self, other: "GroupSet") -> "GroupSet":
        return GroupSet(self.ambient, self.bits & ~self._other(other))

    def __le__(self, other: "GroupSet") -> bool:
        return not bool((self.bits & ~self._other(other)).any())

    def complement(self) -> "GroupSet":
        return GroupSet(self.ambient, ~self.bits)

    def without_zero(self) -> "GroupSet":
        bits = self.bits.copy()
        bits[0] = False
        return GroupSet(self.ambient, bits)

    def translate(self, t: int) -> "GroupSet":
        """t + A."""
        return GroupSet.from_indices(self.ambient, self.ambient.add_array(self.points(), t))

    def negate(self) -> "GroupSet":
        return GroupSet.from_indices(self.ambient, self.ambient.neg_array(self.points()))

    @property
    def density(self) -> Fraction:
        return Fraction(self.card, self.ambient.order)


def density(A: GroupSet, X=None) -> Fraction:
    """|A ∩ X| / |X| for X a set, subspace or coset (default the whole group)."""
    if X is None:
        return A.density
    if isinstance(X, Subspace):
        if X.ambient != A.ambient:
            raise AmbientMismatch("density: different groups")
        return Fraction(int(A.bits[X.elements()].sum()), X.size)
    if isinstance(X, Coset):
        if X.base.ambient != A.ambient:
            raise AmbientMismatch("density: different groups")
        return Fraction(int(A.bits[X.elements()].sum()), X.size)
    if X.card == 0:
        raise ValueError("density relative to an empty set")
    return Fraction((A & X).card, X.card)


@dataclass(frozen=True)
class MaxDensityResult:
    value: Fraction
    argmax_shift: int


def coset_counts(S: GroupSet, V: Subspace) -> tuple[np.ndarray, np.ndarray]:
    """(canonical reps, |S ∩ (rep + V)|) for the cosets meeting S."""
    if S.ambient != V.ambient:
        raise AmbientMismatch("coset_counts: different groups")
    reps = V.reduce_array(S.points())
    return np.unique(reps, return_counts=True)


def maximal_density(S: GroupSet, V: Subspace) -> MaxDensityResult:
    """max over g of |(g + V) ∩ S| / |V|, with the least maximising shift."""
    reps, counts = coset_counts(S, V)
    if len(reps) == 0:
        return MaxDensityResult(Fraction(0), 0)
    best = counts.max()
    return MaxDensityResult(Fraction(int(best), V.size), int(reps[counts == best].min()))


def sumset(A: GroupSet, B: GroupSet, method: str = "auto") -> GroupSet:
    """{a + b : a in A, b in B}."""
    from .spectral import sum_counts

    counts = sum_counts(A, B, method=method)
    return GroupSet(A.ambient, counts.counts > 0)


def difference_set(A: GroupSet, B: GroupSet | None = None, method: str = "auto") -> GroupSet:
    """{b - a : a in A, b in B}; B defaults to A."""
    from .spectral import conv_counts

    counts = conv_counts(A, A if B is None else B, method=method)
    return GroupSet(A.ambient, counts.counts > 0)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_sum_free(S: GroupSet) -> Verdict:
    """No x, y, x+y in S (x != y when p = 2). Failing triples come back as (x, y, x+y)."""
    g = S.ambient
    if S.card == 0:
        return Verdict(True)
    from .spectral import sum_counts

    counts = sum_counts(S, S).counts
    hit = S.bits & (counts > 0)
    if g.p == 2:
        hit[0] = False  # x + x = 0 is excluded by convention
    zs = np.flatnonzero(hit)
    if len(zs) == 0:
        return Verdict(True)
    z = int(zs[0])
    pts = S.points()
    partners = g.add_array(g.neg_array(pts), z)
    ok = S.bits[partners]
    if g.p == 2:
        ok &= partners != pts
    i = int(np.flatnonzero(ok)[0])
    return Verdict(False, (int(pts[i]), int(partners[i]), z))


def solution_free_for(S: GroupSet, a: int, b: int, diffs: GroupSet | None = None) -> bool:
    """No x, y, z in S with a(x - y) = b z, i.e. (b/a) S misses S - S."""
    g = S.ambient
    if a % g.p == 0 or b % g.p == 0:
        raise ValueError(f"({a}, {b}) are not units mod {g.p}")
    if S.card == 0:
        return True
    diffs = difference_set(S) if diffs is None else diffs
    lam = (b * pow(a, -1, g.p)) % g.p
    return not diffs.bits[g.scale_array(lam, S.points())].any()


def is_solution_free(S: GroupSet, p: int | None = None) -> tuple[int, int] | None:
    """Least (a, b) in [1, p-1]^2 with no x, y, z in S solving a(x - y) = b z."""
    g = S.ambient
    if p is not None and p != g.p:
        raise ValueError(f"p={p} does not match the ambient prime {g.p}")
    if g.p == 2:
        return (1, 1) if is_sum_free(S) else None
    diffs = difference_set(S) if S.card else None
    for a in range(1, g.p):
        for b in range(1, g.p):
            if solution_free_for(S, a, b, diffs):
                return (a, b)
    return None


def dilate(A: GroupSet, a: int) -> GroupSet:
    g = A.ambient
    if a % g.p == 0:
        raise ValueError(f"{a} is not a unit mod {g.p}")
    return GroupSet.from_indices(g, g.scale_array(a, A.points()))


def c_alpha(alpha) -> float:
    """C with P(X < -C) = alpha for standard normal X."""
    return -NormalDist().inv_cdf(float(alpha))


def niveau_weight(n: int, alpha) -> int:
    """Least Hamming weight w whose ball {wt <= w} has density >= alpha."""
    alpha = Fraction(alpha)
    if not 0 < alpha < Fraction(1, 2):
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    total = 0
    for w in range(n + 1):
        total += math.comb(n, w)
        if Fraction(total, 2**n) >= alpha:
            return w
    return n


def niveau_set(n: int, alpha) -> GroupSet:
    """Hamming ball around 0 in F_2^n, the smallest one with density >= alpha."""
    g = GroupSpec(2, n)
    g.check_dense()
    w = niveau_weight(n, alpha)
    xs = g.elements()
    wt = np.zeros_like(xs)
    for i in range(n):
        wt += (xs >> i) & 1
    return GroupSet(g, wt <= w)


COVER_CONSTANT = 4
"""dyadic_sumfree_cover uses at most COVER_CONSTANT * log2(p) * n classes."""


def dyadic_intervals(p: int) -> list[tuple[int, int]]:
    """Integer intervals [lo, hi] tiling [1, p-1], each sum-free mod p.

    Each interval roughly doubles its left end; near p the right end is cut so
    that sums wrapping past p land below the interval.
    """
    out = []
    lo = 1
    while lo <= p - 1:
        hi = min(2 * lo - 1, p - 1, (p + lo - 1) // 2)
        hi = max(hi, lo)
        out.append((lo, hi))
        lo = hi + 1
    return out


def dyadic_sumfree_cover(p: int, n: int) -> list[GroupSet]:
    """Sum-free classes partitioning F_p^n minus 0, split by top nonzero coordinate."""
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    g = GroupSpec(p, n)
    g.check_dense()
    ds = g.digit_array(g.elements())
    nz = ds != 0
    has = nz.any(axis=1)
    top = np.where(has, n - 1 - np.argmax(nz[:, ::-1], axis=1), -1)
    topval = np.where(has, ds[np.arange(g.order), np.maximum(top, 0)], 0)
    classes = []
    for i in range(n):
        for lo, hi in dyadic_intervals(p):
            cls = GroupSet(g, (top == i) & (topval >= lo) & (topval <= hi))
            if cls.card:
                classes.append(cls)
    for c in classes:
        v = is_sum_free(c)
        if not v:
            raise RuntimeError(f"cover class is not sum-free: {v.witness}")
    return classes


def cover_bound(p: int, n: int) -> float:
    return COVER_CONSTANT * math.log2(p) * n


def anti_doubling_coloring(n: int) -> np.ndarray:
    """Colors of F_3^n: 1 or 2 by the top nonzero digit, 0 at the origin.

    Since 2v flips that digit, C(v) != C(2v) for every v != 0.
    """
    g = GroupSpec(3, n)
    g.check_dense()
    ds = g.digit_array(g.elements())
    nz = ds != 0
    top = n - 1 - np.argmax(nz[:, ::-1], axis=1)
    colors = ds[np.arange(g.order), top] if n else np.zeros(1, dtype=np.int64)
    colors = np.where(nz.any(axis=1), colors, 0)
    return colors.astype(np.int64)

