"""Geometric Ramsey numbers over F_p, the sum-free reduction, and the
multicolor pipeline that turns the dichotomy into a subspace avoiding r
solution-free sets.

Colorings assign a color to every 1-dim subspace (projective point).  Point
colorings that are not constant on lines are also accepted where it makes
sense, since the F_3 anti-doubling construction is of that kind.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .gf2_core import GroupSpec, Subspace, enumerate_subspaces, full_space, gaussian_binomial
from .increment import DichotomyParams, DichotomyReport, run_dichotomy
from .setops import GroupSet, density, difference_set, dilate, is_solution_free, is_sum_free, solution_free_for, sumset
from .subspace_search import (
    BudgetExhausted,
    SearchBudget,
    Status,
    _Meter,
    find_subspace_avoiding,
    max_subspace_in,
)

MAX_CONSTRAINT_SPACES = 2_000_000


@dataclass(frozen=True, eq=False)
class Coloring:
    """Colors 1..r on the nonzero elements of F_p^n (0 at the origin)."""

    ambient: GroupSpec
    r: int
    colors: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.colors, dtype=np.int64)
        g = self.ambient
        if c.shape != (g.order,):
            raise ValueError(f"expected {g.order} colors, got shape {c.shape}")
        c[0] = 0
        if g.order > 1 and (c[1:].min() < 1 or c[1:].max() > self.r):
            raise ValueError(f"colors must lie in [1, {self.r}]")
        c.flags.writeable = False
        object.__setattr__(self, "colors", c)

    @classmethod
    def from_classes(cls, ambient: GroupSpec, classes: Sequence) -> "Coloring":
        """Class i (0-based) gets color i + 1; each listed point colors its whole line."""
        c = np.zeros(ambient.order, dtype=np.int64)
        for i, pts in enumerate(classes):
            for x in pts:
                for a in range(1, ambient.p):
                    c[ambient.scale(a, int(x))] = i + 1
        if ambient.order > 1 and (c[1:] == 0).any():
            raise ValueError("classes do not cover every projective point")
        return cls(ambient, len(classes), c)

    @property
    def projective(self) -> bool:
        g = self.ambient
        xs = g.elements()
        return all(np.array_equal(self.colors[g.scale_array(a, xs)], self.colors) for a in range(2, g.p))

    def color_class(self, i: int) -> GroupSet:
        return GroupSet(self.ambient, self.colors == i)

    def line_colors(self) -> dict[int, int]:
        return {int(x): int(self.colors[x]) for x in self.ambient.projective_points()}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Coloring)
            and self.ambient == other.ambient
            and self.r == other.r
            and bool(np.array_equal(self.colors, other.colors))
        )


@dataclass(frozen=True)
class Witness:
    color: int
    space: Subspace

    @property
    def dim(self) -> int:
        return self.space.dim

    def verify(self, coloring: Coloring) -> bool:
        xs = self.space.elements()[1:]
        return bool((coloring.colors[xs] == self.color).all())


def mono_witness(coloring: Coloring, i: int, d: int, budget: SearchBudget | None = None) -> Witness | None:
    """A d-dim subspace whose nonzero elements all have color i, or None (proved)."""
    g = coloring.ambient
    if not 0 <= d <= g.n:
        raise ValueError(f"d={d} outside [0, {g.n}]")
    bad = GroupSet(g, coloring.colors != i).without_zero()
    budget = budget or SearchBudget(randomized_first=False)
    out = find_subspace_avoiding(bad, full_space(g), d, budget)
    if out.status is Status.EXHAUSTED:
        raise BudgetExhausted(out.reason)
    if out.status is Status.NONE:
        return None
    w = Witness(i, out.space)
    if not w.verify(coloring):
        raise AssertionError("monochromatic witness failed verification")
    return w


def is_valid_coloring(coloring: Coloring, dims: Sequence[int]) -> tuple[bool, Witness | None]:
    """(True, None) if no color i contains a monochromatic dims[i]-space."""
    if len(dims) != coloring.r:
        raise ValueError(f"{len(dims)} dims for {coloring.r} colors")
    for i, d in enumerate(dims, start=1):
        if d > coloring.ambient.n:
            continue
        w = mono_witness(coloring, i, d)
        if w is not None:
            return False, w
    return True, None


@dataclass(frozen=True)
class ColoringSearch:
    status: Status
    coloring: Coloring | None
    nodes: int
    reason: str = ""


def _line_maps(g: GroupSpec) -> list[np.ndarray]:
    """Generators of GL(n, p) as maps on elements: coordinate swaps, elementary
    transvections and (for p > 2) scaling one coordinate by a primitive root."""
    xs = g.elements()
    ds = g.digit_array(xs)
    maps = []

    def apply(mat: np.ndarray) -> np.ndarray:
        return g.from_digit_array((ds @ mat.T) % g.p)

    eye = np.eye(g.n, dtype=np.int64)
    for i, j in itertools.combinations(range(g.n), 2):
        m = eye.copy()
        m[[i, j]] = m[[j, i]]
        maps.append(apply(m))
    for i, j in itertools.permutations(range(g.n), 2):
        m = eye.copy()
        m[i, j] = 1
        maps.append(apply(m))
    if g.p > 2 and g.n:
        root = next(a for a in range(2, g.p) if all(pow(a, (g.p - 1) // q, g.p) != 1 for q in _prime_factors(g.p - 1)))
        m = eye.copy()
        m[0, 0] = root
        maps.append(apply(m))
    return maps


def _prime_factors(m: int) -> list[int]:
    out, q = [], 2
    while q * q <= m:
        if m % q == 0:
            out.append(q)
            while m % q == 0:
                m //= q
        q += 1
    if m > 1:
        out.append(m)
    return out


def search_coloring(
    n: int, dims: Sequence[int], budget: SearchBudget | None = None, p: int = 2, symmetry: bool = True
) -> ColoringSearch:
    """A coloring of the projective points of F_p^n with no color-i d_i-space.

    Points are colored in increasing order with forward checking: once a
    d_i-space has all but one line in color i, that line loses color i.
    Symmetry is broken by value precedence among colors with equal d_i and
    by lex-leader checks against generators of GL(n, p); both are necessary
    conditions for the lex-least coloring of an orbit, so pruning is sound.
    """
    dims = tuple(int(d) for d in dims)
    if not dims or min(dims) < 1:
        raise ValueError("need r >= 1 and every d_i >= 1")
    budget = budget or SearchBudget()
    g = GroupSpec(p, n)
    g.check_dense()
    r = len(dims)
    pts = g.projective_points()
    npts = len(pts)
    line = np.full(g.order, -1, dtype=np.int64)
    for k, x in enumerate(pts.tolist()):
        for a in range(1, p):
            line[g.scale(a, x)] = k

    spaces: dict[int, list[list[int]]] = {}
    through: dict[int, list[list[int]]] = {}
    for d in sorted(set(dims)):
        if d > n:
            continue
        if gaussian_binomial(n, d, p) > MAX_CONSTRAINT_SPACES:
            raise ValueError(f"too many {d}-spaces in F_{p}^{n} to enumerate")
        members = []
        for W in enumerate_subspaces(full_space(g), d):
            members.append(sorted(set(line[W.elements()[1:]].tolist())))
        spaces[d] = members
        th: list[list[int]] = [[] for _ in range(npts)]
        for s, mem in enumerate(members):
            for k in mem:
                th[k].append(s)
        through[d] = th

    counts = {c: [0] * len(spaces[dims[c]]) for c in range(r) if dims[c] in spaces}
    excluded = [[0] * r for _ in range(npts)]
    assign = [-1] * npts
    groups = [[c2 for c2 in range(r) if dims[c2] == dims[c]] for c in range(r)]
    perms = [line[m[pts]] for m in _line_maps(g)] if symmetry else []
    meter = _Meter(budget)

    def lex_ok(upto: int) -> bool:
        for perm in perms:
            for k in range(upto + 1):
                img = assign[perm[k]]
                if img < 0:
                    break
                if img < assign[k]:
                    return False
                if img > assign[k]:
                    break
        return True

    def place(k: int, c: int, sign: int) -> bool:
        """Apply (sign=1) or undo (sign=-1) color c on point k; False on a dead end."""
        ok = True
        if c not in counts:
            return True
        size_of = spaces[dims[c]]
        cnt = counts[c]
        for s in through[dims[c]][k]:
            mem = size_of[s]
            if sign < 0 and cnt[s] == len(mem) - 1:
                for k2 in mem:
                    if assign[k2] < 0 and k2 != k:
                        excluded[k2][c] -= 1
            cnt[s] += sign
            if sign > 0:
                if cnt[s] == len(mem):
                    ok = False
                elif cnt[s] == len(mem) - 1:
                    for k2 in mem:
                        if assign[k2] < 0 and k2 != k:
                            excluded[k2][c] += 1
        return ok

    def rec(k: int) -> bool:
        if k == npts:
            return True
        for c in range(r):
            if excluded[k][c]:
                continue
            grp = groups[c]
            pos = grp.index(c)
            if pos > 0 and not any(a == grp[pos - 1] for a in assign[:k]):
                continue
            meter.tick()
            assign[k] = c
            alive = place(k, c, 1)
            if alive and lex_ok(k) and rec(k + 1):
                return True
            place(k, c, -1)
            assign[k] = -1
        return False

    try:
        found = rec(0)
    except BudgetExhausted as exc:
        return ColoringSearch(Status.EXHAUSTED, None, meter.nodes, str(exc))
    if not found:
        return ColoringSearch(Status.NONE, None, meter.nodes, "canonical search finished without a coloring")
    colors = np.zeros(g.order, dtype=np.int64)
    nz = line >= 0
    colors[nz] = np.array(assign, dtype=np.int64)[line[nz]] + 1
    col = Coloring(g, r, colors)
    ok, w = is_valid_coloring(col, dims)
    if not ok:
        raise AssertionError(f"search produced an invalid coloring: {w}")
    return ColoringSearch(Status.FOUND, col, meter.nodes)


@dataclass
class RamseyResult:
    dims: tuple[int, ...]
    p: int
    lo: int
    hi: int | None
    witnesses: dict[int, Coloring] = field(default_factory=dict)
    unsat_nodes: dict[int, int] = field(default_factory=dict)
    exhausted: list[int] = field(default_factory=list)

    @property
    def exact(self) -> int | None:
        return self.lo if self.hi == self.lo else None


def ramsey_value(
    dims: Sequence[int], n_max: int = 4, budget: SearchBudget | None = None, p: int = 2
) -> RamseyResult:
    """R_{F_p}(d_1, ..., d_r), exact if an UNSAT level is reached by n_max.

    A valid coloring at n proves R > n; restricting it shows the same for
    every smaller n, so lower bounds only come from the largest witness.
    """
    res = RamseyResult(tuple(dims), p, 1, None)
    for n in range(1, n_max + 1):
        out = search_coloring(n, dims, budget, p)
        if out.status is Status.FOUND:
            res.witnesses[n] = out.coloring
            res.lo = n + 1
        elif out.status is Status.NONE:
            res.unsat_nodes[n] = out.nodes
            res.hi = n
            break
        else:
            res.exhausted.append(n)
    if res.hi is not None and res.lo != res.hi:
        raise AssertionError("UNSAT level below a verified witness")
    return res


@dataclass
class BridgeRecord:
    direction: str
    ok: bool
    clauses: dict[str, bool]
    notes: dict[str, str] = field(default_factory=dict)
    set: GroupSet | None = None
    coloring: Coloring | None = None


def _max_dim(T: GroupSet) -> int:
    m = max_subspace_in(T)
    return -1 if m is None else m.dim


def coloring_sumfree_bridge(x: Coloring | GroupSet, d: int) -> BridgeRecord:
    """Translate between valid (2, d)-colorings of F_2^n and sum-free sets.

    Color 1 is the class that must avoid 2-spaces; it becomes S.
    """
    if isinstance(x, Coloring):
        return _coloring_to_set(x, d)
    return _set_to_coloring(x, d)


def _coloring_to_set(col: Coloring, d: int) -> BridgeRecord:
    g = col.ambient
    if g.p != 2 or col.r != 2:
        raise ValueError("the bridge is for 2-colorings of F_2^n")
    valid, w = is_valid_coloring(col, (2, d))
    notes = {}
    if not valid:
        notes["valid_coloring"] = f"color {w.color} contains the {w.dim}-space {w.space.basis}"
    S = col.color_class(1)
    sf = is_sum_free(S)
    if not sf:
        notes["sum_free"] = f"x, y, x+y = {sf.witness}"
    clauses = {
        "valid_coloring": valid,
        "sum_free": bool(sf),
        "sumset_has_no_d_space": _max_dim(sumset(S, S)) < d,
        "complement_has_no_d_space": _max_dim(S.complement()) < d,
    }
    if d <= g.n:
        clauses["density_at_least_2^-d"] = S.density >= Fraction(1, 2**d)
    else:
        notes["density_at_least_2^-d"] = "not applicable: d > n, the covering argument needs d <= n"
    for k, v in clauses.items():
        if not v and k not in notes:
            notes[k] = "violated"
    return BridgeRecord("coloring->set", all(clauses.values()), clauses, notes, S, col)


def _set_to_coloring(S: GroupSet, d: int) -> BridgeRecord:
    g = S.ambient
    if g.p != 2:
        raise ValueError("the bridge is for F_2^n")
    notes = {}
    sf = is_sum_free(S)
    clauses = {
        "zero_not_in_S": 0 not in S,
        "sum_free": bool(sf),
        "complement_has_no_d_space": _max_dim(S.complement()) < d,
    }
    if not sf:
        notes["sum_free"] = f"x, y, x+y = {sf.witness}"
    col = None
    if clauses["zero_not_in_S"]:
        colors = np.where(S.bits, 1, 2)
        col = Coloring(g, 2, colors)
        valid, w = is_valid_coloring(col, (2, d))
        clauses["valid_coloring"] = valid
        if not valid:
            notes["valid_coloring"] = f"color {w.color} contains the {w.dim}-space {w.space.basis}"
    for k, v in clauses.items():
        if not v and k not in notes:
            notes[k] = "violated"
    return BridgeRecord("set->coloring", all(clauses.values()), clauses, notes, S, col)


UNION_GRID_STEPS = 256
"""The blue probability is searched over q = 2^(-j / UNION_GRID_STEPS)."""


def _union_log_sum(n: int, d: int, j: int, prec: int = 80):
    """Certified upper bound on N_2 q^3 + N_d (1 - q)^(2^d - 1) at q = 2^(-j/steps)."""
    iv = mpmath.iv
    saved = iv.prec
    iv.prec = prec
    try:
        q = iv.mpf(2) ** (iv.mpf(-j) / UNION_GRID_STEPS)
        n2 = iv.mpf(gaussian_binomial(n, 2))
        nd = iv.mpf(gaussian_binomial(n, d))
        total = n2 * q**3 + iv.exp(iv.log(nd) + (2**d - 1) * iv.log(1 - q))
        return total.b
    finally:
        iv.prec = saved


def _union_ok(n: int, d: int) -> tuple[bool, int]:
    """Whether some grid q certifies the bound at n, and the best j."""
    if n < d:
        # no d-spaces at all; a tiny q kills the expected blue 2-spaces
        return True, UNION_GRID_STEPS * (2 * n + 4)
    steps = UNION_GRID_STEPS
    hi_j = steps * (2 * n + 4)

    l2 = math.log(gaussian_binomial(n, 2))
    ld = math.log(gaussian_binomial(n, d))
    m = 2**d - 1

    def val(j: int) -> float:
        q = 2.0 ** (-j / steps)
        return float(np.logaddexp(l2 + 3 * math.log(q), ld + m * math.log1p(-q)))

    lo, hi = 1, hi_j
    while hi - lo > 2:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        if val(m1) <= val(m2):
            hi = m2
        else:
            lo = m1
    best = min(range(max(1, lo - 8), hi + 9), key=val)
    return _union_log_sum(n, d, best) < 1, best


def union_bound_lower(d: int) -> int:
    """Largest n for which a random blue/red coloring (blue with probability q)
    has, in expectation, fewer than one blue 2-space plus red d-space; then
    some coloring has neither and R_{F_2}(2, d) > n.

    Counts are exact Gaussian binomials and the sum is bounded with interval
    arithmetic, so each accepted n is certified.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    ok_n = 1
    lo, hi = 1, 2 * d + 8
    while lo <= hi:
        mid = (lo + hi) // 2
        if _union_ok(mid, d)[0]:
            ok_n, lo = mid, mid + 1
        else:
            hi = mid - 1
    return ok_n


def bound_table(d: int, c: Fraction | float = 1, C: Fraction | float = 1) -> dict[str, float]:
    """Upper-bound shapes for R_{F_2}(2, d) with user-supplied constants."""
    if c <= 0:
        raise ValueError("c must be positive")
    return {
        "linear_sumset_shape": float(Fraction(d) / Fraction(c) * 2**d),
        "prior_exponential": float((d + 1) * 2**d),
        "prior_base_1566": 1.566**d,
        "polynomial_d7": float(C) * d**7,
    }


class PipelineError(RuntimeError):
    def __init__(self, clause: str, report: "PipelineReport"):
        super().__init__(clause)
        self.clause = clause
        self.report = report


@dataclass
class PipelineReport:
    d: int
    p: int
    pairs: list[tuple[int, int]] = field(default_factory=list)
    alpha: Fraction | None = None
    dichotomy: DichotomyReport | None = None
    choices: list[str] = field(default_factory=list)
    mu_S: Fraction | None = None
    zero_free: bool | None = None
    result: Subspace | None = None
    disjoint: bool | None = None


def multicolor_pipeline(
    As: Sequence[GroupSet],
    d: int,
    p: int | None = None,
    budget: SearchBudget | None = None,
    pairs: Sequence[tuple[int, int]] | None = None,
) -> PipelineReport:
    """A d-dim subspace disjoint from every A_i, certified link by link.

    Each A_i is dilated by a_i for its pair (a_i, b_i): the least pair found
    by is_solution_free, or the caller's choice (which is checked).  Any
    d-space inside a_i (A_i - A_i) misses A_i, since z in both would make
    b_i z = a_i (x - y) a solution.
    """
    if not As:
        raise ValueError("need at least one set")
    g = As[0].ambient
    p = g.p if p is None else p
    if p != g.p:
        raise ValueError(f"p={p} does not match F_{g.p}^{g.n}")
    r = len(As)
    rep = PipelineReport(d, p)
    dilated = []
    for i, A in enumerate(As):
        if 0 in A:
            raise PipelineError(f"0 lies in A_{i}", rep)
        if pairs is None:
            pair = is_solution_free(A)
            if pair is None:
                raise PipelineError(f"A_{i} is not solution-free", rep)
        else:
            pair = tuple(pairs[i])
            if not solution_free_for(A, *pair):
                raise PipelineError(f"A_{i} has a solution to {pair[0]}(x - y) = {pair[1]} z", rep)
        rep.pairs.append(pair)
        dilated.append(dilate(A, pair[0]))
    alpha = Fraction(1, 10 * r * p**d)
    rep.alpha = alpha
    params = DichotomyParams(alpha, alpha, p=p)
    rep.dichotomy = run_dichotomy(dilated, params)
    V = rep.dichotomy.final_space
    if V.dim < d:
        raise PipelineError(f"dichotomy subspace has dimension {V.dim} < {d}", rep)
    vbits = GroupSet.of(V)
    S = GroupSet.empty(g)
    for st, Ad in zip(rep.dichotomy.statuses, dilated):
        if st.sparse:
            rep.choices.append("sparse")
            S = S | (Ad & vbits)
        else:
            rep.choices.append("expanding")
            S = S | (vbits - difference_set(Ad))
    rep.mu_S = density(S, V)
    rep.zero_free = 0 not in S
    if rep.mu_S > Fraction(1, 10 * p**d):
        raise PipelineError(f"mu_V(S) = {rep.mu_S} exceeds 1/(10 p^d)", rep)
    if not rep.zero_free:
        raise PipelineError("0 lies in S", rep)
    out = find_subspace_avoiding(S, V, d, budget)
    if not out.found:
        raise PipelineError(f"no {d}-space in V avoids S ({out.status.value}: {out.reason})", rep)
    rep.result = out.space
    W = out.space.elements()
    rep.disjoint = not any(A.bits[W].any() for A in As)
    if not rep.disjoint:
        raise PipelineError("the final subspace meets some A_i", rep)
    return rep

