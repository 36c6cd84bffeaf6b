"""Sparsity/expansion dichotomy by density increments.

Given sets A_1..A_r in F_p^n, :func:`run_dichotomy` walks down a chain of
subspaces G = V_0 > V_1 > ... until every set is either sparse
(max coset density below alpha) or expanding (its popular differences fill
more than a 1 - gamma fraction of V).  Each step finds a coset of a smaller
subspace on which one set is denser by a factor 1 + c_inc.

The increment coset is found by exhaustive search over subspaces of
codimension 1, 2, ... inside V (via the dual: a codim-k subspace is the
annihilator of a k-dim space of characters), so every step comes with an
exact certificate rather than an appeal to an existence lemma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .gf2_core import (
    Coset,
    GroupSpec,
    Subspace,
    enumerate_subspaces,
    ell,
    full_space,
    span,
)
from .setops import GroupSet, density, maximal_density
from .spectral import (
    ConvCounts,
    conv_counts,
    inner_product_mu,
    popular_difference_set,
    popular_threshold,
    walsh_hadamard,
)

_FACTORS = (Fraction(1, 128), Fraction(1, 16))


class IncrementError(RuntimeError):
    """The increment step could not produce a certified coset."""


class HypothesisViolated(IncrementError):
    pass


class IncrementNotFound(IncrementError):
    pass


class DichotomyError(RuntimeError):
    def __init__(self, message: str, report: "DichotomyReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class DichotomyParams:
    alpha: Fraction
    gamma: Fraction
    c_inc: Fraction = Fraction(1, 128)
    max_step_codim: int = 6
    p: int = 2
    search_limit: int = 2_000_000

    def __post_init__(self) -> None:
        for name in ("alpha", "gamma", "c_inc"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if not (0 < self.alpha < 1 and 0 < self.gamma < 1):
            raise ValueError("alpha and gamma must lie in (0, 1)")
        if self.c_inc not in _FACTORS:
            raise ValueError(f"c_inc must be one of {[str(f) for f in _FACTORS]}")
        if self.max_step_codim < 1:
            raise ValueError("max_step_codim must be positive")

    @property
    def steps_per_index(self) -> int:
        """(1 + c)^m alpha <= 1 forces m <= (1/c) * L(alpha)."""
        return int(1 / self.c_inc) * ell(self.alpha)


@dataclass(frozen=True)
class IndexStatus:
    index: int
    mu: Fraction
    mu_star: Fraction
    mu_popular: Fraction
    sparse: bool
    expanding: bool

    @property
    def label(self) -> str:
        if self.sparse and self.expanding:
            return "both"
        if self.sparse:
            return "sparse"
        if self.expanding:
            return "expanding"
        return "failing"


class _Tracked:
    """A set together with its ambient difference counts (they never change)."""

    def __init__(self, A: GroupSet):
        self.A = A
        self.counts: ConvCounts | None = conv_counts(A, A) if A.card else None

    def popular_in(self, V: Subspace) -> Fraction:
        if self.counts is None:
            return Fraction(0)
        t = popular_threshold(self.A.card, V)
        vs = V.elements()
        return Fraction(int((self.counts.counts[vs] >= t).sum()), V.size)

    def status(self, i: int, V: Subspace, params: DichotomyParams) -> IndexStatus:
        mu = density(self.A, V)
        star = maximal_density(self.A, V).value
        pop = self.popular_in(V)
        return IndexStatus(i, mu, star, pop, mu < params.alpha, pop > 1 - params.gamma)

    def needs_increment(self, st: IndexStatus, params: DichotomyParams) -> bool:
        return st.mu_star >= params.alpha and st.mu_popular <= 1 - params.gamma


def _track(As: Sequence[GroupSet]) -> list[_Tracked]:
    if not As:
        raise ValueError("need at least one set")
    g = As[0].ambient
    if any(A.ambient != g for A in As):
        raise ValueError("all sets must live in the same group")
    return [_Tracked(A) for A in As]


@dataclass(frozen=True)
class DichotomyCheck:
    statuses: tuple[IndexStatus, ...]

    @property
    def first_failing(self) -> int | None:
        for st in self.statuses:
            if not (st.sparse or st.expanding):
                return st.index
        return None

    @property
    def holds(self) -> bool:
        return self.first_failing is None


def check_dichotomy(As: Sequence[GroupSet], V: Subspace, params: DichotomyParams) -> DichotomyCheck:
    """Sparse: mu_V(A_i) < alpha.  Expanding: mu_V(D_i) > 1 - gamma."""
    tracked = _track(As)
    return DichotomyCheck(tuple(t.status(i, V, params) for i, t in enumerate(tracked)))


@dataclass(frozen=True)
class IncrementStep:
    coset: Coset
    shift: int
    codim_added: int
    mu_star_before: Fraction
    mu_after: Fraction
    inner_product: Fraction
    popular_fraction: Fraction


def _coset_threshold_met(count: int, k: int, a: int, p: int, c: Fraction) -> bool:
    """count / p^(m-k) >= (1 + c) a / p^m, cross-multiplied."""
    return count * p**k * c.denominator >= (c.denominator + c.numerator) * a


def _best_codim1(P: np.ndarray, h: GroupSpec, bits: np.ndarray) -> tuple[np.ndarray, int]:
    """(characters, best coset count per character) for every hyperplane of h."""
    a = len(P)
    if h.p == 2:
        W = walsh_hadamard(bits.astype(np.int64))
        xis = np.arange(1, h.order, dtype=np.int64)
        return xis, (a + np.abs(W[1:])) // 2
    xis = h.projective_points()
    pd = h.digit_array(P)
    best = np.zeros(len(xis), dtype=np.int64)
    chunk = max(1, (1 << 22) // max(1, a))
    for i in range(0, len(xis), chunk):
        xd = h.digit_array(xis[i : i + chunk])
        dots = (pd @ xd.T) % h.p
        cnt = np.stack([(dots == j).sum(axis=0) for j in range(h.p)])
        best[i : i + chunk] = cnt.max(axis=0)
    return xis, best


def _search_increment(
    Ai: GroupSet, params: DichotomyParams
) -> tuple[int, Subspace]:
    """Smallest k and a codim-k subspace of Ai's group with a dense enough coset."""
    h = Ai.ambient
    P = Ai.points()
    a = len(P)
    whole = full_space(h)
    c = params.c_inc
    budget = params.search_limit
    for k in range(1, min(params.max_step_codim, h.n) + 1):
        winners: list[Subspace] = []
        if k == 1:
            xis, best = _best_codim1(P, h, Ai.bits)
            top = int(best.max())
            if _coset_threshold_met(top, 1, a, h.p, c):
                winners = [span([int(x)], h) for x in xis[best == top]]
        else:
            pd = h.digit_array(P)
            pw = np.array([h.p**j for j in range(k)], dtype=np.int64)
            top = -1
            for X in enumerate_subspaces(whole, k):
                budget -= 1
                if budget < 0:
                    raise IncrementNotFound(f"search limit hit at codimension {k}")
                xd = np.array([h.digits(x) for x in X.basis], dtype=np.int64)
                labels = ((pd @ xd.T) % h.p) @ pw
                cnt = int(np.bincount(labels, minlength=h.p**k).max())
                if cnt > top:
                    top, winners = cnt, [X]
                elif cnt == top:
                    winners.append(X)
            if not _coset_threshold_met(top, k, a, h.p, c):
                winners = []
        if winners:
            spaces = sorted((X.annihilator() for X in winners), key=lambda W: W.basis)
            return k, spaces[0]
    raise IncrementNotFound(
        f"no coset of codimension <= {params.max_step_codim} reaches the (1 + {c}) increment"
    )


def increment_step(
    A: GroupSet,
    V: Subspace,
    params: DichotomyParams,
    counts: ConvCounts | None = None,
) -> IncrementStep:
    """One density increment for a set that is neither sparse nor expanding on V."""
    g = A.ambient
    md = maximal_density(A, V)
    if md.value < params.alpha:
        raise ValueError(f"max density {md.value} is below alpha; sparsity holds")
    tracked = _Tracked.__new__(_Tracked)
    tracked.A, tracked.counts = A, counts if counts is not None else conv_counts(A, A)
    pop = tracked.popular_in(V)
    if pop > 1 - params.gamma:
        raise ValueError(f"popular differences fill {pop} of V; expansion holds")

    shift = md.argmax_shift
    pts = A.points()
    in_coset = pts[V.reduce_array(pts) == shift]
    local = V.coords_array(g.add_array(in_coset, g.neg(shift)))
    h = V.group
    Ai = GroupSet.from_indices(h, local)

    cc = conv_counts(Ai, Ai)
    Dp = popular_difference_set(Ai, None, cc)
    C = Dp.complement()
    if C.card == 0:
        raise HypothesisViolated("every difference is popular inside the densest coset")
    ip = inner_product_mu(Ai, C, cc)
    if ip > Fraction(1, 2):
        raise HypothesisViolated(f"<mu o mu, mu_C> = {ip} exceeds 1/2")

    k, Wloc = _search_increment(Ai, params)
    reps = Wloc.reduce_array(local)
    urep, ucnt = np.unique(reps, return_counts=True)
    best_rep = int(urep[ucnt == ucnt.max()].min())

    lifted = Subspace(g, tuple(V.from_coords(r) for r in Wloc.basis))
    U = Coset.of(lifted, g.add(shift, V.from_coords(best_rep)))
    mu_after = density(A, U)
    if mu_after < (1 + params.c_inc) * md.value:
        raise AssertionError("increment coset fails its own certificate")
    return IncrementStep(U, shift, k, md.value, mu_after, ip, Fraction(Dp.card, h.order))


@dataclass(frozen=True)
class TraceRow:
    step: int
    index: int
    coset_rep: int
    coset_basis: tuple[int, ...]
    codim_added: int
    codim_total: int
    mu_star_before: tuple[Fraction, ...]
    mu_star_after: tuple[Fraction, ...]


@dataclass
class DichotomyReport:
    params: DichotomyParams
    ambient: GroupSpec
    final_space: Subspace
    statuses: list[IndexStatus] = field(default_factory=list)
    trace: list[TraceRow] = field(default_factory=list)
    step_counts: list[int] = field(default_factory=list)
    certified: bool = False

    @property
    def r(self) -> int:
        return len(self.step_counts)

    @property
    def achieved_codim(self) -> int:
        return self.final_space.codim

    @property
    def codim_budget_bound(self) -> int:
        """r L(alpha)^5 L(gamma)^2, reported without its unknown constant."""
        return self.r * ell(self.params.alpha) ** 5 * ell(self.params.gamma) ** 2

    @property
    def halted_within(self) -> bool:
        return all(c <= self.params.steps_per_index for c in self.step_counts)


def run_dichotomy(
    As: Sequence[GroupSet], params: DichotomyParams, start: Subspace | None = None
) -> DichotomyReport:
    """Iterate increments from V_0 = G until every index is sparse or expanding.

    At each time the least index with max density >= alpha and popular
    fraction <= 1 - gamma is incremented.  The run's invariants (monotone max
    densities, the (1 + c) growth of the incremented index, the per-index
    step cap) are asserted as it goes and the final statuses are recomputed
    from scratch.
    """
    tracked = _track(As)
    g = As[0].ambient
    if g.p != params.p:
        raise ValueError(f"params are for p={params.p}, sets live in F_{g.p}^{g.n}")
    V = full_space(g) if start is None else start
    report = DichotomyReport(params, g, V, step_counts=[0] * len(As))
    step = 0
    while True:
        sts = [t.status(i, V, params) for i, t in enumerate(tracked)]
        failing = [st.index for st in sts if tracked[st.index].needs_increment(st, params)]
        if not failing:
            break
        i = failing[0]
        try:
            inc = increment_step(tracked[i].A, V, params, tracked[i].counts)
        except (IncrementError, ValueError) as exc:
            report.final_space = V
            report.statuses = sts
            raise DichotomyError(f"step {step}, index {i}: {exc}", report) from exc
        newV = inc.coset.base
        after = tuple(maximal_density(t.A, newV).value for t in tracked)
        before = tuple(st.mu_star for st in sts)
        if any(b > a for b, a in zip(before, after)):
            raise AssertionError("max density decreased on passing to a subspace")
        if after[i] < (1 + params.c_inc) * before[i]:
            raise AssertionError("incremented index did not grow by 1 + c")
        report.trace.append(
            TraceRow(step, i, inc.coset.rep, newV.basis, inc.codim_added, newV.codim, before, after)
        )
        report.step_counts[i] += 1
        if report.step_counts[i] > params.steps_per_index:
            report.final_space = newV
            raise DichotomyError(f"index {i} exceeded {params.steps_per_index} increments", report)
        V = newV
        step += 1
    report.final_space = V
    final = check_dichotomy(As, V, params)
    report.statuses = list(final.statuses)
    report.certified = final.holds
    if not report.certified:
        raise DichotomyError(f"index {final.first_failing} fails the recheck", report)
    return report


def trace_csv_rows(report: DichotomyReport) -> list[list[str]]:
    head = ["step", "index", "codim_added", "codim_total", "coset_rep"]
    r = report.r
    head += [f"mu_star_before_{j}" for j in range(r)] + [f"mu_star_after_{j}" for j in range(r)]
    rows = [head]
    for t in report.trace:
        rows.append(
            [str(t.step), str(t.index), str(t.codim_added), str(t.codim_total), str(t.coset_rep)]
            + [str(x) for x in t.mu_star_before]
            + [str(x) for x in t.mu_star_after]
        )
    return rows


def log_bound_steps(alpha: Fraction, c: Fraction) -> int:
    """Largest m with (1 + c)^m alpha <= 1, for comparison with the coarser cap."""
    return math.floor(math.log(1 / float(alpha)) / math.log1p(float(c)))
