"""Finding subspaces that avoid a set, or sit inside one.

All searches run in the induced coordinates of the host subspace, so the
engine only ever sees a full group F_p^m and a boolean "forbidden" array.
Subspaces are grown one echelon row at a time (pivots increasing, zeros at
earlier pivots), which visits every subspace exactly once.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, replace

import numpy as np

from .gf2_core import (
    AmbientMismatch,
    GroupSpec,
    Subspace,
    enumerate_subspaces,
    full_space,
    sample_uniform_subspace,
    span,
)
from .setops import GroupSet


class BudgetExhausted(RuntimeError):
    """A search hit its node or time limit before deciding."""


@dataclass(frozen=True)
class SearchBudget:
    node_limit: int = 5_000_000
    time_limit: float = 120.0
    randomized_first: bool = True
    seed: int = 0
    random_tries: int = 32
    probe_nodes: int = 256

    def __post_init__(self) -> None:
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("budget limits must be positive")


class Status(str, enum.Enum):
    FOUND = "found"
    NONE = "none"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class SearchOutcome:
    status: Status
    space: Subspace | None = None
    reason: str = ""
    nodes: int = 0

    @property
    def found(self) -> bool:
        return self.status is Status.FOUND


class _Meter:
    def __init__(self, budget: SearchBudget, node_limit: int | None = None):
        self.limit = budget.node_limit if node_limit is None else node_limit
        self.deadline = time.monotonic() + budget.time_limit
        self.nodes = 0

    def tick(self, k: int = 1) -> None:
        self.nodes += k
        if self.nodes > self.limit:
            raise BudgetExhausted(f"node limit {self.limit} reached")
        if self.nodes % 1024 == 0 and time.monotonic() > self.deadline:
            raise BudgetExhausted("time limit reached")


def _top_pos(xs: np.ndarray, h: GroupSpec) -> np.ndarray:
    if h.p == 2:
        out = np.full(xs.shape, -1, dtype=np.int64)
        for b in range(h.n):
            out[(xs >> b) & 1 == 1] = b
        return out
    ds = h.digit_array(xs)
    nz = ds != 0
    return np.where(nz.any(axis=1), h.n - 1 - np.argmax(nz[:, ::-1], axis=1), -1)


def _clean_multiples(cands: np.ndarray, shift: np.ndarray, bad: np.ndarray, h: GroupSpec) -> np.ndarray:
    """Mask of candidates r with c*r + s allowed for every c in 1..p-1, s in shift."""
    ok = np.ones(len(cands), dtype=bool)
    if len(cands) == 0:
        return ok
    if h.p == 2:
        chunk = max(1, (1 << 22) // max(1, len(shift)))
        for i in range(0, len(cands), chunk):
            c = cands[i : i + chunk]
            ok[i : i + chunk] = ~bad[c[:, None] ^ shift[None, :]].any(axis=1)
        return ok
    sd = h.digit_array(shift)
    cd = h.digit_array(cands)
    pw = np.array([h.p**i for i in range(h.n)], dtype=np.int64)
    for c in range(1, h.p):
        idx = ((c * cd[:, None, :] + sd[None, :, :]) % h.p) @ pw
        ok &= ~bad[idx].any(axis=1)
    return ok


def _dfs_avoid(bad: np.ndarray, h: GroupSpec, d: int, meter: _Meter) -> list[int] | None:
    """Echelon rows of the canonically first d-dim subspace avoiding ``bad``, or None."""
    if bad[0]:
        return None
    if d == 0:
        return []
    xs = np.arange(1, h.order, dtype=np.int64)
    top = _top_pos(xs, h)
    if h.p != 2:
        topdig = (xs // np.array([h.p**int(t) for t in top], dtype=np.int64)) % h.p
        keep = topdig == 1
        xs, top = xs[keep], top[keep]
    zero = np.zeros(1, dtype=np.int64)
    ok = _clean_multiples(xs, zero, bad, h)
    cands, ctop = xs[ok], top[ok]
    p = h.p

    def rec(W: np.ndarray, rows: list[int], cands: np.ndarray, ctop: np.ndarray) -> list[int] | None:
        meter.tick()
        need = d - len(rows)
        if need == 0:
            return rows
        if len(cands) < (p**need - 1) // (p - 1):
            return None
        limit = h.n - need
        for i in range(len(cands)):
            b = int(ctop[i])
            if b > limit:
                break
            r = int(cands[i])
            rest, rtop = cands[i + 1 :], ctop[i + 1 :]
            sel = (rtop > b) & ((rest // p**b) % p == 0)
            rest, rtop = rest[sel], rtop[sel]
            if p == 2:
                newW = W ^ r
            else:
                newW = np.concatenate([h.add_array(W, h.scale(c, r)) for c in range(1, p)])
            if len(rest):
                good = _clean_multiples(rest, newW, bad, h)
                rest, rtop = rest[good], rtop[good]
            found = rec(np.concatenate([W, newW]), rows + [r], rest, rtop)
            if found is not None:
                return found
        return None

    return rec(zero, [], cands, ctop)


def _forbidden_in(S: GroupSet, V: Subspace) -> np.ndarray:
    """S ∩ V as a boolean array over V's induced coordinates."""
    return S.bits[V.elements()]


def find_subspace_avoiding(
    S: GroupSet, V: Subspace | None = None, d: int = 1, budget: SearchBudget | None = None
) -> SearchOutcome:
    """A d-dim W inside V with W ∩ S empty.

    A short canonical DFS probe runs first, then (if enabled) random sampling,
    then the full DFS.  "none" is only reported once the DFS has finished.
    """
    budget = budget or SearchBudget()
    g = S.ambient
    V = full_space(g) if V is None else V
    if V.ambient != g:
        raise AmbientMismatch("set and host subspace in different groups")
    if not 0 <= d <= V.dim:
        raise ValueError(f"d={d} outside [0, {V.dim}]")
    if 0 in S:
        return SearchOutcome(Status.NONE, reason="0 lies in S, so every subspace meets S")
    h = V.group
    bad = _forbidden_in(S, V)
    meter = _Meter(budget)
    rows = None
    probe = _Meter(budget, budget.probe_nodes)
    try:
        rows = _dfs_avoid(bad, h, d, probe)
        if rows is None:
            return _finish(S, V, h, None, probe)
    except BudgetExhausted:
        pass
    if rows is None and budget.randomized_first:
        rng = np.random.default_rng(budget.seed)
        for _ in range(budget.random_tries):
            W = sample_uniform_subspace(h.n, d, rng, p=h.p)
            if not bad[W.elements()].any():
                rows = list(W.basis)
                break
    try:
        if rows is None:
            rows = _dfs_avoid(bad, h, d, meter)
    except BudgetExhausted as exc:
        return SearchOutcome(Status.EXHAUSTED, reason=str(exc), nodes=probe.nodes + meter.nodes)
    out = _finish(S, V, h, rows, meter)
    return replace(out, nodes=probe.nodes + meter.nodes)


def _finish(S, V, h, rows, meter) -> SearchOutcome:
    if rows is None:
        return SearchOutcome(Status.NONE, reason="exhaustive search found no subspace", nodes=meter.nodes)
    W = Subspace(V.ambient, tuple(V.from_coords(r) for r in span(rows, h).basis))
    if S.bits[W.elements()].any():
        raise AssertionError("search returned a subspace meeting S")
    return SearchOutcome(Status.FOUND, W, nodes=meter.nodes)


@dataclass(frozen=True)
class MaxSubspace:
    dim: int
    witness: Subspace


def _solve_all_ones(F: np.ndarray, m: int) -> int | None:
    """Some xi in F_2^m with xi.f = 1 for every f in F, or None."""
    rows: dict[int, int] = {}
    one = 1 << m
    for f in F.tolist():
        v = f | one
        for b in sorted(rows, reverse=True):
            if (v >> b) & 1:
                v ^= rows[b]
        low = v & (one - 1)
        if low == 0:
            if v:
                return None
            continue
        b = low.bit_length() - 1
        for b2 in rows:
            if (rows[b2] >> b) & 1:
                rows[b2] ^= v
        rows[b] = v
    xi = 0
    for b, v in rows.items():
        if v & one:
            xi |= 1 << b
    return xi


def _dual_avoid(bad: np.ndarray, h: GroupSpec, c: int, meter: _Meter) -> Subspace | None:
    """p = 2 only: a codim-c subspace of F_2^m avoiding ``bad`` (0 not bad)."""
    F = np.flatnonzero(bad).astype(np.int64)
    if c == 0:
        return full_space(h) if len(F) == 0 else None
    whole = full_space(h)
    for X in enumerate_subspaces(whole, c - 1):
        meter.tick()
        keep = np.ones(len(F), dtype=bool)
        for xi in X.basis:
            keep &= h.dot_array(F, xi) == 0
        Fr = F[keep]
        if len(Fr) == 0:
            xi = next(x for x in range(1, h.order) if x not in X)
        else:
            xi = _solve_all_ones(Fr, h.n)
            if xi is None:
                continue
        W = span(X.basis + (xi,), h).annihilator()
        if not bad[W.elements()].any():
            return W
    return None


def max_subspace_in(
    T: GroupSet, V: Subspace | None = None, budget: SearchBudget | None = None
) -> MaxSubspace | None:
    """Largest subspace of V contained in T, or None when 0 is not in T.

    Dense targets (p = 2, at least half of V inside T) are searched from the
    top by codimension; otherwise dimensions are tried upward from 1.  Raises
    BudgetExhausted if the limits run out.
    """
    budget = budget or SearchBudget()
    g = T.ambient
    V = full_space(g) if V is None else V
    if 0 not in T:
        return None
    h = V.group
    inside = T.bits[V.elements()]
    bad = ~inside
    meter = _Meter(budget)
    if h.p == 2 and 2 * int(inside.sum()) >= h.order:
        for c in range(0, h.n + 1):
            W = _dual_avoid(bad, h, c, meter)
            if W is not None:
                return _lift_max(T, V, W)
        raise AssertionError("the zero subspace always fits")
    best = Subspace(h, ())
    for d in range(1, h.n + 1):
        if h.p**d > int(inside.sum()):
            break
        rows = _dfs_avoid(bad, h, d, meter)
        if rows is None:
            break
        best = span(rows, h)
    return _lift_max(T, V, best)


def _lift_max(T: GroupSet, V: Subspace, W: Subspace) -> MaxSubspace:
    lifted = Subspace(V.ambient, tuple(V.from_coords(r) for r in W.basis))
    if not T.bits[lifted.elements()].all():
        raise AssertionError("witness is not inside T")
    return MaxSubspace(lifted.dim, lifted)


def sharpness_witness(n: int, d: int, verify: bool = True, budget: SearchBudget | None = None) -> GroupSet:
    """S = V' minus 0 for V' spanned by the first n+1-d coordinates.

    Every d-dim subspace meets V' nontrivially, so no d-space avoids S.
    """
    if not 1 <= d <= n:
        raise ValueError(f"need 1 <= d <= n, got d={d}, n={n}")
    g = GroupSpec(2, n)
    Vp = span([1 << i for i in range(n + 1 - d)], g)
    S = GroupSet.of(Vp).without_zero()
    if verify:
        out = find_subspace_avoiding(S, None, d, budget)
        if out.status is not Status.NONE:
            raise AssertionError(f"sharpness check failed: {out.status.value}")
    return S
