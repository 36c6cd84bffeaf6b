"""The function f(n, alpha), its parallelepiped generalisation, and niveau sets.

f(n, alpha) is the largest d such that A + A contains a d-dim subspace for
every A in F_2^n with mu(A) >= alpha.  Exact values come from brute force
over all 2^(2^n) subsets, packed as bitmasks and processed in blocks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .gf2_core import GroupSpec, Subspace, enumerate_subspaces, full_space
from .setops import GroupSet, c_alpha, niveau_set, niveau_weight, sumset
from .subspace_search import BudgetExhausted, max_subspace_in

EXACT_MAX_N = 4
_BLOCK = 1 << 16


@dataclass(frozen=True)
class FTableEntry:
    n: int
    alpha: Fraction
    mode: str
    value: int
    extremal_witness: GroupSet
    trials: int | None = None

    @property
    def is_upper_bound(self) -> bool:
        return self.mode == "sampled"


def _subspace_masks(g: GroupSpec) -> tuple[np.ndarray, np.ndarray]:
    masks, dims = [], []
    for k in range(g.n + 1):
        for W in enumerate_subspaces(full_space(g), k):
            masks.append(int(np.bitwise_or.reduce(np.left_shift(np.uint64(1), W.elements().astype(np.uint64)))))
            dims.append(k)
    return np.array(masks, dtype=np.uint64), np.array(dims, dtype=np.int64)


def _sumset_masks(bits: np.ndarray) -> np.ndarray:
    """Rows of bits are subsets of F_2^n; returns the packed masks of A + A."""
    m = bits.shape[1]
    out = np.zeros(len(bits), dtype=np.uint64)
    idx = np.arange(m)
    for x in range(m):
        hit = (bits & bits[:, idx ^ x]).any(axis=1)
        out |= hit.astype(np.uint64) << np.uint64(x)
    return out


def _points_key(mask: int, m: int) -> tuple[int, ...]:
    return tuple(i for i in range(m) if (mask >> i) & 1)


def f_exact(
    n: int,
    alpha,
    mode: str = "exact",
    trials: int = 1000,
    seed: int = 0,
    force: bool = False,
) -> FTableEntry:
    """f(n, alpha) by exhaustion, or an upper bound from random sets.

    Exact mode scans every subset of F_2^n of density >= alpha; the stored
    witness is the attaining set whose sorted point list is least.  Sampled
    mode draws sets of the minimal admissible size (enlarging A can only
    enlarge A + A) and reports the worst one, which bounds f from above.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    g = GroupSpec(2, n)
    m = g.order
    need = math.ceil(alpha * m)
    if mode == "sampled":
        return _f_sampled(g, alpha, need, trials, seed)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if n > EXACT_MAX_N and not force:
        raise ValueError(f"exact mode is capped at n <= {EXACT_MAX_N}; pass force=True to insist")
    if n > 5:
        raise ValueError("exact mode needs 2^(2^n) subsets; n > 5 is out of reach")
    smasks, sdims = _subspace_masks(g)
    best, best_masks = m + 1, []
    total = 1 << m
    shifts = np.arange(m, dtype=np.uint64)
    for start in range(0, total, _BLOCK):
        masks = np.arange(start, min(start + _BLOCK, total), dtype=np.uint64)
        bits = ((masks[:, None] >> shifts[None, :]) & np.uint64(1)).astype(bool)
        keep = bits.sum(axis=1) >= need
        if not keep.any():
            continue
        masks, bits = masks[keep], bits[keep]
        ss = _sumset_masks(bits)
        dim = np.full(len(ss), -1, dtype=np.int64)
        for sm, sd in zip(smasks, sdims):
            inside = (ss & sm) == sm
            dim = np.where(inside & (sd > dim), sd, dim)
        lo = int(dim.min())
        if lo < best:
            best, best_masks = lo, masks[dim == lo].tolist()
        elif lo == best:
            best_masks.extend(masks[dim == lo].tolist())
    wmask = min(best_masks, key=lambda k: _points_key(int(k), m))
    W = GroupSet.from_points(g, _points_key(int(wmask), m))
    return FTableEntry(n, alpha, "exact", best, W)


def _f_sampled(g: GroupSpec, alpha: Fraction, need: int, trials: int, seed: int) -> FTableEntry:
    rng = np.random.default_rng(seed)
    best, witness = g.n + 1, None
    for _ in range(trials):
        A = GroupSet.from_indices(g, rng.choice(g.order, size=need, replace=False))
        dim = max_subspace_in(sumset(A, A)).dim
        if dim < best:
            best, witness = dim, A
    return FTableEntry(g.n, alpha, "sampled", best, witness, trials)


@dataclass(frozen=True)
class FkResult:
    holds: bool
    failing: tuple[int, ...] | None = None
    tuples_checked: int = 0


def fk_check(A: GroupSet, V: Subspace, k: int, limit: int = 10_000_000) -> FkResult:
    """For every (v_1..v_k) in V^k, is there a in A minus V with every
    a + sum_{i in I} v_i (I a subset of [k]) inside A?"""
    if k < 1:
        raise ValueError("k must be positive")
    g = A.ambient
    if V.ambient != g:
        raise ValueError("set and subspace in different groups")
    if V.size**k > limit:
        raise BudgetExhausted(f"|V|^k = {V.size ** k} exceeds the limit {limit}")
    cands = A.points()
    cands = cands[~GroupSet.of(V).bits[cands]]
    vs = V.elements().tolist()
    checked = 0
    for tup in itertools.product(vs, repeat=k):
        checked += 1
        sums = {0}
        for v in tup:
            sums |= {g.add(s, v) for s in sums}
        ok = np.ones(len(cands), dtype=bool)
        for s in sums:
            ok &= A.bits[g.add_array(cands, s)]
            if not ok.any():
                break
        if not ok.any():
            return FkResult(False, tuple(tup), checked)
    return FkResult(True, None, checked)


@dataclass(frozen=True)
class NiveauRow:
    n: int
    alpha: Fraction
    weight: int
    density: Fraction
    dim: int
    gap: int
    c_alpha: float
    predicted_gap: float


def niveau_experiment(n: int, alpha) -> NiveauRow:
    """Largest subspace in A + A for the niveau set A, against C_alpha sqrt(n)."""
    alpha = Fraction(alpha)
    A = niveau_set(n, alpha)
    dim = max_subspace_in(sumset(A, A)).dim
    ca = c_alpha(alpha)
    return NiveauRow(n, alpha, niveau_weight(n, alpha), A.density, dim, n - dim, ca, ca * math.sqrt(n))
