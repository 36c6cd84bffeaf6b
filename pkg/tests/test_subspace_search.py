from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from f2lab.gf2_core import GroupSpec, enumerate_subspaces, full_space, span
from f2lab.setops import GroupSet, niveau_set, sumset
from f2lab.subspace_search import (
    BudgetExhausted,
    SearchBudget,
    Status,
    find_subspace_avoiding,
    max_subspace_in,
    sharpness_witness,
)

from conftest import random_set


def oracle_avoids(S: GroupSet, d: int) -> bool:
    G = full_space(S.ambient)
    return any(not S.bits[W.elements()].any() for W in enumerate_subspaces(G, d))


def oracle_max_dim(T: GroupSet) -> int:
    G = full_space(T.ambient)
    best = -1
    for k in range(T.ambient.n + 1):
        if any(T.bits[W.elements()].all() for W in enumerate_subspaces(G, k)):
            best = k
    return best


def test_empty_set_gives_canonical_first():
    g = GroupSpec(2, 4)
    out = find_subspace_avoiding(GroupSet.empty(g), None, 2)
    first = next(enumerate_subspaces(full_space(g), 2))
    assert out.found and out.space == first


def test_zero_in_set_is_immediate_none():
    g = GroupSpec(2, 4)
    out = find_subspace_avoiding(GroupSet.from_points(g, [0]), None, 1)
    assert out.status is Status.NONE and "0 lies in S" in out.reason


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(node_limit=0)


def test_exhaustion_is_reported():
    g = GroupSpec(2, 8)
    S = random_set(g, np.random.default_rng(0), 0.5).without_zero()
    tight = SearchBudget(node_limit=2, randomized_first=False, probe_nodes=1)
    out = find_subspace_avoiding(S, None, 3, tight)
    assert out.status is Status.EXHAUSTED and "limit" in out.reason
    assert find_subspace_avoiding(S, None, 3).found


@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**31))
def test_bose_burton_regime_always_found(n, d, seed):
    if d > n:
        d = n
    rng = np.random.default_rng(seed)
    g = GroupSpec(2, n)
    cap = -(-(2**n - 1) // (2**d - 1)) - 1  # largest |S| below the bound
    size = int(rng.integers(0, cap + 1))
    S = GroupSet.from_indices(g, rng.choice(np.arange(1, g.order), size=size, replace=False))
    out = find_subspace_avoiding(S, None, d)
    assert out.found
    assert not S.bits[out.space.elements()].any() and out.space.dim == d


@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**31), st.sampled_from([2, 3]))
def test_avoid_agrees_with_enumeration(n, d, seed, p):
    if d > n:
        d = n
    rng = np.random.default_rng(seed)
    g = GroupSpec(p, n)
    S = random_set(g, rng, rng.uniform(0.1, 0.8), nonempty=False).without_zero()
    out = find_subspace_avoiding(S, None, d)
    assert out.found == oracle_avoids(S, d)
    if out.found:
        assert not S.bits[out.space.elements()].any()


def test_avoid_inside_host_subspace(rng):
    g = GroupSpec(2, 8)
    V = span([3, 5, 9, 17, 33], g)
    S = random_set(g, rng, 0.2).without_zero()
    out = find_subspace_avoiding(S, V, 2)
    if out.found:
        assert out.space.is_subspace_of(V)
        assert not S.bits[out.space.elements()].any()


@pytest.mark.parametrize("n", range(1, 7))
def test_sharpness_witness_proved_none(n):
    for d in range(1, min(n, 3) + 1):
        S = sharpness_witness(n, d)
        assert S.card == 2 ** (n + 1 - d) - 1
        assert not oracle_avoids(S, d) if n <= 4 else True


def test_sharpness_examples():
    S = sharpness_witness(4, 2)
    assert S.card == 7
    assert sharpness_witness(5, 1).card == 31
    assert sharpness_witness(5, 5).card == 1
    with pytest.raises(ValueError):
        sharpness_witness(3, 4)


def test_max_subspace_examples():
    g = GroupSpec(2, 5)
    assert max_subspace_in(GroupSet.from_points(g, [0])).dim == 0
    V = span([3, 12, 16], g)
    m = max_subspace_in(GroupSet.of(V))
    assert m.dim == 3 and m.witness == V
    assert max_subspace_in(GroupSet.from_points(g, [1, 2])) is None


def test_max_subspace_niveau_sumset_matches_oracle():
    A = niveau_set(8, 0.3)
    T = sumset(A, A)
    m = max_subspace_in(T)
    assert T.bits[m.witness.elements()].all()
    assert m.dim == oracle_max_dim(T)


@given(st.sampled_from([2, 3]), st.integers(1, 4), st.integers(0, 2**31))
def test_max_subspace_matches_oracle(p, n, seed):
    rng = np.random.default_rng(seed)
    g = GroupSpec(p, n)
    T = random_set(g, rng, rng.uniform(0.3, 0.95)) | GroupSet.from_points(g, [0])
    assert max_subspace_in(T).dim == oracle_max_dim(T)


@given(st.integers(2, 7), st.integers(0, 2**31))
def test_max_subspace_monotone(n, seed):
    rng = np.random.default_rng(seed)
    g = GroupSpec(2, n)
    T = random_set(g, rng, 0.6) | GroupSet.from_points(g, [0])
    T2 = T | random_set(g, rng, 0.3)
    assert max_subspace_in(T).dim <= max_subspace_in(T2).dim


def test_max_subspace_budget():
    A = niveau_set(12, 0.2)
    with pytest.raises(BudgetExhausted):
        max_subspace_in(sumset(A, A) - GroupSet.from_points(A.ambient, [4095]), budget=SearchBudget(node_limit=1))
