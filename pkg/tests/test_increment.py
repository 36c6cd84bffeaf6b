from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from f2lab.gf2_core import Coset, GroupSpec, full_space, sample_uniform_subspace, span
from f2lab.increment import (
    DichotomyError,
    DichotomyParams,
    HypothesisViolated,
    _search_increment,
    check_dichotomy,
    increment_step,
    run_dichotomy,
    trace_csv_rows,
)
from f2lab.setops import GroupSet, density, maximal_density
from f2lab.spectral import conv_counts, popular_difference_set

from conftest import random_set

F = Fraction


def planted(g, W, rng, inside=0.7):
    bits = np.zeros(g.order, dtype=bool)
    e = W.elements()
    bits[e] = rng.random(len(e)) < inside
    return GroupSet(g, bits)


def test_params_validation():
    with pytest.raises(ValueError):
        DichotomyParams(F(0), F(1, 2))
    with pytest.raises(ValueError):
        DichotomyParams(F(1, 2), F(1, 2), c_inc=F(1, 64))
    p = DichotomyParams(F(1, 8), F(1, 4))
    assert p.steps_per_index == 128 * 3
    assert DichotomyParams(F(1, 8), F(1, 4), c_inc=F(1, 16)).steps_per_index == 48


def test_check_dichotomy_examples(rng):
    g = GroupSpec(2, 10)
    params = DichotomyParams(F(3, 5), F(1, 4))
    G = full_space(g)
    chk = check_dichotomy([GroupSet.empty(g), GroupSet.full(g)], G, params)
    assert chk.statuses[0].sparse and chk.statuses[1].expanding
    R = random_set(g, rng, 0.5)
    st = check_dichotomy([R], G, params).statuses[0]
    assert st.sparse == (F(R.card, g.order) < F(3, 5)) and st.sparse
    assert chk.holds and chk.first_failing is None


def test_check_dichotomy_flags_failing_index(rng):
    g = GroupSpec(2, 8)
    H = span([1 << i for i in range(7)], g)
    A = GroupSet.of(H).without_zero()
    chk = check_dichotomy([GroupSet.full(g), A], full_space(g), DichotomyParams(F(1, 4), F(1, 4)))
    assert chk.first_failing == 1 and chk.statuses[1].label == "failing"


def test_status_evaluation_matches_ambient_oracle(rng):
    g = GroupSpec(2, 9)
    V = sample_uniform_subspace(9, 6, rng)
    A = random_set(g, rng, 0.15)
    params = DichotomyParams(F(1, 4), F(1, 8))
    st = check_dichotomy([A], V, params).statuses[0]
    D = popular_difference_set(A, V)
    assert st.mu_popular == F((D & GroupSet.of(V)).card, V.size)
    assert st.mu == density(A, V)
    assert st.mu_star == maximal_density(A, V).value


def test_increment_on_hyperplane_set():
    g = GroupSpec(2, 10)
    H = span([1 << i for i in range(9)], g)
    A = GroupSet.of(H).without_zero()
    params = DichotomyParams(F(1, 4), F(1, 4))
    step = increment_step(A, full_space(g), params)
    assert step.codim_added == 1
    assert step.coset.base == H
    assert step.mu_after == F(H.size - 1, H.size)
    assert step.mu_after >= (1 + params.c_inc) * step.mu_star_before
    assert step.inner_product <= F(1, 2)


def test_increment_requires_failing_index(rng):
    g = GroupSpec(2, 8)
    params = DichotomyParams(F(1, 4), F(1, 4))
    with pytest.raises(ValueError, match="sparsity"):
        increment_step(GroupSet.from_points(g, [3]), full_space(g), params)
    with pytest.raises(ValueError, match="expansion"):
        increment_step(GroupSet.full(g), full_space(g), params)


def test_planted_codim2_instance(rng):
    g = GroupSpec(2, 12)
    W = span([1 << i for i in range(2, 12)], g)
    A = planted(g, W, rng, 0.6)
    step = increment_step(A, full_space(g), DichotomyParams(F(1, 8), F(1, 8)))
    assert step.codim_added <= 2
    # exhaustive coset scan over the returned subspace confirms the density
    reps = step.coset.base.complement_reps()
    best = max(density(A, Coset.of(step.coset.base, int(r))) for r in reps)
    assert density(A, step.coset) == best


def test_increment_search_needs_codim_two():
    # densities (1, x, x, x) on the four cosets of a codim-2 space: every
    # hyperplane through it gains too little for c = 1/16, its cosets gain enough
    g = GroupSpec(2, 10)
    rng = np.random.default_rng(5)
    bits = np.zeros(g.order, dtype=bool)
    W = span([1 << i for i in range(2, 10)], g)
    for t in range(4):
        e = Coset.of(W, t).elements()
        k = len(e) if t == 0 else int(0.85 * len(e))
        bits[rng.choice(e, size=k, replace=False)] = True
    A = GroupSet(g, bits)
    k, Wl = _search_increment(A, DichotomyParams(F(1, 8), F(1, 8), c_inc=F(1, 16)))
    assert k == 2
    reps = Wl.complement_reps()
    best = max(density(A, Coset.of(Wl, int(r))) for r in reps)
    assert best >= F(17, 16) * A.density


def test_run_trivial_and_expanding_start():
    g = GroupSpec(2, 8)
    rep = run_dichotomy([GroupSet.full(g)], DichotomyParams(F(1, 4), F(1, 4)))
    assert rep.trace == [] and rep.final_space == full_space(g) and rep.certified


def test_run_random_pair_budget(rng):
    g = GroupSpec(2, 12)
    As = [random_set(g, rng, 0.3), random_set(g, rng, 0.1)]
    rep = run_dichotomy(As, DichotomyParams(F(1, 8), F(1, 8)))
    assert rep.certified
    assert rep.codim_budget_bound == 2 * 3**5 * 3**2
    assert rep.achieved_codim <= rep.codim_budget_bound


def test_run_hyperplane_adversary():
    g = GroupSpec(2, 10)
    H = span([1 << i for i in range(9)], g)
    A = GroupSet.of(H).without_zero()
    params = DichotomyParams(F(1, 4), F(1, 4))
    rep = run_dichotomy([A], params)
    touched = sum(1 for t in rep.trace if t.index == 0)
    assert touched <= 128 * 2 and rep.halted_within
    assert rep.statuses[0].expanding or rep.statuses[0].sparse


@pytest.mark.parametrize("seed", range(4))
def test_run_structured_instances(seed):
    rng = np.random.default_rng(seed)
    g = GroupSpec(2, 11)
    As = [planted(g, sample_uniform_subspace(11, 11 - int(rng.integers(1, 4)), rng), rng) for _ in range(3)]
    params = DichotomyParams(F(1, 8), F(1, 8))
    rep = run_dichotomy(As, params)
    assert rep.certified and rep.halted_within
    for t in rep.trace:
        assert all(a >= b for a, b in zip(t.mu_star_after, t.mu_star_before))
        assert t.mu_star_after[t.index] >= (1 + params.c_inc) * t.mu_star_before[t.index]
    fresh = check_dichotomy(As, rep.final_space, params)
    assert fresh.holds
    rows = trace_csv_rows(rep)
    assert len(rows) == len(rep.trace) + 1


def test_run_p3():
    rng = np.random.default_rng(2)
    g = GroupSpec(3, 6)
    W = span([1, 3, 9, 27], g)
    A = planted(g, W, rng, 0.5)
    rep = run_dichotomy([A], DichotomyParams(F(1, 4), F(1, 4), p=3))
    assert rep.certified


def test_param_prime_mismatch():
    with pytest.raises(ValueError):
        run_dichotomy([GroupSet.full(GroupSpec(3, 2))], DichotomyParams(F(1, 4), F(1, 4)))


def test_error_carries_partial_trace():
    g = GroupSpec(2, 10)
    H = span([1 << i for i in range(9)], g)
    A = GroupSet.of(H).without_zero()
    params = DichotomyParams(F(1, 4), F(1, 4), max_step_codim=1, search_limit=0)
    B = planted(g, span([1 << i for i in range(2, 10)], g), np.random.default_rng(0), 0.9)
    try:
        rep = run_dichotomy([A, B], params)
    except DichotomyError as exc:
        assert exc.report.final_space.ambient == g
    else:
        assert rep.certified
