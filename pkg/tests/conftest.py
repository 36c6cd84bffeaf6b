from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from f2lab.gf2_core import GroupSpec, enumerate_subspaces, full_space
from f2lab.ramsey import Coloring
from f2lab.setops import GroupSet

settings.register_profile(
    "f2lab", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("f2lab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_set(g: GroupSpec, rng, density: float = 0.5, nonempty: bool = True) -> GroupSet:
    bits = rng.random(g.order) < density
    if nonempty and not bits.any():
        bits[rng.integers(g.order)] = True
    return GroupSet(g, bits)


def naive_span(vs, g: GroupSpec) -> set[int]:
    """All F_p-combinations of vs, by brute force."""
    out = set()
    for coeffs in itertools.product(range(g.p), repeat=len(vs)):
        x = 0
        for c, v in zip(coeffs, vs):
            x = g.add(x, g.scale(c, v))
        out.add(x)
    return out


def naive_diff_counts(A: GroupSet, B: GroupSet) -> np.ndarray:
    g = A.ambient
    out = np.zeros(g.order, dtype=np.int64)
    for a in A:
        for b in B:
            out[g.sub(b, a)] += 1
    return out


def space_masks(n: int, d: int) -> np.ndarray:
    """Bitmasks over the 2^n - 1 nonzero points (bit x-1 for point x)."""
    out = []
    for W in enumerate_subspaces(full_space(GroupSpec(2, n)), d):
        out.append(sum(1 << (int(x) - 1) for x in W.elements()[1:]))
    return np.array(out, dtype=np.int64)


def naive_valid_masks(n: int, dims: tuple[int, int]) -> np.ndarray:
    """All 2-colorings of F_2^n as masks of color 1; True where valid."""
    m = 2**n - 1
    masks = np.arange(1 << m, dtype=np.int64)
    full = (1 << m) - 1
    ok = np.ones(len(masks), dtype=bool)
    for color, d in enumerate(dims):
        if d > n:
            continue
        cls = masks if color == 0 else full ^ masks
        for sm in space_masks(n, d):
            ok &= (cls & sm) != sm
    return ok


def coloring_from_mask(n: int, mask: int) -> Coloring:
    g = GroupSpec(2, n)
    colors = np.zeros(g.order, dtype=np.int64)
    for x in range(1, g.order):
        colors[x] = 1 if (mask >> (x - 1)) & 1 else 2
    return Coloring(g, 2, colors)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
