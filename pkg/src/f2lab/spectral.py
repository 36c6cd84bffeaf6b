"""Exact difference convolutions, popular differences and character transforms.

For f, g on G the difference convolution is

    (f o g)(x) = |G|^-1 * sum_y f(y) g(x + y)

and for p = 2 this counts pairs with a + b = x.  Over F_p with p > 2 we keep
the *difference* reading, counts[x] = #{(a, b) : b - a = x}, which is what
popular-difference arguments need; :func:`sum_counts` gives a + b.

Normalisations: mu_A o mu_B(x) = |G| counts[x] / (|A| |B|) and
<f, g> = E_x f(x) g(x), so <mu_A o mu_A, mu_C> = 1 when C = G.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .gf2_core import AmbientMismatch, GroupSpec, Subspace, full_space
from .setops import GroupSet

TRANSFORM_CUTOFF = 1 << 12
_EXACT_INT_WHT_MAX_N = 20


@dataclass(frozen=True)
class ConvCounts:
    ambient: GroupSpec
    counts: np.ndarray
    card_a: int
    card_b: int

    def mu_conv(self, x: int) -> Fraction:
        """mu_A o mu_B (x) as an exact rational."""
        return Fraction(self.ambient.order * int(self.counts[x]), self.card_a * self.card_b)


@dataclass(frozen=True)
class Spectrum:
    ambient: GroupSpec
    coefficients: np.ndarray


def walsh_hadamard(f: np.ndarray) -> np.ndarray:
    """Unnormalised WHT: F(xi) = sum_x (-1)^{xi.x} f(x). Applying it twice scales by len(f)."""
    a = np.array(f, copy=True)
    n = a.shape[0]
    if n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack((a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]), axis=1)
        h *= 2
    return a.reshape(n)


def transform(f: np.ndarray, ambient: GroupSpec) -> Spectrum:
    """Character transform. p = 2: Walsh-Hadamard; otherwise the n-dim DFT
    F(xi) = sum_x exp(-2 pi i xi.x / p) f(x)."""
    f = np.asarray(f)
    if f.shape != (ambient.order,):
        raise ValueError(f"expected length {ambient.order}, got {f.shape}")
    if ambient.p == 2:
        return Spectrum(ambient, walsh_hadamard(f))
    shape = (ambient.p,) * ambient.n
    return Spectrum(ambient, np.fft.fftn(f.reshape(shape)).reshape(-1))


def inverse_transform(s: Spectrum) -> np.ndarray:
    g = s.ambient
    if g.p == 2:
        return walsh_hadamard(s.coefficients) / g.order
    shape = (g.p,) * g.n
    return np.fft.ifftn(s.coefficients.reshape(shape)).reshape(-1)


def _check(A: GroupSet, B: GroupSet) -> GroupSpec:
    if A.ambient != B.ambient:
        raise AmbientMismatch("convolution of sets in different groups")
    return A.ambient


def _direct_diff(A: GroupSet, B: GroupSet) -> np.ndarray:
    g = A.ambient
    out = np.zeros(g.order, dtype=np.int64)
    apts, bpts = A.points(), B.points()
    if len(apts) == 0 or len(bpts) == 0:
        return out
    chunk = max(1, (1 << 22) // len(bpts))
    for i in range(0, len(apts), chunk):
        a = apts[i : i + chunk]
        if g.p == 2:
            diffs = (a[:, None] ^ bpts[None, :]).ravel()
        else:
            bd = g.digit_array(bpts)
            ad = g.digit_array(a)
            diffs = g.from_digit_array((bd[None, :, :] - ad[:, None, :]) % g.p).ravel()
        out += np.bincount(diffs, minlength=g.order)
    return out


def _transform_diff(A: GroupSet, B: GroupSet) -> np.ndarray:
    g = A.ambient
    if g.p == 2 and g.n <= _EXACT_INT_WHT_MAX_N:
        fa = walsh_hadamard(A.bits.astype(np.int64))
        fb = walsh_hadamard(B.bits.astype(np.int64))
        raw = walsh_hadamard(fa * fb)
        counts, rem = np.divmod(raw, g.order)
        if rem.any():
            raise ArithmeticError("integer WHT left a remainder")
        return counts
    if g.p == 2:
        fa = walsh_hadamard(A.bits.astype(np.float64))
        fb = walsh_hadamard(B.bits.astype(np.float64))
        raw = walsh_hadamard(fa * fb) / g.order
    else:
        shape = (g.p,) * g.n
        fa = np.fft.fftn(A.bits.reshape(shape).astype(np.float64))
        fb = np.fft.fftn(B.bits.reshape(shape).astype(np.float64))
        raw = np.fft.ifftn(np.conj(fa) * fb).real.reshape(-1)
    counts = np.rint(raw).astype(np.int64)
    if np.abs(raw - counts).max(initial=0.0) > 0.25 or counts.sum() != A.card * B.card:
        raise ArithmeticError("floating transform lost exactness")
    return counts


def conv_counts(A: GroupSet, B: GroupSet, method: str = "auto") -> ConvCounts:
    """counts[x] = #{(a, b) in A x B : b - a = x}."""
    g = _check(A, B)
    if method == "auto":
        method = "transform" if g.order >= TRANSFORM_CUTOFF else "direct"
    if method == "transform":
        counts = _transform_diff(A, B)
    elif method == "direct":
        counts = _direct_diff(A, B)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ConvCounts(g, counts, A.card, B.card)


def sum_counts(A: GroupSet, B: GroupSet, method: str = "auto") -> ConvCounts:
    """counts[x] = #{(a, b) in A x B : a + b = x}."""
    g = _check(A, B)
    negA = A if g.p == 2 else A.negate()
    return conv_counts(negA, B, method=method)


def popular_threshold(card_a: int, V: Subspace) -> int:
    """Least integer count c with |G| c / |A|^2 >= mu(V)^2 / 2."""
    order = V.ambient.order
    num = card_a * card_a * V.size * V.size
    den = 2 * order**3
    return -(-num // den)


def popular_difference_set(
    A: GroupSet, V: Subspace | None = None, counts: ConvCounts | None = None
) -> GroupSet:
    """{v in V : mu_A o mu_A (v) >= mu(V)^2 / 2}, compared on integers."""
    if A.card == 0:
        raise ValueError("popular differences of an empty set")
    g = A.ambient
    V = full_space(g) if V is None else V
    if V.ambient != g:
        raise AmbientMismatch("subspace and set in different groups")
    if counts is None:
        counts = conv_counts(A, A)
    t = popular_threshold(A.card, V)
    vs = V.elements()
    keep = vs[counts.counts[vs] >= t]
    return GroupSet.from_indices(g, keep)


def inner_product_mu(A: GroupSet, C: GroupSet, counts: ConvCounts | None = None) -> Fraction:
    """<mu_A o mu_A, mu_C> = |G| sum_{x in C} counts[x] / (|A|^2 |C|)."""
    _check(A, C)
    if A.card == 0 or C.card == 0:
        raise ValueError("inner product needs nonempty A and C")
    if counts is None:
        counts = conv_counts(A, A)
    total = int(counts.counts[C.bits].sum())
    return Fraction(A.ambient.order * total, A.card * A.card * C.card)
