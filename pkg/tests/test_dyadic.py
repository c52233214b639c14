from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothnet.dyadic import DyadicOverflowError, DyadicVector

ints = st.lists(st.integers(-10**6, 10**6), min_size=2, max_size=10)


def frac_average(vals, pairs):
    out = list(vals)
    for a, b in pairs:
        out[a] = out[b] = (vals[a] + vals[b]) / 2
    return out


@settings(max_examples=100, deadline=None)
@given(ints, st.data())
def test_averaging_matches_fractions(vals, data):
    n = len(vals)
    dv = DyadicVector.from_ints(vals)
    ref = [Fraction(v) for v in vals]
    for _ in range(data.draw(st.integers(1, 8))):
        perm = data.draw(st.permutations(range(n)))
        k = data.draw(st.integers(0, n // 2))
        pairs = [(perm[2 * i], perm[2 * i + 1]) for i in range(k)]
        u = np.array([p[0] for p in pairs], dtype=np.int64)
        v = np.array([p[1] for p in pairs], dtype=np.int64)
        dv = dv.averaged(u, v)
        ref = frac_average(ref, pairs)
    assert dv.to_fractions() == ref
    assert dv.total() == sum(ref)
    assert dv.max() == max(ref) and dv.min() == min(ref)


@settings(max_examples=100, deadline=None)
@given(ints, ints, st.integers(0, 20), st.integers(0, 20))
def test_add_sub_eq(a, b, ea, eb):
    k = min(len(a), len(b))
    a, b = a[:k], b[:k]
    x, y = DyadicVector(a, ea), DyadicVector(b, eb)
    fx = [Fraction(v, 2**ea) for v in a]
    fy = [Fraction(v, 2**eb) for v in b]
    assert (x + y).to_fractions() == [p + q for p, q in zip(fx, fy)]
    assert (x - y).to_fractions() == [p - q for p, q in zip(fx, fy)]
    assert (x - y) + y == x
    assert x.normalized() == x


def test_exponent_only_grows_when_needed():
    dv = DyadicVector.from_ints([2, 4, 1, 3])
    even = dv.averaged(np.array([0]), np.array([1]))
    assert even.exp == 0 and even.to_fractions() == [3, 3, 1, 3]
    odd = dv.averaged(np.array([0, 2]), np.array([3, 1]))
    assert odd.exp == 1


def test_reflected_subtraction_with_int_array():
    xi = DyadicVector([1, 3], 1)
    diff = np.array([1, 2]) - xi
    assert isinstance(diff, DyadicVector)
    assert diff.to_fractions() == [Fraction(1, 2), Fraction(1, 2)]


def test_bigint_promotion_and_overflow():
    big = (1 << 60) + 1
    deep = DyadicVector([big, 0], 0).averaged(np.array([0]), np.array([1]))
    assert deep.num.dtype == object
    assert deep.to_fractions() == [Fraction(big, 2)] * 2
    strict = DyadicVector([big, 0], 0, allow_bigint=False)
    with pytest.raises(DyadicOverflowError):
        strict.averaged(np.array([0]), np.array([1]))


def test_cannot_lower_exponent():
    with pytest.raises(ValueError):
        DyadicVector([1], 3).numerators_at(1)
