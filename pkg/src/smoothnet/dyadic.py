"""Exact vectors of dyadic rationals ``num / 2**exp`` with a shared exponent.

Numerators live in an int64 array while they stay well inside 64 bits and are
promoted to Python integers (object dtype) beyond that, unless the caller asks
for overflow to be signalled instead.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

_SAFE = 1 << 61


class DyadicOverflowError(OverflowError):
    """Exact numerators no longer fit in int64 and big integers were disallowed."""


def _fits(num: np.ndarray, shift: int = 0) -> bool:
    if num.dtype == object or num.size == 0:
        return True
    peak = int(np.abs(num).max())
    return peak < (_SAFE >> shift) if shift < 61 else peak == 0


class DyadicVector:
    __slots__ = ("num", "exp", "allow_bigint")
    __array_ufunc__ = None  # make ndarray arithmetic defer to our reflected operators

    def __init__(self, num, exp: int = 0, allow_bigint: bool = True):
        num = np.asarray(num)
        if num.dtype != object:
            num = num.astype(np.int64)
        self.num = num
        self.exp = int(exp)
        self.allow_bigint = allow_bigint

    @classmethod
    def from_ints(cls, values, allow_bigint: bool = True) -> "DyadicVector":
        return cls(np.array(values, dtype=np.int64), 0, allow_bigint)

    @classmethod
    def zeros(cls, n: int) -> "DyadicVector":
        return cls(np.zeros(n, dtype=np.int64), 0)

    def __len__(self) -> int:
        return len(self.num)

    def _promote(self, num: np.ndarray, shift: int) -> np.ndarray:
        if _fits(num, shift):
            return num
        if not self.allow_bigint:
            raise DyadicOverflowError(
                f"dyadic numerators exceed int64 at denominator 2**{self.exp + shift}"
            )
        return num.astype(object)

    def numerators_at(self, exp: int) -> np.ndarray:
        """Numerators over the common denominator ``2**exp`` (``exp >= self.exp``)."""
        shift = exp - self.exp
        if shift < 0:
            raise ValueError("cannot lower the exponent without losing exactness")
        if shift == 0:
            return self.num
        num = self._promote(self.num, shift)
        if num.dtype == object:
            return num * (1 << shift)
        return num << shift

    def _binary(self, other, sign: int) -> "DyadicVector":
        if not isinstance(other, DyadicVector):
            other = DyadicVector(np.asarray(other, dtype=np.int64))
        exp = max(self.exp, other.exp)
        a = self.numerators_at(exp)
        b = other.numerators_at(exp)
        if a.dtype == object or b.dtype == object:
            a, b = a.astype(object), b.astype(object)
        return DyadicVector(a + b if sign > 0 else a - b, exp, self.allow_bigint)

    def __add__(self, other):
        return self._binary(other, +1)

    def __sub__(self, other):
        return self._binary(other, -1)

    def __rsub__(self, other):
        return DyadicVector(np.asarray(other, dtype=np.int64))._binary(self, -1)

    def __eq__(self, other):
        if not isinstance(other, DyadicVector):
            other = DyadicVector(np.asarray(other, dtype=np.int64))
        if len(self) != len(other):
            return False
        exp = max(self.exp, other.exp)
        return bool(np.all(self.numerators_at(exp) == other.numerators_at(exp)))

    __hash__ = None

    def averaged(self, u: np.ndarray, v: np.ndarray) -> "DyadicVector":
        """Replace each pair ``(u[k], v[k])`` by its exact mean."""
        num, exp = self.num, self.exp
        s = num[u] + num[v]
        if s.size and np.any(s % 2 != 0):
            num = self._promote(num, 1)
            num = num * 2
            exp += 1
            s = num[u] + num[v]
        out = num.copy()
        out[u] = s // 2
        out[v] = s // 2
        return DyadicVector(out, exp, self.allow_bigint)

    def normalized(self) -> "DyadicVector":
        num, exp = self.num, self.exp
        while exp > 0 and np.all(num % 2 == 0):
            num = num // 2
            exp -= 1
        return DyadicVector(num, exp, self.allow_bigint)

    def to_fractions(self) -> list[Fraction]:
        den = 1 << self.exp
        return [Fraction(int(x), den) for x in self.num]

    def to_float(self) -> np.ndarray:
        if self.num.dtype == object:
            return np.array([float(x) for x in self.to_fractions()])
        return self.num.astype(np.float64) / float(1 << self.exp)

    def total(self) -> Fraction:
        return Fraction(int(sum(int(x) for x in self.num)), 1 << self.exp)

    def max(self) -> Fraction:
        return Fraction(int(self.num.max()), 1 << self.exp)

    def min(self) -> Fraction:
        return Fraction(int(self.num.min()), 1 << self.exp)

    def __getitem__(self, i: int) -> Fraction:
        return Fraction(int(self.num[i]), 1 << self.exp)

    def __repr__(self):
        return f"DyadicVector(exp={self.exp}, {self.to_fractions()!r})"
