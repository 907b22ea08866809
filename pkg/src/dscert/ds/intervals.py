"""Finite unions of closed rational intervals in [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable

from ..psi import PsiFunction


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint closed intervals; touching intervals are merged."""

    parts: tuple[tuple[Fraction, Fraction], ...] = ()

    @classmethod
    def of(cls, intervals: Iterable[tuple[Fraction, Fraction]]) -> "IntervalUnion":
        clipped = []
        for lo, hi in intervals:
            lo, hi = max(Fraction(lo), Fraction(0)), min(Fraction(hi), Fraction(1))
            if lo <= hi:
                clipped.append((lo, hi))
        clipped.sort()
        merged: list[list[Fraction]] = []
        for lo, hi in clipped:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return cls(tuple((a, b) for a, b in merged))

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out, i, j = [], 0, 0
        a, b = self.parts, other.parts
        while i < len(a) and j < len(b):
            lo, hi = max(a[i][0], b[j][0]), min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalUnion.of(out)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion.of(self.parts + other.parts)

    def contains(self, x) -> bool:
        x = Fraction(x)
        return any(lo <= x <= hi for lo, hi in self.parts)

    @property
    def measure(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.parts), Fraction(0))

    def __len__(self) -> int:
        return len(self.parts)


def _centres(q: int, reduced: bool) -> range | list[int]:
    if not reduced:
        return range(0, q + 1)
    return [a for a in range(0, q + 1) if gcd(a, q) == 1]


def _union_for(psi: PsiFunction, q: int, reduced: bool) -> IntervalUnion:
    if q < 1:
        raise ValueError("q must be >= 1")
    r = psi(q) / q
    return IntervalUnion.of((Fraction(a, q) - r, Fraction(a, q) + r) for a in _centres(q, reduced))


def a_q_set(psi: PsiFunction, q: int) -> IntervalUnion:
    """Neighbourhoods of radius psi(q)/q around the reduced fractions a/q in [0, 1]."""
    return _union_for(psi, q, True)


def k_q_set(psi: PsiFunction, q: int) -> IntervalUnion:
    """Same, around every a/q with 0 <= a <= q."""
    return _union_for(psi, q, False)


def measure(u: IntervalUnion) -> Fraction:
    return u.measure


# Integer-scaled fast path for pair scans. Endpoints of A_q are (a*D -+ N) / (q*D)
# where psi(q) = N/D; clipping to [0, 1] is applied on the scaled integers.
def scaled_parts(psi: PsiFunction, q: int) -> tuple[list[tuple[int, int]], int]:
    v = psi(q)
    n, d = v.numerator, v.denominator
    den = q * d
    out: list[tuple[int, int]] = []
    for a in _centres(q, True):
        lo, hi = max(a * d - n, 0), min(a * d + n, den)
        if lo > hi:
            continue
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out, den


def scaled_intersection_measure(pa: list[tuple[int, int]], da: int,
                                pb: list[tuple[int, int]], db: int) -> Fraction:
    g = gcd(da, db)
    L = da // g * db
    sa, sb = L // da, L // db
    total, i, j = 0, 0, 0
    while i < len(pa) and j < len(pb):
        lo = max(pa[i][0] * sa, pb[j][0] * sb)
        ahi, bhi = pa[i][1] * sa, pb[j][1] * sb
        hi = min(ahi, bhi)
        if lo < hi:
            total += hi - lo
        if ahi < bhi:
            i += 1
        else:
            j += 1
    return Fraction(total, L)
