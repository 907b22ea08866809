"""Overlap of two reduced approximation sets against the multiplicative overlap factor."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterator

from ..factored import FactoredInt
from ..psi import PsiFunction
from .intervals import scaled_intersection_measure, scaled_parts


def _check_psi(psi: PsiFunction, *qs: int) -> None:
    for q in qs:
        v = psi(q)
        if not 0 <= v <= Fraction(1, 2):
            raise ValueError(f"psi({q}) = {v} outside [0, 1/2]")


@dataclass(frozen=True)
class OverlapReport:
    q: int
    r: int
    lhs: Fraction
    rhs_core: Fraction
    indicator: bool
    zero_division: bool  # a factor measure vanished; lhs reported as 0

    @property
    def ratio(self) -> Fraction | None:
        if not self.indicator:
            return None
        return self.lhs / self.rhs_core

    def row(self) -> list[str]:
        return [str(self.q), str(self.r), str(self.lhs), str(self.rhs_core), str(int(self.indicator)),
                str(int(self.zero_division))]


def overlap_scale(psi: PsiFunction, q: int, r: int) -> Fraction:
    return max(r * psi(q), q * psi(r))


def rhs_core(psi: PsiFunction, q: int, r: int) -> Fraction:
    g = gcd(q, r)
    cut = overlap_scale(psi, q, r) / g
    out = Fraction(1)
    for p, _ in FactoredInt.from_int(q * r // (g * g)):
        if p > cut:
            out *= Fraction(p + 1, p)
    return out


def _measure_of_parts(parts, den) -> Fraction:
    return Fraction(sum(hi - lo for lo, hi in parts), den)


def overlap_report(psi: PsiFunction, q: int, r: int, _cache: dict | None = None) -> OverlapReport:
    """Normalized intersection measure, overlap factor and indicator for q != r."""
    if q == r:
        raise ValueError("overlap_report needs q != r")
    if q < 1 or r < 1:
        raise ValueError("q, r must be >= 1")
    _check_psi(psi, q, r)
    cache = {} if _cache is None else _cache
    for n in (q, r):
        if n not in cache:
            parts, den = scaled_parts(psi, n)
            cache[n] = (parts, den, _measure_of_parts(parts, den))
    pq, dq, mq = cache[q]
    pr, dr, mr = cache[r]
    inter = scaled_intersection_measure(pq, dq, pr, dr)
    zero = mq == 0 or mr == 0
    if zero and inter != 0:
        raise ArithmeticError("nonzero intersection with a null factor")
    lhs = Fraction(0) if zero else inter / (mq * mr)
    return OverlapReport(q, r, lhs, rhs_core(psi, q, r), overlap_scale(psi, q, r) >= gcd(q, r), zero)


def overlap_scan(psi: PsiFunction, q_max: int, q_min: int = 1) -> Iterator[OverlapReport]:
    """All ordered-by-(q, r) pairs q < r in [q_min, q_max]."""
    cache: dict = {}
    for q in range(q_min, q_max + 1):
        for r in range(q + 1, q_max + 1):
            yield overlap_report(psi, q, r, cache)
