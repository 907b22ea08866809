"""Counting integers whose large prime factors have a big reciprocal sum."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..factored import primes_up_to, reciprocal_sum

_GUARD = 1e-9


@dataclass(frozen=True)
class AnatomyReport:
    x: int
    t: Fraction
    c: Fraction
    count: int
    bound_shape: float  # x exp(-t^(e^(c-1))); the implied constant is unknown

    def row(self) -> list[str]:
        return [str(self.x), str(self.t), str(self.c), str(self.count), repr(self.bound_shape)]


def _check(x: int, t, c) -> tuple[Fraction, Fraction]:
    t, c = Fraction(t), Fraction(c)
    if x < 1 or t < 1:
        raise ValueError("need x, t >= 1")
    if not 1 <= c <= 10:
        raise ValueError("need 1 <= c <= 10")
    return t, c


def anatomy_count(x: int, t, c) -> int:
    """#{n <= x : sum_{p | n, p >= t} 1/p >= c}, by sieving over primes p >= t."""
    t, c = _check(x, t, c)
    ps = [p for p in primes_up_to(x) if p >= t]
    sums = [0.0] * (x + 1)
    for p in ps:
        inv = 1.0 / p
        for m in range(p, x + 1, p):
            sums[m] += inv
    cf = float(c)
    count = 0
    near = []
    for n in range(1, x + 1):
        s = sums[n]
        if s >= cf + _GUARD:
            count += 1
        elif s > cf - _GUARD:
            near.append(n)
    # float sums are decisive away from c; ties are settled exactly
    for n in near:
        if reciprocal_sum(p for p in ps if n % p == 0) >= c:
            count += 1
    return count


def bound_shape(x: int, t, c) -> float:
    e = float(t) ** math.exp(float(c) - 1)
    return x * math.exp(-e) if e < 745 else 0.0


def anatomy_report(x: int, t, c) -> AnatomyReport:
    t, c = _check(x, t, c)
    return AnatomyReport(x, t, c, anatomy_count(x, t, c), bound_shape(x, t, c))
