"""A set of integers with large pairwise gcds but no common large divisor."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from ..factored import FactoredInt, is_probable_prime, phi_over_n


@dataclass
class CounterexampleReport:
    n: int
    x_scale: int  # x^c with c = 1/2, so x = x_scale^2
    x: int
    p: int
    window: tuple[int, int]
    window_adjusted: bool
    elements: list[FactoredInt] = field(repr=False)
    in_range: bool
    gcd_threshold: int
    pairs_checked: int
    pairs_failing: int
    min_pair_gcd: int
    max_divisor_fraction: Fraction
    max_divisor: int
    reference_fraction: Fraction  # 1/ceil(n/4)
    weighted_mass: Fraction
    mass_over_size: float
    size_over_log_n: float

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def slack(self) -> Fraction:
        return self.max_divisor_fraction - self.reference_fraction

    def to_json(self) -> dict:
        return {
            "n": self.n, "x_scale": self.x_scale, "x": self.x, "p": self.p,
            "window": list(self.window), "window_adjusted": self.window_adjusted,
            "size": self.size, "in_range": self.in_range, "gcd_threshold": self.gcd_threshold,
            "pairs_checked": self.pairs_checked, "pairs_failing": self.pairs_failing,
            "min_pair_gcd": self.min_pair_gcd,
            "max_divisor_fraction": str(self.max_divisor_fraction), "max_divisor": self.max_divisor,
            "reference_fraction": str(self.reference_fraction), "slack": str(self.slack),
            "weighted_mass": repr(float(self.weighted_mass)), "mass_over_size": repr(self.mass_over_size),
            "size_over_log_n": repr(self.size_over_log_n),
        }


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _find_prime(lo: int, hi: int) -> int | None:
    for p in range(max(lo, 2), hi + 1):
        if is_probable_prime(p):
            return p
    return None


def _divisors(n: FactoredInt):
    out = [1]
    for p, e in n:
        out = [d * p**k for d in out for k in range(e + 1)]
    return out


def model_counterexample(n: int, x_scale: int = 10**4) -> CounterexampleReport:
    """S = {(n!/j) p m : 3n/4 <= j <= n, x_scale/n <= m <= 4 x_scale/(3n), gcd(m, j) = 1}."""
    if n < 4:
        raise ValueError("n must be >= 4")
    if x_scale < n:
        raise ValueError("x_scale must be >= n")
    nf = math.factorial(n)
    x = x_scale * x_scale
    # p in [x_scale n^2/n!, (9/8) x_scale n^2/n!]
    lo = _ceil_div(x_scale * n * n, nf)
    hi = (9 * x_scale * n * n) // (8 * nf)
    p = _find_prime(lo, hi)
    adjusted = False
    while p is None:
        hi = 2 * hi + 2
        adjusted = True
        p = _find_prime(lo, hi)
    j_lo, m_lo, m_hi = _ceil_div(3 * n, 4), _ceil_div(x_scale, n), (4 * x_scale) // (3 * n)
    elems: list[FactoredInt] = []
    seen = set()
    for j in range(j_lo, n + 1):
        for m in range(m_lo, m_hi + 1):
            if math.gcd(m, j) != 1:
                continue
            v = nf // j * p * m
            if v not in seen:
                seen.add(v)
                elems.append(FactoredInt.from_int(v))
    if not elems:
        raise ValueError("empty set; increase x_scale")
    vals = [e.value for e in elems]
    in_range = all(x <= v <= 2 * x for v in vals)

    thr = _ceil_div(p * nf, n * n)
    fails, min_g, pairs = 0, None, 0
    for a, b in combinations(vals, 2):
        g = math.gcd(a, b)
        pairs += 1
        if g * n * n < p * nf:
            fails += 1
        min_g = g if min_g is None else min(min_g, g)

    counts: Counter[int] = Counter()
    for e in elems:
        counts.update(d for d in _divisors(e) if d * n * n >= p * nf)
    best_d, best_c = max(counts.items(), key=lambda kv: (kv[1], -kv[0]), default=(0, 0))

    mass = sum((phi_over_n(e) for e in elems), Fraction(0))
    return CounterexampleReport(
        n=n, x_scale=x_scale, x=x, p=p, window=(lo, hi), window_adjusted=adjusted, elements=elems,
        in_range=in_range, gcd_threshold=thr, pairs_checked=pairs, pairs_failing=fails,
        min_pair_gcd=min_g or 0, max_divisor_fraction=Fraction(best_c, len(elems)), max_divisor=best_d,
        reference_fraction=Fraction(1, _ceil_div(n, 4)), weighted_mass=mass,
        mass_over_size=float(mass / len(elems)), size_over_log_n=len(elems) / math.log(n),
    )
