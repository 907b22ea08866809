"""Reduced-denominator transform psi*(q) = phi(q) sup_{q | n} psi(n)/n."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..factored import FactoredInt, euler_phi
from ..psi import PsiFunction


@dataclass(frozen=True)
class CatlinValue:
    value: Fraction
    exact: bool  # False: maximum over multiples up to the cap only, a lower bound
    argmax: int | None


def catlin_star(psi: PsiFunction, q: int, N_cap: int) -> CatlinValue:
    if q < 1:
        raise ValueError("q must be >= 1")
    if N_cap < q:
        raise ValueError("N_cap must be >= q")
    ph = euler_phi(FactoredInt.from_int(q))
    if psi.ratio_is_nonincreasing():
        return CatlinValue(ph * psi(q) / q, True, q)
    supp = psi.support
    if supp is not None:
        cands = [n for n in supp if n % q == 0]
        exact = True
    else:
        cands = list(range(q, N_cap + 1, q))
        exact = False
    best, arg = Fraction(0), None
    for n in cands:
        v = psi(n) / n
        if v > best:
            best, arg = v, n
    return CatlinValue(ph * best, exact, arg)
