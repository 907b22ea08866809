"""Truncation point Y, the pair set E_t, its second-moment sum and the GCD graph it induces."""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from ..factored import FactoredInt, l_t, phi_over_n, reciprocal_sum
from ..graph import GcdGraph
from ..psi import PsiFunction


class NoY(ValueError):
    """No truncation point below the cap."""


def weight(psi: PsiFunction, n: int) -> Fraction:
    return psi(n) * phi_over_n(FactoredInt.from_int(n))


def choose_y(psi: PsiFunction, X: int, cap: int = 10**6) -> int:
    """Least Y with sum_{X<=q<=Y} psi(q) phi(q)/q in [1, 2]."""
    if X < 1:
        raise ValueError("X must be >= 1")
    s = Fraction(0)
    for q in range(X, cap + 1):
        w = weight(psi, q)
        if w > Fraction(1, 2):
            raise ValueError(f"psi({q}) exceeds 1/2")
        s += w
        if s >= 1:
            if s > 2:
                raise NoY(f"partial sum jumped past 2 at {q}")
            return q
    raise NoY(f"partial sums stay below 1 up to {cap}")


def partial_sums(psi: PsiFunction, X: int, Y: int) -> list[Fraction]:
    out, s = [], Fraction(0)
    for q in range(X, Y + 1):
        s += weight(psi, q)
        out.append(s)
    return out


def edge_member(psi: PsiFunction, v: int, w: int, t, anatomy_min=10) -> bool:
    """gcd(v, w) >= M(v, w)/t and L_t(v, w) >= anatomy_min."""
    t = Fraction(t)
    if gcd(v, w) * t < max(w * psi(v), v * psi(w)):
        return False
    return l_t(FactoredInt.from_int(v), FactoredInt.from_int(w), t) >= anatomy_min


def build_edge_set(psi: PsiFunction, X: int, Y: int, t, anatomy_min=10,
                   support_only: bool = False) -> list[tuple[int, int]]:
    """E_t over [X, Y]^2, or over the support of psi when ``support_only``."""
    t = Fraction(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    anatomy_min = Fraction(anatomy_min)
    pts = [n for n in range(X, Y + 1) if not support_only or psi(n) > 0]
    vals = {n: FactoredInt.from_int(n)._vals for n in pts}
    ps = {n: psi(n) for n in pts}
    out = []
    for v in pts:
        pv, fv = ps[v], vals[v]
        for w in pts:
            if gcd(v, w) * t < max(w * pv, v * ps[w]):
                continue
            fw = vals[w]
            diff = [p for p in set(fv) | set(fw) if p >= t and fv.get(p, 0) != fw.get(p, 0)]
            if reciprocal_sum(diff) >= anatomy_min:
                out.append((v, w))
    return out


def second_moment(psi: PsiFunction, X: int, Y: int, t, anatomy_min=10,
                  edges: list[tuple[int, int]] | None = None) -> Fraction:
    """Sum over E_t of the product of the two weights; pairs off the support contribute 0."""
    E = build_edge_set(psi, X, Y, t, anatomy_min, support_only=True) if edges is None else edges
    ws: dict[int, Fraction] = {}
    total = Fraction(0)
    for v, w in E:
        for n in (v, w):
            if n not in ws:
                ws[n] = weight(psi, n)
        total += ws[v] * ws[w]
    return total


def mu_graph_from_psi(psi: PsiFunction, X: int, Y: int, t, anatomy_min=10) -> GcdGraph:
    """V = W = support of psi in [X, Y], mu(n) = psi(n) phi(n)/n, E = E_t, no fixed primes."""
    supp = [n for n in range(X, Y + 1) if psi(n) > 0]
    if not supp:
        raise ValueError("psi has empty support on [X, Y]")
    nums = {n: FactoredInt.from_int(n) for n in supp}
    V = {f"v{n}": nums[n] for n in supp}
    W = {f"w{n}": nums[n] for n in supp}
    mu = {}
    for n in supp:
        mu[f"v{n}"] = mu[f"w{n}"] = weight(psi, n)
    E = [(f"v{v}", f"w{w}") for v, w in build_edge_set(psi, X, Y, t, anatomy_min, support_only=True)]
    return GcdGraph.build(V, W, mu, E)
