"""Bipartite GCD graphs: validation, densities, quality, prime bookkeeping and subgraph constructors."""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from .factored import FactoredInt, is_probable_prime, qparse, qstr
from .intervals import (
    DEFAULT_PRECISION,
    RationalInterval,
    quality_factor_enclosure,
    quality_factor_product,
)
from .profile import PAPER, ConstantsProfile


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    condition: str  # "structure", "5a", "5b" or "5c"
    prime: int | None
    where: tuple[str, ...]
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "prime": None if self.prime is None else str(self.prime),
            "where": list(self.where),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class QualityValue:
    exact_part: Fraction
    trans_part: RationalInterval
    product: RationalInterval

    def to_json(self) -> dict:
        return {
            "exact_part": qstr(self.exact_part),
            "trans_part": self.trans_part.to_json(),
            "product": self.product.to_json(),
        }


@dataclass(frozen=True, eq=False)
class GcdGraph:
    """(mu, V, W, E, P, f, g) with vertices addressed by string ids.

    ``nums`` maps every id to its integer. V and W hold disjoint id sets, so a
    single integer may appear on both sides under two ids.
    """

    mu: Mapping[str, Fraction]
    nums: Mapping[str, FactoredInt]
    V: frozenset[str]
    W: frozenset[str]
    E: frozenset[tuple[str, str]]
    P: frozenset[int] = frozenset()
    f: Mapping[int, int] = field(default_factory=dict)
    g: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "V", frozenset(self.V))
        object.__setattr__(self, "W", frozenset(self.W))
        object.__setattr__(self, "E", frozenset((str(a), str(b)) for a, b in self.E))
        object.__setattr__(self, "P", frozenset(int(p) for p in self.P))
        object.__setattr__(self, "f", {int(p): int(k) for p, k in self.f.items()})
        object.__setattr__(self, "g", {int(p): int(k) for p, k in self.g.items()})
        if self.V & self.W:
            raise GraphError("V and W must use disjoint ids")
        for i in self.V | self.W:
            if i not in self.nums or i not in self.mu:
                raise GraphError(f"vertex {i!r} lacks an integer or a measure")
        if set(self.f) != set(self.P) or set(self.g) != set(self.P):
            raise GraphError("f and g must be defined exactly on P")

    # construction -----------------------------------------------------
    @classmethod
    def build(cls, V: Mapping[str, FactoredInt], W: Mapping[str, FactoredInt], mu: Mapping[str, Fraction],
              E: Iterable[tuple[str, str]], P: Iterable[int] = (), f=None, g=None) -> "GcdGraph":
        nums = {**V, **W}
        return cls(
            mu={k: Fraction(v) for k, v in mu.items()},
            nums=nums,
            V=frozenset(V),
            W=frozenset(W),
            E=frozenset(E),
            P=frozenset(P),
            f=dict(f or {}),
            g=dict(g or {}),
        )

    def _derive(self, V=None, W=None, E=None, P=None, f=None, g=None) -> "GcdGraph":
        V = self.V if V is None else frozenset(V)
        W = self.W if W is None else frozenset(W)
        if E is None:
            E = frozenset(e for e in self.E if e[0] in V and e[1] in W)
        return GcdGraph(
            mu=self.mu, nums=self.nums, V=V, W=W, E=frozenset(E),
            P=self.P if P is None else P, f=self.f if f is None else f, g=self.g if g is None else g,
        )

    # ordered views ----------------------------------------------------
    @cached_property
    def V_sorted(self) -> tuple[str, ...]:
        return tuple(sorted(self.V))

    @cached_property
    def W_sorted(self) -> tuple[str, ...]:
        return tuple(sorted(self.W))

    @cached_property
    def E_sorted(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.E))

    @cached_property
    def adj_V(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.V}
        for v, w in self.E:
            if v in acc:
                acc[v].add(w)
        return {k: frozenset(s) for k, s in acc.items()}

    @cached_property
    def adj_W(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {w: set() for w in self.W}
        for v, w in self.E:
            if w in acc:
                acc[w].add(v)
        return {k: frozenset(s) for k, s in acc.items()}

    # measures ---------------------------------------------------------
    def measure_of(self, ids: Iterable[str]) -> Fraction:
        return sum((self.mu[i] for i in ids), Fraction(0))

    def edge_measure(self, edges: Iterable[tuple[str, str]]) -> Fraction:
        return sum((self.mu[v] * self.mu[w] for v, w in edges), Fraction(0))

    @cached_property
    def mu_V(self) -> Fraction:
        return self.measure_of(self.V)

    @cached_property
    def mu_W(self) -> Fraction:
        return self.measure_of(self.W)

    @cached_property
    def mu_E(self) -> Fraction:
        return self.edge_measure(self.E)

    @cached_property
    def delta(self) -> Fraction:
        return edge_density(self)

    @property
    def is_trivial(self) -> bool:
        return self.mu_E == 0

    def degree_measure(self, x: str, side: str) -> Fraction:
        """mu(Gamma(x)) for x in the given side."""
        return self.measure_of(neighborhood(self, x, side))

    # codec ------------------------------------------------------------
    def to_json(self) -> dict:
        ids = sorted(self.V | self.W)
        return {
            "mu": {i: qstr(self.mu[i]) for i in ids},
            "V": [[i, self.nums[i].to_json()] for i in self.V_sorted],
            "W": [[i, self.nums[i].to_json()] for i in self.W_sorted],
            "E": [[v, w] for v, w in self.E_sorted],
            "P": [str(p) for p in sorted(self.P)],
            "f": {str(p): self.f[p] for p in sorted(self.P)},
            "g": {str(p): self.g[p] for p in sorted(self.P)},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "GcdGraph":
        try:
            mu = {str(k): qparse(v) for k, v in data["mu"].items()}
            V = {str(i): FactoredInt.from_json(fs) for i, fs in data["V"]}
            W = {str(i): FactoredInt.from_json(fs) for i, fs in data["W"]}
            E = [(str(a), str(b)) for a, b in data["E"]]
            P = [int(p) for p in data.get("P", [])]
            f = {int(p): int(k) for p, k in data.get("f", {}).items()}
            g = {int(p): int(k) for p, k in data.get("g", {}).items()}
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise GraphError(f"malformed graph JSON: {exc}") from exc
        for p in P:
            if not is_probable_prime(p):
                raise GraphError(f"{p} in P is not prime")
        if any(v < 0 for v in mu.values()):
            raise GraphError("measure must be non-negative")
        return cls.build(V, W, mu, E, P, f, g)

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


# validation -------------------------------------------------------------
def validate(G: GcdGraph) -> list[Violation]:
    """Every violated condition; an empty list means G is a GCD graph."""
    out: list[Violation] = []
    for i in sorted(G.V | G.W):
        if G.mu[i] < 0:
            out.append(Violation("structure", None, (i,), "negative measure"))
    for v, w in G.E_sorted:
        if v not in G.V or w not in G.W:
            out.append(Violation("structure", None, (v, w), "edge not in V x W"))
    for p in sorted(G.P):
        fp, gp = G.f[p], G.g[p]
        if fp < 0 or gp < 0:
            out.append(Violation("structure", p, (), "negative exponent"))
        for v in G.V_sorted:
            if G.nums[v].valuation(p) < fp:
                out.append(Violation("5a", p, (v,), f"v_p < f(p)={fp}"))
        for w in G.W_sorted:
            if G.nums[w].valuation(p) < gp:
                out.append(Violation("5a", p, (w,), f"v_p < g(p)={gp}"))
        m = min(fp, gp)
        for v, w in G.E_sorted:
            if v in G.nums and w in G.nums:
                got = min(G.nums[v].valuation(p), G.nums[w].valuation(p))
                if got != m:
                    out.append(Violation("5b", p, (v, w), f"min valuation {got} != {m}"))
        if fp != gp:
            for v in G.V_sorted:
                if G.nums[v].valuation(p) != fp:
                    out.append(Violation("5c", p, (v,), f"v_p != f(p)={fp}"))
            for w in G.W_sorted:
                if G.nums[w].valuation(p) != gp:
                    out.append(Violation("5c", p, (w,), f"v_p != g(p)={gp}"))
    return out


def is_valid(G: GcdGraph) -> bool:
    return not validate(G)


# densities and quality --------------------------------------------------
def edge_density(G: GcdGraph) -> Fraction:
    if G.mu_V > 0 and G.mu_W > 0:
        return G.mu_E / (G.mu_V * G.mu_W)
    return Fraction(0)


def exact_quality_part(G: GcdGraph, profile: ConstantsProfile = PAPER) -> Fraction:
    if G.mu_E == 0:
        return Fraction(0)
    out = G.delta**profile.density_exponent * G.mu_V * G.mu_W
    for p in sorted(G.P):
        fp, gp = G.f[p], G.g[p]
        out *= Fraction(p) ** abs(fp - gp)
        if fp == gp >= 1:
            out /= Fraction(p - 1, p) ** 2
    return out


def quality(G: GcdGraph, profile: ConstantsProfile = PAPER, precision: int = DEFAULT_PRECISION,
            check: bool = True) -> QualityValue:
    if check and validate(G):
        raise GraphError("quality needs a valid GCD graph")
    ex = exact_quality_part(G, profile)
    tr = quality_factor_product(G.P, precision, profile.density_exponent, profile.trans_exponent)
    return QualityValue(ex, tr, (tr * ex).rounded(precision + 8))


def subgraph_quality_ratio(G1: GcdGraph, G: GcdGraph, profile: ConstantsProfile = PAPER,
                           precision: int = DEFAULT_PRECISION) -> RationalInterval:
    """Enclosure of q(G1)/q(G) for G1 a subgraph of G with P(G1) containing P(G).

    The shared transcendental factors cancel exactly, so only new primes are enclosed.
    """
    if not G.P <= G1.P:
        raise GraphError("subgraph_quality_ratio needs P(G) inside P(G1)")
    q0 = exact_quality_part(G, profile)
    if q0 == 0:
        raise GraphError("q(G) = 0")
    r = exact_quality_part(G1, profile) / q0
    tr = quality_factor_product(G1.P - G.P, precision, profile.density_exponent, profile.trans_exponent)
    return (tr * r).rounded(precision + 8)


def quality_ratio_direct(G1: GcdGraph, G: GcdGraph, profile: ConstantsProfile = PAPER,
                         precision: int = DEFAULT_PRECISION) -> RationalInterval:
    """q(G1)/q(G) as a quotient of the two full quality enclosures."""
    a = quality(G1, profile, precision, check=False).product
    b = quality(G, profile, precision, check=False).product
    return (a / b).rounded(precision + 8)


# prime bookkeeping ------------------------------------------------------
def gcd_primes(G: GcdGraph, v: str, w: str) -> set[int]:
    a, b = G.nums[v], G.nums[w]
    if len(a.factors) > len(b.factors):
        a, b = b, a
    return {p for p, _ in a.factors if b.valuation(p) > 0}


def r_set(G: GcdGraph) -> frozenset[int]:
    return _r_set_cached(G)


def _r_set_cached(G: GcdGraph) -> frozenset[int]:
    cached = G.__dict__.get("_r_set")
    if cached is None:
        acc: set[int] = set()
        for v, w in G.E:
            acc |= gcd_primes(G, v, w)
        cached = frozenset(acc - G.P)
        object.__setattr__(G, "_r_set", cached)
    return cached


def side_ids(G: GcdGraph, side: str) -> frozenset[str]:
    if side == "V":
        return G.V
    if side == "W":
        return G.W
    raise ValueError("side must be 'V' or 'W'")


def valuation_classes(G: GcdGraph, p: int, side: str) -> dict[int, Fraction]:
    """k -> mu(side_{p^k}) for the non-empty classes."""
    acc: dict[int, Fraction] = defaultdict(Fraction)
    for i in side_ids(G, side):
        acc[G.nums[i].valuation(p)] += G.mu[i]
    return dict(sorted(acc.items()))


def class_ids(G: GcdGraph, p: int, k: int, side: str) -> frozenset[str]:
    return frozenset(i for i in side_ids(G, side) if G.nums[i].valuation(p) == k)


def edge_classes(G: GcdGraph, p: int) -> dict[tuple[int, int], Fraction]:
    """(k, l) -> mu(E_{p^k, p^l}) for the non-empty edge classes."""
    acc: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
    for v, w in G.E:
        acc[(G.nums[v].valuation(p), G.nums[w].valuation(p))] += G.mu[v] * G.mu[w]
    return dict(sorted(acc.items()))


def sharp_class(G: GcdGraph, p: int, profile: ConstantsProfile = PAPER) -> int | None:
    """Smallest k with both side classes at least (1 - T/p) of their side, or None."""
    level = profile.concentration_level(p)
    av = valuation_classes(G, p, "V")
    aw = valuation_classes(G, p, "W")
    kmax = max(list(av) + list(aw) + [0])
    for k in range(kmax + 1):
        if av.get(k, Fraction(0)) >= level * G.mu_V and aw.get(k, Fraction(0)) >= level * G.mu_W:
            return k
    return None


def r_sharp(G: GcdGraph, profile: ConstantsProfile = PAPER) -> frozenset[int]:
    return frozenset(p for p in r_set(G) if sharp_class(G, p, profile) is not None)


def r_flat(G: GcdGraph, profile: ConstantsProfile = PAPER) -> frozenset[int]:
    return r_set(G) - r_sharp(G, profile)


# subgraphs --------------------------------------------------------------
def restrict_prime(G: GcdGraph, p: int, k: int, l: int) -> GcdGraph:
    """G_{p^k, p^l}."""
    if p in G.P:
        raise GraphError(f"{p} is already in P")
    if k < 0 or l < 0:
        raise GraphError("exponents must be non-negative")
    V1 = class_ids(G, p, k, "V")
    W1 = class_ids(G, p, l, "W")
    f = dict(G.f)
    g = dict(G.g)
    f[p] = k
    g[p] = l
    return G._derive(V=V1, W=W1, P=G.P | {p}, f=f, g=g)


def quality_ratio(G: GcdGraph, p: int, k: int, l: int, profile: ConstantsProfile = PAPER,
                  precision: int = DEFAULT_PRECISION) -> RationalInterval:
    """Closed-form enclosure of q(G_{p^k,p^l})/q(G)."""
    if G.mu_E == 0:
        raise GraphError("G must be non-trivial")
    if p in G.P:
        raise GraphError(f"{p} is already in P")
    mv = valuation_classes(G, p, "V").get(k, Fraction(0))
    mw = valuation_classes(G, p, "W").get(l, Fraction(0))
    if mv == 0 or mw == 0:
        raise GraphError("restricted sides must have positive measure")
    me = edge_classes(G, p).get((k, l), Fraction(0))
    d = profile.density_exponent
    r = (me / G.mu_E) ** d * (G.mu_V / mv) ** (d - 1) * (G.mu_W / mw) ** (d - 1) * Fraction(p) ** abs(k - l)
    if k == l >= 1:
        r /= Fraction(p - 1, p) ** 2
    tr = quality_factor_enclosure(p, precision, d, profile.trans_exponent)
    return (tr * r).rounded(precision + 8)


def is_subgraph(G1: GcdGraph, G: GcdGraph) -> bool:
    if not (G1.V <= G.V and G1.W <= G.W and G1.E <= G.E and G.P <= G1.P):
        return False
    for i in G1.V | G1.W:
        if G1.mu[i] != G.mu[i] or G1.nums[i] != G.nums[i]:
            return False
    return all(G1.f[p] == G.f[p] and G1.g[p] == G.g[p] for p in G.P)


def neighborhood(G: GcdGraph, x: str, side: str) -> frozenset[str]:
    if side == "V":
        return G.adj_V.get(x, frozenset())
    if side == "W":
        return G.adj_W.get(x, frozenset())
    raise ValueError("side must be 'V' or 'W'")


def restrict_vertices(G: GcdGraph, A: Iterable[str], B: Iterable[str]) -> GcdGraph:
    A, B = frozenset(A), frozenset(B)
    if not (A <= G.V and B <= G.W):
        raise GraphError("restrict_vertices needs A inside V and B inside W")
    if A == G.V and B == G.W:
        return G
    return G._derive(V=A, W=B)


def restrict_edges(G: GcdGraph, E: Iterable[tuple[str, str]]) -> GcdGraph:
    E = frozenset(E)
    if not E <= G.E:
        raise GraphError("restrict_edges needs a subset of E")
    return G._derive(E=E)


def load_graph(path: str) -> GcdGraph:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return GcdGraph.from_json(data)
