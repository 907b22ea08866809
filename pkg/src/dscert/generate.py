"""Seeded instance generators for the lemma, pipeline and validator suites."""

from __future__ import annotations

import random
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .factored import FactoredInt, gcd, l_t, next_prime, phi_over_n, primes_up_to
from .graph import GcdGraph, class_ids, r_set
from .intervals import DEFAULT_PRECISION
from .profile import SCALED, ConstantsProfile

Dist = Sequence[tuple[int, float]]


@lru_cache(maxsize=None)
def paper_primes() -> tuple[int, int]:
    """A 41-digit prime above 10^40 and a 2001-digit prime above 10^2000."""
    return next_prime(10**40 + 100), next_prime(10**2000)


@lru_cache(maxsize=None)
def _tag_primes(n: int, start: int = 10**6) -> tuple[int, ...]:
    out, p = [], start
    for _ in range(n):
        p = next_prime(p)
        out.append(p)
    return tuple(out)


def _draw(rng: random.Random, dist: Dist) -> int:
    vals = [v for v, _ in dist]
    wts = [w for _, w in dist]
    return rng.choices(vals, weights=wts)[0]


def valued_graph(rng: random.Random, nV: int, nW: int, dists: dict[int, tuple[Dist, Dist]],
                 edge_prob: float = 0.5, mu_max: int = 9, tag_offset: int = 0) -> GcdGraph:
    """Random graph with per-prime valuation distributions on each side.

    Every vertex also carries its own tag prime, so integers are distinct and
    tags never enter R(G).
    """
    tags = _tag_primes(tag_offset + nV + nW)[tag_offset:]
    V, W, mu = {}, {}, {}
    for i in range(nV + nW):
        side = 0 if i < nV else 1
        pairs = [(p, _draw(rng, d[side])) for p, d in sorted(dists.items())]
        pairs.append((tags[i], 1))
        x = FactoredInt.from_pairs((p, e) for p, e in pairs if e > 0)
        name = f"v{i}" if side == 0 else f"w{i - nV}"
        (V if side == 0 else W)[name] = x
        mu[name] = Fraction(rng.randint(1, mu_max), rng.randint(1, mu_max))
    E = [(v, w) for v in V for w in W if rng.random() < edge_prob]
    if not E:
        E = [(rng.choice(sorted(V)), rng.choice(sorted(W)))]
    return GcdGraph.build(V, W, mu, E)


def ensure_edge_divisible(rng: random.Random, G: GcdGraph, p: int) -> GcdGraph:
    """Add one edge whose endpoints are both divisible by p, if such a pair exists."""
    if p in r_set(G):
        return G
    vs = sorted(v for v in G.V if G.nums[v].valuation(p) > 0)
    ws = sorted(w for w in G.W if G.nums[w].valuation(p) > 0)
    if not vs or not ws:
        return G
    return G._derive(E=G.E | {(rng.choice(vs), rng.choice(ws))})


def _mixed(maxv: int, rng: random.Random) -> Dist:
    return [(k, rng.random() + 0.05) for k in range(maxv + 1)]


# lemma instances --------------------------------------------------------
LEMMAS = ("high_degree_step", "edge_sets_pick", "main_step", "small_prime_step", "unbalanced_check",
          "small_set_step")


def lemma_instance(lemma: str, rng: random.Random, profile: ConstantsProfile = SCALED) -> dict:
    """A random instance satisfying the lemma's preconditions under ``profile``.

    Returns a dict with the graph and the extra arguments for the call.
    """
    nV, nW = rng.randint(2, 7), rng.randint(2, 7)
    while True:
        if lemma in ("high_degree_step", "small_set_step"):
            G = valued_graph(rng, nV, nW, {2: (_mixed(2, rng), _mixed(2, rng))}, rng.uniform(0.2, 0.9))
            args = {}
            if lemma == "small_set_step":
                args["eta"] = Fraction(rng.randint(1, 19), 20)
        elif lemma in ("edge_sets_pick", "small_prime_step"):
            p = rng.choice([2, 3, 5, 7])
            G = valued_graph(rng, nV, nW, {p: (_mixed(3, rng), _mixed(3, rng))}, rng.uniform(0.2, 0.9))
            G = ensure_edge_divisible(rng, G, p)
            args = {"p": p}
        elif lemma == "main_step":
            p = rng.choice([101, 103, 1009, 1013, 10007])
            if rng.random() < 0.3:
                conc = [(1, 1.0)]
                G = valued_graph(rng, nV, nW, {p: (conc, conc)}, rng.uniform(0.2, 0.9))
            else:
                G = valued_graph(rng, nV, nW, {p: (_mixed(2, rng), _mixed(2, rng))}, rng.uniform(0.2, 0.9))
            G = ensure_edge_divisible(rng, G, p)
            args = {"p": p}
        elif lemma == "unbalanced_check":
            p = 1009
            k = rng.randint(0, 2)
            side = rng.choice(["V", "W"])
            G = _unbalanced_graph(rng, p, k, side, nV + 3, nW + 3, profile)
            if G is None:
                continue
            args = {"p": p, "k": k, "r": 1, "side": side}
        else:
            raise ValueError(f"unknown lemma {lemma!r}")
        if G.delta > 0 and ("p" not in args or args["p"] in r_set(G)):
            return {"graph": G, **args}


def _unbalanced_graph(rng, p, k, side, nV, nW, profile) -> GcdGraph | None:
    """Concentrated side at class k, with a few light vertices in far classes."""
    n_conc = nW if side == "W" else nV
    far_choices = [j for j in range(0, k + 5) if abs(j - k) >= 2]
    conc_vals = [k] * n_conc
    n_far = rng.randint(0, 2)
    for i in rng.sample(range(n_conc), n_far):
        conc_vals[i] = rng.choice(far_choices)
    other_vals = [rng.choice([k, k, k, rng.randint(0, k + 3)]) for _ in range(nV if side == "W" else nW)]
    tags = _tag_primes(nV + nW)
    V, W, mu = {}, {}, {}
    level = profile.concentration_level(p)
    for side_name, vals, store, prefix, off in (
        ("conc", conc_vals, W if side == "W" else V, "w" if side == "W" else "v", 0),
        ("other", other_vals, V if side == "W" else W, "v" if side == "W" else "w", n_conc),
    ):
        for i, e in enumerate(vals):
            name = f"{prefix}{i}"
            pairs = [(tags[off + i], 1)] + ([(p, e)] if e > 0 else [])
            store[name] = FactoredInt.from_pairs(pairs)
            heavy = side_name == "other" or e == k
            mu[name] = Fraction(rng.randint(50, 100)) if heavy else Fraction(rng.randint(1, 5), 10)
    E = [(v, w) for v in V for w in W if rng.random() < 0.6]
    if not E:
        return None
    G = GcdGraph.build(V, W, mu, E)
    conc = class_ids(G, p, k, side)
    tot = G.mu_W if side == "W" else G.mu_V
    if G.measure_of(conc) < level * tot:
        return None
    G = ensure_edge_divisible(rng, G, p)
    return G if p in r_set(G) else None


# paper-profile constructions --------------------------------------------
def split_instance(p: int, n: int = 4) -> GcdGraph:
    """V entirely in class 1 at p, W mostly in class 0 with one class-1 vertex.

    p fails to concentrate, and G_{p,1} restricted to W's class 0 gains a factor p.
    """
    tags = _tag_primes(2 * n + 1)
    V = {f"v{i}": FactoredInt.from_pairs([(p, 1), (tags[i], 1)]) for i in range(n)}
    W = {f"w{i}": FactoredInt.from_pairs([(tags[n + i], 1)]) for i in range(n)}
    W["wp"] = FactoredInt.from_pairs([(p, 1), (tags[2 * n], 1)])
    mu = {x: Fraction(1) for x in list(V) + list(W)}
    E = [(v, w) for v in V for w in W]
    return GcdGraph.build(V, W, mu, E)


def concentrated_instance(p: int, k: int = 1, n: int = 4) -> GcdGraph:
    """Every vertex has valuation exactly k at p (complete graph)."""
    tags = _tag_primes(2 * n)
    V = {f"v{i}": FactoredInt.from_pairs([(p, k), (tags[i], 1)]) for i in range(n)}
    W = {f"w{i}": FactoredInt.from_pairs([(p, k), (tags[n + i], 1)]) for i in range(n)}
    mu = {x: Fraction(1) for x in list(V) + list(W)}
    return GcdGraph.build(V, W, mu, [(v, w) for v in V for w in W])


def sharp_zero_instance(p: int, n: int = 4, light_exp10: int | None = None) -> GcdGraph:
    """Class 0 concentrated at p, plus one light edge whose endpoints are divisible by p."""
    if light_exp10 is None:
        light_exp10 = len(str(p))
    tags = _tag_primes(2 * n + 2)
    V = {f"v{i}": FactoredInt.from_pairs([(tags[i], 1)]) for i in range(n)}
    W = {f"w{i}": FactoredInt.from_pairs([(tags[n + i], 1)]) for i in range(n)}
    V["vp"] = FactoredInt.from_pairs([(p, 1), (tags[2 * n], 1)])
    W["wp"] = FactoredInt.from_pairs([(p, 1), (tags[2 * n + 1], 1)])
    mu = {x: Fraction(1) for x in list(V) + list(W)}
    mu["vp"] = mu["wp"] = Fraction(1, 10**light_exp10)
    E = [(v, w) for v in V for w in W if v != "vp" and w != "wp"]
    E += [("vp", "wp"), ("vp", "w0"), ("v0", "wp")]
    return GcdGraph.build(V, W, mu, E)


def unbalanced_far_instance(p: int, k: int = 0, r: int = 1, n: int = 4) -> GcdGraph:
    """W concentrated at class k plus one light vertex at class k + r + 1 joined to all of V."""
    tags = _tag_primes(2 * n + 2)
    far = k + r + 1
    V = {f"v{i}": FactoredInt.from_pairs([(tags[i], 1)] + ([(p, k)] if k else [])) for i in range(n)}
    W = {f"w{i}": FactoredInt.from_pairs([(tags[n + i], 1)] + ([(p, k)] if k else [])) for i in range(n)}
    W["wfar"] = FactoredInt.from_pairs([(p, far), (tags[2 * n], 1)])
    V["vp"] = FactoredInt.from_pairs([(p, k + 1), (tags[2 * n + 1], 1)])
    mu = {x: Fraction(1) for x in list(V) + list(W)}
    mu["wfar"] = Fraction(1, p // 10**40 * 10)
    mu["vp"] = Fraction(1, p)
    E = [(v, w) for v in V for w in W if v != "vp"] + [("vp", "wfar")]
    return GcdGraph.build(V, W, mu, E)


def paper_instances() -> list[tuple[str, str, GcdGraph, int]]:
    """(name, lemma, graph, p) for the paper-profile suite."""
    p41, p2001 = paper_primes()
    # just above 10^40 the concentration level 1 - T/p is near 0, so the split uses a prime near 9*10^40
    p41b = next_prime(9 * 10**40)
    out = [
        ("split_p41", "main_step", split_instance(p41b), p41b),
        ("split_p2001", "main_step", split_instance(p2001), p2001),
        ("conc_p41", "main_step", concentrated_instance(p41, 1), p41),
        ("conc_p2001_k1", "main_step_sharp", concentrated_instance(p2001, 1), p2001),
        ("conc_p2001_k2", "main_step_sharp", concentrated_instance(p2001, 2, 3), p2001),
        ("sharp0_p2001", "main_step_sharp", sharp_zero_instance(p2001), p2001),
        ("far_p2001", "unbalanced_check", unbalanced_far_instance(p2001), p2001),
    ]
    return out


# pipeline instances ------------------------------------------------------
def psi_pipeline_instance(rng: random.Random, n_side: int = 10, t: int = 1009,
                          profile: ConstantsProfile = SCALED, private_count: int = 16,
                          shared_big: Sequence[int] = (1000003, 10000019), keep_prob: float = 0.75,
                          shared_private: int = 0) -> GcdGraph:
    """Graph with psi(n) = 1/n weights, mu(n) = psi(n) phi(n)/n.

    Vertices are a small-prime part (mostly shared), big primes dividing every
    vertex once, and private primes just above t. Edges are pairs whose gcd is at
    least M(v,w)/t with M(v,w) = max(v/w, w/v), thinned at random, and kept only
    if L_t(v,w) reaches the profile's entry threshold.
    """
    n = 2 * n_side
    pool = [q for q in primes_up_to(4 * t) if q >= t]
    rng.shuffle(pool)
    take = pool[: n * private_count]
    smooth_choices = {2: [(1, 0.8), (0, 0.1), (2, 0.1)], 3: [(1, 0.85), (0, 0.1), (2, 0.05)],
                      5: [(0, 0.9), (1, 0.1)]}
    nums = []
    for i in range(n):
        pairs = [(p, _draw(rng, d)) for p, d in smooth_choices.items()]
        pairs += [(q, 1) for q in shared_big]
        pairs += [(q, 1) for q in take[i * private_count:(i + 1) * private_count]]
        nums.append(pairs)
    for _ in range(shared_private):
        i, j = rng.randrange(n_side), n_side + rng.randrange(n_side)
        q = pool[n * private_count + _]
        nums[i].append((q, 1))
        nums[j].append((q, 1))
    V, W, mu = {}, {}, {}
    for i, pairs in enumerate(nums):
        x = FactoredInt.from_pairs((p, e) for p, e in pairs if e > 0)
        name = f"v{i}" if i < n_side else f"w{i - n_side}"
        (V if i < n_side else W)[name] = x
        mu[name] = phi_over_n(x) / x.value
    E = []
    for v, a in V.items():
        for w, b in W.items():
            g = _gcd_value(a, b)
            M = max(Fraction(a.value, b.value), Fraction(b.value, a.value))
            if g * t >= M and rng.random() < keep_prob and l_t(a, b, t) >= profile.anatomy_in:
                E.append((v, w))
    if not E:
        v, w = sorted(V)[0], sorted(W)[0]
        E = [(v, w)]
    return GcdGraph.build(V, W, mu, E)


def _gcd_value(a: FactoredInt, b: FactoredInt) -> int:
    return gcd(a, b).value


def random_structure_case(rng: random.Random, nV: int, nW: int) -> GcdGraph:
    """Graph with random P, f, g, often valid and often not."""
    primes = rng.sample([2, 3, 5, 7, 11], rng.randint(1, 3))
    dists = {p: (_mixed(2, rng), _mixed(2, rng)) for p in primes}
    G = valued_graph(rng, nV, nW, dists, rng.uniform(0.2, 1.0))
    P = rng.sample(primes, rng.randint(0, len(primes)))
    f, g = {}, {}
    for p in P:
        if rng.random() < 0.5:
            # derive from an actual edge so that valid graphs are common
            v, w = rng.choice(sorted(G.E))
            f[p] = G.nums[v].valuation(p)
            g[p] = G.nums[w].valuation(p)
        else:
            f[p], g[p] = rng.randint(0, 2), rng.randint(0, 2)
    if P and rng.random() < 0.6:
        V = [v for v in G.V if all(G.nums[v].valuation(p) == f[p] or (f[p] == g[p] and
                                   G.nums[v].valuation(p) >= f[p]) for p in P)]
        W = [w for w in G.W if all(G.nums[w].valuation(p) == g[p] or (f[p] == g[p] and
                                   G.nums[w].valuation(p) >= g[p]) for p in P)]
        if V and W:
            G = G._derive(V=V, W=W)
    return G._derive(P=frozenset(P), f=f, g=g)


__all__ = [
    "valued_graph", "ensure_edge_divisible", "lemma_instance", "LEMMAS", "paper_primes", "split_instance",
    "concentrated_instance", "sharp_zero_instance", "unbalanced_far_instance", "paper_instances", "psi_pipeline_instance",
    "random_structure_case", "call_lemma", "lemma_suite",
]


def call_lemma(lemma: str, inst: dict, profile: ConstantsProfile = SCALED, precision: int = DEFAULT_PRECISION):
    """Apply ``lemma`` to an instance from :func:`lemma_instance`."""
    from . import lemmas as L

    G = inst["graph"]
    if lemma == "high_degree_step":
        return L.high_degree_step(G, profile, precision)
    if lemma == "small_set_step":
        return L.small_set_step(G, inst["eta"], profile, precision)
    if lemma == "unbalanced_check":
        return L.unbalanced_check(G, inst["p"], inst["k"], inst["r"], inst["side"], profile, precision)
    return getattr(L, lemma)(G, inst["p"], profile, precision)


def lemma_suite(lemma: str, count: int = 200, seed: int = 1, profile: ConstantsProfile = SCALED):
    """Yield (index, instance) pairs from one seeded stream per lemma."""
    rng = random.Random(f"{lemma}:{seed}")
    for i in range(count):
        yield i, lemma_instance(lemma, rng, profile)
