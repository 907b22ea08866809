import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dscert.factored import FactoredInt
from dscert.generate import random_structure_case, valued_graph
from dscert.graph import (
    GcdGraph,
    GraphError,
    edge_classes,
    edge_density,
    is_subgraph,
    neighborhood,
    quality,
    quality_ratio,
    quality_ratio_direct,
    r_flat,
    r_set,
    r_sharp,
    restrict_prime,
    restrict_vertices,
    validate,
)
from dscert.intervals import RationalInterval, quality_factor_enclosure
from dscert.profile import PAPER, SCALED

from oracles import brute_conditions, mp_contains, mp_quality

F = FactoredInt.from_int


def graph(V, W, E, mu=None, P=(), f=None, g=None):
    Vd = {f"v{n}": F(n) for n in V}
    Wd = {f"w{n}": F(n) for n in W}
    mu = mu or {k: 1 for k in [*Vd, *Wd]}
    return GcdGraph.build(Vd, Wd, mu, [(f"v{a}", f"w{b}") for a, b in E], P, f, g)


def test_validate_examples():
    assert validate(graph([6, 35], [10], [(6, 10), (35, 10)])) == []
    ok = graph([12], [18], [(12, 18)], P=[2], f={2: 2}, g={2: 1})
    assert validate(ok) == []
    bad = graph([12], [18], [(12, 18)], P=[2], f={2: 2}, g={2: 2})
    assert "5b" in {v.condition for v in validate(bad)}


def test_edge_density_examples():
    assert edge_density(graph([2], [3], [(2, 3)], mu={"v2": 0, "w3": 1})) == 0
    assert edge_density(graph([2], [3], [(2, 3)])) == 1
    assert edge_density(graph([2, 3], [5], [(2, 5)])) == Fraction(1, 2)


def test_quality_examples():
    G = graph([2], [3], [(2, 3)])
    qv = quality(G, PAPER)
    assert qv.product == RationalInterval.point(1)
    assert quality(graph([2], [3], []), PAPER).exact_part == 0
    H = graph([3], [5], [(3, 5)], P=[2], f={2: 0}, g={2: 0})
    qh = quality(H, PAPER, 128)
    assert qh.exact_part == 1
    ref = quality_factor_enclosure(2, 128)
    assert qh.product.intersects(ref)


def test_r_sets_examples():
    assert r_set(graph([6], [10], [])) == frozenset()
    G = graph([6], [10], [(6, 10)])
    assert r_set(G) == {2}
    assert r_sharp(G, PAPER) == {2} and r_flat(G, PAPER) == frozenset()


def test_restrict_prime_examples():
    G = graph([2, 3], [2, 3], [(a, b) for a in (2, 3) for b in (2, 3)])
    G11 = restrict_prime(G, 2, 1, 1)
    assert G11.V == {"v2"} and G11.W == {"w2"} and G11.E == {("v2", "w2")}
    G10 = restrict_prime(G, 2, 1, 0)
    assert G10.V == {"v2"} and G10.W == {"w3"} and G10.E == {("v2", "w3")}
    assert validate(G11) == [] and is_subgraph(G11, G)
    empty = restrict_prime(G, 2, 5, 0)
    assert empty.mu_V == 0 and quality(empty, PAPER).exact_part == 0
    with pytest.raises(GraphError):
        restrict_prime(G11, 2, 1, 1)


def test_quality_ratio_examples():
    G = graph([3], [5], [(3, 5)])
    r = quality_ratio(G, 7, 0, 0, PAPER)
    assert r.intersects(quality_factor_enclosure(7, 128))
    H = graph([2, 3], [2, 3], [(a, b) for a in (2, 3) for b in (2, 3)])
    expect = Fraction(1, 4) ** 10 * 2**9 * 2**9 / Fraction(1, 2) ** 2
    got = quality_ratio(H, 2, 1, 1, PAPER, 128)
    assert got.intersects(quality_factor_enclosure(2, 128) * expect)


def test_subgraph_and_neighbourhood_examples():
    G = graph([2, 3], [5], [(2, 5)])
    assert is_subgraph(G, G)
    assert restrict_vertices(G, G.V, G.W) == G
    assert neighborhood(G, "v2", "V") == {"w5"}
    assert neighborhood(G, "v3", "V") == frozenset()


def test_json_roundtrip_and_digest():
    G = graph([12], [18], [(12, 18)], P=[2], f={2: 2}, g={2: 1})
    H = GcdGraph.from_json(G.to_json())
    assert H.digest == G.digest and H.to_json() == G.to_json()


@given(st.integers(min_value=0, max_value=10**6))
def test_validator_matches_brute_force(seed):
    rng = random.Random(seed)
    G = random_structure_case(rng, rng.randint(1, 5), rng.randint(1, 5))
    found = {v.condition for v in validate(G)}
    truth = brute_conditions(G)
    for cond, holds in truth.items():
        assert (cond in found) == (not holds)


@given(st.integers(min_value=0, max_value=10**6))
def test_quality_ratio_formula_matches_direct(seed):
    rng = random.Random(seed)
    G = valued_graph(rng, rng.randint(1, 5), rng.randint(1, 5), {3: ([(0, 1), (1, 1), (2, 1)],) * 2}, 0.7)
    classes = [kl for kl, m in edge_classes(G, 3).items() if m > 0]
    if not classes:
        return
    k, l = rng.choice(classes)
    G1 = restrict_prime(G, 3, k, l)
    a = quality_ratio(G, 3, k, l, SCALED)
    b = quality_ratio_direct(G1, G, SCALED)
    assert a.intersects(b)
    with mpmath.workdps(80):
        ref = mp_quality(G1, SCALED) / mp_quality(G, SCALED)
        assert mp_contains(a, ref)


@given(st.integers(min_value=0, max_value=10**6))
def test_subgraph_properties(seed):
    rng = random.Random(seed)
    G = valued_graph(rng, 4, 4, {2: ([(0, 1), (1, 1)],) * 2, 3: ([(0, 1), (1, 1)],) * 2}, 0.8)
    for p in (2, 3):
        total = sum(edge_classes(G, p).values(), Fraction(0))
        assert total == G.mu_E
    G1 = restrict_prime(G, 2, rng.randint(0, 1), rng.randint(0, 1))
    G2 = restrict_prime(G1, 3, rng.randint(0, 1), rng.randint(0, 1))
    assert is_subgraph(G1, G) and is_subgraph(G2, G1) and is_subgraph(G2, G)
    assert r_set(G2) <= r_set(G1) <= r_set(G)
    for H in (G, G1, G2):
        assert (H.mu_E > 0) == (edge_density(H) > 0) == (quality(H, SCALED).exact_part > 0)
