import json
import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dscert import lemmas as L
from dscert.certificates import InternalInconsistency, PreconditionError
from dscert.factored import FactoredInt
from dscert.generate import LEMMAS, call_lemma, lemma_instance, valued_graph
from dscert.graph import GcdGraph, is_subgraph, r_set, restrict_vertices, validate
from dscert.profile import PAPER, SCALED

from helpers import graph

seeds = st.integers(min_value=0, max_value=10**9)


def complete(V, W):
    return graph(V, W, [(a, b) for a in V for b in W])


# high degree -------------------------------------------------------------
def test_high_degree_complete_graph():
    G = complete([2, 3], [5, 7])
    assert L.high_degree_step(G, PAPER).branch == L.ALL_HIGH_DEGREE
    res = L.high_degree_subgraph(G, PAPER)
    assert res.graph.digest == G.digest and res.cert.is_valid()


def test_high_degree_removes_isolated_vertex():
    G = graph([2, 3], [5], [(2, 5)])
    assert G.delta == Fraction(1, 2)
    step = L.high_degree_step(G, PAPER)
    assert step.branch == L.REMOVE_VERTEX and step.info["removed"] == ("V", "v3")
    assert step.graph.delta == 1 and step.cert.is_valid()
    fix = L.high_degree_subgraph(G, PAPER)
    assert fix.graph.V == {"v2"} and fix.graph.delta == 1


def test_high_degree_rejects_trivial():
    with pytest.raises(PreconditionError):
        L.high_degree_step(graph([2], [3], []), PAPER)


@given(seeds)
def test_high_degree_subgraph_property(seed):
    rng = random.Random(seed)
    G = valued_graph(rng, 8, 8, {2: ([(0, 1), (1, 1)],) * 2}, rng.uniform(0.1, 0.9))
    res = L.high_degree_subgraph(G, SCALED)
    H = res.graph
    assert res.cert.is_valid() and is_subgraph(H, G) and H.delta >= G.delta
    assert len(res.cert.children) <= len(G.V) + len(G.W) + 1
    for v in H.V:
        assert H.degree_measure(v, "V") >= Fraction(9, 10) * H.delta * H.mu_W


# pigeonhole --------------------------------------------------------------
def test_pigeonhole_examples():
    G = complete([2, 3], [5])
    one = L.pigeonhole(G, [sorted(G.V)], [sorted(G.W)], PAPER)
    assert one.graph.digest == G.digest
    H = graph([2, 3], [5], [(2, 5)])
    two = L.pigeonhole(H, [["v2"], ["v3"]], [["w5"]], PAPER)
    assert two.info["cell"] == (0, 0) and two.graph.mu_E == H.mu_E and two.cert.is_valid()
    with pytest.raises(PreconditionError):
        L.pigeonhole(H, [["v2"]], [["w5"]], PAPER)


@given(seeds)
def test_pigeonhole_random_partitions(seed):
    rng = random.Random(seed)
    G = valued_graph(rng, 6, 6, {3: ([(0, 1), (1, 1)],) * 2}, 0.5)
    def split(ids):
        ids = sorted(ids)
        k = rng.randint(1, len(ids))
        cells = [[] for _ in range(k)]
        for i in ids:
            cells[rng.randrange(k)].append(i)
        return [c for c in cells if c]
    res = L.pigeonhole(G, split(G.V), split(G.W), SCALED)
    assert res.cert.is_valid() and is_subgraph(res.graph, G)


# unbalanced classes ------------------------------------------------------
def test_unbalanced_small_tail_when_no_far_classes():
    p = 1009
    G = complete([p * 2, p * 3], [p * 5, p * 7])
    res = L.unbalanced_check(G, p, 1, 1, "W", SCALED)
    assert res.branch == L.SMALL_TAIL and res.cert.is_valid()
    assert res.info["tail"] == 0


def test_unbalanced_needs_large_power():
    G = complete([6], [10])
    with pytest.raises(PreconditionError):
        L.unbalanced_check(G, 2, 1, 1, "W", SCALED)


# small sets --------------------------------------------------------------
def test_small_set_single_edge():
    G = graph([2], [3], [(2, 3)])
    res = L.small_set_step(G, Fraction(1, 2), PAPER)
    assert res.branch == L.NO_DENSE_SMALL_PAIR and res.cert.is_valid()


def test_small_set_dense_block():
    V = [2, 3, 5, 7]
    W = [11, 13, 17, 19]
    G = graph(V, W, [(2, 11)])
    G = GcdGraph.build({f"v{n}": FactoredInt.from_int(n) for n in V}, {f"w{n}": FactoredInt.from_int(n) for n in W},
                       {**{f"v{n}": 1 for n in V}, **{f"w{n}": 1 for n in W}},
                       [("v2", "w11"), ("v3", "w11"), ("v2", "w13"), ("v3", "w13")])
    res = L.small_set_step(G, Fraction(1, 2), PAPER)
    assert res.branch == L.DENSE_SMALL_PAIR and res.cert.is_valid()
    assert res.graph.V == {"v2", "v3"} and res.graph.W == {"w11", "w13"}
    loop = L.no_small_set_edges(G, Fraction(1, 2), PAPER)
    assert loop.cert.is_valid()


def test_small_set_eta_bounds():
    G = graph([2], [3], [(2, 3)])
    for eta in (0, 1):
        with pytest.raises(PreconditionError):
            L.small_set_step(G, eta, PAPER)


def _brute_small_pair(G, eta):
    V, W = sorted(G.V), sorted(G.W)
    best = Fraction(0)
    for mv in range(1, 2 ** len(V)):
        A = {V[i] for i in range(len(V)) if mv >> i & 1}
        if G.measure_of(A) > eta * G.mu_V:
            continue
        for mw in range(1, 2 ** len(W)):
            B = {W[i] for i in range(len(W)) if mw >> i & 1}
            if G.measure_of(B) > eta * G.mu_W:
                continue
            best = max(best, restrict_vertices(G, A, B).mu_E)
    return best


@settings(max_examples=25)
@given(seeds)
def test_small_set_matches_exhaustive_scan(seed):
    rng = random.Random(seed)
    G = valued_graph(rng, rng.randint(2, 5), rng.randint(2, 5), {}, rng.uniform(0.2, 0.9))
    eta = Fraction(rng.randint(1, 9), 10)
    res = L.small_set_step(G, eta, SCALED)
    best = _brute_small_pair(G, eta)
    if res.branch == L.NO_DENSE_SMALL_PAIR:
        assert best <= res.info["upper_bound"]
    else:
        assert res.graph.mu_E <= best


# edge sets and main step ---------------------------------------------------
def test_edge_sets_single_edge():
    G = graph([2 * 3], [2 * 5], [(6, 10)])
    res = L.edge_sets_pick(G, 2, PAPER)
    assert (res.info["k"], res.info["l"]) == (1, 1) and res.cert.is_valid()


def test_edge_sets_two_classes():
    G = graph([3, 6], [10, 14], [(a, b) for a in (3, 6) for b in (10, 14)])
    # alpha_0 = alpha_1 = 1/2 on V, W entirely in class 1
    res = L.edge_sets_pick(G, 2, PAPER)
    assert res.info["qualifying"] and res.cert.is_valid()


def test_main_step_concentrated():
    p = 101
    G = complete([p * 2, p * 3], [p * 5])
    res = L.main_step(G, p, SCALED)
    assert res.branch == L.CONCENTRATED and res.info["k"] == 1


def test_main_step_threshold_precondition():
    G = complete([6], [10])
    with pytest.raises(PreconditionError):
        L.main_step(G, 2, SCALED)
    with pytest.raises(PreconditionError):
        L.main_step(complete([3], [5]), 101, SCALED)


def test_main_step_diagonal_increment():
    p = 1009
    V = [p * 2, p * 3, 5, 7]
    W = [p * 11, p * 13, 17, 19]
    G = graph(V, W, [(p * 2, p * 11), (p * 3, p * 13), (5, p * 11)])
    res = L.main_step(G, p, SCALED)
    assert res.branch == L.INCREMENT and res.cert.is_valid()
    if res.info["k"] == res.info["l"]:
        assert res.info["n_flag"] == 0


# small primes ------------------------------------------------------------
def test_small_prime_concentrated_and_iteration():
    G = complete([2 * 3, 2 * 5], [2 * 7, 2 * 11])
    step = L.small_prime_step(G, 2, SCALED)
    assert step.branch == L.CONCENTRATED and step.info["k"] == 1
    it = L.small_prime_iteration(G, 2, SCALED)
    assert it.cert.is_valid() and it.graph.f[2] == it.graph.g[2] == 1
    assert 2 not in r_set(it.graph)


def test_small_prime_iteration_mixed_valuations():
    V = [3, 2 * 5, 4 * 7, 2 * 11]
    W = [13, 2 * 17, 4 * 19, 2 * 23]
    G = graph(V, W, [(a, b) for a in V for b in W if (a % 2 == 0) == (b % 2 == 0)])
    it = L.small_prime_iteration(G, 2, SCALED)
    assert it.cert.is_valid() and not validate(it.graph) and 2 in it.graph.P


def test_window_radius_paper_profile():
    r = PAPER.window_radius(2)
    assert 2**r > PAPER.small_prime_bound >= 2 ** (r - 1)
    assert r <= 6644 and 2 * r + 1 <= 15000


# dichotomy properties ----------------------------------------------------
@pytest.mark.parametrize("lemma", [x for x in LEMMAS if x != "unbalanced_check"])
@settings(max_examples=30)
@given(seed=seeds)
def test_dichotomy_certifies(lemma, seed):
    inst = lemma_instance(lemma, random.Random(seed), SCALED)
    res = call_lemma(lemma, inst, SCALED)
    assert res.cert.is_valid()
    assert is_subgraph(res.graph, inst["graph"]) and not validate(res.graph)


@settings(max_examples=30)
@given(seed=seeds)
def test_unbalanced_check_certifies_or_faults_loudly(seed):
    # at scaled constants a far class can carry too many edges without a big
    # enough quality gain; the lemma then raises instead of returning a branch
    inst = lemma_instance("unbalanced_check", random.Random(seed), SCALED)
    try:
        res = call_lemma("unbalanced_check", inst, SCALED)
    except InternalInconsistency:
        return
    assert res.cert.is_valid() and is_subgraph(res.graph, inst["graph"])


# cosmetic trim -------------------------------------------------------------
def test_cosmetic_trim_empty_r_set():
    from dscert.factored import primes_up_to

    t = 1009
    pool = [q for q in primes_up_to(4 * t) if q >= t]
    nums = [pool[6 * i: 6 * i + 6] for i in range(4)]
    prod = [1, 1, 1, 1]
    for i, ps in enumerate(nums):
        for q in ps:
            prod[i] *= q
    G = graph(prod[:2], prod[2:], [(a, b) for a in prod[:2] for b in prod[2:]])
    assert not r_set(G)
    res = L.cosmetic_trim(G, t, SCALED)
    assert res.graph.E == G.E and res.cert.is_valid()
    with pytest.raises(PreconditionError):
        L.cosmetic_trim(G, 10, SCALED)


ARTIFACTS = sorted((Path(__file__).parent / "fixtures" / "counterexamples").glob("*.json"))


@pytest.mark.parametrize("path", ARTIFACTS, ids=lambda p: p.stem)
def test_released_counterexample_still_faults(path):
    data = json.loads(path.read_text())
    diag = data["diagnostics"]
    assert diag["tail_exceeds_bound"] and not diag["any_far_class_doubles"]
    a = data["args"]
    G = GcdGraph.from_json(data["graph"])
    with pytest.raises(InternalInconsistency):
        L.unbalanced_check(G, int(a["p"]), int(a["k"]), int(a["r"]), a["side"], SCALED)
