"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances."""

import json
import math
import random
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest

from dscert import lemmas as L
from dscert.certificates import InternalInconsistency
from dscert.ds import (
    a_q_set,
    anatomy_count,
    build_edge_set,
    choose_y,
    model_counterexample,
    overlap_scan,
    second_moment,
)
from dscert.ds.second_moment import partial_sums
from dscert.factored import FactoredInt, euler_phi
from dscert.generate import (
    LEMMAS,
    call_lemma,
    lemma_suite,
    paper_instances,
    psi_pipeline_instance,
    random_structure_case,
    valued_graph,
)
from dscert.graph import (
    edge_classes,
    is_subgraph,
    quality_ratio,
    quality_ratio_direct,
    r_set,
    restrict_prime,
    validate,
)
from dscert.pipeline import EXIT_OK, good_subgraph_pipeline, verify_trace
from dscert.profile import PAPER, SCALED
from dscert.psi import PsiFunction

from oracles import brute_conditions, mp_contains, mp_quality

HALF = PsiFunction.constant(Fraction(1, 2))
QUARTER = PsiFunction.constant(Fraction(1, 4))
ARTIFACTS = Path(__file__).parent / "fixtures" / "counterexamples"


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nCRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def test_criterion_1_validator(report):
    t0 = time.perf_counter()
    rng = random.Random(101)
    agree = invalid = 0
    for _ in range(500):
        G = random_structure_case(rng, rng.randint(1, 6), rng.randint(1, 6))
        found = {v.condition for v in validate(G)}
        truth = brute_conditions(G)
        agree += all((c in found) == (not h) for c, h in truth.items()) and found <= set(truth)
        invalid += bool(found)
    dt = time.perf_counter() - t0
    ok = agree == 500 and dt < 10
    report(1, ok, f"{agree}/500 agree with brute force ({invalid} invalid graphs), {dt:.2f}s < 10s")
    assert ok


def test_criterion_2_quality_ratio(report):
    rng = random.Random(202)
    agree = 0
    for _ in range(200):
        p = rng.choice([2, 3, 5, 7, 1009])
        dists = {p: ([(0, 1), (1, 1), (2, 1)], [(0, 1), (1, 1), (2, 1)])}
        G = valued_graph(rng, rng.randint(1, 6), rng.randint(1, 6), dists, rng.uniform(0.3, 1.0))
        k, l = rng.choice(sorted(kl for kl, m in edge_classes(G, p).items() if m > 0))
        G1 = restrict_prime(G, p, k, l)
        bits, hit = 64, False
        while bits <= 1024 and not hit:
            a = quality_ratio(G, p, k, l, SCALED, bits)
            b = quality_ratio_direct(G1, G, SCALED, bits)
            hit = a.intersects(b)
            bits *= 2
        with mpmath.workdps(80):
            ref = mp_quality(G1, SCALED) / mp_quality(G, SCALED)
            hit = hit and mp_contains(a, ref)
        agree += hit
    ok = agree == 200
    report(2, ok, f"formula and direct enclosures intersect (and contain the mpmath value) in {agree}/200")
    assert ok


def test_criterion_3_lemma_dichotomies(report):
    t0 = time.perf_counter()
    lines, faults = [], {}
    for lemma in LEMMAS:
        bad, n = [], 0
        for i, inst in lemma_suite(lemma, 200, 1, SCALED):
            n += 1
            try:
                res = call_lemma(lemma, inst, SCALED)
                if not (res.cert.is_valid() and is_subgraph(res.graph, inst["graph"])):
                    bad.append(i)
            except InternalInconsistency:
                bad.append(i)
        faults[lemma] = bad
        lines.append(f"{lemma} {n - len(bad)}/{n}")
    paper_ok = 0
    for name, lemma, G, p in paper_instances():
        if lemma == "main_step":
            res = L.main_step(G, p, PAPER)
        elif lemma == "main_step_sharp":
            res = L.main_step_sharp(G, p, PAPER)
        else:
            res = L.unbalanced_check(G, p, 0, 1, "W", PAPER)
        paper_ok += res.cert.is_valid()
    n_paper = len(paper_instances())
    dt = time.perf_counter() - t0
    released = sorted(x.name for x in ARTIFACTS.glob("*.json"))
    expected = sorted(f"{lem}_1_{i:03d}.json" for lem, bad in faults.items() for i in bad)
    total_bad = sum(len(b) for b in faults.values())
    ok = total_bad == 0 and paper_ok == n_paper and n_paper >= 5 and dt < 300
    detail = (f"{', '.join(lines)}; paper profile {paper_ok}/{n_paper}; {dt:.1f}s < 300s; "
              f"non-certifying runs released: {len(released)} artifact(s), matching suite: {released == expected}")
    report(3, ok, detail)
    assert released == expected, "released counterexample artifacts are stale; rerun the release script"
    assert ok, detail


def test_criterion_4_pipeline(report):
    good = 0
    cases = []
    t = 1009
    for seed in range(20):
        G = psi_pipeline_instance(random.Random(seed), t=t)
        Gf, trace = good_subgraph_pipeline(G, t, SCALED)
        summ = trace.certificates[-1]
        names = {r.name for r in summ.inequalities}
        degree = {"min_deg_V>=frac*delta'*mu(W')", "min_deg_W>=frac*delta'*mu(V')"} <= names
        replay = verify_trace(trace.dumps()).code == EXIT_OK
        good += (trace.is_valid() and not r_set(Gf) and degree and summ.is_valid()
                 and trace.case in ("d-i", "d-ii") and replay)
        cases.append(trace.case)
    ok = good == 20
    report(4, ok, f"{good}/20 pipelines certified with r_set empty and byte-exact replay; "
                  f"cases: {', '.join(sorted(set(cases)))}")
    assert ok


def test_criterion_5_measures(report):
    bad = 0
    for psi in (HALF, QUARTER):
        for q in range(2, 501):
            bad += a_q_set(psi, q).measure != 2 * psi(q) * euler_phi(FactoredInt.from_int(q)) / q
    ok = bad == 0
    report(5, ok, f"{2 * 499 - bad}/998 exact measure identities hold")
    assert ok


def test_criterion_6_overlap(report):
    rng = random.Random(606)
    violations, sups, cross, confirmed, within_double = [], [], 0, 0, 0
    for psi in (HALF, QUARTER):
        best = None
        for rep in overlap_scan(psi, 200):
            if not rep.indicator and rep.lhs != 0:
                violations.append((psi.c, rep.q, rep.r))
            if rep.indicator and (best is None or rep.ratio > best[0]):
                best = (rep.ratio, rep.q, rep.r)
            if rng.random() < 0.01:
                # second route through the exact Fraction interval unions
                direct = a_q_set(psi, rep.q).intersect(a_q_set(psi, rep.r)).measure
                la, lb = a_q_set(psi, rep.q).measure, a_q_set(psi, rep.r).measure
                cross += direct / (la * lb) != rep.lhs
        sups.append(f"psi={psi.c}: sup lhs/rhs_core = {float(best[0]):.6f} at {best[1:]}")
    for c, q, r in violations:
        psi = PsiFunction.constant(c)
        confirmed += a_q_set(psi, q).intersect(a_q_set(psi, r)).measure > 0
        within_double += 2 * max(r * psi(q), q * psi(r)) > math.gcd(q, r)
    ok = not violations and cross == 0
    first = ", ".join(f"psi={c} ({q},{r})" for c, q, r in violations[:3])
    report(6, ok, f"{len(violations)} indicator violations over q != r <= 200"
                  + (f" (first: {first}; {confirmed} confirmed non-empty by the Fraction route; "
                     f"{within_double} have 2M > gcd)" if violations else "")
                  + f"; {cross} cross-route mismatches; " + "; ".join(sups))
    assert ok


def _prime_factors(n):
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def test_criterion_7_anatomy(report):
    t0 = time.perf_counter()
    base = anatomy_count(100, 1, 1)
    x = 10**5
    grid_t = [1, 2, 3, 5, 7]
    grid_c = [Fraction(1), Fraction(5, 4), Fraction(3, 2), Fraction(2)]
    counts = {(t, c): anatomy_count(x, t, c) for t in grid_t for c in grid_c}
    mono = all(counts[(t, c)] >= counts[(t2, c)] for c in grid_c for t, t2 in zip(grid_t, grid_t[1:]))
    mono &= all(counts[(t, c)] >= counts[(t, c2)] for t in grid_t for c, c2 in zip(grid_c, grid_c[1:]))
    facs = [None, []] + [_prime_factors(n) for n in range(2, x + 1)]
    oracle_ok = True
    for t, c in [(1, Fraction(1)), (2, Fraction(1)), (1, Fraction(3, 2)), (3, Fraction(1))]:
        brute = sum(1 for n in range(1, x + 1) if sum((Fraction(1, p) for p in facs[n] if p >= t), Fraction(0)) >= c)
        oracle_ok &= brute == counts[(t, c)]
    dt = time.perf_counter() - t0
    ok = base == 3 and mono and oracle_ok and dt < 30
    report(7, ok, f"anatomy(100,1,1)={base}; monotone over {len(counts)}-point grid: {mono}; "
                  f"brute force at x=10^5: {oracle_ok}; {dt:.1f}s < 30s")
    assert ok


def test_criterion_8_counterexample(report):
    rep = model_counterexample(8, 10**4)
    ref = rep.reference_fraction
    ok = (rep.in_range and rep.pairs_failing == 0 and rep.max_divisor_fraction < 1
          and rep.max_divisor_fraction <= ref + rep.slack)
    report(8, ok, f"|S|={rep.size}, p={rep.p}, all {rep.pairs_checked} pairwise gcds >= {rep.gcd_threshold}: "
                  f"{rep.pairs_failing == 0}; max divisor fraction {rep.max_divisor_fraction} "
                  f"(d={rep.max_divisor}) = 1/ceil(n/4) + slack {rep.slack}; "
                  f"weighted mass {float(rep.weighted_mass):.2f} vs |S|={rep.size} "
                  f"(ratio {rep.mass_over_size:.4f}), |S|/log n = {rep.size_over_log_n:.1f}")
    assert ok


def _support_oracle(psi, X, Y, t, amin):
    supp = [n for n in range(X, Y + 1) if psi(n) > 0]
    out = []
    for v in supp:
        for w in supp:
            g = math.gcd(v, w)
            if g * t < max(w * psi(v), v * psi(w)):
                continue
            r = v * w // (g * g)
            if sum((Fraction(1, p) for p in _prime_factors(r) if p >= t), Fraction(0)) >= amin:
                out.append((v, w))
    return out


def test_criterion_9_second_moment(report):
    Y = choose_y(HALF, 2)
    sums = partial_sums(HALF, 2, 5)
    zero = second_moment(HALF, 2, Y, 1)
    base_ok = Y == 5 and sums == [Fraction(1, 4), Fraction(7, 12), Fraction(5, 6), Fraction(37, 30)] and zero == 0
    psi = PsiFunction.from_table({n: Fraction(1, 2) for n in range(6, 401, 6)})
    amin = Fraction(1, 2)
    rows, match = [], True
    for t in (1, 2, 3, 4, 6):
        E = build_edge_set(psi, 2, 400, t, amin, support_only=True)
        match &= E == _support_oracle(psi, 2, 400, t, amin)
        rows.append(f"t={t}: |E|={len(E)}, t*sum={float(t * second_moment(psi, 2, 400, t, edges=E)):.4f}")
    ok = base_ok and match
    report(9, ok, f"Y={Y}, partial sums {[str(s) for s in sums]}, second moment {zero}; "
                  f"desk grid (psi=1/2 on multiples of 6 up to 400, L_t >= 1/2) oracle match {match}: "
                  + "; ".join(rows))
    assert ok
