"""Certificate-producing compression steps on GCD graphs.

Every step returns a :class:`StepResult`. Each conclusion is certified directly
against the step's input graph, using interval enclosures that are re-checkable
from the serialized certificate alone. If no branch of a dichotomy certifies,
:class:`InternalInconsistency` is raised; there is never a silent fallback.

Tie-breaking: among qualifying candidates, the largest certified lower bound of
the quality ratio wins. Ties go to the lexicographically smallest (k, l) or cell
index. Concentration branches are tested before increment branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Sequence

from .certificates import (
    InternalInconsistency,
    PreconditionError,
    StepCertificate,
    current_ceiling,
    evaluate,
    require,
)
from .factored import l_t, qstr
from .graph import (
    GcdGraph,
    class_ids,
    edge_classes,
    exact_quality_part,
    is_subgraph,
    is_valid,
    quality_ratio,
    r_flat,
    r_set,
    restrict_edges,
    restrict_prime,
    restrict_vertices,
    sharp_class,
    subgraph_quality_ratio,
    valuation_classes,
)
from .intervals import DEFAULT_PRECISION, RationalInterval, as_interval, p_pow_31_30, rpow
from .profile import PAPER, ConstantsProfile

INCREMENT = "INCREMENT"
CONCENTRATED = "CONCENTRATED"
ALL_HIGH_DEGREE = "ALL_HIGH_DEGREE"
REMOVE_VERTEX = "REMOVE_VERTEX"
SMALL_TAIL = "SMALL_TAIL"
NO_DENSE_SMALL_PAIR = "NO_DENSE_SMALL_PAIR"
DENSE_SMALL_PAIR = "DENSE_SMALL_PAIR"
SUBGRAPH = "SUBGRAPH"


@dataclass
class StepResult:
    branch: str
    graph: GcdGraph
    cert: StepCertificate
    info: dict = field(default_factory=dict)


# helpers ----------------------------------------------------------------
def _new_cert(lemma: str, G: GcdGraph, G1: GcdGraph, branch: str, **params) -> StepCertificate:
    return StepCertificate(lemma, G.digest, G1.digest, branch, params=_jsonable(params))


def _jsonable(x):
    if isinstance(x, Fraction):
        return qstr(x)
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x) if abs(x) > 2**53 else x
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        seq = sorted(x, key=str) if isinstance(x, (set, frozenset)) else x
        return [_jsonable(v) for v in seq]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _ratio_fn(G1: GcdGraph, G: GcdGraph, profile: ConstantsProfile) -> Callable[[int], RationalInterval]:
    return lambda bits: subgraph_quality_ratio(G1, G, profile, bits)


def _gain_fn(G1: GcdGraph, G: GcdGraph, profile: ConstantsProfile) -> Callable[[int], RationalInterval]:
    """min{1, delta'/delta} * q(G1)/q(G)."""
    factor = min(Fraction(1), G1.delta / G.delta)
    return lambda bits: subgraph_quality_ratio(G1, G, profile, bits) * factor


def _increment_structure(G1: GcdGraph, G: GcdGraph, p: int) -> dict:
    return {
        "is_subgraph": is_subgraph(G1, G),
        "prime_added": G1.P == G.P | {p},
        "r_set_shrinks": r_set(G1) <= r_set(G) - {p},
        "valid": is_valid(G1),
    }


def _require_positive_density(G: GcdGraph) -> None:
    if G.delta <= 0:
        raise PreconditionError("edge density must be positive")


def _require_in_r(G: GcdGraph, p: int, check_r: bool) -> None:
    if p in G.P:
        raise PreconditionError(f"{p} is already in P")
    if check_r and p not in r_set(G):
        raise PreconditionError(f"{p} is not in R(G)")


def _side_fractions(G: GcdGraph, p: int) -> tuple[dict[int, Fraction], dict[int, Fraction]]:
    av = {k: m / G.mu_V for k, m in valuation_classes(G, p, "V").items()}
    bw = {k: m / G.mu_W for k, m in valuation_classes(G, p, "W").items()}
    return av, bw


# high degree ------------------------------------------------------------
def _degree_violators(G: GcdGraph, profile: ConstantsProfile):
    frac = profile.degree_fraction
    tv = frac * G.delta * G.mu_W
    tw = frac * G.delta * G.mu_V
    out = []
    for v in G.V_sorted:
        d = G.degree_measure(v, "V")
        if d < tv:
            out.append(("V", v, d, tv))
    for w in G.W_sorted:
        d = G.degree_measure(w, "W")
        if d < tw:
            out.append(("W", w, d, tw))
    return out


def high_degree_step(G: GcdGraph, profile: ConstantsProfile = PAPER,
                     precision: int = DEFAULT_PRECISION) -> StepResult:
    """Certify both degree bounds, or delete the violating vertex with the best quality ratio."""
    _require_positive_density(G)
    violators = _degree_violators(G, profile)
    if not violators:
        cert = _new_cert("high_degree_step", G, G, ALL_HIGH_DEGREE)
        mins = [min((G.degree_measure(x, s) for x in ids), default=None)
                for s, ids in (("V", G.V_sorted), ("W", G.W_sorted))]
        cert.add(require("min_deg_V>=frac*delta*mu(W)", mins[0], ">=",
                         profile.degree_fraction * G.delta * G.mu_W, precision))
        cert.add(require("min_deg_W>=frac*delta*mu(V)", mins[1], ">=",
                         profile.degree_fraction * G.delta * G.mu_V, precision))
        return StepResult(ALL_HIGH_DEGREE, G, cert)
    q0 = exact_quality_part(G, profile)
    best = None
    for side, x, d, thr in violators:
        G1 = restrict_vertices(G, G.V - {x}, G.W) if side == "V" else restrict_vertices(G, G.V, G.W - {x})
        ratio = exact_quality_part(G1, profile) / q0
        if best is None or ratio > best[0]:
            best = (ratio, side, x, d, thr, G1)
    ratio, side, x, d, thr, G1 = best
    cert = _new_cert("high_degree_step", G, G1, REMOVE_VERTEX, side=side, vertex=x)
    cert.add(require(f"deg({x})<frac*delta*mu", d, "<", thr, precision))
    cert.add(require("delta'>=delta", G1.delta, ">=", G.delta, precision))
    cert.add(require("q'/q>=1", _ratio_fn(G1, G, profile), ">=", 1, precision))
    cert.structural.update(is_subgraph=is_subgraph(G1, G),
                           strictly_smaller=len(G1.V) + len(G1.W) < len(G.V) + len(G.W))
    return StepResult(REMOVE_VERTEX, G1, cert, {"removed": (side, x)})


def high_degree_subgraph(G: GcdGraph, profile: ConstantsProfile = PAPER,
                         precision: int = DEFAULT_PRECISION) -> StepResult:
    """Iterate :func:`high_degree_step` to a fixpoint."""
    _require_positive_density(G)
    H = G
    children = []
    while True:
        step = high_degree_step(H, profile, precision)
        children.append(step.cert)
        if step.branch == ALL_HIGH_DEGREE:
            break
        H = step.graph
    cert = _new_cert("high_degree_subgraph", G, H, SUBGRAPH, steps=len(children) - 1)
    cert.children = children
    cert.add(require("q'/q>=1", _ratio_fn(H, G, profile), ">=", 1, precision))
    cert.add(require("delta'>=delta", H.delta, ">=", G.delta, precision))
    cert.inequalities.extend(children[-1].inequalities)
    cert.structural["is_subgraph"] = is_subgraph(H, G)
    return StepResult(SUBGRAPH, H, cert)


# pigeonhole -------------------------------------------------------------
def pigeonhole(G: GcdGraph, V_parts: Sequence[Sequence[str]], W_parts: Sequence[Sequence[str]],
               profile: ConstantsProfile = PAPER, precision: int = DEFAULT_PRECISION) -> StepResult:
    """Pick a cell pair losing at most (IJ)^d in quality and IJ in density."""
    _require_positive_density(G)
    Vp = [frozenset(c) for c in V_parts]
    Wp = [frozenset(c) for c in W_parts]
    if frozenset().union(*Vp) != G.V or frozenset().union(*Wp) != G.W:
        raise PreconditionError("partitions must cover V and W")
    if sum(len(c) for c in Vp) != len(G.V) or sum(len(c) for c in Wp) != len(G.W):
        raise PreconditionError("partition cells must be disjoint")
    n = len(Vp) * len(Wp)
    qfloor = Fraction(1, n**profile.density_exponent)
    dfloor = Fraction(1, n)
    q0 = exact_quality_part(G, profile)
    best = None
    for i, A in enumerate(Vp):
        for j, B in enumerate(Wp):
            G1 = restrict_vertices(G, A, B)
            if G1.mu_E == 0:
                continue
            qr = exact_quality_part(G1, profile) / q0
            dr = G1.delta / G.delta
            if qr >= qfloor and dr >= dfloor and (best is None or qr > best[0]):
                best = (qr, i, j, G1)
    if best is None:
        raise InternalInconsistency("pigeonhole: no cell pair meets both loss bounds")
    qr, i, j, G1 = best
    cert = _new_cert("pigeonhole", G, G1, SUBGRAPH, cell=[i, j], I=len(Vp), J=len(Wp))
    cert.add(require("q'/q>=(IJ)^-d", _ratio_fn(G1, G, profile), ">=", qfloor, precision))
    cert.add(require("delta'/delta>=1/(IJ)", G1.delta / G.delta, ">=", dfloor, precision))
    cert.structural["is_subgraph"] = is_subgraph(G1, G)
    return StepResult(SUBGRAPH, G1, cert, {"cell": (i, j)})


# unbalanced classes -----------------------------------------------------
def unbalanced_check(G: GcdGraph, p: int, k: int, r: int, side: str = "W",
                     profile: ConstantsProfile = PAPER, precision: int = DEFAULT_PRECISION,
                     check_r: bool = True) -> StepResult:
    """Far-class dichotomy around a concentrated class.

    ``side`` names the concentrated side. For ``"W"`` the V class is fixed at k and
    the W class l ranges over |l - k| > r; for ``"V"`` the roles swap.
    """
    _require_positive_density(G)
    _require_in_r(G, p, check_r)
    if side not in ("V", "W"):
        raise ValueError("side must be 'V' or 'W'")
    if r < 1 or p**r <= profile.small_prime_bound:
        raise PreconditionError("need p^r > small_prime_bound")
    level = profile.concentration_level(p)
    conc = valuation_classes(G, p, side).get(k, Fraction(0))
    total = G.mu_W if side == "W" else G.mu_V
    if conc < level * total:
        raise PreconditionError("concentration hypothesis fails")
    ec = edge_classes(G, p)
    far = {}
    for (a, b), m in ec.items():
        fixed, moving = (a, b) if side == "W" else (b, a)
        if fixed == k and abs(moving - k) >= r + 1:
            far[moving] = m
    pair = (lambda l: (k, l)) if side == "W" else (lambda l: (l, k))
    best = None
    for l in sorted(far):
        kk, ll = pair(l)
        G1 = restrict_prime(G, p, kk, ll)
        dr = G1.delta / G.delta
        row_q = evaluate("q'/q>2", lambda b, kk=kk, ll=ll: quality_ratio(G, p, kk, ll, profile, b),
                         ">", 2, precision)
        if not row_q.certified:
            continue
        row_dq = evaluate("delta'q'/(delta q)>2",
                          lambda b, kk=kk, ll=ll, dr=dr: quality_ratio(G, p, kk, ll, profile, b) * dr,
                          ">", 2, precision)
        if row_dq.certified and (best is None or row_q.lhs.lo > best[0]):
            best = (row_q.lhs.lo, l, G1)
    if best is not None:
        _, l, G1 = best
        kk, ll = pair(l)
        cert = _new_cert("unbalanced_check", G, G1, INCREMENT, p=p, k=kk, l=ll, r=r, side=side)
        cert.add(require("|l-k|>=r+1", abs(ll - kk), ">=", r + 1, precision))
        cert.add(require("q'/q>2", _ratio_fn(G1, G, profile), ">", 2, precision))
        dr = G1.delta / G.delta
        cert.add(require("delta'q'/(delta q)>2", lambda b: subgraph_quality_ratio(G1, G, profile, b) * dr,
                         ">", 2, precision))
        cert.structural.update(_increment_structure(G1, G, p))
        return StepResult(INCREMENT, G1, cert, {"k": kk, "l": ll})
    tail = sum(far.values(), Fraction(0))
    te = profile.trans_exponent

    def rhs(bits):
        pw = p_pow_31_30(p, bits) if te == Fraction(31, 30) else rpow(Fraction(p), te, bits)
        return (pw * 4).reciprocal() * G.mu_E

    row = evaluate("far_tail<=mu(E)/(4p^te)", tail, "<=", rhs, precision)
    if not row.certified:
        raise InternalInconsistency(
            f"unbalanced_check: neither branch certifies at p={p}, k={k}, r={r}, side={side}")
    cert = _new_cert("unbalanced_check", G, G, SMALL_TAIL, p=p, k=k, r=r, side=side)
    cert.add(row)
    return StepResult(SMALL_TAIL, G, cert, {"tail": tail})


# small sets -------------------------------------------------------------
class _SmallSetSearch:
    """Branch and bound for max mu(E(A,B)) over mu(A) <= cap_A, mu(B) <= cap_B.

    Measures are scaled to integers by a common denominator. Bounds use the
    fractional relaxation on both sides, so every pruned node is certified.
    """

    def __init__(self, G: GcdGraph, eta: Fraction):
        ids = list(G.V_sorted) + list(G.W_sorted)
        D = 1
        for i in ids:
            D = lcm(D, G.mu[i].denominator)
        self.D = D
        m = {i: int(G.mu[i] * D) for i in ids}
        self.vs = sorted((v for v in G.V_sorted if m[v] > 0 and G.adj_V.get(v)), key=lambda v: (-m[v], v))
        self.ws = [w for w in G.W_sorted if m[w] > 0 and G.adj_W.get(w)]
        self.m = m
        self.cap_A = (eta.numerator * sum(m[v] for v in G.V)) // eta.denominator
        self.cap_B = (eta.numerator * sum(m[w] for w in G.W)) // eta.denominator
        self.adjW = {w: [v for v in self.vs if v in G.adj_W[w]] for w in self.ws}
        self.nodes = 0

    def _knap_bound(self, dens: list[tuple[Fraction | int, int]]) -> Fraction:
        """Fractional knapsack over (value per unit weight, weight) with capacity cap_B."""
        cap = self.cap_B
        tot = Fraction(0)
        for d, wt in sorted(dens, key=lambda t: -t[0]):
            if cap <= 0 or d <= 0:
                break
            take = min(cap, wt)
            tot += d * take
            cap -= take
        return tot

    def bound(self, in_A: set, undecided: list, cap_left: int) -> Fraction:
        und = set(undecided)
        dens = []
        for w in self.ws:
            a0 = sum(self.m[v] for v in self.adjW[w] if v in in_A)
            u = sum(self.m[v] for v in self.adjW[w] if v in und)
            dens.append((a0 + min(cap_left, u), self.m[w]))
        return self._knap_bound(dens)

    def best_B(self, A: set) -> tuple[int, list]:
        """Exact 0/1 knapsack for B given A."""
        items = []
        for w in self.ws:
            d = sum(self.m[v] for v in self.adjW[w] if v in A)
            if d > 0:
                items.append((Fraction(d), self.m[w], w))
        items.sort(key=lambda t: (-t[0], t[2]))
        best = [0, []]

        def rec(i, cap, val, chosen):
            self.nodes += 1
            if val > best[0]:
                best[0], best[1] = val, list(chosen)
            if i == len(items):
                return
            # fractional bound with the remaining capacity
            rem, tot = cap, Fraction(val)
            for d, wt, _ in items[i:]:
                if rem <= 0:
                    break
                take = min(rem, wt)
                tot += d * take
                rem -= take
            if tot <= best[0]:
                return
            d, wt, w = items[i]
            if wt <= cap:
                chosen.append(w)
                rec(i + 1, cap - wt, val + d * wt, chosen)
                chosen.pop()
            rec(i + 1, cap, val, chosen)

        rec(0, self.cap_B, 0, [])
        return int(best[0]), best[1]

    def run(self, tau_lo: Fraction):
        """Maximise; return (best value, A, B, largest bound among pruned nodes)."""
        best = [0, [], []]
        pruned_max = [Fraction(0)]

        def rec(i, in_A: list, used: int):
            self.nodes += 1
            und = self.vs[i:]
            ub = self.bound(set(in_A), und, self.cap_A - used)
            floor = max(tau_lo, Fraction(best[0]))
            if ub <= floor:
                pruned_max[0] = max(pruned_max[0], ub)
                return
            if i == len(self.vs):
                val, B = self.best_B(set(in_A))
                if val > best[0]:
                    best[0], best[1], best[2] = val, list(in_A), B
                return
            v = self.vs[i]
            if used + self.m[v] <= self.cap_A:
                in_A.append(v)
                rec(i + 1, in_A, used + self.m[v])
                in_A.pop()
            rec(i + 1, in_A, used)

        rec(0, [], 0)
        return best[0], best[1], best[2], pruned_max[0]


def small_set_step(G: GcdGraph, eta, profile: ConstantsProfile = PAPER,
                   precision: int = DEFAULT_PRECISION) -> StepResult:
    """Find a small, edge-dense pair (A, B) and restrict to it, or certify none exists."""
    _require_positive_density(G)
    eta = Fraction(eta)
    if not 0 < eta < 1:
        raise PreconditionError("need 0 < eta < 1")
    s = profile.small_set_exponent
    search = _SmallSetSearch(G, eta)
    D2 = search.D**2
    me = G.mu_E * D2
    bits = precision
    while True:
        tau = rpow(eta, s, bits) * me
        val, A, B, pruned = search.run(tau.lo)
        if val > tau.hi or max(val, pruned) <= tau.lo:
            break
        if bits >= current_ceiling():
            raise InternalInconsistency("small_set_step: threshold unresolved at the precision ceiling")
        bits *= 2

    def thr(b):
        return rpow(eta, s, b) * G.mu_E

    if val > tau.hi:
        G1 = restrict_vertices(G, A, B)
        cert = _new_cert("small_set_step", G, G1, DENSE_SMALL_PAIR, eta=eta, A=sorted(A), B=sorted(B),
                         search_nodes=search.nodes)
        cert.add(require("mu(A)<=eta*mu(V)", G1.mu_V, "<=", eta * G.mu_V, precision))
        cert.add(require("mu(B)<=eta*mu(W)", G1.mu_W, "<=", eta * G.mu_W, precision))
        cert.add(require("mu(E(A,B))>eta^s*mu(E)", G1.mu_E, ">", thr, precision))
        cert.add(require("q'/q>1", _ratio_fn(G1, G, profile), ">", 1, precision))
        cert.structural.update(is_subgraph=is_subgraph(G1, G), strictly_smaller=G1.V < G.V and G1.W < G.W)
        return StepResult(DENSE_SMALL_PAIR, G1, cert, {"A": sorted(A), "B": sorted(B)})
    ub = Fraction(max(val, pruned)) / D2
    cert = _new_cert("small_set_step", G, G, NO_DENSE_SMALL_PAIR, eta=eta, search_nodes=search.nodes)
    cert.add(require("max_small_pair_edges<=eta^s*mu(E)", ub, "<=", thr, precision))
    return StepResult(NO_DENSE_SMALL_PAIR, G, cert, {"upper_bound": ub})


def no_small_set_edges(G: GcdGraph, eta, profile: ConstantsProfile = PAPER,
                       precision: int = DEFAULT_PRECISION) -> StepResult:
    """Iterate :func:`small_set_step` until no dense small pair remains."""
    H = G
    children = []
    while True:
        step = small_set_step(H, eta, profile, precision)
        children.append(step.cert)
        if step.branch == NO_DENSE_SMALL_PAIR:
            break
        H = step.graph
    cert = _new_cert("no_small_set_edges", G, H, SUBGRAPH, eta=Fraction(eta), steps=len(children) - 1)
    cert.children = children
    cert.add(require("q'/q>=1", _ratio_fn(H, G, profile), ">=", 1, precision))
    cert.structural["is_subgraph"] = is_subgraph(H, G)
    return StepResult(SUBGRAPH, H, cert)


# edge sets --------------------------------------------------------------
def edge_set_rows(G: GcdGraph, p: int, profile: ConstantsProfile = PAPER,
                  precision: int = DEFAULT_PRECISION):
    """[(k, l, row)] for every non-empty edge class, with the row's certified flag set."""
    av, bw = _side_fractions(G, p)
    out = []
    for (k, l), m in edge_classes(G, p).items():
        if m == 0:
            continue
        frac = m / G.mu_E
        if k == l:
            base = av[k] * bw[k]
            row = evaluate(f"edge_set[{k},{l}]", frac, ">=",
                           lambda b, base=base: rpow(base, profile.pigeonexp, b), precision)
        else:
            S = Fraction(0)
            for j in (k, l):
                a, b_ = av.get(j, Fraction(0)), bw.get(j, Fraction(0))
                S += a * (1 - b_) + b_ * (1 - a)
            expo = profile.decay * abs(k - l)
            row = evaluate(f"edge_set[{k},{l}]", frac, ">=",
                           lambda b, S=S, expo=expo: rpow(Fraction(2), expo, b).reciprocal()
                           * (S / profile.edge_set_constant), precision)
        out.append((k, l, row))
    return out


def edge_sets_pick(G: GcdGraph, p: int, profile: ConstantsProfile = PAPER,
                   precision: int = DEFAULT_PRECISION, check_r: bool = True) -> StepResult:
    """A class pair (k, l) meeting the edge-set lower bound, best quality ratio first."""
    _require_positive_density(G)
    _require_in_r(G, p, check_r)
    rows = [(k, l, row) for k, l, row in edge_set_rows(G, p, profile, precision) if row.certified]
    if not rows:
        raise InternalInconsistency(f"edge_sets_pick: no class pair qualifies at p={p}")
    best = None
    for k, l, row in rows:
        lo = quality_ratio(G, p, k, l, profile, precision).lo
        if best is None or lo > best[0]:
            best = (lo, k, l, row)
    _, k, l, row = best
    cert = _new_cert("edge_sets_pick", G, G, "PAIR", p=p, k=k, l=l,
                     tag="diagonal" if k == l else "off_diagonal", qualifying=[[a, b] for a, b, _ in rows])
    cert.add(row)
    return StepResult("PAIR", G, cert, {"k": k, "l": l, "qualifying": [(a, b) for a, b, _ in rows]})


# main step --------------------------------------------------------------
def _concentrated_rows(G: GcdGraph, p: int, k: int, level: Fraction, precision: int):
    mv = valuation_classes(G, p, "V").get(k, Fraction(0))
    mw = valuation_classes(G, p, "W").get(k, Fraction(0))
    return [
        require(f"mu(V_p^{k})>=level*mu(V)", mv, ">=", level * G.mu_V, precision),
        require(f"mu(W_p^{k})>=level*mu(W)", mw, ">=", level * G.mu_W, precision),
    ]


def _best_increment(G: GcdGraph, p: int, pairs, target: Callable[[int, int], Fraction],
                    profile: ConstantsProfile, precision: int):
    best = None
    for k, l in pairs:
        G1 = restrict_prime(G, p, k, l)
        factor = min(Fraction(1), G1.delta / G.delta)
        row = evaluate("gain", lambda b, k=k, l=l: quality_ratio(G, p, k, l, profile, b) * factor,
                       ">=", target(k, l), precision)
        if row.certified and (best is None or row.lhs.lo > best[0]):
            best = (row.lhs.lo, k, l, G1)
    return best


def main_step(G: GcdGraph, p: int, profile: ConstantsProfile = PAPER,
              precision: int = DEFAULT_PRECISION, check_r: bool = True, check_threshold: bool = True) -> StepResult:
    """Concentration of a valuation class at p, or a quality increment fixing p."""
    _require_positive_density(G)
    _require_in_r(G, p, check_r)
    if check_threshold and p <= profile.sharp_threshold_num:
        raise PreconditionError("main_step needs p > sharp_threshold_num")
    k = sharp_class(G, p, profile)
    if k is not None:
        cert = _new_cert("main_step", G, G, CONCENTRATED, p=p, k=k)
        for row in _concentrated_rows(G, p, k, profile.concentration_level(p), precision):
            cert.add(row)
        return StepResult(CONCENTRATED, G, cert, {"k": k})
    rows = edge_set_rows(G, p, profile, precision)
    pairs = [(k, l) for k, l, row in rows if row.certified]
    best = _best_increment(G, p, pairs, lambda k, l: Fraction(2 if k != l else 1), profile, precision)
    if best is None:
        raise InternalInconsistency(f"main_step: neither branch certifies at p={p}")
    _, k, l, G1 = best
    n_flag = int(k != l)
    cert = _new_cert("main_step", G, G1, INCREMENT, p=p, k=k, l=l, n_flag=n_flag)
    cert.add(next(row for a, b, row in rows if (a, b) == (k, l)))
    cert.add(require("min(1,delta'/delta)*q'/q>=2^N", _gain_fn(G1, G, profile), ">=", 2**n_flag, precision))
    cert.structural.update(_increment_structure(G1, G, p))
    return StepResult(INCREMENT, G1, cert, {"k": k, "l": l, "n_flag": n_flag})


def small_prime_step(G: GcdGraph, p: int, profile: ConstantsProfile = PAPER,
                     precision: int = DEFAULT_PRECISION, check_r: bool = True) -> StepResult:
    """Class concentration at level 9/10, or an increment with bounded loss."""
    _require_positive_density(G)
    _require_in_r(G, p, check_r)
    level = profile.small_concentration
    av, bw = _side_fractions(G, p)
    for k in sorted(set(av) & set(bw)):
        if av[k] >= level and bw[k] >= level:
            cert = _new_cert("small_prime_step", G, G, CONCENTRATED, p=p, k=k)
            for row in _concentrated_rows(G, p, k, level, precision):
                cert.add(row)
            return StepResult(CONCENTRATED, G, cert, {"k": k})
    rows = edge_set_rows(G, p, profile, precision)
    pairs = [(k, l) for k, l, row in rows if row.certified]
    floor = profile.small_loss_floor
    best = _best_increment(G, p, pairs, lambda k, l: floor, profile, precision)
    if best is None:
        raise InternalInconsistency(f"small_prime_step: neither branch certifies at p={p}")
    _, k, l, G1 = best
    cert = _new_cert("small_prime_step", G, G1, INCREMENT, p=p, k=k, l=l)
    cert.add(next(row for a, b, row in rows if (a, b) == (k, l)))
    cert.add(require("min(1,delta'/delta)*q'/q>=small_loss_floor", _gain_fn(G1, G, profile), ">=", floor,
                     precision))
    cert.structural.update(_increment_structure(G1, G, p))
    return StepResult(INCREMENT, G1, cert, {"k": k, "l": l})


def _finish_iteration(G: GcdGraph, G1: GcdGraph, p: int, children, route: str,
                      profile: ConstantsProfile, precision: int, **params) -> StepResult:
    cert = _new_cert("small_prime_iteration", G, G1, route, p=p, **params)
    cert.children = children
    cert.add(require("min(1,delta'/delta)*q'/q>=iteration_floor", _gain_fn(G1, G, profile), ">=",
                     profile.iteration_floor, precision))
    cert.structural.update(_increment_structure(G1, G, p))
    f, g = G1.f[p], G1.g[p]
    return StepResult(route, G1, cert, {"k": f, "l": g})


def small_prime_iteration(G: GcdGraph, p: int, profile: ConstantsProfile = PAPER,
                          precision: int = DEFAULT_PRECISION, check_r: bool = True) -> StepResult:
    """Add one small prime p to P, losing at most the iteration floor."""
    _require_positive_density(G)
    _require_in_r(G, p, check_r)
    if p > profile.small_prime_bound:
        raise PreconditionError("small_prime_iteration needs p <= small_prime_bound")
    children = []
    hd = high_degree_subgraph(G, profile, precision)
    children.append(hd.cert)
    G1 = hd.graph
    sp = small_prime_step(G1, p, profile, precision, check_r=False)
    children.append(sp.cert)
    if sp.branch == INCREMENT:
        return _finish_iteration(G, sp.graph, p, children, "SMALL_STEP", profile, precision)
    k = sp.info["k"]
    if p > 10 * profile.sharp_threshold_num:
        ms = main_step(G1, p, profile, precision, check_r=False)
        children.append(ms.cert)
        if ms.branch == INCREMENT:
            return _finish_iteration(G, ms.graph, p, children, "MAIN_STEP", profile, precision)
        if ms.info["k"] != k:
            raise InternalInconsistency("small_prime_iteration: concentrated classes disagree")
    r = profile.window_radius(p)
    ub = unbalanced_check(G1, p, k, r, "W", profile, precision, check_r=False)
    children.append(ub.cert)
    if ub.branch == INCREMENT:
        return _finish_iteration(G, ub.graph, p, children, "UNBALANCED", profile, precision, r=r)
    Vk = class_ids(G1, p, k, "V")
    window = [l for l in range(max(0, k - r), k + r + 1) if class_ids(G1, p, l, "W")]
    Wt = frozenset().union(*(class_ids(G1, p, l, "W") for l in window))
    G2 = restrict_vertices(G1, Vk, Wt)
    cells = [class_ids(G2, p, l, "W") for l in window]
    ph = pigeonhole(G2, [sorted(G2.V)], [sorted(c) for c in cells], profile, precision)
    children.append(ph.cert)
    l = window[ph.info["cell"][1]]
    G3 = restrict_prime(G1, p, k, l)
    return _finish_iteration(G, G3, p, children, "WINDOW", profile, precision, r=r, window=window)


# sharp primes -----------------------------------------------------------
def _sharp_diagnostics(G1: GcdGraph, p: int, k: int, Estar_mu: Fraction, parts: dict,
                       profile: ConstantsProfile, precision: int) -> dict:
    """Flags for the three competing inequalities; recorded, never required."""
    if k == 0 or Estar_mu == 0:
        return {}
    A = valuation_classes(G1, p, "V").get(k - 1, Fraction(0)) / G1.mu_V * p
    B = valuation_classes(G1, p, "W").get(k - 1, Fraction(0)) / G1.mu_W * p
    pe = profile.pigeonexp
    third = Fraction(1, 3)

    def trans(b):
        return rpow(1 - p_pow_31_30(p, b).reciprocal().hi, third, b)

    out = {}
    tests = {
        "ineq1": (parts["plus"] / Estar_mu, lambda b: rpow(1 - A / p, pe, b) * rpow(1 - B / p, pe, b)
                  * rpow(1 - Fraction(1, p), Fraction(1, 5), b) * trans(b)),
        "ineq2": (parts["k,k-1"] / Estar_mu, lambda b: (rpow(B, pe, b) if B else as_interval(0)) * trans(b) / p),
        "ineq3": (parts["k-1,k"] / Estar_mu, lambda b: (rpow(A, pe, b) if A else as_interval(0)) * trans(b) / p),
    }
    for name, (lhs, rhs) in tests.items():
        try:
            out[name] = evaluate(name, lhs, ">", rhs, precision, 1024).certified
        except Exception:  # diagnostics only
            out[name] = "indeterminate"
    return out


def main_step_sharp(G: GcdGraph, p: int, profile: ConstantsProfile = PAPER,
                    precision: int = DEFAULT_PRECISION, check_r: bool = True) -> StepResult:
    """Quality non-decreasing step fixing a large prime p."""
    _require_positive_density(G)
    _require_in_r(G, p, check_r)
    if p < profile.small_prime_bound:
        raise PreconditionError("main_step_sharp needs p >= small_prime_bound")
    children = []
    eta = Fraction(profile.sharp_threshold_num, p)
    ns = no_small_set_edges(G, eta, profile, precision)
    children.append(ns.cert)
    G1 = ns.graph
    ms = main_step(G1, p, profile, precision, check_r=False)
    children.append(ms.cert)

    def finish(G2: GcdGraph, route: str, **params) -> StepResult:
        cert = _new_cert("main_step_sharp", G, G2, route, p=p, **params)
        cert.children = children
        cert.add(require("q'/q>=1", _ratio_fn(G2, G, profile), ">=", 1, precision))
        cert.structural.update(_increment_structure(G2, G, p))
        return StepResult(route, G2, cert, {"k": G2.f[p], "l": G2.g[p]})

    if ms.branch == INCREMENT:
        return finish(ms.graph, "MAIN_STEP")
    k = ms.info["k"]
    for side in ("V", "W"):
        ub = unbalanced_check(G1, p, k, 1, side, profile, precision, check_r=False)
        children.append(ub.cert)
        if ub.branch == INCREMENT:
            return finish(ub.graph, "UNBALANCED_" + side)
    Vk, Wk = class_ids(G1, p, k, "V"), class_ids(G1, p, k, "W")
    near = [j for j in (k - 1, k, k + 1) if j >= 0]
    Vt = frozenset().union(*(class_ids(G1, p, j, "V") for j in near))
    Wt = frozenset().union(*(class_ids(G1, p, j, "W") for j in near))
    Estar = frozenset(e for e in G1.E if (e[0] in Vk and e[1] in Wt) or (e[0] in Vt and e[1] in Wk))
    Gstar = restrict_edges(G1, Estar)
    Vplus = Vk | class_ids(G1, p, k + 1, "V")
    Wplus = Wk | class_ids(G1, p, k + 1, "W")
    Gplus = Gstar._derive(V=Vplus, W=Wplus, P=G1.P | {p}, f={**G1.f, p: k}, g={**G1.g, p: k})
    cands = [("PLUS", Gplus)]
    if k >= 1:
        cands.append(("K_KM1", restrict_prime(Gstar, p, k, k - 1)))
        cands.append(("KM1_K", restrict_prime(Gstar, p, k - 1, k)))
    parts = {"plus": Gplus.mu_E, "k,k-1": cands[1][1].mu_E if k >= 1 else 0,
             "k-1,k": cands[2][1].mu_E if k >= 1 else 0}
    diag = _sharp_diagnostics(G1, p, k, Gstar.mu_E, parts, profile, precision)
    best = None
    for tag, H in cands:
        if H.mu_E == 0:
            continue
        row = evaluate("q'/q>=1", _ratio_fn(H, G, profile), ">=", 1, precision)
        if row.certified and (best is None or row.lhs.lo > best[0]):
            best = (row.lhs.lo, tag, H)
    if best is None:
        raise InternalInconsistency(f"main_step_sharp: no candidate certifies at p={p}, k={k}")
    _, tag, H = best
    res = finish(H, tag, k=k, diagnostics=diag, estar_fraction=Gstar.mu_E / G1.mu_E)
    res.cert.structural["estar_subgraph"] = is_subgraph(Gstar, G1)
    return res


# cosmetic trim ----------------------------------------------------------
def excess_sum(G: GcdGraph, v: str, w: str, primes_R: frozenset[int], cutoff) -> Fraction:
    """Sum of 1/p over p in R, p >= cutoff, dividing vw/gcd(v,w)^2."""
    a, b = G.nums[v], G.nums[w]
    out = Fraction(0)
    for p in primes_R:
        if p >= cutoff and a.valuation(p) != b.valuation(p):
            out += Fraction(1, p)
    return out


def outside_sum(G: GcdGraph, v: str, w: str, t, primes_R: frozenset[int]) -> Fraction:
    """Sum of 1/p over p >= t, p outside R, dividing vw/gcd(v,w)^2."""
    a, b = G.nums[v], G.nums[w]
    ps = {p for p, _ in a.factors} | {p for p, _ in b.factors}
    return sum((Fraction(1, p) for p in ps if p >= t and p not in primes_R
                and a.valuation(p) != b.valuation(p)), Fraction(0))


def cosmetic_trim(G: GcdGraph, t, profile: ConstantsProfile = PAPER,
                  precision: int = DEFAULT_PRECISION) -> StepResult:
    """Drop edges whose anatomy weight leans on many large primes of R(G)."""
    t = Fraction(t)
    e = profile.cosmetic_exponent
    if t < profile.cosmetic_t_min:
        raise PreconditionError("t below cosmetic_t_min")
    if r_flat(G, profile):
        raise PreconditionError("cosmetic_trim needs R_flat(G) empty")
    _require_positive_density(G)
    if G.delta < (10 / t) ** e:
        raise PreconditionError("density below (10/t)^e")
    for v, w in G.E_sorted:
        if l_t(G.nums[v], G.nums[w], t) < profile.anatomy_in:
            raise PreconditionError(f"edge ({v},{w}) has L_t below anatomy_in")
    R = r_set(G)
    cutoff = t**e
    keep = [(v, w) for v, w in G.E_sorted if excess_sum(G, v, w, R, cutoff) <= profile.cosmetic_excess]
    G1 = restrict_edges(G, keep)
    cert = _new_cert("cosmetic_trim", G, G1, SUBGRAPH, t=t, dropped=len(G.E) - len(keep))
    cert.add(require("q'/q>=1/2", lambda b: subgraph_quality_ratio(G1, G, profile, b) if G1.mu_E else
                     as_interval(0), ">=", Fraction(1, 2), precision))
    m = min(outside_sum(G, v, w, t, R) for v, w in keep)
    cert.add(require("min_edge_outside_sum>=anatomy_mid", m, ">=", profile.anatomy_mid, precision))
    cert.structural.update(is_subgraph=is_subgraph(G1, G), same_vertices=G1.V == G.V and G1.W == G.W)
    return StepResult(SUBGRAPH, G1, cert)
