"""Staged construction of a good GCD subgraph, with a replayable trace."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .certificates import (
    Indeterminate,
    InternalInconsistency,
    PreconditionError,
    StepCertificate,
    chain_ok,
    current_ceiling,
    dumps,
    evaluate,
    precision_ceiling,
    require,
)
from .factored import FactoredInt, divide_exact, gcd, l_t, qparse, qstr
from .graph import GcdGraph, GraphError, is_subgraph, r_flat, r_set, subgraph_quality_ratio, validate
from .intervals import DEFAULT_PRECISION
from .lemmas import _new_cert, cosmetic_trim, high_degree_subgraph
from .profile import PAPER, ConstantsProfile, ProfileError
from .propositions import prop_flat, prop_sharp, prop_small

TRACE_FORMAT = "dscert-trace/1"
STAGES = ("pre", "1", "2", "split", "3a", "3b", "4b", "final", "summary")


@dataclass
class PipelineTrace:
    input_graph: GcdGraph
    t: Fraction
    profile: ConstantsProfile
    precision: int
    certificates: list[StepCertificate] = field(default_factory=list)
    final_graph: GcdGraph | None = None
    case: str = ""
    ceiling: int = field(default_factory=current_ceiling)

    @property
    def stages(self) -> list[str]:
        return [c.stage for c in self.certificates]

    def push(self, cert: StepCertificate, stage: str) -> None:
        cert.stage = stage
        self.certificates.append(cert)

    def chain_ok(self) -> bool:
        return chain_ok(self.certificates)

    def is_valid(self) -> bool:
        return self.chain_ok() and all(c.is_valid() for c in self.certificates)

    def to_json(self) -> dict:
        return {
            "format": TRACE_FORMAT,
            "t": qstr(self.t),
            "precision": self.precision,
            "precision_ceiling": self.ceiling,
            "profile": self.profile.to_json(),
            "input": self.input_graph.to_json(),
            "final": None if self.final_graph is None else self.final_graph.to_json(),
            "case": self.case,
            "certificates": [c.to_json() for c in self.certificates],
        }

    def dumps(self) -> str:
        return dumps(self.to_json())

    @classmethod
    def from_json(cls, data: dict) -> "PipelineTrace":
        if data.get("format") != TRACE_FORMAT:
            raise ValueError("not a pipeline trace")
        return cls(
            input_graph=GcdGraph.from_json(data["input"]),
            t=qparse(data["t"]),
            profile=ConstantsProfile.from_json(data["profile"]),
            precision=int(data["precision"]),
            certificates=[StepCertificate.from_json(c) for c in data["certificates"]],
            final_graph=None if data.get("final") is None else GcdGraph.from_json(data["final"]),
            case=data.get("case", ""),
            ceiling=int(data.get("precision_ceiling", current_ceiling())),
        )


def _strip_fixed(G: GcdGraph, x: str, side: str) -> FactoredInt:
    fixed = G.f if side == "V" else G.g
    d = FactoredInt.from_pairs((p, k) for p, k in fixed.items() if k > 0)
    return divide_exact(G.nums[x], d)


def check_preconditions(G: GcdGraph, t, profile: ConstantsProfile) -> None:
    t = Fraction(t)
    if validate(G):
        raise PreconditionError("input is not a GCD graph")
    if G.P:
        raise PreconditionError("input prime set must be empty")
    if G.delta <= 0:
        raise PreconditionError("edge density must be positive")
    try:
        profile.check_t(t)
    except ProfileError as exc:
        raise PreconditionError(str(exc)) from exc
    if G.delta < (10 / t) ** profile.cosmetic_exponent:
        raise PreconditionError("need delta >= (10/t)^e")
    for v, w in G.E_sorted:
        if l_t(G.nums[v], G.nums[w], t) < profile.anatomy_in:
            raise PreconditionError(f"edge ({v},{w}) has L_t below anatomy_in")


def _large_prime_loop(H: GcdGraph, trace: PipelineTrace, stage: str, profile, precision) -> GcdGraph:
    while r_set(H):
        step = prop_flat(H, profile, precision) if r_flat(H, profile) else prop_sharp(H, profile, precision)
        trace.push(step.cert, stage)
        H = step.graph
    return H


def good_subgraph_pipeline(G: GcdGraph, t, profile: ConstantsProfile = PAPER,
                           precision: int = DEFAULT_PRECISION) -> tuple[GcdGraph, PipelineTrace]:
    """Stages 1, 2, the case split, 3a or 3b then 4b, and a final high-degree pass."""
    t = Fraction(t)
    check_preconditions(G, t, profile)
    e = profile.cosmetic_exponent
    F = profile.stage_floor
    trace = PipelineTrace(G, t, profile, precision)

    pre = _new_cert("preconditions", G, G, "OK", t=t)
    pre.add(require("delta>=(10/t)^e", G.delta, ">=", (10 / t) ** e, precision))
    pre.add(require("min_edge_L_t>=anatomy_in", min(l_t(G.nums[v], G.nums[w], t) for v, w in G.E_sorted),
                    ">=", profile.anatomy_in, precision))
    pre.add(require("t>small_prime_bound", t, ">", profile.small_prime_bound, precision))
    trace.push(pre, "pre")

    s1 = prop_small(G, profile, precision)
    trace.push(s1.cert, "1")
    H = s1.graph

    N = 0
    while r_flat(H, profile):
        step = prop_flat(H, profile, precision)
        trace.push(step.cert, "2")
        N += step.info["N"]
        H = step.graph
    G2 = H
    q2 = lambda b: subgraph_quality_ratio(G2, G, profile, b)  # noqa: E731
    s2 = _new_cert("stage2_summary", G2, G2, "SUMMARY", N=N)
    s2.add(require("q2/(2^N q)>=F", lambda b: q2(b) * Fraction(1, 2**N), ">=", F, precision))
    d2 = G2.delta / G.delta
    s2.add(require("delta2 q2/(2^N delta q)>=F", lambda b: q2(b) * (d2 / 2**N), ">=", F, precision))
    trace.push(s2, "2")

    scale = (t / 10) ** e * G.delta
    split = evaluate("q2/((t/10)^e delta q)>=F", lambda b: q2(b) * (1 / scale), ">=", F, precision)
    case_a = split.certified
    sc = _new_cert("case_split", G2, G2, "a" if case_a else "b", N=N)
    sc.add(split if case_a else evaluate("q2/((t/10)^e delta q)<F", split.lhs, "<", F, precision))
    trace.push(sc, "split")

    if case_a:
        H = _large_prime_loop(G2, trace, "3a", profile, precision)
    else:
        chk = _new_cert("stage3b_checks", G2, G2, "OK", N=N)
        chk.add(require("delta2>=(10/t)^e", G2.delta, ">=", (10 / t) ** e, precision))
        chk.add(require("2^N<=t^e", 2**N, "<=", t**e, precision))
        chk.add(require("N/t<=anatomy_mid-anatomy_out", Fraction(N) / t, "<=",
                        profile.anatomy_mid - profile.anatomy_out, precision))
        trace.push(chk, "3b")
        ct = cosmetic_trim(G2, t, profile, precision)
        trace.push(ct.cert, "3b")
        H = _large_prime_loop(ct.graph, trace, "4b", profile, precision)

    fin = high_degree_subgraph(H, profile, precision)
    trace.push(fin.cert, "final")
    Gf = fin.graph

    tag = "d-i" if case_a else "d-ii"
    summ = _new_cert("summary", Gf, Gf, tag, N=N)
    ratio = lambda b: subgraph_quality_ratio(Gf, G, profile, b)  # noqa: E731
    if case_a:
        summ.add(require("q'/((t/10)^e delta q)>=F", lambda b: ratio(b) * (1 / scale), ">=", F, precision))
        c = ratio(precision) * (1 / (G.delta * t**e))
        summ.params["achieved_c"] = c.to_json()
    else:
        summ.add(require("2q'/q>=F", lambda b: ratio(b) * 2, ">=", F, precision))
        worst = None
        coprime = True
        for v, w in Gf.E_sorted:
            a, b_ = _strip_fixed(Gf, v, "V"), _strip_fixed(Gf, w, "W")
            coprime &= gcd(a, b_).factors == ()
            lv = l_t(a, b_, t)
            worst = lv if worst is None else min(worst, lv)
        summ.add(require("min_edge_L_t(v',w')>=anatomy_out", worst, ">=", profile.anatomy_out, precision))
        summ.structural["reduced_coprime"] = coprime
        summ.params["achieved_c"] = ratio(precision).to_json()
    frac = profile.degree_fraction
    summ.add(require("min_deg_V>=frac*delta'*mu(W')", min(Gf.degree_measure(v, "V") for v in Gf.V_sorted),
                     ">=", frac * Gf.delta * Gf.mu_W, precision))
    summ.add(require("min_deg_W>=frac*delta'*mu(V')", min(Gf.degree_measure(w, "W") for w in Gf.W_sorted),
                     ">=", frac * Gf.delta * Gf.mu_V, precision))
    summ.structural.update(r_set_empty=not r_set(Gf), is_subgraph=is_subgraph(Gf, G), valid=not validate(Gf))
    trace.push(summ, "summary")
    trace.final_graph = Gf
    trace.case = tag
    return Gf, trace


# replay -----------------------------------------------------------------
EXIT_OK, EXIT_MISMATCH, EXIT_PARSE, EXIT_INDETERMINATE, EXIT_PRECONDITION = 0, 1, 2, 3, 4


@dataclass
class ReplayReport:
    code: int
    messages: list[str]

    @property
    def ok(self) -> bool:
        return self.code == EXIT_OK


def verify_trace(text: str) -> ReplayReport:
    """Re-check rows, digests and structure, then re-run and compare bytes."""
    import json

    msgs: list[str] = []
    try:
        data = json.loads(text)
        trace = PipelineTrace.from_json(data)
    except (ValueError, KeyError, TypeError, GraphError, ProfileError) as exc:
        return ReplayReport(EXIT_PARSE, [f"parse error: {exc}"])
    bad = 0
    for i, cert in enumerate(trace.certificates):
        for row in cert.all_rows():
            if not row.certified or not row.recheck():
                bad += 1
                msgs.append(f"certificate {i} ({cert.lemma}): row {row.name} does not re-check")
        if not cert.is_valid():
            msgs.append(f"certificate {i} ({cert.lemma}) is not valid")
            bad += 1
    if not trace.chain_ok():
        msgs.append("digest chain broken")
        bad += 1
    if trace.certificates and trace.certificates[0].input_digest != trace.input_graph.digest:
        msgs.append("first certificate does not start at the input graph")
        bad += 1
    if trace.final_graph is not None and trace.certificates and \
            trace.certificates[-1].output_digest != trace.final_graph.digest:
        msgs.append("last certificate does not end at the final graph")
        bad += 1
    try:
        with precision_ceiling(trace.ceiling):
            _, again = good_subgraph_pipeline(trace.input_graph, trace.t, trace.profile, trace.precision)
    except PreconditionError as exc:
        return ReplayReport(EXIT_PRECONDITION, msgs + [f"precondition: {exc}"])
    except Indeterminate as exc:
        return ReplayReport(EXIT_INDETERMINATE, msgs + [f"indeterminate: {exc}"])
    except InternalInconsistency as exc:
        return ReplayReport(EXIT_MISMATCH, msgs + [f"re-run failed: {exc}"])
    if again.dumps() != text:
        msgs.append("re-run output differs from the trace bytes")
        bad += 1
    if bad:
        return ReplayReport(EXIT_MISMATCH, msgs)
    return ReplayReport(EXIT_OK, ["trace verified"])


__all__ = ["PipelineTrace", "good_subgraph_pipeline", "verify_trace", "ReplayReport", "check_preconditions"]
