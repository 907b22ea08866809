"""Run the randomized lemma suites and write every non-certifying instance to JSON.

Each artifact holds the input graph, the call arguments, the fault message and
an independent float recomputation of both sides of the far-class dichotomy.

    python3 scripts/release_counterexamples.py [--out DIR] [--count N] [--seed S]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import mpmath

from dscert.certificates import InternalInconsistency, dumps
from dscert.generate import LEMMAS, call_lemma, lemma_suite
from dscert.profile import SCALED

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "counterexamples"


def _mpf(x):
    return mpmath.mpf(x.numerator) / x.denominator


def far_class_diagnostics(G, p, k, r, side, profile) -> dict:
    """Float recomputation of the tail mass, its bound and each far class's quality ratio."""
    mpmath.mp.dps = 50
    val = {i: G.nums[i].valuation(p) for i in G.V | G.W}
    muV = sum(_mpf(G.mu[v]) for v in G.V)
    muW = sum(_mpf(G.mu[w]) for w in G.W)
    muE = sum(_mpf(G.mu[v] * G.mu[w]) for v, w in G.E)
    d = profile.density_exponent
    te = _mpf(profile.trans_exponent)
    tail = mpmath.mpf(0)
    classes = {}
    for v, w in G.E:
        a, b = val[v], val[w]
        fixed, moving = (a, b) if side == "W" else (b, a)
        if fixed == k and abs(moving - k) >= r + 1:
            tail += _mpf(G.mu[v] * G.mu[w])
            classes.setdefault(moving, mpmath.mpf(0))
            classes[moving] += _mpf(G.mu[v] * G.mu[w])
    ratios = {}
    for l, me in classes.items():
        kk, ll = (k, l) if side == "W" else (l, k)
        mv = sum(_mpf(G.mu[v]) for v in G.V if val[v] == kk)
        mw = sum(_mpf(G.mu[w]) for w in G.W if val[w] == ll)
        q = (me / muE) ** d * (muV / mv) ** (d - 1) * (muW / mw) ** (d - 1) * mpmath.mpf(p) ** abs(kk - ll)
        if kk == ll >= 1:
            q /= (1 - mpmath.mpf(1) / p) ** 2
        q /= (1 - mpmath.mpf(p) ** (-te)) ** d
        dr = (me / (mv * mw)) / (muE / (muV * muW))
        ratios[str(l)] = {"q_ratio": mpmath.nstr(q, 12), "delta_q_ratio": mpmath.nstr(q * dr, 12)}
    bound = muE / (4 * mpmath.mpf(p) ** te)
    return {
        "tail_fraction": mpmath.nstr(tail / muE, 12),
        "tail_bound_fraction": mpmath.nstr(bound / muE, 12),
        "tail_exceeds_bound": bool(tail > bound),
        "far_classes": ratios,
        "any_far_class_doubles": any(mpmath.mpf(x["q_ratio"]) > 2 and mpmath.mpf(x["delta_q_ratio"]) > 2
                                     for x in ratios.values()),
    }


def collect(count: int, seed: int, profile=SCALED) -> list[dict]:
    out = []
    for lemma in LEMMAS:
        for i, inst in lemma_suite(lemma, count, seed, profile):
            try:
                call_lemma(lemma, inst, profile)
            except InternalInconsistency as exc:
                args = {k: v for k, v in inst.items() if k != "graph"}
                art = {"lemma": lemma, "index": i, "seed": seed, "profile": profile.name,
                       "args": {k: str(v) for k, v in args.items()}, "fault": str(exc),
                       "graph": inst["graph"].to_json()}
                if lemma == "unbalanced_check":
                    art["diagnostics"] = far_class_diagnostics(inst["graph"], args["p"], args["k"], args["r"],
                                                               args["side"], profile)
                out.append(art)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    arts = collect(args.count, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    for old in args.out.glob("*.json"):
        old.unlink()
    for a in arts:
        path = args.out / f"{a['lemma']}_{a['seed']}_{a['index']:03d}.json"
        path.write_text(dumps(a), encoding="utf-8")
        diag = a.get("diagnostics", {})
        print(f"{path.name}: tail {diag.get('tail_fraction')} vs bound {diag.get('tail_bound_fraction')}, "
              f"far-class increment available: {diag.get('any_far_class_doubles')}")
    print(f"{len(arts)} counterexample(s) written to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
