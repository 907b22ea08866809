"""Command-line entry point.

Subcommands::

    dscert graph validate PATH
    dscert graph quality PATH
    dscert graph generate --seed N --out PATH
    dscert pipeline run PATH --t T --out TRACE
    dscert trace verify TRACE
    dscert ds measure | overlap | second-moment | anatomy | counterexample | catlin

Exit codes: 0 ok, 1 mismatch or violations, 2 parse error or missing file,
3 indeterminate certificate, 4 precondition failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .certificates import Indeterminate, InternalInconsistency, PreconditionError, dumps, precision_ceiling
from .factored import FactoredInt, euler_phi, qstr
from .graph import GcdGraph, GraphError, load_graph, quality, validate
from .intervals import DEFAULT_PRECISION, PRECISION_CEILING
from .pipeline import (
    EXIT_INDETERMINATE,
    EXIT_MISMATCH,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_PRECONDITION,
    good_subgraph_pipeline,
    verify_trace,
)
from .profile import ConstantsProfile, ProfileError, resolve_profile
from .psi import PsiFunction


@dataclass(frozen=True)
class RunConfig:
    profile: ConstantsProfile
    profile_name: str
    precision: int
    ceiling: int
    seed: int
    out: str | None

    def __post_init__(self) -> None:
        if self.precision < 32:
            raise ValueError("precision must be >= 32 bits")
        if self.ceiling < self.precision:
            raise ValueError("precision ceiling must be >= precision")

    def header(self, command: str) -> str:
        return (f"# dscert {command} profile={self.profile_name} precision={self.precision} "
                f"ceiling={self.ceiling} seed={self.seed}")


def _config(args) -> RunConfig:
    return RunConfig(resolve_profile(args.profile), args.profile, args.precision, args.precision_ceiling,
                     args.seed, args.out)


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(cfg: RunConfig, command: str, header: Sequence[str], rows, extra: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(cfg.header(command) + "\n")
    for line in extra:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_out(cfg: RunConfig, command: str, payload: dict) -> str:
    return dumps({"command": command, "profile": cfg.profile_name, "precision": cfg.precision,
                  "seed": cfg.seed, **payload})


def _read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# graph --------------------------------------------------------------------
def cmd_graph_validate(args, cfg: RunConfig) -> int:
    G = GcdGraph.from_json(_read_json(args.path))
    viol = validate(G)
    _emit(cfg, _json_out(cfg, "graph validate", {
        "graph": args.path, "valid": not viol, "violations": [v.to_json() for v in viol],
    }))
    return EXIT_MISMATCH if viol else EXIT_OK


def cmd_graph_quality(args, cfg: RunConfig) -> int:
    G = load_graph(args.path)
    viol = validate(G)
    if viol:
        sys.stderr.write(f"invalid graph: {len(viol)} violation(s)\n")
        return EXIT_MISMATCH
    qv = quality(G, cfg.profile, cfg.precision)
    _emit(cfg, _json_out(cfg, "graph quality", {"graph": args.path, "quality": qv.to_json(),
                                                "delta": qstr(G.delta)}))
    return EXIT_OK


def cmd_graph_generate(args, cfg: RunConfig) -> int:
    from .generate import psi_pipeline_instance

    G = psi_pipeline_instance(random.Random(cfg.seed), n_side=args.n_side, t=args.t)
    _emit(cfg, dumps(G.to_json()))
    return EXIT_OK


# pipeline -----------------------------------------------------------------
def cmd_pipeline_run(args, cfg: RunConfig) -> int:
    G = load_graph(args.path)
    t = Fraction(args.t)
    try:
        with precision_ceiling(cfg.ceiling):
            Gf, trace = good_subgraph_pipeline(G, t, cfg.profile, cfg.precision)
    except PreconditionError as exc:
        sys.stderr.write(f"precondition: {exc}\n")
        return EXIT_PRECONDITION
    except Indeterminate as exc:
        sys.stderr.write(f"indeterminate: {exc}\n")
        return EXIT_INDETERMINATE
    except InternalInconsistency as exc:
        sys.stderr.write(f"inconsistency: {exc}\n")
        return EXIT_MISMATCH
    _emit(cfg, trace.dumps())
    sys.stderr.write(f"case {trace.case}: {len(trace.certificates)} certificates, "
                     f"|V'|={len(Gf.V)} |W'|={len(Gf.W)} |E'|={len(Gf.E)}\n")
    return EXIT_OK


def cmd_trace_verify(args, cfg: RunConfig) -> int:
    with open(args.path, encoding="utf-8") as fh:
        text = fh.read()
    rep = verify_trace(text)
    for m in rep.messages:
        sys.stdout.write(m + "\n")
    return rep.code


# ds -----------------------------------------------------------------------
def _psi(text: str) -> PsiFunction:
    return PsiFunction.parse(text)


def cmd_ds_measure(args, cfg: RunConfig) -> int:
    from .ds import a_q_set, k_q_set

    psi = _psi(args.psi)
    rows, bad = [], 0
    for q in range(args.q_min, args.q_max + 1):
        a, k = a_q_set(psi, q).measure, k_q_set(psi, q).measure
        closed = 2 * psi(q) * euler_phi(FactoredInt.from_int(q)) / q
        applies = q >= 2 and 0 < psi(q) <= Fraction(1, 2)
        ok = (a == closed) if applies else True
        bad += not ok
        rows.append([q, a, closed if applies else "", k, int(ok)])
    _emit(cfg, _csv(cfg, "ds measure", ["q", "measure_A", "closed_form", "measure_K", "ok"], rows,
                    [f"psi={psi.describe()} mismatches={bad}"]))
    return EXIT_MISMATCH if bad else EXIT_OK


def cmd_ds_overlap(args, cfg: RunConfig) -> int:
    from .ds import overlap_scan

    psi = _psi(args.psi)
    rows, bad, best = [], 0, None
    for rep in overlap_scan(psi, args.q_max, args.q_min):
        if not rep.indicator and rep.lhs != 0:
            bad += 1
        if rep.indicator and (best is None or rep.ratio > best[0]):
            best = (rep.ratio, rep.q, rep.r)
        rows.append(rep.row())
    sup = "none" if best is None else f"{float(best[0])!r} at ({best[1]},{best[2]})"
    _emit(cfg, _csv(cfg, "ds overlap", ["q", "r", "lhs", "rhs_core", "indicator", "zero_division"], rows,
                    [f"psi={psi.describe()} violations={bad} sup_lhs_over_rhs_core={sup}"]))
    return EXIT_MISMATCH if bad else EXIT_OK


def cmd_ds_second_moment(args, cfg: RunConfig) -> int:
    from .ds import build_edge_set, choose_y, second_moment

    psi = _psi(args.psi)
    Y = args.Y if args.Y is not None else choose_y(psi, args.X, args.cap)
    rows = []
    for t in args.t:
        t = Fraction(t)
        E = build_edge_set(psi, args.X, Y, t, Fraction(args.anatomy_min), support_only=True)
        s = second_moment(psi, args.X, Y, t, edges=E)
        rows.append([t, len(E), s, t * s, repr(float(t * s))])
    _emit(cfg, _csv(cfg, "ds second-moment", ["t", "edges", "sum", "t_sum", "t_sum_float"], rows,
                    [f"psi={psi.describe()} X={args.X} Y={Y} anatomy_min={args.anatomy_min}"]))
    return EXIT_OK


def cmd_ds_anatomy(args, cfg: RunConfig) -> int:
    from .ds import anatomy_report

    rows = [anatomy_report(x, Fraction(t), Fraction(c)).row() for x in args.x for t in args.t for c in args.c]
    _emit(cfg, _csv(cfg, "ds anatomy", ["x", "t", "c", "count", "bound_shape"], rows))
    return EXIT_OK


def cmd_ds_counterexample(args, cfg: RunConfig) -> int:
    from .ds import model_counterexample

    rep = model_counterexample(args.n, args.x_scale)
    _emit(cfg, _json_out(cfg, "ds counterexample", rep.to_json()))
    ok = rep.in_range and rep.pairs_failing == 0
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_ds_catlin(args, cfg: RunConfig) -> int:
    from .ds import catlin_star

    psi = _psi(args.psi)
    rows = []
    for q in args.q:
        cv = catlin_star(psi, q, max(args.n_cap, q))
        rows.append([q, cv.value, int(cv.exact), "" if cv.argmax is None else cv.argmax])
    _emit(cfg, _csv(cfg, "ds catlin", ["q", "value", "exact", "argmax"], rows, [f"psi={psi.describe()}"]))
    return EXIT_OK


# parser -------------------------------------------------------------------
def _ints(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s]


def _rats(text: str) -> list[str]:
    return [str(Fraction(s)) for s in text.split(",") if s]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", default="scaled", help="paper, scaled, or a JSON profile path")
    common.add_argument("--precision", type=int, default=DEFAULT_PRECISION, help="starting bits")
    common.add_argument("--precision-ceiling", type=int, default=PRECISION_CEILING, help="maximum bits")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (default stdout)")

    ap = argparse.ArgumentParser(prog="dscert", description=__doc__.splitlines()[0])
    top = ap.add_subparsers(dest="group", required=True)

    def add(sub, name: str, fn: Callable, **kw):
        p = sub.add_parser(name, parents=[common], **kw)
        p.set_defaults(fn=fn)
        return p

    g = top.add_parser("graph").add_subparsers(dest="cmd", required=True)
    add(g, "validate", cmd_graph_validate).add_argument("path")
    add(g, "quality", cmd_graph_quality).add_argument("path")
    p = add(g, "generate", cmd_graph_generate)
    p.add_argument("--n-side", type=int, default=10)
    p.add_argument("--t", type=int, default=1009)

    pl = top.add_parser("pipeline").add_subparsers(dest="cmd", required=True)
    p = add(pl, "run", cmd_pipeline_run)
    p.add_argument("path")
    p.add_argument("--t", required=True)

    tr = top.add_parser("trace").add_subparsers(dest="cmd", required=True)
    add(tr, "verify", cmd_trace_verify).add_argument("path")

    ds = top.add_parser("ds").add_subparsers(dest="cmd", required=True)
    p = add(ds, "measure", cmd_ds_measure)
    p.add_argument("--psi", default="const:1/2")
    p.add_argument("--q-min", type=int, default=1)
    p.add_argument("--q-max", type=int, default=50)
    p = add(ds, "overlap", cmd_ds_overlap)
    p.add_argument("--psi", default="const:1/2")
    p.add_argument("--q-min", type=int, default=1)
    p.add_argument("--q-max", type=int, default=50)
    p = add(ds, "second-moment", cmd_ds_second_moment)
    p.add_argument("--psi", default="const:1/2")
    p.add_argument("--X", type=int, default=2)
    p.add_argument("--Y", type=int, default=None)
    p.add_argument("--cap", type=int, default=10**6)
    p.add_argument("--t", type=_rats, default=["1"], help="comma-separated t grid")
    p.add_argument("--anatomy-min", default="10")
    p = add(ds, "anatomy", cmd_ds_anatomy)
    p.add_argument("--x", type=_ints, default=[100])
    p.add_argument("--t", type=_rats, default=["1"])
    p.add_argument("--c", type=_rats, default=["1"])
    p = add(ds, "counterexample", cmd_ds_counterexample)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--x-scale", type=int, default=10**4)
    p = add(ds, "catlin", cmd_ds_catlin)
    p.add_argument("--psi", default="reciprocal")
    p.add_argument("--q", type=_ints, default=[6])
    p.add_argument("--n-cap", type=int, default=1000)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _config(args)
    except (ProfileError, ValueError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_PARSE
    try:
        return args.fn(args, cfg)
    except FileNotFoundError as exc:
        sys.stderr.write(f"missing file: {exc}\n")
        return EXIT_PARSE
    except (json.JSONDecodeError, GraphError, KeyError, TypeError) as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except PreconditionError as exc:
        sys.stderr.write(f"precondition: {exc}\n")
        return EXIT_PRECONDITION
    except ValueError as exc:
        sys.stderr.write(f"invalid argument: {exc}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    raise SystemExit(main())
