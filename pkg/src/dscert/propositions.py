"""Iteration propositions: one flat large prime, one sharp large prime, all small primes."""

from __future__ import annotations

from .certificates import InternalInconsistency, PreconditionError, require
from .graph import GcdGraph, is_subgraph, r_flat, r_set, r_sharp, subgraph_quality_ratio
from .intervals import DEFAULT_PRECISION
from .lemmas import (
    INCREMENT,
    StepResult,
    _gain_fn,
    _new_cert,
    _ratio_fn,
    main_step,
    main_step_sharp,
    small_prime_iteration,
)
from .profile import PAPER, ConstantsProfile


def _large_only(G: GcdGraph, profile: ConstantsProfile) -> bool:
    return all(p > profile.small_prime_bound for p in r_set(G))


def prop_flat(G: GcdGraph, profile: ConstantsProfile = PAPER, precision: int = DEFAULT_PRECISION) -> StepResult:
    """Fix the smallest flat prime; certified gain at least 2^N."""
    if G.delta <= 0:
        raise PreconditionError("edge density must be positive")
    if not _large_only(G, profile):
        raise PreconditionError("prop_flat needs R(G) inside the large primes")
    flat = r_flat(G, profile)
    if not flat:
        raise PreconditionError("prop_flat needs R_flat(G) non-empty")
    p = min(flat)
    ms = main_step(G, p, profile, precision)
    if ms.branch != INCREMENT:
        raise InternalInconsistency(f"prop_flat: flat prime {p} reported as concentrated")
    G1 = ms.graph
    n = sum(1 for q in G1.P - G.P if G1.f[q] != G1.g[q])
    cert = _new_cert("prop_flat", G, G1, INCREMENT, p=p, N=n)
    cert.children = [ms.cert]
    cert.add(require("min(1,delta'/delta)*q'/q>=2^N", _gain_fn(G1, G, profile), ">=", 2**n, precision))
    cert.structural.update(
        is_subgraph=is_subgraph(G1, G),
        r_set_strict=r_set(G1) < r_set(G),
        primes_grow=G.P < G1.P <= G.P | r_set(G),
    )
    return StepResult(INCREMENT, G1, cert, {"p": p, "N": n})


def prop_sharp(G: GcdGraph, profile: ConstantsProfile = PAPER, precision: int = DEFAULT_PRECISION) -> StepResult:
    """Fix the smallest sharp prime without losing quality."""
    if G.delta <= 0:
        raise PreconditionError("edge density must be positive")
    if not _large_only(G, profile):
        raise PreconditionError("prop_sharp needs R(G) inside the large primes")
    if r_flat(G, profile):
        raise PreconditionError("prop_sharp needs R_flat(G) empty")
    sharp = r_sharp(G, profile)
    if not sharp:
        raise PreconditionError("prop_sharp needs R_sharp(G) non-empty")
    p = min(sharp)
    ms = main_step_sharp(G, p, profile, precision)
    G1 = ms.graph
    cert = _new_cert("prop_sharp", G, G1, ms.branch, p=p)
    cert.children = [ms.cert]
    cert.add(require("q'/q>=1", _ratio_fn(G1, G, profile), ">=", 1, precision))
    cert.structural.update(
        is_subgraph=is_subgraph(G1, G),
        r_set_strict=r_set(G1) < r_set(G),
        primes_grow=G.P < G1.P <= G.P | r_set(G),
    )
    return StepResult(ms.branch, G1, cert, {"p": p})


def prop_small(G: GcdGraph, profile: ConstantsProfile = PAPER, precision: int = DEFAULT_PRECISION) -> StepResult:
    """Fix every small prime of R(G), smallest first, losing at most the stage floor."""
    if G.P:
        raise PreconditionError("prop_small needs an empty prime set")
    if G.delta <= 0:
        raise PreconditionError("edge density must be positive")
    B = profile.small_prime_bound
    H = G
    children = []
    while True:
        small = sorted(p for p in r_set(H) if p <= B)
        if not small:
            break
        it = small_prime_iteration(H, small[0], profile, precision)
        children.append(it.cert)
        H = it.graph
    F = profile.stage_floor
    cert = _new_cert("prop_small", G, H, "SMALL_PRIMES", primes=sorted(H.P))
    cert.children = children
    cert.add(require("min(1,delta'/delta)*q'/q>=F", _gain_fn(H, G, profile), ">=", F, precision))
    cert.add(require("q'/q>=F", _ratio_fn(H, G, profile), ">=", F, precision))
    dr = H.delta / G.delta
    cert.add(require("delta'q'/(delta q)>=F", lambda b: subgraph_quality_ratio(H, G, profile, b) * dr,
                     ">=", F, precision))
    cert.structural.update(
        is_subgraph=is_subgraph(H, G),
        primes_small=all(p <= B for p in H.P),
        r_set_large=_large_only(H, profile),
    )
    return StepResult("SMALL_PRIMES", H, cert)

