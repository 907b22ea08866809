"""Inequality rows, step certificates and traces, with re-checking from serialized data."""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Union

from .intervals import (
    DEFAULT_PRECISION,
    PRECISION_CEILING,
    PowerOfTen,
    RationalInterval,
    as_interval,
)

Bound = Union[RationalInterval, PowerOfTen]
RELATIONS = (">", ">=", "<", "<=")


class InternalInconsistency(RuntimeError):
    """No branch of a dichotomy certified although the preconditions held."""

    def __init__(self, message: str, certificate: "StepCertificate | None" = None):
        super().__init__(message)
        self.certificate = certificate


class Indeterminate(RuntimeError):
    """An inequality stayed unresolved at the precision ceiling."""

    def __init__(self, row: "Inequality"):
        super().__init__(f"indeterminate inequality {row.name}")
        self.row = row


class PreconditionError(ValueError):
    pass


def _bound_to_json(b: Bound) -> dict:
    return b.to_json()


def _bound_from_json(d: dict) -> Bound:
    if "pow10" in d:
        return PowerOfTen.from_json(d)
    return RationalInterval.from_json(d)


def _lo(b: Bound) -> Fraction | PowerOfTen:
    return b if isinstance(b, PowerOfTen) else b.lo


def _hi(b: Bound) -> Fraction | PowerOfTen:
    return b if isinstance(b, PowerOfTen) else b.hi


def _cmp(a: Fraction | PowerOfTen, b: Fraction | PowerOfTen) -> int:
    """Sign of a - b; at most one side may be symbolic unless both are."""
    if isinstance(a, PowerOfTen) and isinstance(b, PowerOfTen):
        return (a.exponent > b.exponent) - (a.exponent < b.exponent)
    if isinstance(b, PowerOfTen):
        return b.compare(a)
    if isinstance(a, PowerOfTen):
        return -a.compare(b)
    return (a > b) - (a < b)


def relation_holds(lhs: Bound, rel: str, rhs: Bound) -> bool:
    """True iff the relation is certain for every point of the two enclosures."""
    try:
        if rel == ">":
            return _cmp(_lo(lhs), _hi(rhs)) > 0
        if rel == ">=":
            return _cmp(_lo(lhs), _hi(rhs)) >= 0
        if rel == "<":
            return _cmp(_hi(lhs), _lo(rhs)) < 0
        if rel == "<=":
            return _cmp(_hi(lhs), _lo(rhs)) <= 0
    except ArithmeticError:
        return False
    raise ValueError(f"unknown relation {rel!r}")


def relation_fails(lhs: Bound, rel: str, rhs: Bound) -> bool:
    """True iff the relation is certainly false."""
    neg = {">": "<=", ">=": "<", "<": ">=", "<=": ">"}[rel]
    return relation_holds(lhs, neg, rhs)


@dataclass(frozen=True)
class Inequality:
    name: str
    lhs: Bound
    rel: str
    rhs: Bound
    certified: bool
    bits: int = DEFAULT_PRECISION

    def recheck(self) -> bool:
        return relation_holds(self.lhs, self.rel, self.rhs)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "lhs": _bound_to_json(self.lhs),
            "rel": self.rel,
            "rhs": _bound_to_json(self.rhs),
            "certified": self.certified,
            "bits": self.bits,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Inequality":
        if d["rel"] not in RELATIONS:
            raise ValueError(f"unknown relation {d['rel']!r}")
        return cls(d["name"], _bound_from_json(d["lhs"]), d["rel"], _bound_from_json(d["rhs"]),
                   bool(d["certified"]), int(d.get("bits", DEFAULT_PRECISION)))


BoundFn = Callable[[int], Any]

_CEILING = [PRECISION_CEILING]


def current_ceiling() -> int:
    return _CEILING[-1]


@contextmanager
def precision_ceiling(bits: int):
    """Temporarily raise or lower the refinement ceiling used by :func:`evaluate`."""
    _CEILING.append(int(bits))
    try:
        yield
    finally:
        _CEILING.pop()


def _as_bound(x) -> Bound:
    if isinstance(x, PowerOfTen):
        return x
    return as_interval(x)


def evaluate(name: str, lhs: BoundFn | Any, rel: str, rhs: BoundFn | Any,
             precision: int = DEFAULT_PRECISION, ceiling: int | None = None) -> Inequality:
    """Resolve ``lhs rel rhs``, doubling precision on overlap.

    Returns a row with ``certified`` True when the relation holds and False when it
    certainly fails; raises :class:`Indeterminate` if the ceiling is reached first.
    """
    lf = lhs if callable(lhs) else (lambda _b, _x=lhs: _x)
    rf = rhs if callable(rhs) else (lambda _b, _x=rhs: _x)
    ceiling = current_ceiling() if ceiling is None else ceiling
    bits = precision
    while True:
        lo, hi = _as_bound(lf(bits)), _as_bound(rf(bits))
        if relation_holds(lo, rel, hi):
            return Inequality(name, lo, rel, hi, True, bits)
        if relation_fails(lo, rel, hi):
            return Inequality(name, lo, rel, hi, False, bits)
        if bits >= ceiling:
            raise Indeterminate(Inequality(name, lo, rel, hi, False, bits))
        bits = min(2 * bits, ceiling)


def require(name: str, lhs, rel: str, rhs, precision: int = DEFAULT_PRECISION,
            ceiling: int | None = None) -> Inequality:
    """Like :func:`evaluate` but a certainly-false relation is an internal inconsistency."""
    row = evaluate(name, lhs, rel, rhs, precision, ceiling)
    if not row.certified:
        raise InternalInconsistency(f"required inequality {name} fails")
    return row


@dataclass
class StepCertificate:
    lemma: str
    input_digest: str
    output_digest: str
    branch: str
    inequalities: list[Inequality] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    structural: dict = field(default_factory=dict)
    children: list["StepCertificate"] = field(default_factory=list)
    stage: str = ""

    def add(self, row: Inequality) -> Inequality:
        self.inequalities.append(row)
        return row

    def all_rows(self):
        yield from self.inequalities
        for c in self.children:
            yield from c.all_rows()

    def is_valid(self) -> bool:
        """Every row certified and re-checks, every structural flag true."""
        for row in self.inequalities:
            if not (row.certified and row.recheck()):
                return False
        if not all(bool(v) for v in self.structural.values()):
            return False
        return all(c.is_valid() for c in self.children)

    def to_json(self) -> dict:
        out = {
            "lemma": self.lemma,
            "input_digest": self.input_digest,
            "output_digest": self.output_digest,
            "branch": self.branch,
            "inequalities": [r.to_json() for r in self.inequalities],
            "params": self.params,
            "structural": self.structural,
            "children": [c.to_json() for c in self.children],
        }
        if self.stage:
            out["stage"] = self.stage
        return out

    @classmethod
    def from_json(cls, d: dict) -> "StepCertificate":
        return cls(
            lemma=d["lemma"],
            input_digest=d["input_digest"],
            output_digest=d["output_digest"],
            branch=d["branch"],
            inequalities=[Inequality.from_json(r) for r in d.get("inequalities", [])],
            params=dict(d.get("params", {})),
            structural=dict(d.get("structural", {})),
            children=[cls.from_json(c) for c in d.get("children", [])],
            stage=d.get("stage", ""),
        )


def chain_ok(certs: list[StepCertificate]) -> bool:
    return all(a.output_digest == b.input_digest for a, b in zip(certs, certs[1:]))


def dumps(obj: dict) -> str:
    """Canonical JSON used for every emitted artifact."""
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=True) + "\n"
