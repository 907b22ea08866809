"""Approximation functions psi: N -> Q_{>=0} with exact values."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping


@dataclass(frozen=True)
class PsiFunction:
    """An exactly evaluable psi.

    kind is one of ``constant`` (psi(q) = c), ``reciprocal`` (psi(q) = c/q),
    ``table`` (finite support, zero elsewhere), ``indicator`` (c on a finite set)
    or ``custom`` (a callable; ``decreasing_ratio`` declares psi(n)/n non-increasing).
    """

    kind: str
    c: Fraction = Fraction(0)
    table: Mapping[int, Fraction] = field(default_factory=dict)
    fn: Callable[[int], Fraction] | None = None
    decreasing_ratio: bool = False
    name: str = ""

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c) -> "PsiFunction":
        return cls("constant", c=Fraction(c))

    @classmethod
    def reciprocal(cls, c=1) -> "PsiFunction":
        return cls("reciprocal", c=Fraction(c))

    @classmethod
    def from_table(cls, values: Mapping[int, Fraction]) -> "PsiFunction":
        clean = {int(k): Fraction(v) for k, v in values.items() if Fraction(v) != 0}
        if any(v < 0 for v in clean.values()):
            raise ValueError("psi must be non-negative")
        return cls("table", table=dict(sorted(clean.items())))

    @classmethod
    def indicator(cls, support, c) -> "PsiFunction":
        return cls.from_table({int(n): Fraction(c) for n in support})

    @classmethod
    def custom(cls, fn: Callable[[int], Fraction], decreasing_ratio: bool = False, name: str = "") -> "PsiFunction":
        return cls("custom", fn=fn, decreasing_ratio=decreasing_ratio, name=name)

    @classmethod
    def parse(cls, text: str) -> "PsiFunction":
        """Parse ``const:1/2``, ``reciprocal``, ``reciprocal:3`` or ``table:path.json``."""
        head, _, arg = text.partition(":")
        if head in ("const", "constant"):
            return cls.constant(Fraction(arg))
        if head == "reciprocal":
            return cls.reciprocal(Fraction(arg) if arg else 1)
        if head == "table":
            with open(arg, encoding="utf-8") as fh:
                raw = json.load(fh)
            return cls.from_table({int(k): Fraction(v) for k, v in raw.items()})
        raise ValueError(f"unknown psi format {text!r}")

    # evaluation -------------------------------------------------------
    def __call__(self, q: int) -> Fraction:
        if q < 1:
            raise ValueError("psi is defined on positive integers")
        if self.kind == "constant":
            return self.c
        if self.kind == "reciprocal":
            return self.c / q
        if self.kind == "table":
            return self.table.get(q, Fraction(0))
        assert self.fn is not None
        v = Fraction(self.fn(q))
        if v < 0:
            raise ValueError("psi must be non-negative")
        return v

    @property
    def support(self) -> tuple[int, ...] | None:
        """Finite support if known, else None."""
        if self.kind == "table":
            return tuple(self.table)
        if self.kind in ("constant", "reciprocal") and self.c == 0:
            return ()
        return None

    def ratio_is_nonincreasing(self) -> bool:
        """True when psi(n)/n is non-increasing on all of N."""
        if self.kind in ("constant", "reciprocal"):
            return self.c >= 0
        return self.kind == "custom" and self.decreasing_ratio

    def max_on(self, lo: int, hi: int) -> Fraction:
        if self.kind == "constant":
            return self.c
        if self.kind == "reciprocal":
            return self.c / lo
        if self.kind == "table":
            vals = [v for k, v in self.table.items() if lo <= k <= hi]
            return max(vals, default=Fraction(0))
        return max((self(q) for q in range(lo, hi + 1)), default=Fraction(0))

    def describe(self) -> str:
        if self.kind == "constant":
            return f"const:{self.c}"
        if self.kind == "reciprocal":
            return f"reciprocal:{self.c}"
        if self.kind == "table":
            return f"table[{len(self.table)}]"
        return f"custom:{self.name}"
