"""Rational interval arithmetic with outward rounding and certified root enclosures."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .factored import qparse, qstr

DEFAULT_PRECISION = 128
PRECISION_CEILING = 4096
#: Rounding is skipped while denominators stay this many bits above the working precision.
ROUNDING_SLACK_BITS = 16384


class Ordering(enum.Enum):
    LESS = "LESS"
    GREATER = "GREATER"
    OVERLAP = "OVERLAP"


def iroot(a: int, n: int) -> int:
    """floor(a ** (1/n)) for integers a >= 0, n >= 1, by Newton iteration."""
    if a < 0 or n < 1:
        raise ValueError("iroot needs a >= 0 and n >= 1")
    if a < 2 or n == 1:
        return a
    if n == 2:
        return math.isqrt(a)
    x = 1 << -(-a.bit_length() // n)  # power of two above the root
    while True:
        y = ((n - 1) * x + a // x ** (n - 1)) // n
        if y >= x:
            break
        x = y
    while x**n > a:
        x -= 1
    while (x + 1) ** n <= a:
        x += 1
    return x


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _log2_floor(x: Fraction) -> int:
    """floor(log2 x) for x > 0."""
    e = x.numerator.bit_length() - x.denominator.bit_length()
    if Fraction(2) ** e > x:
        e -= 1
    return e


def _round_down(x: Fraction, bits: int) -> Fraction:
    if x == 0 or x.denominator.bit_length() <= bits + ROUNDING_SLACK_BITS:
        return x
    s = bits - _log2_floor(abs(x))
    return Fraction(_floor(x * Fraction(2) ** s)) / Fraction(2) ** s


def _round_up(x: Fraction, bits: int) -> Fraction:
    if x == 0 or x.denominator.bit_length() <= bits + ROUNDING_SLACK_BITS:
        return x
    s = bits - _log2_floor(abs(x))
    return Fraction(_ceil(x * Fraction(2) ** s)) / Fraction(2) ** s


@dataclass(frozen=True)
class RationalInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x) -> "RationalInterval":
        x = Fraction(x)
        return cls(x, x)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def contains_interval(self, other: "RationalInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "RationalInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def rounded(self, bits: int) -> "RationalInterval":
        return RationalInterval(_round_down(self.lo, bits), _round_up(self.hi, bits))

    # arithmetic (exact on endpoints; callers round when sizes grow)
    def __add__(self, other) -> "RationalInterval":
        o = as_interval(other)
        return RationalInterval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self) -> "RationalInterval":
        return RationalInterval(-self.hi, -self.lo)

    def __sub__(self, other) -> "RationalInterval":
        return self + (-as_interval(other))

    def __rsub__(self, other) -> "RationalInterval":
        return as_interval(other) - self

    def __mul__(self, other) -> "RationalInterval":
        o = as_interval(other)
        if self.lo >= 0 and o.lo >= 0:
            return RationalInterval(self.lo * o.lo, self.hi * o.hi)
        c = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return RationalInterval(min(c), max(c))

    __rmul__ = __mul__

    def reciprocal(self) -> "RationalInterval":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval contains zero")
        return RationalInterval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other) -> "RationalInterval":
        return self * as_interval(other).reciprocal()

    def __rtruediv__(self, other) -> "RationalInterval":
        return as_interval(other) * self.reciprocal()

    def __pow__(self, n: int) -> "RationalInterval":
        if not isinstance(n, int):
            raise TypeError("use rpow for non-integer exponents")
        if n < 0:
            return (self**-n).reciprocal()
        if self.lo >= 0:
            return RationalInterval(self.lo**n, self.hi**n)
        if n % 2 == 1:
            return RationalInterval(self.lo**n, self.hi**n)
        m = max(abs(self.lo), abs(self.hi))
        lo = Fraction(0) if self.lo <= 0 <= self.hi else min(abs(self.lo), abs(self.hi)) ** n
        return RationalInterval(lo, m**n)

    def min_with(self, other) -> "RationalInterval":
        o = as_interval(other)
        return RationalInterval(min(self.lo, o.lo), min(self.hi, o.hi))

    def to_json(self) -> dict:
        return {"lo": qstr(self.lo), "hi": qstr(self.hi)}

    @classmethod
    def from_json(cls, data: dict) -> "RationalInterval":
        return cls(qparse(data["lo"]), qparse(data["hi"]))

    def __repr__(self) -> str:
        if self.is_point:
            return f"[{self.lo}]"
        return f"[{float(self.lo):.6g}, {float(self.hi):.6g}]"


def as_interval(x) -> RationalInterval:
    if isinstance(x, RationalInterval):
        return x
    return RationalInterval.point(x)


def compare_certified(x, y) -> Ordering:
    x, y = as_interval(x), as_interval(y)
    if x.lo > y.hi:
        return Ordering.GREATER
    if x.hi < y.lo:
        return Ordering.LESS
    return Ordering.OVERLAP


def interval_product(items: Iterable[RationalInterval], bits: int) -> RationalInterval:
    out = RationalInterval.point(1)
    for it in items:
        out = (out * it).rounded(bits + 16)
    return out


# roots -----------------------------------------------------------------
def _exact_root(x: Fraction, n: int) -> Fraction | None:
    a, b = x.numerator, x.denominator
    ra, rb = iroot(a, n), iroot(b, n)
    if ra**n == a and rb**n == b:
        return Fraction(ra, rb)
    return None


def root_enclosure(x, n: int, bits: int = DEFAULT_PRECISION) -> RationalInterval:
    """[lo, hi] with lo**n <= x <= hi**n and hi - lo <= 2**-bits * lo, for rational x > 0."""
    x = Fraction(x)
    if x <= 0:
        if x == 0:
            return RationalInterval.point(0)
        raise ValueError("root of a negative number")
    if n == 1:
        return RationalInterval.point(x)
    ex = _exact_root(x, n)
    if ex is not None:
        return RationalInterval.point(ex)
    # choose a dyadic grid 2**-s so the scaled root carries >= bits+2 bits
    s = bits + 2 - _log2_floor(x) // n
    scaled = x * Fraction(2) ** (n * s)
    r_lo = iroot(_floor(scaled), n)
    r_hi = r_lo if r_lo**n >= scaled else r_lo + 1
    if Fraction(r_hi) ** n < scaled:
        r_hi += 1
    den = Fraction(2) ** s
    return RationalInterval(r_lo / den, r_hi / den)


def root30_enclosure(p: int, precision_bits: int = DEFAULT_PRECISION) -> RationalInterval:
    if p < 2:
        raise ValueError("root30_enclosure needs p >= 2")
    return _root30_cached(int(p), int(precision_bits))


@lru_cache(maxsize=4096)
def _root30_cached(p: int, bits: int) -> RationalInterval:
    return root_enclosure(Fraction(p), 30, bits)


def rpow(x, e, bits: int = DEFAULT_PRECISION) -> RationalInterval:
    """Enclosure of x**e for x (a positive rational or interval) and rational e."""
    e = Fraction(e)
    iv = as_interval(x)
    if iv.lo < 0:
        raise ValueError("rpow needs a non-negative base")
    if e == 0:
        return RationalInterval.point(1)
    if e < 0:
        return rpow(iv, -e, bits).reciprocal().rounded(bits + 8)
    a, n = e.numerator, e.denominator
    lo = root_enclosure(iv.lo**a, n, bits).lo if iv.lo > 0 else Fraction(0)
    hi = root_enclosure(iv.hi**a, n, bits).hi if iv.hi > 0 else Fraction(0)
    return RationalInterval(lo, hi).rounded(bits + 8)


def p_pow_31_30(p: int, bits: int = DEFAULT_PRECISION) -> RationalInterval:
    """Enclosure of p**(31/30)."""
    return (root30_enclosure(p, bits) * p).rounded(bits + 8)


def one_minus_p_trans(p: int, bits: int = DEFAULT_PRECISION, trans_exponent=Fraction(31, 30)) -> RationalInterval:
    """Enclosure of 1 - p**(-trans_exponent)."""
    te = Fraction(trans_exponent)
    if te == Fraction(31, 30):
        x = p_pow_31_30(p, bits)
    else:
        x = rpow(Fraction(p), te, bits)
    return (1 - x.reciprocal()).rounded(bits + 8)


def quality_factor_enclosure(p: int, precision_bits: int = DEFAULT_PRECISION,
                             density_exponent: int = 10, trans_exponent=Fraction(31, 30)) -> RationalInterval:
    """Enclosure of (1 - p**(-31/30))**(-10); the lower end is > 1."""
    if p < 2:
        raise ValueError("quality_factor_enclosure needs p >= 2")
    return _qf_cached(int(p), int(precision_bits), int(density_exponent), Fraction(trans_exponent))


@lru_cache(maxsize=4096)
def _qf_cached(p: int, bits: int, dexp: int, te: Fraction) -> RationalInterval:
    # enclose x = p**(-te), then y = (1 - x)**(-dexp) - 1 with rounding relative to y itself,
    # so the lower end stays strictly above 1 even when x is far below 2**-bits
    if te == Fraction(31, 30):
        xp = p_pow_31_30(p, bits + 8)
    else:
        xp = rpow(Fraction(p), te, bits + 8)
    x = xp.reciprocal()
    y_lo = 1 / (1 - x.lo) ** dexp - 1
    y_hi = 1 / (1 - x.hi) ** dexp - 1
    return RationalInterval(1 + _round_down(y_lo, bits + 8), 1 + _round_up(y_hi, bits + 8))


def quality_factor_product(primes: Iterable[int], bits: int = DEFAULT_PRECISION,
                           density_exponent: int = 10, trans_exponent=Fraction(31, 30)) -> RationalInterval:
    return interval_product(
        (quality_factor_enclosure(p, bits, density_exponent, trans_exponent) for p in sorted(primes)), bits
    )


# symbolic powers of ten ------------------------------------------------
_LOG2_10_LO = Fraction(3321928094887362, 10**15)  # < log2(10)
_LOG2_10_HI = Fraction(3321928094887363, 10**15)  # > log2(10)
_EXPAND_LIMIT = 100_000


@dataclass(frozen=True)
class PowerOfTen:
    """The number 10**exponent, never expanded when |exponent| is large."""

    exponent: int

    def exact(self) -> Fraction | None:
        if abs(self.exponent) <= _EXPAND_LIMIT:
            return Fraction(10) ** self.exponent
        return None

    def compare(self, x: Fraction) -> int:
        """Sign of (x - 10**exponent); x must be a rational."""
        x = Fraction(x)
        ex = self.exact()
        if ex is not None:
            return (x > ex) - (x < ex)
        if x <= 0:
            return -1
        # 2**l2 <= x < 2**(l2+1); 10**e lies in (2**(e*lo), 2**(e*hi)) ranges
        l2 = _log2_floor(x)
        e = self.exponent
        t_lo, t_hi = sorted((e * _LOG2_10_LO, e * _LOG2_10_HI))
        if l2 >= t_hi:
            return 1
        if l2 + 1 <= t_lo:
            return -1
        raise ArithmeticError("symbolic comparison too close to call")

    def __mul__(self, other: "PowerOfTen") -> "PowerOfTen":
        return PowerOfTen(self.exponent + other.exponent)

    def to_json(self) -> dict:
        return {"pow10": str(self.exponent)}

    @classmethod
    def from_json(cls, data: dict) -> "PowerOfTen":
        return cls(int(data["pow10"]))
