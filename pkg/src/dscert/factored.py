"""Integers carried as prime factorizations, plus the small number-theoretic primitives built on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import gmpy2

Q = Fraction

#: Miller-Rabin rounds used when a prime enters a factorization.
DEFAULT_PRIMALITY_ROUNDS = 25
#: Trial-division ceiling for :meth:`FactoredInt.from_int`.
TRIAL_DIVISION_BOUND = 10**7
#: Largest number of decimal digits :attr:`FactoredInt.value` will materialize.
MAX_MAGNITUDE_DIGITS = 200_000


class FactorizationError(ValueError):
    pass


@lru_cache(maxsize=None)
def is_probable_prime(n: int, rounds: int = DEFAULT_PRIMALITY_ROUNDS) -> bool:
    return n >= 2 and bool(gmpy2.is_prime(n, rounds))


def next_prime(n: int) -> int:
    """Smallest probable prime strictly greater than ``n``."""
    return int(gmpy2.next_prime(n))


def _istr(n: int) -> str:
    # gmpy2 conversion is not subject to the interpreter's int-to-str digit cap
    return str(gmpy2.mpz(n))


def qstr(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{_istr(x.numerator)}/{_istr(x.denominator)}"


def qparse(s: str | int) -> Fraction:
    if isinstance(s, int):
        return Fraction(s)
    if not isinstance(s, str):
        raise TypeError(f"expected rational string, got {type(s).__name__}")
    num, sep, den = s.strip().partition("/")
    if len(s) > 4000:
        return Fraction(int(gmpy2.mpz(num)), int(gmpy2.mpz(den)) if sep else 1)
    return Fraction(s)


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(range(p * p, n + 1, p)))
    return [i for i in range(n + 1) if sieve[i]]


@dataclass(frozen=True, eq=False)
class FactoredInt:
    """A positive integer stored as ``((p1, e1), (p2, e2), ...)`` with p1 < p2 < ...

    Equality and hashing go through the factor tuple. Primality of each listed
    prime is checked once (and cached) when the value is built.
    """

    factors: tuple[tuple[int, int], ...] = ()
    _vals: Mapping[int, int] = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        facs = tuple((int(p), int(e)) for p, e in self.factors)
        prev = 1
        for p, e in facs:
            if p <= prev:
                raise FactorizationError("primes must be strictly increasing")
            if e < 1:
                raise FactorizationError(f"exponent of {p} must be >= 1")
            if not is_probable_prime(p):
                raise FactorizationError(f"{p} is not prime")
            prev = p
        object.__setattr__(self, "factors", facs)
        object.__setattr__(self, "_vals", dict(facs))

    # construction -----------------------------------------------------
    @classmethod
    def one(cls) -> "FactoredInt":
        return _ONE

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "FactoredInt":
        acc: dict[int, int] = {}
        for p, e in pairs:
            if e:
                acc[int(p)] = acc.get(int(p), 0) + int(e)
        return cls(tuple(sorted(acc.items())))

    @classmethod
    def from_int(cls, n: int, bound: int = TRIAL_DIVISION_BOUND) -> "FactoredInt":
        """Factor ``n`` by trial division; refuses cofactors that are not prime below ``bound``."""
        if n < 1:
            raise FactorizationError("only positive integers are representable")
        out = []
        m = n
        d = 2
        while d * d <= m:
            if d > bound:
                raise FactorizationError(f"trial division bound {bound} exceeded for {n}")
            if m % d == 0:
                e = 0
                while m % d == 0:
                    m //= d
                    e += 1
                out.append((d, e))
            d += 1 if d == 2 else 2
        if m > 1:
            out.append((m, 1))
        return cls(tuple(out))

    @classmethod
    def prime(cls, p: int, e: int = 1) -> "FactoredInt":
        return cls(((p, e),))

    # queries ----------------------------------------------------------
    def valuation(self, p: int) -> int:
        return self._vals.get(p, 0)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def value(self) -> int:
        digits = sum(e * len(str(p)) for p, e in self.factors)
        if digits > MAX_MAGNITUDE_DIGITS:
            raise OverflowError(f"refusing to materialize an integer of ~{digits} digits")
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    def bit_length_bounds(self) -> tuple[int, int]:
        """Bounds (lo, hi) with 2**lo <= n < 2**hi, computed without expansion."""
        lo = sum(e * (p.bit_length() - 1) for p, e in self.factors)
        hi = sum(e * p.bit_length() for p, e in self.factors)
        return lo, max(hi, 1)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.factors)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FactoredInt) and self.factors == other.factors

    def __hash__(self) -> int:
        return hash(self.factors)

    def __mul__(self, other: "FactoredInt") -> "FactoredInt":
        return mul(self, other)

    def __repr__(self) -> str:
        if not self.factors:
            return "FactoredInt(1)"
        body = "*".join(f"{p}^{e}" if e > 1 else str(p) for p, e in self.factors)
        return f"FactoredInt({body})"

    # codec ------------------------------------------------------------
    def to_json(self) -> list[list]:
        return [[str(p), e] for p, e in self.factors]

    @classmethod
    def from_json(cls, data: Sequence) -> "FactoredInt":
        if not isinstance(data, (list, tuple)):
            raise FactorizationError("factor list must be an array")
        pairs = []
        for item in data:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise FactorizationError("each factor must be a [prime, exponent] pair")
            p, e = item
            pairs.append((int(p), int(e)))
        return cls(tuple(pairs))


_ONE = FactoredInt(())


def _merge(a: FactoredInt, b: FactoredInt, op) -> FactoredInt:
    ka, kb = a._vals, b._vals
    out = []
    for p in sorted(set(ka) | set(kb)):
        e = op(ka.get(p, 0), kb.get(p, 0))
        if e:
            out.append((p, e))
    res = FactoredInt.__new__(FactoredInt)
    object.__setattr__(res, "factors", tuple(out))
    object.__setattr__(res, "_vals", dict(out))
    return res


def mul(a: FactoredInt, b: FactoredInt) -> FactoredInt:
    return _merge(a, b, lambda x, y: x + y)


def gcd(a: FactoredInt, b: FactoredInt) -> FactoredInt:
    return _merge(a, b, min)


def lcm(a: FactoredInt, b: FactoredInt) -> FactoredInt:
    return _merge(a, b, max)


def divide_exact(a: FactoredInt, b: FactoredInt) -> FactoredInt:
    """a / b, which must be an integer."""
    for p, e in b:
        if a.valuation(p) < e:
            raise FactorizationError("divisor does not divide")
    return _merge(a, b, lambda x, y: x - y)


def valuation(n: FactoredInt, p: int) -> int:
    return n.valuation(p)


def phi_over_n(n: FactoredInt) -> Fraction:
    out = Fraction(1)
    for p, _ in n:
        out *= Fraction(p - 1, p)
    return out


def euler_phi(n: FactoredInt) -> int:
    out = 1
    for p, e in n:
        out *= (p - 1) * p ** (e - 1)
    return out


def differing_primes(a: FactoredInt, b: FactoredInt) -> list[int]:
    """Primes dividing ab/gcd(a,b)^2, i.e. primes whose valuations in a and b differ."""
    va, vb = a._vals, b._vals
    return sorted(p for p in set(va) | set(vb) if va.get(p, 0) != vb.get(p, 0))


def reciprocal_sum(primes: Iterable[int]) -> Fraction:
    """Exact sum of 1/p, computed with a single common denominator."""
    ps = list(primes)
    if not ps:
        return Fraction(0)
    den = 1
    for p in ps:
        den *= p
    num = sum(den // p for p in ps)
    return Fraction(num, den)


def l_t(a: FactoredInt, b: FactoredInt, t: Fraction | int) -> Fraction:
    """Sum of 1/p over primes p >= t dividing ab/gcd(a,b)^2."""
    t = Fraction(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    return reciprocal_sum(p for p in differing_primes(a, b) if p >= t)


def m_of(q: FactoredInt, r: FactoredInt, psi) -> Fraction:
    """max(r*psi(q), q*psi(r))."""
    qv, rv = q.value, r.value
    return max(rv * psi(qv), qv * psi(rv))
