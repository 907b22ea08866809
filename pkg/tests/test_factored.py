import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dscert.factored import (
    FactoredInt,
    FactorizationError,
    euler_phi,
    gcd,
    l_t,
    lcm,
    m_of,
    mul,
    next_prime,
    phi_over_n,
    qparse,
    qstr,
    valuation,
)
from dscert.psi import PsiFunction

F = FactoredInt.from_int
small = st.integers(min_value=1, max_value=10**6)


def test_mul_examples():
    assert mul(F(1), F(1)) == F(1)
    assert mul(F(12), F(10)) == F(120)
    assert mul(F(12), F(10)).factors == ((2, 3), (3, 1), (5, 1))


def test_mul_large_primes():
    p = next_prime(10**40 + 120)
    q = next_prime(p)
    pq = FactoredInt.from_pairs([(p, 1), (q, 1)])
    sq = mul(pq, pq)
    assert sq.factors == ((p, 2), (q, 2))


def test_gcd_lcm_examples():
    assert gcd(F(12), F(12)) == F(12)
    assert gcd(F(12), F(10)) == F(2)
    assert gcd(F(120), F(18)) == F(6)
    assert lcm(F(12), F(10)) == F(60)


def test_valuation_examples():
    assert valuation(F(1), 2) == 0
    assert valuation(F(12), 2) == 2
    assert valuation(F(12), 5) == 0


def test_phi_over_n_examples():
    assert phi_over_n(F(1)) == 1
    assert phi_over_n(F(12)) == Fraction(1, 3)
    assert phi_over_n(F(30)) == Fraction(4, 15)


def test_l_t_examples():
    assert l_t(F(7), F(7), 1) == 0
    assert l_t(F(2), F(3), 1) == Fraction(5, 6)
    assert l_t(F(2), F(3), 3) == Fraction(1, 3)
    with pytest.raises(ValueError):
        l_t(F(2), F(3), Fraction(1, 2))


def test_m_of_examples():
    assert m_of(F(4), F(6), PsiFunction.constant(0)) == 0
    assert m_of(F(4), F(6), PsiFunction.constant(Fraction(1, 2))) == 3
    assert m_of(F(4), F(8), PsiFunction.constant(Fraction(1, 4))) == 2


def test_construction_rejects_composites_and_bad_order():
    with pytest.raises(FactorizationError):
        FactoredInt.from_pairs([(4, 1)])
    with pytest.raises((FactorizationError, ValueError)):
        FactoredInt(((3, 1), (2, 1)))


def test_json_roundtrip_and_rationals():
    n = FactoredInt.from_pairs([(2, 3), (next_prime(10**50), 2)])
    assert FactoredInt.from_json(n.to_json()) == n
    assert qstr(Fraction(-3, 6)) == "-1/2"
    assert qparse("4/6") == Fraction(2, 3)


@given(small, small)
def test_gcd_times_lcm(a, b):
    A, B = F(a), F(b)
    assert mul(gcd(A, B), lcm(A, B)) == mul(A, B)
    assert gcd(A, B).value == math.gcd(a, b)
    assert lcm(A, B).value == math.lcm(a, b)


@given(small, small, st.integers(min_value=1, max_value=50))
def test_l_t_symmetric_and_monotone(a, b, t):
    A, B = F(a), F(b)
    assert l_t(A, B, t) == l_t(B, A, t)
    assert l_t(A, B, t + 1) <= l_t(A, B, t)


@given(small, small)
def test_phi_multiplicative_on_coprime(a, b):
    if math.gcd(a, b) == 1:
        assert phi_over_n(mul(F(a), F(b))) == phi_over_n(F(a)) * phi_over_n(F(b))


@given(small)
def test_factoring_oracle(n):
    x = F(n)
    assert x.value == n
    phi = sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1) if n < 2000 else None
    if phi is not None:
        assert euler_phi(x) == phi
    for p, e in x:
        assert n % p**e == 0 and n % p ** (e + 1) != 0
