"""Independent reference implementations used as test oracles.

They work on plain integers and mpmath floats, never on the package's
factorization or interval code paths.
"""

from fractions import Fraction

import mpmath


def int_valuation(n: int, p: int) -> int:
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def brute_conditions(G) -> dict[str, bool]:
    """Truth value of each GCD-graph condition, from the integer values."""
    val = {i: G.nums[i].value for i in G.V | G.W}
    a = b = c = True
    for p in G.P:
        f, g = G.f[p], G.g[p]
        a &= all(int_valuation(val[v], p) >= f for v in G.V)
        a &= all(int_valuation(val[w], p) >= g for w in G.W)
        for v, w in G.E:
            # min valuation of p in v and w is the valuation of p in gcd(v, w)
            import math

            b &= int_valuation(math.gcd(val[v], val[w]), p) == min(f, g)
        if f != g:
            c &= all(int_valuation(val[v], p) == f for v in G.V)
            c &= all(int_valuation(val[w], p) == g for w in G.W)
    return {"5a": a, "5b": b, "5c": c}


def mp_quality(G, profile, dps: int = 80):
    """q(G) straight from its definition, in mpmath at ``dps`` digits."""
    with mpmath.workdps(dps):
        muV = sum(mpmath.mpf(Fraction(G.mu[v]).numerator) / Fraction(G.mu[v]).denominator for v in G.V)
        muW = sum(mpmath.mpf(Fraction(G.mu[w]).numerator) / Fraction(G.mu[w]).denominator for w in G.W)
        muE = mpmath.mpf(0)
        for v, w in G.E:
            x = G.mu[v] * G.mu[w]
            muE += mpmath.mpf(x.numerator) / x.denominator
        if muV == 0 or muW == 0:
            return mpmath.mpf(0)
        d = profile.density_exponent
        te = mpmath.mpf(profile.trans_exponent.numerator) / profile.trans_exponent.denominator
        q = (muE / (muV * muW)) ** d * muV * muW
        for p in G.P:
            f, g = G.f[p], G.g[p]
            q *= mpmath.mpf(p) ** abs(f - g)
            if f == g >= 1:
                q /= (1 - mpmath.mpf(1) / p) ** 2
            q /= (1 - mpmath.mpf(p) ** (-te)) ** d
        return q


def mp_contains(iv, x, rel: float = 1e-40) -> bool:
    lo = mpmath.mpf(iv.lo.numerator) / iv.lo.denominator
    hi = mpmath.mpf(iv.hi.numerator) / iv.hi.denominator
    slack = abs(x) * rel
    return lo - slack <= x <= hi + slack
