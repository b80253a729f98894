"""Independent reference values.

Nothing here calls into qstieltjes.  Products are multiplied out to a fixed
long length, sums are taken in the reverse order, and everything runs in a
separate mpmath context at twice the working precision.
"""
from fractions import Fraction

from mpmath import mp
from mpmath.ctx_mp import MPContext


def ctx_at(bits):
    c = MPContext()
    c.prec = bits
    return c


def to_mpf(c, x):
    if isinstance(x, Fraction):
        return c.mpf(x.numerator) / x.denominator
    return c.mpf(x)


def long_product(t, q, bits, start=0):
    """prod_{s>=start} (1 + q^s t), multiplied out until q^s|t| < 2^-(bits+8)."""
    c = ctx_at(bits)
    t, q = to_mpf(c, t), to_mpf(c, q)
    x = t * q ** start
    P = c.one
    eps = c.ldexp(1, -bits - 8)
    n = 0
    while abs(x) >= eps or n < 400:
        P *= 1 + x
        x *= q
        n += 1
    return P


def euler_series_bf(t, q, bits, terms=4000):
    """sum_j q^{j(j-1)/2} t^j / (q;q)_j with each term built from scratch."""
    c = ctx_at(bits)
    t, q = to_mpf(c, t), to_mpf(c, q)
    out = []
    poch = c.one
    for j in range(terms):
        if j:
            poch *= 1 - q ** j
        term = q ** (j * (j - 1) // 2) * t ** j / poch
        out.append(term)
        if j > 10 and abs(term) < c.ldexp(1, -bits - 20):
            break
    return c.fsum(reversed(out))


def qexp_density_bf(lam, q, n, bits):
    """lam e_q(-lam q^n) = lam / prod_j (1 + (1-q) lam q^{n+j}), via mpmath's q-Pochhammer."""
    c = ctx_at(bits)
    lam_m, q_m = to_mpf(c, Fraction(lam)), to_mpf(c, Fraction(q))
    with mp.workprec(bits):
        return lam_m / c.mpf(mp.qp(-(1 - q_m) * lam_m * q_m ** n, q_m))


def qexp_moment_bf(lam, q, k, n_lo, n_hi, bits):
    """(1-q) sum_{n_hi >= n >= n_lo} f(q^n) q^{n(k+1)}, summed from the small end."""
    c = ctx_at(bits)
    q_m = to_mpf(c, Fraction(q))
    total = c.zero
    for n in range(n_hi, n_lo - 1, -1):
        total += qexp_density_bf(lam, q, n, bits) * q_m ** (n * (k + 1))
    return (1 - q_m) * total


def qexp_moment_closed(lam, q, k):
    """[k]_q! q^{-k(k+1)/2} lam^{-k}, the q-exponential moment in closed form."""
    q = Fraction(q)
    fac = Fraction(1)
    for i in range(1, k + 1):
        fac *= (1 - q ** i) / (1 - q)
    return fac * q ** (-k * (k + 1) // 2) / Fraction(lam) ** k
