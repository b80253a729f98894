from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qstieltjes.errors import InvalidParameter, PoleError
from qstieltjes.numkernel import (NumericContext, QParam, TailCertificate, E_q, e_q,
                                  euler_product, euler_series, geometric_product,
                                  lattice_exponent, log_geometric_product, orthogonality_series,
                                  parse_rational, phi, q_pochhammer, qq_factorials,
                                  required_precision, sum_ratio_series)

from oracles import euler_series_bf, long_product

HALF = QParam(Fraction(1, 2))
NINE = QParam(Fraction(9, 10))


def fctx(bits=256, tol="1e-30"):
    return NumericContext("float", bits, tol)


# parsing and contexts ----------------------------------------------------------

def test_parse_rational_forms():
    assert parse_rational("1/2") == Fraction(1, 2)
    assert parse_rational(" 0.9 ") == Fraction(9, 10)
    assert parse_rational("-3") == -3
    with pytest.raises(InvalidParameter):
        parse_rational("half")


def test_context_rejects_bad_settings():
    with pytest.raises(InvalidParameter):
        NumericContext("double")
    with pytest.raises(InvalidParameter):
        NumericContext("float", 32)
    with pytest.raises(InvalidParameter):
        NumericContext("float", 128, "0")


def test_contexts_do_not_share_precision():
    a, b = fctx(64), fctx(512)
    x, y = a.num(1) / 3, b.num(1) / 3
    assert abs(y - b.num(Fraction(1, 3))) < b.num("1e-150")
    assert abs(b.to_mpf(x) - y) > b.num("1e-25")
    assert a.precision_bits == 64 and b.precision_bits == 512


def test_unit_roundoff_exact_mode_is_zero():
    assert NumericContext("exact").unit_roundoff == 0
    assert fctx(128).unit_roundoff == fctx(128).mp.ldexp(1, -127)


def test_qparam_range_and_flags():
    for bad in (0, 1, Fraction(3, 2), "-1/2"):
        with pytest.raises(InvalidParameter):
            QParam(bad)
    assert QParam("1/2").is_rational
    assert not QParam(0.5).is_rational
    with pytest.raises(InvalidParameter):
        QParam(0.5).q(NumericContext("exact"))


def test_lattice_exponent():
    ctx = fctx()
    assert lattice_exponent(Fraction(1, 8), HALF, ctx) == 3
    assert lattice_exponent(Fraction(1000, 729), NINE, ctx) == -3
    assert lattice_exponent(Fraction(1, 3), HALF, ctx) is None
    assert lattice_exponent(ctx.num(2) ** 40, HALF, ctx) == -40
    assert lattice_exponent(ctx.num(2) ** 40 + 1, HALF, ctx) is None


# finite products ------------------------------------------------------------------

def test_q_pochhammer_small_cases():
    assert q_pochhammer(Fraction(1, 2), HALF, 0) == 1
    assert q_pochhammer(Fraction(1, 2), HALF, 2) == Fraction(1, 2) * Fraction(3, 4)
    assert q_pochhammer(1, HALF, 5) == 0
    with pytest.raises(InvalidParameter):
        q_pochhammer(1, HALF, -1)


@given(st.fractions(min_value=-4, max_value=4, max_denominator=20), st.integers(0, 30))
def test_q_pochhammer_recurrence(a, j):
    # (a;q)_{j+1} = (a;q)_j (1 - a q^j), exactly
    lhs = q_pochhammer(a, NINE, j + 1)
    rhs = q_pochhammer(a, NINE, j) * (1 - a * NINE.value ** j)
    assert lhs == rhs


def test_qq_factorials_match_pochhammer():
    ctx = NumericContext("exact")
    facs = qq_factorials(HALF, 8, ctx)
    for j, v in enumerate(facs):
        assert v == q_pochhammer(Fraction(1, 2), HALF, j)


# infinite products and series ------------------------------------------------

@pytest.mark.parametrize("q", [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)])
@pytest.mark.parametrize("t", [Fraction(-3), Fraction(-1, 3), Fraction(1, 2), Fraction(7)])
def test_euler_product_against_long_product(q, t):
    ctx = fctx()
    qp = QParam(q)
    v, cert = euler_product(t, qp, ctx)
    ref = long_product(t, q, 2 * ctx.precision_bits)
    assert abs(v - ctx.num(ref)) <= cert.bound
    assert cert.bound <= ctx.tol


@pytest.mark.parametrize("q", [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)])
def test_euler_series_against_term_by_term_sum(q):
    ctx = fctx()
    qp = QParam(q)
    for t in (Fraction(-2), Fraction(3, 7), Fraction(5)):
        v, cert = euler_series(t, qp, ctx)
        ref = euler_series_bf(t, q, 2 * ctx.precision_bits)
        assert abs(v - ctx.num(ref)) <= cert.bound


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([Fraction(1, 10), Fraction(1, 3), Fraction(1, 2), Fraction(4, 5)]),
       st.fractions(min_value=-6, max_value=6, max_denominator=50))
def test_euler_identity_property(q, t):
    ctx = fctx(200, "1e-25")
    qp = QParam(q)
    s, cs = euler_series(t, qp, ctx)
    p, cp = euler_product(t, qp, ctx)
    assert abs(s - p) <= cs.bound + cp.bound


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([Fraction(1, 2), Fraction(9, 10)]),
       st.fractions(min_value=-5, max_value=5, max_denominator=30))
def test_reciprocal_identity_property(q, t):
    ctx = fctx(200, "1e-25")
    qp = QParam(q)
    try:
        a, ca = e_q(t, qp, ctx)
    except PoleError:
        return
    b, cb = E_q(-t, qp, ctx)
    slack = ca.bound * abs(b) + cb.bound * abs(a) + ca.bound * cb.bound
    assert abs(a * b - 1) <= slack + 8 * ctx.unit_roundoff * abs(a * b)


def test_e_q_pole_is_structural():
    # factor j=0 of e_q(t) is 1 - (1-q) t
    with pytest.raises(PoleError):
        e_q(2, HALF, fctx())
    with pytest.raises(PoleError):
        e_q(Fraction(10, 1) * Fraction(10, 9) ** 2, NINE, fctx())


def test_exact_mode_product_is_rational_and_certified():
    ctx = NumericContext("exact", target_tolerance="1e-20")
    v, cert = E_q(1, HALF, ctx)
    assert isinstance(v, Fraction)
    ref = long_product(Fraction(1, 2), Fraction(1, 2), 256)
    assert abs(ctx.to_mpf(v) - ref) <= ctx.to_mpf(cert.bound) * (1 + 1e-20)


def test_E_q_zero_argument():
    v, cert = E_q(0, HALF, fctx())
    assert v == 1 and cert.bound == 0


@pytest.mark.parametrize("qp", [HALF, NINE])
def test_phi_zeros_exact(qp):
    ctx = fctx(128)
    for m in range(1, 51):
        v, cert = phi(qp.value ** -m, qp, ctx)
        assert v == 0 and cert.bound == 0 and cert.truncation_index == m


def test_phi_off_lattice_against_long_product():
    ctx = fctx()
    for z in (Fraction(3), Fraction(-7, 2), Fraction(1, 3)):
        v, cert = phi(z, HALF, ctx)
        ref = long_product(-z, Fraction(1, 2), 2 * ctx.precision_bits, start=1)
        assert v != 0
        assert abs(v - ctx.num(ref)) <= cert.bound


def test_phi_float_argument_near_zero_still_detected():
    ctx = fctx()
    v, cert = phi(ctx.num(2) ** 7, HALF, ctx)
    assert v == 0 and cert.bound == 0


def test_log_geometric_product_matches_product():
    ctx = fctx()
    for t in (Fraction(1, 2), Fraction(50), Fraction(2) ** 30):
        lv, err = log_geometric_product(t, 0, HALF, ctx)
        ref = ctx.mp.ln(long_product(t, Fraction(1, 2), 2 * ctx.precision_bits))
        assert abs(lv - ref) <= err


def test_geometric_product_reciprocal_and_relative_only():
    ctx = fctx()
    P, cP = geometric_product(3, 0, HALF, ctx)
    R, cR = geometric_product(3, 0, HALF, ctx, reciprocal=True)
    assert abs(P * R - 1) <= cP.relative + cR.relative
    big, cb = geometric_product(ctx.num(2) ** 200, 1, HALF, ctx, relative_only=True)
    assert cb.relative <= ctx.tol


def test_sum_ratio_series_geometric():
    ctx = fctx()
    r = ctx.num(1) / 3
    res = sum_ratio_series(1, lambda j: r, ctx)
    assert abs(res.value - ctx.num(Fraction(3, 2))) <= res.certificate.bound
    assert res.max_term == 1


def test_orthogonality_series_is_phi_at_lattice_point():
    # phi(q^{-(k+1)}) = 0 expands into an alternating series with huge terms
    ctx = fctx(required_precision(6, HALF), "1e-30")
    for k in range(7):
        res = orthogonality_series(k, HALF, ctx)
        assert abs(res.value) <= res.certificate.bound
        assert res.max_term > 1


def test_required_precision_values():
    assert required_precision(0, HALF) == 97
    assert required_precision(20, HALF) == 317
    assert required_precision(10, NINE) == 106
    with pytest.raises(InvalidParameter):
        required_precision(-1, HALF)


@given(st.integers(0, 40), st.integers(0, 40))
def test_required_precision_monotone(a, b):
    lo, hi = sorted((a, b))
    assert required_precision(lo, HALF) <= required_precision(hi, HALF)


def test_certificate_addition():
    a = TailCertificate(3, Fraction(1, 4), "x")
    b = TailCertificate(7, Fraction(1, 8), "y")
    c = a + b
    assert c.truncation_index == 7 and c.bound == Fraction(3, 8) and c.method == "x + y"


def test_decimal_is_deterministic():
    ctx = fctx(128)
    v = ctx.num(Fraction(2, 3))
    assert ctx.decimal(v) == fctx(128).decimal(fctx(128).num(Fraction(2, 3)))
    assert ctx.decimal(v, 5) == "0.66667"
