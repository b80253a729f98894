import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qstieltjes.errors import InvalidParameter, NegativeValue, NotNormalized
from qstieltjes.jackson import LatticeWindow, q_derivative
from qstieltjes.numkernel import NumericContext, QParam
from qstieltjes.qdensity import (build_cdf, density_from_dict, density_from_json, density_to_dict,
                                 density_to_json, equivalent, make_custom, make_q_exponential,
                                 normalize, scale)

from oracles import qexp_density_bf

HALF = QParam(Fraction(1, 2))


def fctx(bits=256, tol="1e-30"):
    return NumericContext("float", bits, tol)


def flat_exact(N=40, q=Fraction(1, 2)):
    """Exactly normalized step density: constant on indices 0..N, zero elsewhere."""
    ctx = NumericContext("exact", target_tolerance="1e-30")
    c = 1 / (1 - q ** (N + 1))
    return make_custom(0, [c] * (N + 1), QParam(q), ctx, upper_tail_bound=0, lower_tail_bound=0), ctx


@pytest.mark.parametrize("lam,q", [(2, Fraction(1, 2)), (Fraction(1, 2), Fraction(9, 10)),
                                   (3, Fraction(1, 3))])
def test_q_exponential_values_against_qpochhammer_oracle(lam, q):
    ctx = fctx()
    f = make_q_exponential(lam, QParam(q), ctx)
    for n in (-12, -3, 0, 1, 7, 40):
        ref = qexp_density_bf(lam, q, n, 2 * ctx.precision_bits)
        assert abs(f(n) - ctx.num(ref)) <= abs(f(n)) * ctx.num(f.base.rel_error)


def test_q_exponential_is_certified_density():
    ctx = fctx()
    f = make_q_exponential(2, HALF, ctx)
    assert f.nonneg_certified and f.norm_certified
    assert abs(f.mass - 1) <= f.mass_certificate.bound
    assert f.family_tag == "q_exponential"
    assert f.window.n_lo < 0 < f.window.n_hi


def test_q_exponential_rejects_bad_lambda():
    with pytest.raises(InvalidParameter):
        make_q_exponential(0, HALF, fctx())
    with pytest.raises(InvalidParameter):
        make_q_exponential(-1, HALF, fctx())


def test_custom_negative_value_reports_index():
    with pytest.raises(NegativeValue) as info:
        make_custom(-2, [1, 1, -1, 1], HALF, fctx(), upper_tail_bound=0, lower_tail_bound=0)
    assert info.value.index == 0


def test_custom_require_normalized():
    with pytest.raises(NotNormalized):
        make_custom(0, [1, 1], HALF, fctx(), upper_tail_bound=0, lower_tail_bound=0,
                    require_normalized=True)


def test_normalize_and_scale_round_trip():
    ctx = fctx()
    f = make_q_exponential(2, HALF, ctx)
    g = normalize(scale(f, 3))
    assert g.norm_certified
    assert equivalent(f, g)


def test_normalize_rejects_zero_mass():
    f = make_custom(0, [0, 0, 0], HALF, fctx(), upper_tail_bound=0, lower_tail_bound=0)
    with pytest.raises(NotNormalized):
        normalize(f)


def test_exact_step_density_is_normalized_exactly():
    f, ctx = flat_exact()
    assert f.mass == 1 and f.mass_certificate.bound == 0


def test_equivalent_reports_smallest_index_discrepancy():
    ctx = NumericContext("exact")
    a = make_custom(-3, [1, 2, 3, 4, 5, 6, 7], HALF, ctx, upper_tail_bound=0, lower_tail_bound=0)
    b = make_custom(-3, [9, 2, 3, 4, 5, 6, 9], HALF, ctx, upper_tail_bound=0, lower_tail_bound=0)
    res = equivalent(a, b)
    assert not res and res.first_discrepancy == -3 and res.deviation == 8
    assert equivalent(a, b, window=LatticeWindow(-2, 2))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.fractions(min_value=0, max_value=5, max_denominator=9), min_size=1, max_size=12),
       st.integers(-5, 5))
def test_equivalence_is_reflexive_and_symmetric(vals, n_lo):
    ctx = NumericContext("exact")
    a = make_custom(n_lo, vals, HALF, ctx, upper_tail_bound=0, lower_tail_bound=0)
    b = make_custom(n_lo, [v + (1 if i == 0 else 0) for i, v in enumerate(vals)], HALF, ctx,
                    upper_tail_bound=0, lower_tail_bound=0)
    assert equivalent(a, a)
    assert bool(equivalent(a, b)) == bool(equivalent(b, a)) is False


# CDF --------------------------------------------------------------------------

def test_cdf_round_trip_float():
    ctx = fctx()
    f = make_q_exponential(2, HALF, ctx)
    F = build_cdf(f)
    for n in f.window:
        d = q_derivative(F, HALF.value ** n, HALF, ctx)
        assert abs(d - f(n)) <= ctx.tol * max(1, abs(f(n))) * 2 ** (abs(n) // 8 + 4)
    vals = [F.at(n) for n in range(F.n_lo, F.n_hi + 2)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert abs(F.at(F.n_lo) - 1) <= 10 * ctx.tol + f.mass_certificate.bound


def test_cdf_round_trip_exact_is_bit_exact():
    f, ctx = flat_exact()
    F = build_cdf(f)
    for n in f.window:
        assert q_derivative(F, HALF.value ** n, HALF, ctx) == f(n)
    assert F.at(F.n_lo) == 1


def test_cdf_interpolation_and_edges():
    f, ctx = flat_exact(10)
    F = build_cdf(f)
    assert F(0) == 0 and F(-1) == 0
    x = Fraction(3, 4)  # between q^1 and q^0
    assert F.at(1) <= F(x) <= F.at(0)
    assert F(Fraction(1, 2 ** 30)) <= F.at(11)


def test_cdf_needs_normalized_density():
    f = make_custom(0, [1, 1], HALF, fctx(), upper_tail_bound=0, lower_tail_bound=0)
    with pytest.raises(NotNormalized):
        build_cdf(f)


# JSON -------------------------------------------------------------------------

def test_json_round_trip_custom():
    f, ctx = flat_exact(6)
    doc = json.loads(density_to_json(f))
    assert set(doc) >= {"q", "window", "values", "tail_upper", "tail_lower"}
    assert all(isinstance(v, str) for v in doc["values"])
    g = density_from_json(density_to_json(f), fctx())
    assert equivalent(g, f, ctx=fctx())


def test_json_round_trip_family_keeps_moment_capability():
    ctx = fctx()
    f = make_q_exponential(2, HALF, ctx)
    doc = density_to_dict(f)
    assert doc["family"] == {"name": "q_exponential", "lambda": "2/1"}
    g = density_from_dict(doc, ctx)
    assert g.family == f.family and equivalent(f, g)


def test_json_missing_field_is_invalid():
    with pytest.raises(InvalidParameter):
        density_from_dict({"q": "1/2", "window": [0, 1]}, fctx())
    with pytest.raises(InvalidParameter):
        density_from_dict({"q": "1/2", "window": [0, 1], "values": ["1"],
                           "tail_upper": "0", "tail_lower": "0"}, fctx())
