import json
from fractions import Fraction

import pytest

from qstieltjes.errors import (DegeneratePerturbation, EpsilonOutOfRange, InsufficientSupport,
                               PrecisionInsufficient, UnboundedPerturbation, ZeroDensityValue)
from qstieltjes.jackson import BoundedTail, GaussianTail, LatticeFunction, LatticeWindow
from qstieltjes.numkernel import NumericContext, QParam, qq_factorials, required_precision
from qstieltjes.qdensity import equivalent, make_custom, make_q_exponential
from qstieltjes.qmoments import moment_table, tables_match
from qstieltjes.stieltjes import (build_h_tilde, make_perturbation, perturbation_window,
                                  stieltjes_class, stieltjes_member, sup_norm, verify_class,
                                  verify_orthogonality)

from oracles import ctx_at, qexp_density_bf, to_mpf

HALF = QParam(Fraction(1, 2))


def fctx(bits=256, tol="1e-30"):
    return NumericContext("float", bits, tol)


def h_tilde_oracle(lam, q, j, bits):
    """(-1)^j q^{j(j+1)/2} / ((q;q)_j f(q^-j)) from scratch."""
    c = ctx_at(bits)
    qm = to_mpf(c, Fraction(q))
    qq = c.one
    for s in range(1, j + 1):
        qq *= 1 - qm ** s
    return (-1) ** j * qm ** (j * (j + 1) // 2) / (qq * qexp_density_bf(lam, q, -j, bits))


@pytest.mark.parametrize("lam,q", [(2, Fraction(1, 2)), (1, Fraction(1, 2)),
                                   (Fraction(1, 2), Fraction(9, 10))])
def test_h_tilde_product_form_matches_definition(lam, q):
    ctx = fctx()
    f = make_q_exponential(lam, QParam(q), ctx)
    ht = build_h_tilde(f, 30)
    for j in (0, 1, 5, 17, 30):
        ref = h_tilde_oracle(lam, q, j, 2 * ctx.precision_bits)
        assert abs(ht(-j) - ctx.num(ref)) <= abs(ht(-j)) * ctx.num(ht.rel_error)
    assert ht(1) == 0 and ht(25) == 0


def test_h_tilde_generic_formula_agrees_with_product_form():
    ctx = fctx()
    f = make_q_exponential(2, HALF, ctx)
    g = make_custom(f.window.n_lo, f.base.values, HALF, ctx, upper_tail_bound=2,
                    lower_tail=GaussianTail(Fraction(1), 1, Fraction(1)))
    a, b = build_h_tilde(f, 12), build_h_tilde(g, 12)
    for j in range(13):
        assert abs(a(-j) - b(-j)) <= abs(a(-j)) * ctx.num("1e-60")


def test_h_tilde_needs_positive_density():
    ctx = fctx()
    g = make_custom(-3, [1, 0, 1, 1], HALF, ctx, upper_tail_bound=0, lower_tail_bound=0)
    with pytest.raises(ZeroDensityValue):
        build_h_tilde(g, 3)


def test_sup_norm_limit_case():
    # lam(1-q) = 1: |h~| increases to a limit that is never attained
    ctx = fctx()
    f = make_q_exponential(2, HALF, ctx)
    sn = sup_norm(build_h_tilde(f, 40), f)
    assert sn.attained_index is None
    assert abs(sn.value - ctx.num("19.684182611791167646")) < ctx.num("1e-17")
    far = abs(h_tilde_oracle(2, Fraction(1, 2), 300, 600))
    assert sn.value >= ctx.num(far)


def test_sup_norm_decaying_case_against_scan():
    ctx = fctx()
    f = make_q_exponential(1, HALF, ctx)
    ht = build_h_tilde(f, 30)
    sn = sup_norm(ht, f)
    scan = [abs(h_tilde_oracle(1, Fraction(1, 2), j, 512)) for j in range(120)]
    best = max(range(120), key=lambda j: scan[j])
    assert sn.attained_index == -best
    assert abs(sn.value - ctx.num(scan[best])) <= sn.value * ctx.num(ht.rel_error)


def test_sup_norm_failure_modes():
    ctx = fctx()
    with pytest.raises(UnboundedPerturbation):
        make_perturbation(make_q_exponential(3, HALF, ctx), 2)
    f = make_q_exponential(2, HALF, ctx)
    zero = LatticeFunction(LatticeWindow(-3, 0), (ctx.zero,) * 4, BoundedTail(Fraction(0)))
    with pytest.raises(DegeneratePerturbation):
        sup_norm(zero, f)
    g = make_custom(-2, [1, 1, 1], HALF, ctx, upper_tail_bound=0, lower_tail_bound=0)
    with pytest.raises(InsufficientSupport):
        sup_norm(build_h_tilde(g, 2), g)


def test_exact_envelope_families():
    ctx = fctx()
    f = make_q_exponential(2, HALF, ctx)
    fast = make_custom(f.window.n_lo, f.base.values, HALF, ctx, upper_tail_bound=2,
                       lower_tail=GaussianTail(Fraction(1), 2, Fraction(1), exact=True))
    with pytest.raises(UnboundedPerturbation):
        sup_norm(build_h_tilde(fast, 5), fast)


def test_perturbation_window_rule():
    f = make_q_exponential(2, HALF, fctx())
    assert perturbation_window(f, 20) == 21 + 16


def test_orthogonality_float_against_phi_zero():
    K = 8
    ctx = fctx(required_precision(K, HALF), "1e-25")
    f = make_q_exponential(2, HALF, ctx)
    h = make_perturbation(f, K)
    for chk in h.orthogonality:
        assert chk.oracle_agreement and chk.product_oracle == 0
        assert abs(chk.residual) <= chk.certificate.bound
        assert chk.relative_residual <= 1e-25


def test_orthogonality_exact_mode_stays_rational():
    ctx = NumericContext("exact", target_tolerance="1e-25")
    f = make_q_exponential(2, HALF, ctx)
    h = make_perturbation(f, 6)
    assert isinstance(h.sup_norm.value, Fraction)
    assert all(isinstance(v, Fraction) for v in h.base.values)
    for chk in h.orthogonality:
        assert isinstance(chk.residual, Fraction)
        assert abs(chk.residual) <= chk.certificate.bound


def test_orthogonality_low_precision_refuses():
    ctx = fctx(64, "1e-25")
    f = make_q_exponential(2, HALF, ctx)
    with pytest.raises(PrecisionInsufficient) as info:
        make_perturbation(f, 20)
    assert info.value.precision_bits == 64


def test_orthogonality_against_separately_built_perturbation():
    # each density's own relative error enters the certificate, so build them tighter
    tight = fctx(required_precision(4, HALF) + 64, "1e-40")
    f = make_q_exponential(2, HALF, tight)
    h = make_perturbation(f, 4)
    other = make_q_exponential(2, HALF, tight)
    chk = verify_orthogonality(other, h, 3, tight.with_tolerance("1e-25"))
    assert chk.oracle_agreement


def test_members_nonnegative_and_normalized():
    ctx = fctx(required_precision(6, HALF), "1e-25")
    f = make_q_exponential(2, HALF, ctx)
    h = make_perturbation(f, 6)
    members = stieltjes_class(f, h)
    for m in members:
        assert m.handle.nonneg_certified and m.handle.norm_certified
        assert all(v >= 0 for v in m.handle.base.values)
    zero = [m for m in members if m.epsilon == 0][0]
    assert equivalent(zero.handle, f)
    with pytest.raises(EpsilonOutOfRange):
        stieltjes_member(f, h, Fraction(3, 2))
    with pytest.raises(EpsilonOutOfRange):
        stieltjes_class(f, h, [0, -2])


def test_member_moments_match_density():
    ctx = fctx(required_precision(6, HALF), "1e-25")
    f = make_q_exponential(2, HALF, ctx)
    h = make_perturbation(f, 6)
    T = moment_table(f, 6)
    for m in stieltjes_class(f, h, [-1, 1]):
        assert tables_match(T, moment_table(m.handle, 6))


def test_verify_class_report():
    ctx = fctx(required_precision(10, HALF), "1e-25")
    f = make_q_exponential(2, HALF, ctx)
    rep = verify_class(f, 10, [-1, 0, 1])
    assert rep.ok and rep.pairwise_distinct
    doc = json.loads(rep.to_json())
    assert doc["pass"] and doc["sup_attained_index"] is None
    assert len(doc["orthogonality"]) == 11 and len(doc["members"]) == 3
    lines = rep.moment_csv().splitlines()
    assert lines[0].startswith("k,epsilon") and len(lines) == 1 + 3 * 11
