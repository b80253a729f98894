"""Explicit q-perturbations and q-Stieltjes classes.

For a q-density ``f`` that is positive at every ``q^{-j}``, the candidate
perturbation is::

    h~(q^{-j}) = (-1)^j q^{j(j+1)/2} / ((q;q)_j f(q^{-j}))     j >= 0
    h~(q^n)    = 0                                             n >= 1

so that ``f h~`` reproduces the Euler coefficients of
``phi(z) = prod_{s>=1} (1 - q^s z)``.  Since ``phi(q^{-(k+1)}) = 0`` for every
``k >= 0``, all weighted sums ``sum_j f h~ q^{-j(k+1)}`` vanish.  Dividing by
the lattice sup-norm gives ``h``, and ``f (1 + eps h)`` for ``eps in [-1, 1]``
are q-densities sharing every q-moment with ``f``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (DegeneratePerturbation, EpsilonOutOfRange, InsufficientSupport,
                     PrecisionInsufficient, UnboundedPerturbation, ZeroDensityValue)
from .jackson import BoundedTail, GaussianTail, LatticeFunction, LatticeWindow
from .numkernel import (Number, NumericContext, QParam, TailCertificate, geometric_product,
                        phi, qq_factorials, required_precision)
from .qdensity import QDensityHandle, QExponential, _certify, _scale_tail, as_fraction, equivalent
from .qmoments import MomentTable, moment_table, tables_match

DEFAULT_EPSILONS = (Fraction(-1), Fraction(-1, 2), Fraction(0), Fraction(1, 2), Fraction(1))
GUARD_INDICES = 16


# h~ ------------------------------------------------------------------------------

def build_h_tilde(f: QDensityHandle, J: int, ctx: Optional[NumericContext] = None) -> LatticeFunction:
    """The unnormalized perturbation on indices ``-J..0`` (zero for ``n >= 1``).

    For the q-exponential family the cancellation-free product form
    ``(-1)^j prod_{s=1}^j (q^s + c) / ((q;q)_j K0)`` is used, with
    ``c = lam(1-q)`` and ``K0 = f(1)``.
    """
    ctx = ctx or f.ctx
    qp = f.q
    q = qp.q(ctx)
    u = ctx.unit_roundoff

    if isinstance(f.family, QExponential):
        c = ctx.num(f.family.lam) * (1 - q)
        cache = [1 / f(0)]
        qj = [ctx.one]

        def closed(n):
            if n >= 1:
                return ctx.zero
            while len(cache) <= -n:
                qj[0] *= q
                cache.append(-cache[-1] * (qj[0] + c) / (1 - qj[0]))
            return cache[-n]

        closed(-J)
        values = tuple(cache[j] for j in range(J, -1, -1))
        rel = f.base.rel_error + 2 * u * (5 * (J + 4096) + 4)
    else:
        qq = ctx.one
        half = ctx.one
        coefs = []
        for j in range(J + 1):
            if j:
                qj_ = qp.power(j, ctx)
                qq *= 1 - qj_
                half *= qj_
            fj = f(-j)
            if fj <= 0:
                raise ZeroDensityValue(f"density vanishes at lattice index {-j}", index=-j)
            coefs.append((-1) ** j * half / (qq * fj))
        values = tuple(reversed(coefs))
        rel = f.base.rel_error + 2 * u * (4 * J + 8)
        closed = None
        if f.base.closed_form is not None:
            def closed(n, _f=f):
                if n >= 1:
                    return ctx.zero
                j = -n
                fj = _f(n)
                if fj <= 0:
                    raise ZeroDensityValue(f"density vanishes at lattice index {n}", index=n)
                return (-1) ** j * qp.power(j * (j + 1) // 2, ctx) / (
                    qq_factorials(qp, j, ctx)[-1] * fj)
    return LatticeFunction(LatticeWindow(-J, 0), values, BoundedTail(Fraction(0), 0), None,
                           closed, rel)


# sup-norm --------------------------------------------------------------------------

@dataclass(frozen=True)
class SupNorm:
    value: Number
    attained_index: Optional[int]
    certificate: TailCertificate
    activation_index: int
    method: str


def _abs_ratio_qexp(j, c, qp, ctx):
    qj = qp.power(j, ctx)
    return (qj + c) / (1 - qj)


def _analytic_ratio(f: QDensityHandle, ctx):
    """Return ``(kind, ratio_fn, start)`` describing ``|h~_j / h~_{j-1}|`` for large j.

    kind is 'decaying' (ratio non-increasing, eventually < 1),
    'limit' (ratio > 1 with convergent product) or 'unbounded'.
    """
    qp = f.q
    if isinstance(f.family, QExponential):
        c = f.family.lam * (1 - qp.value)
        if c > 1:
            return "unbounded", None, 0, f"lam(1-q) = {c} > 1: |h~| grows like (lam(1-q))^j"
        if c == 1:
            return "limit", None, 0, "lam(1-q) = 1: |h~| increases to a finite limit"
        cc = ctx.num(c)
        return "decaying", (lambda j: _abs_ratio_qexp(j, cc, qp, ctx)), 1, \
            "ratio (q^j + lam(1-q))/(1 - q^j) decreases to lam(1-q) < 1"
    low = f.base.lower_tail
    if isinstance(low, GaussianTail) and low.exact:
        g, rho = low.gauss, low.ratio
        if g >= 2 or (g == 1 and rho < 1):
            return "unbounded", None, low.start, \
                "exact envelope decays faster than q^{j(j+1)/2}: |h~| is unbounded"
        if g == 1 and rho == 1:
            return "limit", None, low.start, "exact envelope C q^{j(j+1)/2}: |h~| -> 1/(C (q;q)_inf)"
        rr = ctx.num(1 / rho)

        def ratio(j):
            qj = qp.power(j, ctx)
            return qp.power((1 - g) * j, ctx) * rr / (1 - qj)
        return "decaying", ratio, max(low.start + 1, 1), "exact envelope: ratio decreases below 1"
    return "unknown", None, 0, "no analytic description of the large-point behaviour"


def sup_norm(h_tilde: LatticeFunction, f: QDensityHandle, ctx: Optional[NumericContext] = None
             ) -> SupNorm:
    """``sup_j |h~(q^{-j})|`` with a certificate that the unscanned tail cannot exceed it."""
    ctx = ctx or f.ctx
    qp = f.q
    if all(v == 0 for v in h_tilde.values) and (
            h_tilde.closed_form is None or h_tilde.closed_form(h_tilde.window.n_lo - 1) == 0):
        raise DegeneratePerturbation("h~ vanishes identically on the lattice")
    kind, ratio, start, why = _analytic_ratio(f, ctx)
    if kind == "unbounded":
        raise UnboundedPerturbation(why)
    if kind == "unknown":
        raise InsufficientSupport("cannot certify the sup-norm tail: " + why)

    J = -h_tilde.window.n_lo

    def val(j):
        return abs(h_tilde(-j))

    if kind == "decaying":
        # first j >= start with ratio(j) <= 1; beyond it |h~| is non-increasing
        act = start
        while ratio(act) > 1:
            act += 1
            if act > 100_000:  # pragma: no cover
                raise UnboundedPerturbation("ratio never drops below 1")
        scan_to = max(J, act)
        if scan_to > J and h_tilde.closed_form is None:
            raise InsufficientSupport(f"scan must reach j={act} but h~ stops at j={J}")
        best_j = max(range(scan_to + 1), key=lambda j: (val(j), -j))
        M = val(best_j)
        cert = TailCertificate(scan_to, ctx.zero, "ratio <= 1 beyond activation index")
        return SupNorm(M, -best_j, cert, act, why)

    # limit: |h~_j| increases to sup_j = |h~_J| * prod_{s>J} ratio_s
    if isinstance(f.family, QExponential):
        # ratio_s = (1 + q^s) / (1 - q^s)
        num, cn = geometric_product(1, J + 1, qp, ctx)
        den_inv, cd = geometric_product(-1, J + 1, qp, ctx, reciprocal=True)
        rel = cn.relative + cd.relative
        limit = val(J) * num * den_inv
        act = 0
    else:
        low = f.base.lower_tail
        inv_qq, cd = geometric_product(-1, 1, qp, ctx, reciprocal=True)
        limit = inv_qq / ctx.num(low.scale)
        rel = cd.relative
        act = low.start
        # window values before the envelope starts may exceed the limit
        limit = max([limit] + [val(j) for j in range(min(J, act) + 1)])
    bound = limit * rel + 2 * ctx.unit_roundoff * 8 * limit
    upper = limit + bound
    cert = TailCertificate(J, bound, "supremum approached as j -> inf; value rounded up by its certificate")
    return SupNorm(upper, None, cert, act, why)


# perturbation ----------------------------------------------------------------------

@dataclass(frozen=True)
class OrthogonalityCheck:
    k: int
    residual: Number
    certificate: TailCertificate
    max_term: Number
    product_oracle: Number
    oracle_certificate: TailCertificate
    oracle_agreement: bool

    @property
    def relative_residual(self):
        return abs(self.residual) / self.max_term if self.max_term else abs(self.residual)


@dataclass(frozen=True)
class Perturbation:
    base: LatticeFunction
    h_tilde: LatticeFunction
    sup_norm: SupNorm
    density: QDensityHandle = field(compare=False)
    orthogonality: tuple
    orthogonality_certified_up_to: int

    def __call__(self, n):
        return self.base(n)


def _scaled(lf: LatticeFunction, factor, extra_rel, ctx) -> LatticeFunction:
    cf = None
    if lf.closed_form is not None:
        cf = lambda n, _g=lf.closed_form: _g(n) * factor
    return LatticeFunction(lf.window, tuple(v * factor for v in lf.values), lf.upper_tail,
                           None, cf, lf.rel_error + extra_rel)


def perturbation_window(f: QDensityHandle, K: int, ctx: Optional[NumericContext] = None) -> int:
    """``J = max(K + 1, activation index) + 16``."""
    ctx = ctx or f.ctx
    kind, ratio, start, _ = _analytic_ratio(f, ctx)
    act = 0
    if kind == "decaying":
        act = start
        while ratio(act) > 1:
            act += 1
    return max(K + 1, act) + GUARD_INDICES


def make_perturbation(f: QDensityHandle, K: int, ctx: Optional[NumericContext] = None,
                      J: Optional[int] = None) -> Perturbation:
    """``h = h~ / M`` with orthogonality verified for orders ``0..K``."""
    ctx = ctx or f.ctx
    kind = _analytic_ratio(f, ctx)
    if kind[0] == "unbounded":
        raise UnboundedPerturbation(kind[3])
    if J is None:
        J = perturbation_window(f, K, ctx)
    ht = build_h_tilde(f, J, ctx)
    sn = sup_norm(ht, f, ctx)
    inv = 1 / sn.value
    extra = sn.certificate.bound / sn.value + 2 * ctx.unit_roundoff
    h = _scaled(ht, inv, extra, ctx)
    pert = Perturbation(h, ht, sn, f, (), K)
    checks = tuple(verify_orthogonality(f, pert, k, ctx) for k in range(K + 1))
    return Perturbation(h, ht, sn, f, checks, K)


def verify_orthogonality(f: QDensityHandle, h, k: int, ctx: Optional[NumericContext] = None,
                         *, rel_tol=None) -> OrthogonalityCheck:
    """``(1-q) sum_n f(q^n) h(q^n) q^{n(k+1)}`` checked against ``phi(q^{-(k+1)}) = 0``.

    The lattice sum uses the stored values of ``f`` and ``h`` on the window of
    ``h``; past it the terms are continued by their exact Euler coefficients
    ``(-1)^j q^{j(j+1)/2} / ((q;q)_j M)``, whose ratio is non-increasing, and
    truncated by the geometric ratio rule.  The certificate combines that tail
    with a rounding bound; if it exceeds the tolerance target,
    :class:`PrecisionInsufficient` is raised instead of returning a result.
    """
    ctx = ctx or f.ctx
    qp = f.q
    q = qp.q(ctx)
    u = ctx.unit_roundoff
    tol = ctx.tol
    hb = h.base if isinstance(h, Perturbation) else h
    M = h.sup_norm.value if isinstance(h, Perturbation) else None
    same_source = isinstance(h, Perturbation) and h.density is f
    w = qp.power(-(k + 1), ctx)
    J = -hb.window.n_lo

    terms = []
    wj = ctx.one
    for j in range(J + 1):
        terms.append(f(-j) * hb(-j) * wj)
        wj *= w
    # continuation with the analytic coefficients
    a = terms[-1]
    j = J
    tail = None
    extra_terms = 0
    if M is not None or a == 0:
        qpow_next = qp.power(j + 1, ctx)
        for _ in range(100_000):
            nxt = -a * qpow_next * w / (1 - qpow_next)
            if abs(nxt) <= tol / 4 and 2 * abs(nxt) <= abs(a):
                tail = 2 * abs(nxt)
                break
            terms.append(nxt)
            extra_terms += 1
            a = nxt
            j += 1
            qpow_next *= q
    else:
        raise InsufficientSupport("perturbation has no sup-norm; cannot continue the series")
    total = ctx.zero
    abs_sum = ctx.zero
    weighted = ctx.zero
    max_term = ctx.zero
    for i, t in enumerate(terms):
        total += t
        at = abs(t)
        abs_sum += at
        if not ctx.exact:
            weighted += at * (10 * min(i, J) + 5 * max(0, i - J) + 12)
        if at > max_term:
            max_term = at
    one_minus_q = 1 - q
    residual = total * one_minus_q
    max_term *= one_minus_q
    rounding = 2 * u * (weighted + len(terms) * abs_sum) * one_minus_q
    if not same_source:
        rounding += abs_sum * one_minus_q * ctx.num(f.base.rel_error + hb.rel_error)
    bound = tail * one_minus_q + rounding
    method = "geometric tail of Euler coefficients"
    if not ctx.exact:
        method += " + rounding"
    cert = TailCertificate(j, bound, method)
    oracle, ocert = phi(qp.value ** -(k + 1), qp, ctx)
    if bound > tol:
        raise PrecisionInsufficient(
            f"orthogonality certificate {ctx.decimal(bound, 5)} at k={k} exceeds the tolerance "
            f"{float(ctx.target_tolerance):.3g} with {ctx.precision_bits} bits; "
            f"required_precision gives {required_precision(k, qp)} bits",
            certificate=cert, precision_bits=ctx.precision_bits)
    agree = oracle == 0 and ocert.bound == 0 and abs(residual) <= bound
    return OrthogonalityCheck(k, residual, cert, max_term, oracle, ocert, agree)


# Stieltjes class -----------------------------------------------------------------

@dataclass(frozen=True)
class StieltjesMember:
    epsilon: Fraction
    handle: QDensityHandle


def stieltjes_member(f: QDensityHandle, h: Perturbation, eps, ctx=None) -> StieltjesMember:
    ctx = ctx or f.ctx
    e = as_fraction(eps)
    if not -1 <= e <= 1:
        raise EpsilonOutOfRange(f"epsilon must lie in [-1, 1], got {e}")
    ec = ctx.num(e)
    hb = h.base
    lo = min(f.window.n_lo, hb.window.n_lo)
    hi = max(f.window.n_hi, 0)
    window = LatticeWindow(lo, hi)
    vals = tuple(f(n) * (1 + ec * hb(n)) if n <= 0 else f(n) for n in window)
    cf = None
    if f.base.closed_form is not None and hb.closed_form is not None:
        fcf, hcf = f.base.closed_form, hb.closed_form
        cf = lambda n: fcf(n) * (1 + ec * hcf(n)) if n <= 0 else fcf(n)
    lower = _scale_tail(f.base.lower_tail, 1 + abs(e))
    if isinstance(lower, GaussianTail):
        lower = GaussianTail(lower.scale, lower.gauss, lower.ratio, lower.start, False)
    rel = f.base.rel_error + hb.rel_error + 4 * ctx.unit_roundoff
    base = LatticeFunction(window, vals, f.base.upper_tail, lower, cf, rel)
    nonneg = all(v >= 0 for v in vals) and f.nonneg_certified
    handle = _certify(base, f.q, ctx, None, nonneg)
    return StieltjesMember(e, handle)


def stieltjes_class(f: QDensityHandle, h: Perturbation, eps_grid: Sequence = DEFAULT_EPSILONS,
                    ctx: Optional[NumericContext] = None) -> list:
    """Members ``g_eps ~ f (1 + eps h)`` for each ``eps`` in the grid."""
    for e in eps_grid:
        if not -1 <= as_fraction(e) <= 1:
            raise EpsilonOutOfRange(f"epsilon must lie in [-1, 1], got {e}")
    return [stieltjes_member(f, h, e, ctx) for e in eps_grid]


@dataclass(frozen=True)
class ClassReport:
    """Verification summary for a q-Stieltjes class."""

    density: QDensityHandle
    perturbation: Perturbation
    members: tuple
    density_table: MomentTable
    member_tables: tuple
    comparisons: tuple
    pairwise_distinct: bool

    @property
    def ok(self) -> bool:
        return (all(c.oracle_agreement for c in self.perturbation.orthogonality)
                and all(m.handle.nonneg_certified and m.handle.norm_certified for m in self.members)
                and all(bool(c) for c in self.comparisons)
                and self.pairwise_distinct)

    def to_dict(self) -> dict:
        ctx = self.density.ctx
        return {
            "q": f"{self.density.q.value.numerator}/{self.density.q.value.denominator}",
            "sup_norm": ctx.decimal(self.perturbation.sup_norm.value),
            "sup_attained_index": self.perturbation.sup_norm.attained_index,
            "orthogonality": [
                {"k": c.k, "residual": ctx.decimal(c.residual, 20),
                 "certificate": ctx.decimal(c.certificate.bound, 6),
                 "max_term": ctx.decimal(c.max_term, 20),
                 "product_oracle": ctx.decimal(c.product_oracle, 6),
                 "pass": c.oracle_agreement} for c in self.perturbation.orthogonality],
            "members": [member_to_dict(m) for m in self.members],
            "moment_match": [bool(c) for c in self.comparisons],
            "pairwise_distinct": self.pairwise_distinct,
            "pass": self.ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def moment_csv(self) -> str:
        ctx = self.density.ctx
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "epsilon", "density_moment", "member_moment", "deviation", "allowance",
                    "match"])
        for m, T, cmp in zip(self.members, self.member_tables, self.comparisons):
            for k in range(T.K + 1):
                w.writerow([k, str(m.epsilon), ctx.decimal(self.density_table[k]),
                            ctx.decimal(T[k]), ctx.decimal(cmp.deviations[k], 6),
                            ctx.decimal(cmp.allowances[k], 6),
                            "true" if cmp.deviations[k] <= cmp.allowances[k] else "false"])
        return buf.getvalue()


def member_to_dict(m: StieltjesMember) -> dict:
    h = m.handle
    ctx = h.ctx
    return {"epsilon": str(m.epsilon),
            "window": [h.window.n_lo, h.window.n_hi],
            "values": [ctx.decimal(v) for v in h.base.values],
            "mass": ctx.decimal(h.mass),
            "mass_certificate": ctx.decimal(h.mass_certificate.bound, 6),
            "nonnegative": h.nonneg_certified}


def verify_class(f: QDensityHandle, K: int, eps_grid: Sequence = DEFAULT_EPSILONS,
                 ctx: Optional[NumericContext] = None, K_orth: Optional[int] = None) -> ClassReport:
    """Build the perturbation and class, then compare moment tables up to order ``K``."""
    ctx = ctx or f.ctx
    h = make_perturbation(f, K if K_orth is None else K_orth, ctx)
    members = stieltjes_class(f, h, eps_grid, ctx)
    T = moment_table(f, K, ctx)
    tables = tuple(moment_table(m.handle, K, ctx) for m in members)
    comps = tuple(tables_match(T, t) for t in tables)
    distinct = True
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if members[i].epsilon != members[j].epsilon and equivalent(
                    members[i].handle, members[j].handle, ctx=ctx):
                distinct = False
    return ClassReport(f, h, tuple(members), T, tables, comps, distinct)
