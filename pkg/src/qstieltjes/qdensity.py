"""q-densities: construction, certification, equivalence and CDF reconstruction."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .errors import InsufficientSupport, InvalidParameter, NegativeValue, NotNormalized
from .jackson import (BoundedTail, GaussianTail, LatticeFunction, LatticeWindow, ScalarTail,
                      _extend, q_integral_0_to_inf, lattice_sum)
from .numkernel import (Number, NumericContext, QParam, TailCertificate, _mpf_to_fraction,
                        geometric_product, lattice_exponent, parse_rational)
from .jackson import MAX_EXTENSION


def as_fraction(x) -> Fraction:
    """Exact rational value of an int/str/Fraction/float/mpf."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, (int, float)):
        return Fraction(x)
    return _mpf_to_fraction(x)


@dataclass(frozen=True)
class QExponential:
    """Family tag for ``f(t) = lam * e_q(-lam t)``."""

    lam: Fraction

    @property
    def name(self):
        return "q_exponential"


@dataclass(frozen=True)
class QDensityHandle:
    """A lattice function certified (or flagged) as a q-density.

    Only the lattice values matter for every q-moment, so the handle is the
    equivalence-class representative; :func:`build_cdf` produces a concrete
    distribution function.
    """

    base: LatticeFunction
    q: QParam
    ctx: NumericContext = field(compare=False)
    nonneg_certified: bool
    norm_certified: bool
    mass: Number
    mass_certificate: TailCertificate
    family: Optional[QExponential] = None

    def __call__(self, n: int) -> Number:
        return self.base(n)

    @property
    def window(self) -> LatticeWindow:
        return self.base.window

    @property
    def family_tag(self) -> str:
        return self.family.name if self.family is not None else "custom"


def _certify(base, qp, ctx, family=None, nonneg=True):
    mass, cert = q_integral_0_to_inf(base, qp, ctx)
    norm = abs(mass - 1) <= ctx.tol
    return QDensityHandle(base, qp, ctx, nonneg, norm, mass, cert, family)


# q-exponential ----------------------------------------------------------------

def _q_exponential_values(lam: Fraction, qp: QParam, ctx: NumericContext):
    """Closed-form evaluator ``n -> lam e_q(-lam q^n)`` and its relative error bound.

    With ``c = lam(1-q)`` and ``K0 = lam e_q(-lam)``::

        f(q^n)    = K0 prod_{s=0}^{n-1} (1 + c q^s)                 n >= 0
        f(q^{-j}) = K0 q^{j(j+1)/2} prod_{s=1}^{j} 1/(q^s + c)      j >= 1

    The second line is the overflow-free factorisation for large points.
    """
    q = qp.q(ctx)
    c = ctx.num(lam) * (1 - q)
    prod, cert = geometric_product(c, 0, qp, ctx)
    K0 = ctx.num(lam) / prod
    up = [K0]     # f(q^n), n >= 0
    up_q = [ctx.one]
    down = [K0]   # f(q^-j), j >= 0
    down_q = [ctx.one]

    def value(n: int):
        if abs(n) > MAX_EXTENSION + 1024:
            raise InsufficientSupport(f"closed form evaluated too far out (n={n})")
        if n >= 0:
            while len(up) <= n:
                s = len(up) - 1
                up.append(up[-1] * (1 + c * up_q[-1]))
                up_q.append(up_q[-1] * q)
            return up[n]
        j = -n
        while len(down) <= j:
            s = len(down)
            down_q.append(down_q[-1] * q)
            # K0 q^{j(j+1)/2} A_j built incrementally: multiply by q^s / (q^s + c)
            down.append(down[-1] * down_q[-1] / (down_q[-1] + c))
        return down[j]

    u = ctx.unit_roundoff
    rel = cert.relative + 2 * u * (4 * (MAX_EXTENSION + 1024) + 8)
    return value, rel, K0


def make_q_exponential(lam, qp: QParam, ctx: NumericContext,
                       window: Optional[LatticeWindow] = None) -> QDensityHandle:
    """The q-exponential density ``lam e_q(-lam t)`` with closed form and certificates."""
    lam = as_fraction(lam)
    if lam <= 0:
        raise InvalidParameter(f"lambda must be positive, got {lam}")
    qp = QParam(qp)
    qp.check_mode(ctx)
    value, rel, _ = _q_exponential_values(lam, qp, ctx)
    c = lam * (1 - qp.value)
    # e_q(-x) <= 1 for x >= 0; A_j <= (1/c)^j
    upper = BoundedTail(lam)
    lower = GaussianTail(lam, 1, 1 / c, 0)
    if window is None:
        probe = LatticeFunction(LatticeWindow(0, 0), (value(0),), upper, lower, value, rel)
        n_hi, _ = _extend(probe, "upper", 0, 1, qp, ctx, ctx.tol / 8)
        n_lo, _ = _extend(probe, "lower", 0, 1, qp, ctx, ctx.tol / 8)
        window = LatticeWindow(n_lo, n_hi)
    vals = tuple(value(n) for n in window)
    base = LatticeFunction(window, vals, upper, lower, value, rel)
    return _certify(base, qp, ctx, QExponential(lam))


# custom densities -------------------------------------------------------------

def make_custom(n_lo: int, values, qp: QParam, ctx: NumericContext, *,
                upper_tail_bound=None, lower_tail_bound=None, upper_tail=None,
                lower_tail=None, closed_form=None, rel_error=0,
                require_normalized: bool = False) -> QDensityHandle:
    """Certify user-supplied lattice values ``values[i] = f(q^{n_lo+i})``.

    Tails must be declared (scalar bounds or descriptors); nothing is
    extended by zero.  An unnormalized input gives a handle with
    ``norm_certified=False``; see :func:`normalize`.
    """
    qp = QParam(qp)
    qp.check_mode(ctx)
    base = LatticeFunction.from_values(n_lo, values, ctx, upper_tail_bound=upper_tail_bound,
                                       lower_tail_bound=lower_tail_bound, upper_tail=upper_tail,
                                       lower_tail=lower_tail, closed_form=closed_form,
                                       rel_error=rel_error)
    for n, v in base.items():
        if v < 0:
            raise NegativeValue(f"negative density value at lattice index {n}", index=n)
    handle = _certify(base, qp, ctx)
    if require_normalized and not handle.norm_certified:
        raise NotNormalized(f"q-mass is {ctx.decimal(handle.mass, 20)}, not 1", mass=handle.mass)
    return handle


def _scale_tail(desc, factor: Fraction):
    if desc is None:
        return None
    if isinstance(desc, ScalarTail):
        return replace(desc, value=desc.value * factor)
    if isinstance(desc, BoundedTail):
        return replace(desc, sup=desc.sup * factor)
    if isinstance(desc, GaussianTail):
        return replace(desc, scale=desc.scale * factor)
    raise InvalidParameter(f"cannot rescale tail descriptor {desc!r}")


def scale(f: QDensityHandle, factor) -> QDensityHandle:
    """The lattice function ``factor * f`` (mass rescaled, certification redone)."""
    ctx, qp = f.ctx, f.q
    fac = as_fraction(factor)
    c = ctx.num(fac)
    cf = None if f.base.closed_form is None else (lambda n, _g=f.base.closed_form: c * _g(n))
    base = LatticeFunction(f.window, tuple(v * c for v in f.base.values),
                           _scale_tail(f.base.upper_tail, fac), _scale_tail(f.base.lower_tail, fac),
                           cf, f.base.rel_error + 2 * ctx.unit_roundoff)
    return _certify(base, qp, ctx, None, f.nonneg_certified and fac >= 0)


def normalize(f: QDensityHandle) -> QDensityHandle:
    """Divide by the computed q-mass."""
    ctx = f.ctx
    if f.mass <= f.mass_certificate.bound:
        raise NotNormalized("q-mass is zero within its certificate; cannot normalize",
                            mass=f.mass)
    inv = 1 / f.mass
    lower_mass = as_fraction(f.mass - f.mass_certificate.bound)
    tail_fac = 1 / lower_mass
    cf = None if f.base.closed_form is None else (lambda n, _g=f.base.closed_form: inv * _g(n))
    rel = (f.base.rel_error + f.mass_certificate.bound / (f.mass - f.mass_certificate.bound)
           + 2 * ctx.unit_roundoff)
    base = LatticeFunction(f.window, tuple(v * inv for v in f.base.values),
                           _scale_tail(f.base.upper_tail, tail_fac),
                           _scale_tail(f.base.lower_tail, tail_fac), cf, rel)
    return _certify(base, f.q, ctx, f.family, f.nonneg_certified)


# equivalence ------------------------------------------------------------------

@dataclass(frozen=True)
class Equivalence:
    equal: bool
    first_discrepancy: Optional[int] = None
    deviation: Optional[Number] = None

    def __bool__(self):
        return self.equal


def equivalent(f, g, window: Optional[LatticeWindow] = None, ctx: Optional[NumericContext] = None
               ) -> Equivalence:
    """Lattice equivalence ``f(q^n) == g(q^n)`` over ``window``.

    Bit-exact in exact mode; in float mode values agree when
    ``|f - g| <= tol * max(1, |f|)``.  On failure the discrepancy with the
    smallest ``|n|`` is reported.
    """
    ctx = ctx or f.ctx
    fb = f.base if isinstance(f, QDensityHandle) else f
    gb = g.base if isinstance(g, QDensityHandle) else g
    if window is None:
        window = LatticeWindow(max(fb.window.n_lo, gb.window.n_lo),
                               min(fb.window.n_hi, gb.window.n_hi))
    tol = ctx.tol
    for n in sorted(window, key=lambda n: (abs(n), n)):
        a, b = fb(n), gb(n)
        if ctx.exact:
            same = a == b
        else:
            same = abs(a - b) <= tol * max(1, abs(a))
        if not same:
            return Equivalence(False, n, abs(a - b))
    return Equivalence(True)


# distribution function ---------------------------------------------------------

@dataclass(frozen=True)
class CdfTable:
    """Lattice values ``F(q^n)`` for ``n in [n_lo, n_hi + 1]`` with linear interpolation.

    ``F`` is 0 at and left of 0 and linear between neighbouring lattice
    points, which keeps it non-decreasing.
    """

    n_lo: int
    values: tuple
    q: QParam
    ctx: NumericContext = field(compare=False)
    total_mass: Number
    certificate: TailCertificate
    interpolation: str = "monotone-linear"

    @property
    def n_hi(self) -> int:
        return self.n_lo + len(self.values) - 2

    def at(self, n: int) -> Number:
        i = n - self.n_lo
        if not 0 <= i < len(self.values):
            raise InsufficientSupport(f"CDF table has no lattice index {n}")
        return self.values[i]

    def __call__(self, x) -> Number:
        ctx, qp = self.ctx, self.q
        if x <= 0:
            return ctx.zero
        last = self.n_lo + len(self.values) - 1
        m = lattice_exponent(x, qp, ctx)
        if m is not None and self.n_lo <= m <= last:
            return self.at(m)
        x = ctx.num(x)
        if x < qp.power(last, ctx):
            # between 0 and the innermost stored point
            return self.values[-1] * x / qp.power(last, ctx)
        for n in range(self.n_lo, last):
            lo_pt, hi_pt = qp.power(n + 1, ctx), qp.power(n, ctx)
            if lo_pt <= x <= hi_pt:
                w = (x - lo_pt) / (hi_pt - lo_pt)
                return self.at(n + 1) + w * (self.at(n) - self.at(n + 1))
        raise InsufficientSupport("point lies beyond the stored CDF window")


def build_cdf(g: QDensityHandle, window: Optional[LatticeWindow] = None) -> CdfTable:
    """``F(q^n) = (1-q) sum_{l >= n} g(q^l) q^l`` on the window (existence construction)."""
    if not g.norm_certified:
        raise NotNormalized("build_cdf needs a normalized density", mass=g.mass)
    ctx, qp = g.ctx, g.q
    window = window or g.window
    q = qp.q(ctx)
    inner = lattice_sum(g.base, 1, qp, ctx, lo=window.n_hi + 1)
    F = inner.value * (1 - q)
    vals = [F]
    qn = qp.power(window.n_hi, ctx)
    for n in range(window.n_hi, window.n_lo - 1, -1):
        F = F + (1 - q) * g(n) * qn
        vals.append(F)
        qn /= q
    vals.reverse()
    u = ctx.unit_roundoff
    bound = inner.certificate.bound * (1 - q) + 4 * u * len(vals) * vals[0]
    return CdfTable(window.n_lo, tuple(vals), qp, ctx, g.mass,
                    TailCertificate(window.n_hi + 1, bound, inner.certificate.method))


# JSON interchange ---------------------------------------------------------------

def _round_up_decimal(x, ctx):
    if ctx.exact:
        return _number(x, ctx)
    return ctx.decimal(x * (1 + ctx.mp.ldexp(1, -60)) if x else x, 30)


def _number(x, ctx):
    # exact mode keeps rationals as "p/r" so a round trip loses nothing
    if ctx.exact:
        x = Fraction(x)
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return ctx.decimal(x)


def density_to_dict(f: QDensityHandle) -> dict:
    """Export with all numbers as strings at working precision.

    Float mode writes decimals; exact mode writes ``p/r`` rationals.
    """
    ctx, qp = f.ctx, f.q
    doc = {
        "q": f"{qp.value.numerator}/{qp.value.denominator}",
        "window": [f.window.n_lo, f.window.n_hi],
        "values": [_number(v, ctx) for v in f.base.values],
        "tail_upper": _round_up_decimal(f.base.upper_tail_bound(qp, ctx), ctx),
        "tail_lower": _round_up_decimal(f.base.lower_tail_bound(qp, ctx), ctx),
    }
    if f.family is not None:
        doc["family"] = {"name": f.family.name,
                         "lambda": f"{f.family.lam.numerator}/{f.family.lam.denominator}"}
    low = f.base.lower_tail
    if isinstance(low, GaussianTail):
        doc["tail_lower_envelope"] = {"scale": str(low.scale), "gauss": low.gauss,
                                      "ratio": str(low.ratio), "start": low.start}
    return doc


def density_to_json(f: QDensityHandle) -> str:
    return json.dumps(density_to_dict(f), indent=2) + "\n"


def density_from_dict(doc: dict, ctx: NumericContext) -> QDensityHandle:
    """Inverse of :func:`density_to_dict`.

    A ``q_exponential`` family tag rebuilds the closed form.  Otherwise the
    scalar ``tail_upper``/``tail_lower`` bounds are used, and the optional
    ``tail_lower_envelope`` (Gaussian envelope for large points) unlocks
    moments beyond order 0.
    """
    try:
        qp = QParam(str(doc["q"]))
        n_lo, n_hi = (int(v) for v in doc["window"])
        family = doc.get("family")
        if family:
            if family.get("name") != "q_exponential":
                raise InvalidParameter(f"unknown density family {family.get('name')!r}")
            return make_q_exponential(parse_rational(str(family["lambda"])), qp, ctx,
                                      LatticeWindow(n_lo, n_hi))
        values = [str(v) for v in doc["values"]]
        if len(values) != n_hi - n_lo + 1:
            raise InvalidParameter("values length does not match the window")
        env = doc.get("tail_lower_envelope")
        lower = None
        if env is not None:
            lower = GaussianTail(parse_rational(str(env["scale"])), int(env["gauss"]),
                                 parse_rational(str(env["ratio"])), int(env.get("start", 0)))
        return make_custom(n_lo, values, qp, ctx,
                           upper_tail_bound=parse_rational(str(doc["tail_upper"])),
                           lower_tail_bound=None if lower else parse_rational(str(doc["tail_lower"])),
                           lower_tail=lower)
    except KeyError as exc:
        raise InvalidParameter(f"density document lacks field {exc.args[0]!r}") from exc


def density_from_json(text: str, ctx: NumericContext) -> QDensityHandle:
    return density_from_dict(json.loads(text), ctx)
