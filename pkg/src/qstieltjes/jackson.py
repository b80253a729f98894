"""Jackson q-integration and the q-derivative on the lattice ``{q^n}``.

Index ``n`` always denotes the point ``t = q^n``: large positive ``n`` sits
near 0, large negative ``n`` far out.  A point ``q^{-j}`` with ``j >= 0`` is
index ``n = -j``.

Two-sided lattice sums are never truncated silently.  A
:class:`LatticeFunction` carries tail descriptors for both ends of its index
window; sums beyond the window are either filled from a closed form (until the
descriptor certifies the rest) or charged to the descriptor bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import DivergentTail, InsufficientSupport, InvalidParameter, ZeroArgument
from .numkernel import Number, NumericContext, QParam, TailCertificate

MAX_EXTENSION = 4096


@dataclass(frozen=True)
class LatticeWindow:
    n_lo: int
    n_hi: int

    def __post_init__(self):
        if self.n_lo > self.n_hi:
            raise InvalidParameter(f"empty window [{self.n_lo}, {self.n_hi}]")

    def __iter__(self):
        return iter(range(self.n_lo, self.n_hi + 1))

    def __len__(self):
        return self.n_hi - self.n_lo + 1

    def __contains__(self, n):
        return self.n_lo <= n <= self.n_hi


# tail descriptors ------------------------------------------------------------
#
# Each descriptor answers: an upper bound on  sum_{n beyond cutoff} |f(q^n)| q^{n w}
# where "beyond" means n > cutoff for the upper side (points near 0) and
# n < cutoff for the lower side (large points).

@dataclass(frozen=True)
class ScalarTail:
    """A bare bound on the unweighted (``w = 1``) tail sum beyond the window.

    On the upper side the bound transfers to ``w > 1`` because ``q^{n(w-1)}``
    only shrinks there; on the lower side nothing can be said for ``w > 1``.
    """

    value: Fraction
    edge: int

    def bound(self, side, cutoff, weight, qp, ctx):
        b = ctx.num(self.value)
        if side == "upper":
            if cutoff < self.edge:
                raise InsufficientSupport("scalar tail bound does not cover the requested range")
            if weight == 1:
                return b
            return b * qp.power((self.edge + 1) * (weight - 1), ctx)
        if cutoff > self.edge:
            raise InsufficientSupport("scalar tail bound does not cover the requested range")
        if weight != 1 and self.value != 0:
            raise DivergentTail("a scalar lower-tail bound cannot control higher weights")
        return b


@dataclass(frozen=True)
class BoundedTail:
    """``|f(q^n)| <= sup`` for every ``n > edge`` (upper side only)."""

    sup: Fraction
    edge: int = -(10 ** 9)

    def bound(self, side, cutoff, weight, qp, ctx):
        if side != "upper":
            raise DivergentTail("a sup bound says nothing about large points")
        if cutoff < self.edge:
            raise InsufficientSupport("bounded-tail descriptor starts after the cutoff")
        qw = qp.power(weight, ctx)
        return ctx.num(self.sup) * qp.power((cutoff + 1) * weight, ctx) / (1 - qw)


@dataclass(frozen=True)
class GaussianTail:
    """Envelope ``|f(q^{-j})| <= scale * q^{gauss*j(j+1)/2} * ratio^j`` for ``j >= start``.

    With ``exact=True`` the envelope holds with equality and ``f > 0`` there,
    which lets perturbation sup-norms be certified analytically.
    """

    scale: Fraction
    gauss: int
    ratio: Fraction
    start: int = 0
    exact: bool = False

    def __post_init__(self):
        if self.gauss < 0 or int(self.gauss) != self.gauss:
            raise InvalidParameter("gauss exponent must be a nonnegative integer")
        if self.ratio <= 0 or self.scale < 0:
            raise InvalidParameter("ratio must be positive and scale nonnegative")

    def term(self, j, weight, qp, ctx):
        return (ctx.num(self.scale) * qp.power(self.gauss * j * (j + 1) // 2 - j * weight, ctx)
                * ctx.num(self.ratio) ** j)

    def bound(self, side, cutoff, weight, qp, ctx):
        if side != "lower":
            raise InvalidParameter("Gaussian envelope describes large points only")
        j0 = max(1 - cutoff, 0)
        if j0 < self.start:
            raise InsufficientSupport(f"envelope starts at j={self.start}, needed from j={j0}")
        q = qp.q(ctx)
        rho = ctx.num(self.ratio)
        if self.gauss == 0 and rho * qp.power(-weight, ctx) >= 1:
            raise DivergentTail(f"envelope tail diverges at weight {weight}")
        total = ctx.zero
        j = j0
        t = self.term(j, weight, qp, ctx)
        # term ratio q^{gauss(j+1)} rho q^{-w} is non-increasing in j
        for _ in range(100_000):
            r = qp.power(self.gauss * (j + 1) - weight, ctx) * rho
            if 2 * r <= 1:
                out = total + 2 * t
                return out if ctx.exact else out * (1 + ctx.mp.ldexp(1, -40))
            total += t
            t *= r
            j += 1
        raise DivergentTail("envelope tail did not start decaying")  # pragma: no cover


@dataclass(frozen=True)
class LatticeFunction:
    """Values of a function on ``{q^n : n in window}`` plus tail descriptors.

    ``rel_error`` bounds the relative error of every value this object can
    produce (stored or closed-form); it is 0 for exactly known values.
    """

    window: LatticeWindow
    values: tuple
    upper_tail: Optional[object] = None
    lower_tail: Optional[object] = None
    closed_form: Optional[Callable[[int], Number]] = field(default=None, compare=False)
    rel_error: Number = Fraction(0)

    def __post_init__(self):
        if len(self.values) != len(self.window):
            raise InvalidParameter("values do not match the window length")

    @classmethod
    def from_values(cls, n_lo: int, values: Sequence, ctx: NumericContext, *,
                    upper_tail_bound=None, lower_tail_bound=None, upper_tail=None,
                    lower_tail=None, closed_form=None, rel_error=0):
        vals = tuple(ctx.num(v) for v in values)
        window = LatticeWindow(n_lo, n_lo + len(vals) - 1)
        if upper_tail is None and upper_tail_bound is not None:
            upper_tail = ScalarTail(Fraction(upper_tail_bound), window.n_hi)
        if lower_tail is None and lower_tail_bound is not None:
            lower_tail = ScalarTail(Fraction(lower_tail_bound), window.n_lo)
        for v in vals:
            if not ctx.exact and not ctx.mp.isfinite(v):
                raise InvalidParameter("lattice values must be finite")
        return cls(window, vals, upper_tail, lower_tail, closed_form, rel_error)

    def __call__(self, n: int) -> Number:
        if n in self.window:
            return self.values[n - self.window.n_lo]
        if self.closed_form is not None:
            return self.closed_form(n)
        raise InsufficientSupport(f"no value at lattice index {n}")

    def has(self, n: int) -> bool:
        return n in self.window or self.closed_form is not None

    def items(self):
        return zip(self.window, self.values)

    def tail_bound(self, side: str, cutoff: int, weight: int, qp: QParam, ctx: NumericContext):
        desc = self.upper_tail if side == "upper" else self.lower_tail
        if desc is None:
            raise DivergentTail(f"no {side} tail descriptor")
        return desc.bound(side, cutoff, weight, qp, ctx)

    def upper_tail_bound(self, qp, ctx):
        """Bound on ``sum_{n > n_hi} |f(q^n)| q^n``."""
        return self.tail_bound("upper", self.window.n_hi, 1, qp, ctx)

    def lower_tail_bound(self, qp, ctx):
        """Bound on ``sum_{n < n_lo} |f(q^n)| q^n``."""
        return self.tail_bound("lower", self.window.n_lo, 1, qp, ctx)

    def map(self, fn, ctx, *, closed_form=None, upper_tail=None, lower_tail=None, rel_error=None):
        """New function with values ``fn(n, value)`` on the same window."""
        vals = tuple(fn(n, v) for n, v in self.items())
        return LatticeFunction(self.window, vals,
                               self.upper_tail if upper_tail is None else upper_tail,
                               self.lower_tail if lower_tail is None else lower_tail,
                               closed_form, self.rel_error if rel_error is None else rel_error)


@dataclass(frozen=True)
class LatticeSum:
    value: Number
    certificate: TailCertificate
    abs_sum: Number
    n_range: tuple


def _extend(f, side, start, weight, qp, ctx, budget):
    """Walk outward from ``start`` until the descriptor tail beyond is <= budget."""
    step = 1 if side == "upper" else -1
    cutoff = start
    for _ in range(MAX_EXTENSION):
        try:
            b = f.tail_bound(side, cutoff, weight, qp, ctx)
        except InsufficientSupport:
            b = None
        if b is not None and b <= budget:
            return cutoff, b
        cutoff += step
    raise DivergentTail(f"{side} tail not certified within {MAX_EXTENSION} extra indices")


def lattice_sum(f: LatticeFunction, weight: int, qp: QParam, ctx: NumericContext, *,
                lo: Optional[int] = None, budget=None) -> LatticeSum:
    """``sum_n f(q^n) q^{n*weight}`` over ``n >= lo`` (all of Z when ``lo`` is None).

    Terms are added in increasing magnitude.  The certificate covers both
    tails, rounding, and the function's own ``rel_error``.
    """
    f = getattr(f, "base", f)
    budget = ctx.tol / 8 if budget is None else budget
    n_lo, n_hi = f.window.n_lo, f.window.n_hi
    tails = ctx.zero
    if f.closed_form is not None:
        n_hi, b_up = _extend(f, "upper", max(n_hi, lo if lo is not None else n_hi), weight,
                             qp, ctx, budget)
    else:
        if f.upper_tail is None:
            raise InsufficientSupport("window-only function without an upper tail bound")
        b_up = f.tail_bound("upper", n_hi, weight, qp, ctx)
    tails += b_up
    if lo is None:
        if f.closed_form is not None:
            n_lo, b_low = _extend(f, "lower", n_lo, weight, qp, ctx, budget)
        else:
            if f.lower_tail is None:
                raise DivergentTail("window-only function without a lower tail bound")
            b_low = f.tail_bound("lower", n_lo, weight, qp, ctx)
        tails += b_low
    else:
        if lo < n_lo and f.closed_form is None:
            raise InsufficientSupport(f"index {lo} below the window and no closed form")
        n_lo = lo
        if lo > n_hi:
            if f.closed_form is None:
                # everything beyond the window is charged to the upper tail bound
                return LatticeSum(ctx.zero, TailCertificate(lo, tails, "descriptor tails"),
                                  ctx.zero, (lo, lo - 1))
            n_hi = lo

    qw = qp.power(weight, ctx)
    terms = []
    # weights built outward from the window edge nearest 0 keep the power count small
    w = qp.power(n_lo * weight, ctx)
    for n in range(n_lo, n_hi + 1):
        terms.append((f(n) * w, n))
        w *= qw
    terms.sort(key=lambda t: abs(t[0]))
    total = ctx.zero
    abs_sum = ctx.zero
    for t, _ in terms:
        total += t
        abs_sum += abs(t)
    u = ctx.unit_roundoff
    ops = 4 + 2 * abs(n_lo * weight).bit_length() + (n_hi - n_lo + 1)
    rounding = abs_sum * (2 * u * (2 * ops + len(terms)) + ctx.num(f.rel_error))
    bound = tails + rounding
    method = "descriptor tails + rounding"
    return LatticeSum(total, TailCertificate(max(abs(n_lo), abs(n_hi)), bound, method),
                      abs_sum, (n_lo, n_hi))


def _scale(res: LatticeSum, factor, ctx, extra_ops=1):
    u = ctx.unit_roundoff
    value = res.value * factor
    bound = res.certificate.bound * abs(factor) + abs(value) * 2 * u * extra_ops
    return value, TailCertificate(res.certificate.truncation_index, bound, res.certificate.method)


def q_integral_0_to_x(f: LatticeFunction, m: int, qp: QParam, ctx: NumericContext):
    """Jackson integral over ``(0, q^m)``: ``x(1-q) sum_{j>=0} f(x q^j) q^j`` at ``x = q^m``."""
    res = lattice_sum(f, 1, qp, ctx, lo=m)
    return _scale(res, 1 - qp.q(ctx), ctx)


def q_integral_0_to_inf(f: LatticeFunction, qp: QParam, ctx: NumericContext):
    """Jackson integral over ``(0, inf)``: ``(1-q) sum_{n in Z} f(q^n) q^n``."""
    res = lattice_sum(f, 1, qp, ctx)
    return _scale(res, 1 - qp.q(ctx), ctx)


def q_derivative(F: Callable, x, qp: QParam, ctx: Optional[NumericContext] = None):
    """``D_q F(x) = (F(x) - F(qx)) / ((1-q) x)``."""
    if x == 0:
        raise ZeroArgument("the q-derivative is not defined at 0")
    if ctx is None:
        q = qp.value
    else:
        q = qp.q(ctx)
        x = ctx.num(x)
    return (F(x) - F(q * x)) / ((1 - q) * x)
