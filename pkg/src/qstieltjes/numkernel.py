"""Certified evaluation of the basic q-special functions.

Two arithmetic modes are supported through :class:`NumericContext`:

``float``
    binary big-floats from a private :mod:`mpmath` context (no global state is
    touched, so contexts with different precisions can coexist);
``exact``
    :class:`fractions.Fraction` arithmetic, available when ``q`` is rational.

Every infinite series or product is returned together with a
:class:`TailCertificate` whose ``bound`` is an upper bound on the absolute
error of the returned value, truncation and (in float mode) rounding included.

Conventions used throughout::

    (a; q)_j  = prod_{s=0}^{j-1} (1 - a q^s)
    e_q(t)    = prod_{j>=0} (1 - t (1-q) q^j)^{-1}
    E_q(t)    = prod_{j>=0} (1 + t (1-q) q^j)
    phi(z)    = prod_{s>=1} (1 - q^s z)

and Euler's identity ``prod_{j>=0} (1 + q^j t) = sum_j q^{j(j-1)/2} t^j / (q;q)_j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from mpmath.ctx_mp import MPContext
from mpmath.ctx_mp_python import mpf

from .errors import InvalidParameter, PoleError

Number = Union[Fraction, mpf]

MAX_FACTORS = 200_000
MAX_TERMS = 200_000
GUARD_BITS = 96


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/r"`` or a decimal string into an exact :class:`Fraction`."""
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParameter(f"cannot parse {text!r} as a rational or decimal") from exc


def _mpf_to_fraction(x) -> Fraction:
    man, exp = x.man_exp
    if exp >= 0:
        return Fraction(int(man) << exp)
    return Fraction(int(man), 1 << -exp)


class NumericContext:
    """Arithmetic mode, working precision and absolute error target.

    >>> ctx = NumericContext("float", 128, "1e-30")
    >>> ctx.decimal(ctx.num("1/3"), 10)
    '0.3333333333'
    """

    __slots__ = ("mode", "precision_bits", "target_tolerance", "_mp")

    def __init__(self, mode: str = "float", precision_bits: int = 256, target_tolerance="1e-30"):
        if mode not in ("float", "exact"):
            raise InvalidParameter(f"mode must be 'float' or 'exact', got {mode!r}")
        if int(precision_bits) != precision_bits or precision_bits < 64:
            raise InvalidParameter("precision_bits must be an integer >= 64")
        tol = target_tolerance if isinstance(target_tolerance, Fraction) else None
        if tol is None:
            if isinstance(target_tolerance, str):
                tol = parse_rational(target_tolerance)
            elif isinstance(target_tolerance, mpf):
                tol = _mpf_to_fraction(target_tolerance)
            else:
                tol = Fraction(target_tolerance)
        if tol <= 0:
            raise InvalidParameter("target_tolerance must be positive")
        self.mode = mode
        self.precision_bits = int(precision_bits)
        self.target_tolerance = tol
        self._mp = MPContext()
        self._mp.prec = self.precision_bits

    def __repr__(self):
        return (f"NumericContext(mode={self.mode!r}, precision_bits={self.precision_bits}, "
                f"target_tolerance={float(self.target_tolerance):.3g})")

    def __eq__(self, other):
        if not isinstance(other, NumericContext):
            return NotImplemented
        return (self.mode, self.precision_bits, self.target_tolerance) == (
            other.mode, other.precision_bits, other.target_tolerance)

    def __hash__(self):
        return hash((self.mode, self.precision_bits, self.target_tolerance))

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    @property
    def mp(self) -> MPContext:
        """The private mpmath context (used for logarithms in either mode)."""
        return self._mp

    def with_precision(self, bits: int) -> "NumericContext":
        return NumericContext(self.mode, bits, self.target_tolerance)

    def with_tolerance(self, tol) -> "NumericContext":
        return NumericContext(self.mode, self.precision_bits, tol)

    # conversions -------------------------------------------------------
    def num(self, x) -> Number:
        """Convert ``x`` to the working number type of this context."""
        if self.exact:
            if isinstance(x, Fraction):
                return x
            if isinstance(x, str):
                return parse_rational(x)
            if isinstance(x, mpf):
                return _mpf_to_fraction(x)
            return Fraction(x)
        mp = self._mp
        if isinstance(x, Fraction):
            if x.denominator == 1:
                return mp.mpf(x.numerator)
            return mp.mpf(x.numerator) / x.denominator
        if isinstance(x, str):
            if "/" in x:
                return self.num(parse_rational(x))
            return mp.mpf(x.strip())
        return mp.mpf(x)

    def to_mpf(self, x) -> mpf:
        """Convert to a big-float of this context's precision regardless of mode."""
        mp = self._mp
        if isinstance(x, Fraction):
            if x.denominator == 1:
                return mp.mpf(x.numerator)
            return mp.mpf(x.numerator) / x.denominator
        return mp.mpf(x)

    @property
    def zero(self) -> Number:
        return Fraction(0) if self.exact else self._mp.zero

    @property
    def one(self) -> Number:
        return Fraction(1) if self.exact else self._mp.one

    @property
    def tol(self) -> Number:
        return self.num(self.target_tolerance)

    @property
    def unit_roundoff(self) -> Number:
        """Relative rounding error of one arithmetic operation (0 in exact mode)."""
        if self.exact:
            return Fraction(0)
        return self._mp.ldexp(self._mp.one, -self.precision_bits + 1)

    def log(self, x) -> mpf:
        return self._mp.ln(self.to_mpf(x))

    def decimal(self, x, digits: Optional[int] = None) -> str:
        """Full-precision decimal string of ``x`` (deterministic formatting)."""
        if digits is None:
            digits = max(17, int(self.precision_bits * math.log10(2)))
        return self._mp.nstr(self.to_mpf(x), digits)


@dataclass(frozen=True)
class TailCertificate:
    """Proven bound on the absolute error of a truncated series or product.

    ``relative`` is filled for products, where a relative bound is the natural
    output of the log-domain tail estimate.
    """

    truncation_index: int
    bound: Number
    method: str
    relative: Optional[Number] = None

    def __add__(self, other: "TailCertificate") -> "TailCertificate":
        return TailCertificate(max(self.truncation_index, other.truncation_index),
                               self.bound + other.bound, f"{self.method} + {other.method}")


def exact_zero_certificate(index: int, ctx: NumericContext) -> TailCertificate:
    return TailCertificate(index, ctx.zero, "structural zero", ctx.zero)


class QParam:
    """The base ``q`` of the lattice, held as an exact rational.

    Inputs given as ``Fraction``, ``int`` pairs or strings (``"1/2"``,
    ``"0.9"``) are exact; Python floats and mpf values are converted exactly
    from their binary value but flagged as not declared rational, which keeps
    exact mode from silently using a binary approximation of a decimal.
    """

    __slots__ = ("value", "is_rational", "_log_inv_q")

    def __init__(self, q):
        if isinstance(q, QParam):
            self.value, self.is_rational, self._log_inv_q = q.value, q.is_rational, q._log_inv_q
            return
        if isinstance(q, Fraction):
            value, rational = q, True
        elif isinstance(q, int):
            value, rational = Fraction(q), True
        elif isinstance(q, str):
            value, rational = parse_rational(q), True
        elif isinstance(q, float):
            value, rational = Fraction(q), False
        elif isinstance(q, mpf):
            value, rational = _mpf_to_fraction(q), False
        else:
            raise InvalidParameter(f"unsupported type for q: {type(q).__name__}")
        if not 0 < value < 1:
            raise InvalidParameter(f"q must lie strictly between 0 and 1, got {value}")
        self.value = value
        self.is_rational = rational
        self._log_inv_q = math.log(value.denominator) - math.log(value.numerator)

    def __repr__(self):
        return f"QParam({self.value})"

    def __eq__(self, other):
        return isinstance(other, QParam) and self.value == other.value

    def __hash__(self):
        return hash(self.value)

    @property
    def log_inv_q(self) -> float:
        """ln(1/q) in double precision (enough for bookkeeping)."""
        return self._log_inv_q

    def q(self, ctx: NumericContext) -> Number:
        self.check_mode(ctx)
        return ctx.num(self.value)

    def power(self, n: int, ctx: NumericContext) -> Number:
        """``q**n`` for any integer ``n``; exact in exact mode."""
        self.check_mode(ctx)
        if ctx.exact:
            return self.value ** n
        return ctx.num(self.value) ** n

    def check_mode(self, ctx: NumericContext) -> None:
        if ctx.exact and not self.is_rational:
            raise InvalidParameter("exact mode requires q to be declared rational")


def lattice_exponent(x, qp: QParam, ctx: NumericContext) -> Optional[int]:
    """Return ``m`` with ``x == q**m``, or None.

    Exact for rational ``x``; for big-floats ``x`` the match is accepted at
    relative distance below ``2**(-precision/2)``.
    """
    if isinstance(x, (int, Fraction)) or ctx.exact:
        xf = Fraction(x) if not isinstance(x, mpf) else _mpf_to_fraction(x)
        if xf <= 0:
            return None
        approx = (math.log(xf.numerator) - math.log(xf.denominator)) / -qp.log_inv_q
        m = round(approx)
        if abs(approx - m) > 1e-6:
            return None
        return m if qp.value ** m == xf else None
    mp = ctx.mp
    x = ctx.num(x)
    if x <= 0:
        return None
    m = int(mp.nint(mp.ln(x) / mp.ln(ctx.num(qp.value))))
    dist = abs(x / qp.power(m, ctx) - 1)
    return m if dist < mp.ldexp(1, -ctx.precision_bits // 2) else None


# finite products ---------------------------------------------------------------

def q_pochhammer(a, qp: QParam, j: int, ctx: Optional[NumericContext] = None) -> Number:
    """``(a; q)_j``; exact when ``ctx`` is exact (or omitted) and ``a`` rational."""
    if j < 0:
        raise InvalidParameter("q_pochhammer needs j >= 0")
    if ctx is None:
        ctx = NumericContext("exact")
    a = ctx.num(a)
    q = qp.q(ctx)
    out, qs = ctx.one, ctx.one
    for _ in range(j):
        out *= 1 - a * qs
        qs *= q
    return out


def qq_factorials(qp: QParam, J: int, ctx: NumericContext) -> list:
    """``[(q;q)_0, ..., (q;q)_J]``."""
    q = qp.q(ctx)
    out = [ctx.one]
    qs = q
    for _ in range(J):
        out.append(out[-1] * (1 - qs))
        qs *= q
    return out


# infinite products -------------------------------------------------------------

def geometric_product(c, start: int, qp: QParam, ctx: NumericContext, *,
                      reciprocal: bool = False, relative_only: bool = False):
    """``prod_{s>=start} (1 + c q^s)`` (or its reciprocal) with certificate.

    A vanishing factor is detected structurally from ``c`` before anything is
    multiplied; the product is then exactly 0 (reciprocal: :class:`PoleError`).

    Truncation after factor ``N`` once ``|c q^(N+1)| <= 1/2``; the tail then
    satisfies ``|ln prod_{s>N}| <= 2 |c| q^(N+1) / (1-q) =: L`` and the
    relative error of the partial product is at most ``exp(L)-1 <= 2L``.
    """
    c = ctx.num(c)
    q = qp.q(ctx)
    if c < 0:
        m = lattice_exponent(-c, qp, ctx)
        if m is not None and -m >= start:
            if reciprocal:
                raise PoleError(f"factor s={-m} vanishes")
            return ctx.zero, exact_zero_certificate(-m, ctx)
    tol = ctx.tol
    u = ctx.unit_roundoff
    one_minus_q = 1 - q
    x = c * qp.power(start, ctx)
    P = ctx.one
    err_units = 2.0 + 2.0 * abs(start).bit_length()
    s = start
    for _ in range(MAX_FACTORS):
        factor = 1 + x
        P *= factor
        if not ctx.exact and factor != 0:
            err_units += 3.0 + (s - start + 2) * float(abs(x / factor))
        x *= q
        s += 1
        if 2 * abs(x) <= 1:
            rel_trunc = 4 * abs(x) / one_minus_q
            size = abs(1 / P) if reciprocal else abs(P)
            if rel_trunc <= tol / 4 and (relative_only or size * rel_trunc <= tol / 4):
                break
    else:  # pragma: no cover - geometric decay guarantees termination
        raise RuntimeError("product did not reach the truncation target")
    value = 1 / P if reciprocal else P
    rel = rel_trunc if ctx.exact else rel_trunc + 2 * u * err_units
    method = "log-geometric tail (ln(1+x) <= 2|x|)"
    if not ctx.exact:
        method += " + rounding"
    return value, TailCertificate(s - 1, abs(value) * rel, method, rel)


def log_geometric_product(c, start: int, qp: QParam, ctx: NumericContext):
    """``ln prod_{s>=start} (1 + c q^s)`` for ``c >= 0`` summed in the log domain.

    Returns ``(value, abs_error_bound)`` as big-floats.
    """
    mp = ctx.mp
    c = ctx.to_mpf(c)
    if c < 0:
        raise InvalidParameter("log-domain product needs c >= 0")
    q = ctx.to_mpf(qp.value)
    tol = ctx.to_mpf(ctx.target_tolerance)
    u = mp.ldexp(1, -ctx.precision_bits + 1)
    x = c * q ** start
    acc = mp.zero
    n = 0
    for _ in range(MAX_FACTORS):
        acc += mp.log1p(x)
        n += 1
        x *= q
        # ln(1+x) <= x for x >= 0
        tail = x / (1 - q)
        if tail <= tol / 4:
            break
    err = tail + u * (4 * n + 4) * (abs(acc) + n)
    return acc, err


def e_q(t, qp: QParam, ctx: NumericContext):
    """Small q-exponential ``e_q(t)``; raises :class:`PoleError` on a pole."""
    t = ctx.num(t)
    c = -t * (1 - qp.q(ctx))
    if t == 0:
        return ctx.one, TailCertificate(0, ctx.zero, "exact", ctx.zero)
    return geometric_product(c, 0, qp, ctx, reciprocal=True)


def E_q(t, qp: QParam, ctx: NumericContext):
    """Big q-exponential ``E_q(t) = 1/e_q(-t)``."""
    t = ctx.num(t)
    if t == 0:
        return ctx.one, TailCertificate(0, ctx.zero, "exact", ctx.zero)
    return geometric_product(t * (1 - qp.q(ctx)), 0, qp, ctx)


def euler_product(t, qp: QParam, ctx: NumericContext):
    """``prod_{j>=0} (1 + q^j t) = E_q(t/(1-q))``."""
    return geometric_product(t, 0, qp, ctx)


def phi(z, qp: QParam, ctx: NumericContext):
    """``prod_{s>=1} (1 - q^s z)``; exactly 0 at ``z = q^-m``, ``m >= 1``.

    Rational ``z`` is matched against the lattice exactly, in either mode.
    """
    if isinstance(z, (int, Fraction)) and z > 0:
        m = lattice_exponent(Fraction(z), qp, ctx)
        if m is not None and m <= -1:
            return ctx.zero, exact_zero_certificate(-m, ctx)
    return geometric_product(-ctx.num(z), 1, qp, ctx)


# series ------------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesResult:
    value: Number
    certificate: TailCertificate
    max_term: Number
    abs_sum: Number
    terms: int


def sum_ratio_series(a0, ratio: Callable[[int], Number], ctx: NumericContext, *,
                     ops_per_step: float = 6.0, tol=None, label: str = "series") -> SeriesResult:
    """Sum ``a_0 + a_1 + ...`` with ``a_{j+1} = a_j * ratio(j)``.

    The caller guarantees that ``|ratio(j)|`` is non-increasing in ``j``.
    Summation stops before term ``N`` once ``|a_N| <= tol/4`` and
    ``|a_N| <= |a_{N-1}|/2``; the omitted tail is then at most ``2|a_N|``.
    In float mode a first-order rounding bound is added (recursive term
    generation plus recursive summation, with a factor-2 margin).
    """
    tol = ctx.tol if tol is None else tol
    u = ctx.unit_roundoff
    a = ctx.num(a0)
    total = ctx.zero
    abs_sum = ctx.zero
    weighted = ctx.zero
    max_term = abs(a)
    err_units = 1.0
    j = 0
    for _ in range(MAX_TERMS):
        total += a
        abs_a = abs(a)
        abs_sum += abs_a
        if not ctx.exact:
            weighted += abs_a * err_units
        if abs_a > max_term:
            max_term = abs_a
        nxt = a * ratio(j)
        j += 1
        err_units += ops_per_step + 2.0 * j
        abs_nxt = abs(nxt)
        if abs_nxt <= tol / 4 and (a == 0 or 2 * abs_nxt <= abs_a):
            tail = 2 * abs_nxt
            break
        a = nxt
    else:
        raise RuntimeError(f"{label} did not converge within {MAX_TERMS} terms")
    rounding = 2 * u * (weighted + j * abs_sum)
    method = "geometric tail (ratio <= 1/2), 2x first omitted term"
    if not ctx.exact:
        method += " + rounding"
    return SeriesResult(total, TailCertificate(j, tail + rounding, method), max_term, abs_sum, j)


def euler_series(t, qp: QParam, ctx: NumericContext):
    """``sum_j q^{j(j-1)/2} t^j / (q;q)_j`` with certificate."""
    t = ctx.num(t)
    q = qp.q(ctx)
    qpow = [ctx.one]

    def ratio(j):
        # a_{j+1}/a_j = q^j t / (1 - q^{j+1}); |.| decreases in j
        while len(qpow) <= j + 1:
            qpow.append(qpow[-1] * q)
        return qpow[j] * t / (1 - qpow[j + 1])

    res = sum_ratio_series(ctx.one, ratio, ctx, label="euler_series")
    return res.value, res.certificate


def orthogonality_series(k: int, qp: QParam, ctx: NumericContext, *, tol=None) -> SeriesResult:
    """``sum_{j>=0} (-1)^j q^{j(j+1)/2} q^{-j(k+1)} / (q;q)_j``, i.e. ``phi(q^-(k+1))``
    expanded by Euler's identity."""
    q = qp.q(ctx)
    w = qp.power(-(k + 1), ctx)
    qpow = [ctx.one]

    def ratio(j):
        # a_{j+1}/a_j = -q^{j+1} q^{-(k+1)} / (1 - q^{j+1})
        while len(qpow) <= j + 1:
            qpow.append(qpow[-1] * q)
        return -qpow[j + 1] * w / (1 - qpow[j + 1])

    return sum_ratio_series(ctx.one, ratio, ctx, tol=tol, label="orthogonality_series")


def required_precision(K: int, qp: QParam) -> int:
    """Working bits for cancellation-safe orthogonality sums up to order ``K``.

    The peak term of the order-K sum is about ``q^{-(K+1)^2/2}``.
    """
    if K < 0:
        raise InvalidParameter("K must be nonnegative")
    log2_inv_q = math.log2(qp.value.denominator) - math.log2(qp.value.numerator)
    if qp.value.numerator == 1 and qp.value.denominator & (qp.value.denominator - 1) == 0:
        log2_inv_q = float(qp.value.denominator.bit_length() - 1)
    return math.ceil(Fraction((K + 1) ** 2, 2) * Fraction(log2_inv_q)) + GUARD_BITS
