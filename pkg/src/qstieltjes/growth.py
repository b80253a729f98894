"""Maximum-modulus growth of the entire and Laurent functions behind determinacy.

Every function handled here has nonnegative Taylor/Laurent coefficients or a
product form, so ``M(r; .)`` is read off the positive (or negative) real axis
without sampling the circle.  ``phi(z) = prod_{s>=1}(1 - q^s z)`` attains its
maximum on ``|z| = r`` at ``z = -r``, giving ``M(r; phi) = prod_{s>=1}(1 + q^s r)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional

from .numkernel import NumericContext, QParam, geometric_product, log_geometric_product


def max_modulus_phi(r, qp: QParam, ctx: NumericContext):
    """``M(r; phi) = prod_{s>=1} (1 + q^s r)`` with a relative-error certificate."""
    return geometric_product(r, 1, qp, ctx, relative_only=True)


def log_max_modulus_phi(r, qp: QParam, ctx: NumericContext):
    """``ln M(r; phi)`` accumulated in the log domain; returns ``(value, error_bound)``."""
    return log_geometric_product(r, 1, qp, ctx)


def laurent_max_modulus(coeffs: dict, r, ctx: Optional[NumericContext] = None):
    """``M(r; sum c_n z^n)`` over a finite coefficient window.

    Returns ``(value, exact)``: with nonnegative coefficients the maximum is
    attained at ``z = r`` and equals ``sum c_n r^n``; otherwise the triangle
    bound ``sum |c_n| r^n`` is returned with ``exact=False``.
    """
    ctx = ctx or NumericContext()
    r = ctx.num(r)
    exact = all(c >= 0 for c in coeffs.values())
    total = ctx.zero
    for n in sorted(coeffs):
        total += abs(ctx.num(coeffs[n])) * r ** n
    return total, exact


@dataclass(frozen=True)
class GrowthReport:
    """``ln M`` against an envelope ``ln^2 r / (2 ln(1/q)) + sign * ln r / 2`` at ``r = q^{-m}``."""

    label: str
    q: QParam
    ms: tuple
    log_M: tuple
    envelope: tuple
    deviations: tuple
    errors: tuple
    ctx: NumericContext

    @property
    def min_deviation(self):
        return min(self.deviations)

    @property
    def max_deviation(self):
        return max(self.deviations)

    def window(self, m_lo: int, m_hi: int) -> list:
        return [d for m, d in zip(self.ms, self.deviations) if m_lo <= m <= m_hi]

    def spread(self, m_lo: int, m_hi: int):
        ds = self.window(m_lo, m_hi)
        return max(ds) - min(ds)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "ln_M", "envelope", "deviation"])
        for m, lm, env, d in zip(self.ms, self.log_M, self.envelope, self.deviations):
            w.writerow([m, self.ctx.decimal(lm, 30), self.ctx.decimal(env, 30),
                        self.ctx.decimal(d, 30)])
        return buf.getvalue()


def _envelope(m: int, L, sign: int):
    # ln r = m L  =>  ln^2 r / (2L) + sign * ln r / 2 = m^2 L / 2 + sign * m L / 2
    return m * m * L / 2 + sign * m * L / 2


def zeng_envelope_check(qp: QParam, m_range: Iterable[int], ctx: NumericContext) -> GrowthReport:
    """Deviation of ``ln E_q(t/(1-q))`` from ``ln^2 t/(2 ln(1/q)) + ln t / 2`` at ``t = q^{-m}``."""
    mp = ctx.mp
    L = mp.ln(1 / ctx.to_mpf(qp.value))
    ms, logs, envs, devs, errs = [], [], [], [], []
    for m in m_range:
        t = ctx.to_mpf(qp.value) ** (-m)
        lv, err = log_geometric_product(t, 0, qp, ctx)
        env = _envelope(m, L, +1)
        ms.append(m)
        logs.append(lv)
        envs.append(env)
        devs.append(lv - env)
        errs.append(err)
    return GrowthReport("zeng", qp, tuple(ms), tuple(logs), tuple(envs), tuple(devs),
                        tuple(errs), ctx)


def zeng_stabilizes(report: GrowthReport) -> bool:
    """Spread of deviations over the upper half of the range is below that of the lower half."""
    lo, hi = report.ms[0], report.ms[-1]
    mid = (lo + hi) // 2
    return report.spread(mid, hi) < report.spread(lo, mid)


def lemma2_lower_bound_check(qp: QParam, m_range: Iterable[int], ctx: NumericContext
                             ) -> GrowthReport:
    """``ln M(q^{-m}; phi)`` minus ``ln^2 r/(2 ln(1/q)) - ln r / 2``.

    ``phi`` vanishes at every ``q^{-m}``, ``m >= 1``, so the lower bound must
    hold with some constant; its logarithm is reported as the minimum deviation.
    """
    mp = ctx.mp
    L = mp.ln(1 / ctx.to_mpf(qp.value))
    ms, logs, envs, devs, errs = [], [], [], [], []
    for m in m_range:
        r = ctx.to_mpf(qp.value) ** (-m)
        lv, err = log_max_modulus_phi(r, qp, ctx)
        env = _envelope(m, L, -1)
        ms.append(m)
        logs.append(lv)
        envs.append(env)
        devs.append(lv - env)
        errs.append(err)
    return GrowthReport("lemma2", qp, tuple(ms), tuple(logs), tuple(envs), tuple(devs),
                        tuple(errs), ctx)


def lemma2_stabilizes(report: GrowthReport, within=1.0) -> bool:
    """Last-quarter infimum of the deviations is within ``within`` of the last-half infimum."""
    n = len(report.deviations)
    last_half = report.deviations[n // 2:]
    last_quarter = report.deviations[(3 * n) // 4:]
    return abs(min(last_quarter) - min(last_half)) <= within


def lemma1_ratios(coeffs: dict, qp: QParam, m_range: Iterable[int], ctx: NumericContext) -> list:
    """``M(r; psi) / M(r; phi)`` at ``r = q^{-m}`` for a Laurent polynomial ``psi``."""
    out = []
    for m in m_range:
        r = ctx.to_mpf(qp.value) ** (-m)
        num, _ = laurent_max_modulus(coeffs, r, ctx)
        den, _ = max_modulus_phi(r, qp, ctx)
        out.append((m, num / den))
    return out
