"""q-moments ``m_q(k) = (1-q) sum_n f(q^n) q^{n(k+1)}`` and moment-table comparison."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional

from .errors import DivergentMoment, DivergentTail, OrderMismatch
from .jackson import lattice_sum, _scale
from .numkernel import Number, NumericContext, QParam, TailCertificate


def q_moment(f, k: int, ctx: Optional[NumericContext] = None):
    """k-th q-moment of a density handle, with certificate.

    Whether the moment exists is decided by the tail descriptor of ``f``; a
    descriptor that cannot bound the weighted tail raises :class:`DivergentMoment`.
    """
    ctx = ctx or f.ctx
    qp = f.q
    try:
        res = lattice_sum(f.base, k + 1, qp, ctx)
    except DivergentTail as exc:
        raise DivergentMoment(f"q-moment of order {k} not certified finite: {exc}", k=k) from exc
    return _scale(res, 1 - qp.q(ctx), ctx)


@dataclass(frozen=True)
class MomentTable:
    q: QParam
    values: tuple
    certificates: tuple
    ctx: NumericContext

    @property
    def K(self) -> int:
        return len(self.values) - 1

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def rows(self):
        for k, (v, c) in enumerate(zip(self.values, self.certificates)):
            yield k, v, c

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "value", "certificate"])
        for k, v, c in self.rows():
            w.writerow([k, self.ctx.decimal(v), self.ctx.decimal(c.bound, 6)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "q": f"{self.q.value.numerator}/{self.q.value.denominator}",
            "mode": self.ctx.mode,
            "precision_bits": self.ctx.precision_bits,
            "moments": [{"k": k, "value": self.ctx.decimal(v),
                         "certificate": self.ctx.decimal(c.bound, 6)} for k, v, c in self.rows()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def moment_table(f, K: int, ctx: Optional[NumericContext] = None) -> MomentTable:
    """Moments of orders ``0..K`` under one context."""
    ctx = ctx or f.ctx
    vals, certs = [], []
    for k in range(K + 1):
        v, c = q_moment(f, k, ctx)
        vals.append(v)
        certs.append(c)
    return MomentTable(f.q, tuple(vals), tuple(certs), ctx)


@dataclass(frozen=True)
class TableComparison:
    match: bool
    max_deviation: Number
    worst_k: int
    first_mismatch: Optional[int]
    deviations: tuple
    allowances: tuple

    def __bool__(self):
        return self.match


def tables_match(A: MomentTable, B: MomentTable) -> TableComparison:
    """``|A_k - B_k| <= cert_A(k) + cert_B(k)`` for every order."""
    if A.K != B.K:
        raise OrderMismatch(f"tables have orders {A.K} and {B.K}")
    if A.q != B.q:
        raise OrderMismatch("tables were computed for different q")
    devs, allow = [], []
    first = None
    for k in range(A.K + 1):
        d = abs(A.values[k] - B.values[k])
        a = A.certificates[k].bound + B.certificates[k].bound
        devs.append(d)
        allow.append(a)
        if d > a and first is None:
            first = k
    worst = max(range(len(devs)), key=lambda k: devs[k])
    return TableComparison(first is None, devs[worst], worst, first, tuple(devs), tuple(allow))
