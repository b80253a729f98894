"""q-moment determinacy classification.

Proofs are only issued for the q-exponential family, where the lattice values
at large points factor as ``f(q^{-j}) = lam e_q(-lam) q^{j(j+1)/2} A_j`` and
the dichotomy ``lam <= 1/(1-q)`` (indeterminate) / ``lam > 1/(1-q)``
(determinate) is decided by exact rational comparison.  For any other density
a finite scan of ``r_j = f(q^{-j}) / q^{j(j+1)/2}`` can only produce evidence.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import InsufficientSupport, InvalidParameter
from .numkernel import NumericContext, QParam, e_q, geometric_product
from .qdensity import QExponential, as_fraction

# evidence thresholds, reported verbatim in every ClassificationReport
W_TREND_FRACTION = Fraction(1, 2)   # last-third inf must stay >= this * first-third inf
DECAY_DROP_FACTOR = Fraction(1, 4)  # r_J <= this * r_{J/2}


class Verdict(str, enum.Enum):
    INDETERMINATE_PROVED = "indeterminate_proved"
    DETERMINATE_PROVED = "determinate_proved"
    INDETERMINATE_EVIDENCE = "indeterminate_evidence"
    DETERMINATE_EVIDENCE = "determinate_evidence"
    INCONCLUSIVE = "inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ClassificationReport:
    verdict: Verdict
    witness: tuple
    constant_estimate: object
    rationale: str
    thresholds: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    ctx: Optional[NumericContext] = field(default=None, compare=False)

    @property
    def proved(self) -> bool:
        return self.verdict in (Verdict.INDETERMINATE_PROVED, Verdict.DETERMINATE_PROVED)

    def to_dict(self) -> dict:
        ctx = self.ctx or NumericContext()
        fmt = lambda v: ctx.decimal(v, 30)
        out = {
            "verdict": self.verdict.value,
            "rationale": self.rationale,
            "constant_estimate": fmt(self.constant_estimate),
            "witness": [fmt(r) for r in self.witness],
            "thresholds": {k: str(v) for k, v in self.thresholds.items()},
        }
        for k, v in self.details.items():
            if isinstance(v, (list, tuple)):
                out[k] = [fmt(x) if not isinstance(x, (bool, int, str)) else x for x in v]
            elif isinstance(v, (bool, int, str)):
                out[k] = v
            else:
                out[k] = fmt(v)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def compute_A(j: int, lam, qp: QParam, ctx: Optional[NumericContext] = None):
    """``A_j = prod_{s=1}^{j} 1 / (q^s + lam(1-q))``; exact in exact mode."""
    if j < 0:
        raise InvalidParameter("j must be nonnegative")
    lam = as_fraction(lam)
    if lam <= 0:
        raise InvalidParameter("lambda must be positive")
    ctx = ctx or NumericContext("exact")
    q = qp.q(ctx)
    c = ctx.num(lam) * (1 - q)
    out = ctx.one
    qs = ctx.one
    for _ in range(j):
        qs *= q
        out /= qs + c
    return out


def A_sequence(J: int, lam, qp: QParam, ctx: NumericContext) -> list:
    """``[A_0, ..., A_J]`` via ``A_{j+1} = A_j / (q^{j+1} + lam(1-q))``."""
    q = qp.q(ctx)
    c = ctx.num(as_fraction(lam)) * (1 - q)
    out = [ctx.one]
    qs = ctx.one
    for _ in range(J):
        qs *= q
        out.append(out[-1] / (qs + c))
    return out


def classify_q_exponential(lam, qp: QParam, ctx: Optional[NumericContext] = None,
                           J: int = 60) -> ClassificationReport:
    """Proved verdict for ``lam e_q(-lam t)``: indeterminate iff ``lam <= 1/(1-q)``."""
    lam = as_fraction(lam)
    if lam <= 0:
        raise InvalidParameter(f"lambda must be positive, got {lam}")
    qp = QParam(qp)
    ctx = ctx or NumericContext("float", 128, "1e-30")
    if ctx.exact and not qp.is_rational:
        ctx = NumericContext("float", ctx.precision_bits, ctx.target_tolerance)
    threshold = 1 / (1 - qp.value)
    A = A_sequence(J, lam, qp, ctx)
    K0 = ctx.num(lam) * e_q(-lam, qp, ctx)[0]
    witness = tuple(K0 * a for a in A)
    if lam <= threshold:
        Cq, _ = geometric_product(1, 1, qp, ctx, reciprocal=True)
        # A_j >= C_q; rounding slack of a few ulps on both sides
        slack = 1 - 64 * J * ctx.unit_roundoff
        holds = all(a >= Cq * slack for a in A)
        return ClassificationReport(
            Verdict.INDETERMINATE_PROVED, witness, min(witness),
            f"lam(1-q) = {lam * (1 - qp.value)} <= 1, so A_j >= prod_(s>=1) 1/(1+q^s) > 0 and "
            "f(q^-j) >= C q^(j(j+1)/2): a q-perturbation exists",
            {"lambda_threshold": threshold},
            {"A": A, "bound": "A_j >= C_q = prod 1/(1+q^s)", "C_q": Cq, "bound_holds": holds},
            ctx)
    rho = 1 / (ctx.num(lam) * (1 - qp.q(ctx)))
    slack = 1 + 64 * J * ctx.unit_roundoff
    holds = all(a <= rho ** j * slack for j, a in enumerate(A))
    return ClassificationReport(
        Verdict.DETERMINATE_PROVED, witness, min(witness),
        f"lam(1-q) = {lam * (1 - qp.value)} > 1, so A_j <= (lam(1-q))^-j -> 0 and "
        "f(q^-j) = o(q^(j(j+1)/2)): q-moment determinate",
        {"lambda_threshold": threshold},
        {"A": A, "bound": "A_j <= (lam(1-q))^-j", "bound_holds": holds}, ctx)


def ratio_sequence(f, J: int, ctx: Optional[NumericContext] = None) -> list:
    """``r_j = f(q^{-j}) / q^{j(j+1)/2}`` for ``j = 0..J``."""
    ctx = ctx or f.ctx
    qp = f.q
    return [f(-j) / qp.power(j * (j + 1) // 2, ctx) for j in range(J + 1)]


def scan_depth(f, J: int) -> int:
    """``J`` clipped to the lower-index points ``f`` can actually evaluate."""
    try:
        f(-J)
        depth = J
    except InsufficientSupport:
        depth = min(J, -f.window.n_lo)
    if depth < 3:
        raise InvalidParameter(f"a scan needs values at q^0..q^-3; window starts at {f.window.n_lo}")
    return depth


def check_condition_W(f, J: int, ctx: Optional[NumericContext] = None, C=None
                      ) -> ClassificationReport:
    """Evidence for ``f(q^{-j}) >= C q^{j(j+1)/2}`` over a finite scan.

    The trend test compares the infimum over the last third of the scan with
    the infimum over the first third; a drop below half of it is read as
    ``r_j`` heading to 0.
    """
    ctx = ctx or f.ctx
    J = scan_depth(f, J)
    r = ratio_sequence(f, J, ctx)
    inf_all = min(r)
    third = max(1, (J + 1) // 3)
    inf_lead = min(r[:third])
    inf_last = min(r[-third:])
    declared = inf_all if C is None else ctx.num(as_fraction(C))
    thresholds = {"trend_fraction": W_TREND_FRACTION, "scan_depth": J,
                  "declared_C": "scan infimum" if C is None else as_fraction(C)}
    not_trending = inf_last >= ctx.num(W_TREND_FRACTION) * inf_lead
    if declared > 0 and inf_all >= declared and not_trending:
        verdict = Verdict.INDETERMINATE_EVIDENCE
        why = "r_j stays bounded below over the scan (finite scan: evidence only)"
    else:
        verdict = Verdict.INCONCLUSIVE
        why = ("r_j drops below half its first-third infimum in the last third of the scan"
               if not not_trending else "scan infimum is below the declared constant")
    return ClassificationReport(verdict, tuple(r), inf_all, why, thresholds,
                                {"inf_first_third": inf_lead, "inf_last_third": inf_last}, ctx)


def check_decay_condition(f, J: int, ctx: Optional[NumericContext] = None
                          ) -> ClassificationReport:
    """Evidence for ``f(q^{-j}) = o(q^{j(j+1)/2})``: ``r_j`` strictly decreasing over the
    last half of the scan and ``r_J <= r_{J/2} / 4``."""
    ctx = ctx or f.ctx
    J = scan_depth(f, J)
    r = ratio_sequence(f, J, ctx)
    half = J // 2
    decreasing = all(r[j + 1] < r[j] for j in range(half, J))
    dropped = r[J] <= ctx.num(DECAY_DROP_FACTOR) * r[half]
    thresholds = {"drop_factor": DECAY_DROP_FACTOR, "scan_depth": J}
    if decreasing and dropped:
        verdict, why = Verdict.DETERMINATE_EVIDENCE, \
            "r_j decreases over the last half of the scan and fell by the drop factor"
    else:
        verdict, why = Verdict.INCONCLUSIVE, "no clear decay of r_j over the scan"
    return ClassificationReport(verdict, tuple(r), min(r), why, thresholds,
                                {"decreasing_last_half": decreasing, "dropped": dropped}, ctx)


def classify(f, J: int = 60, ctx: Optional[NumericContext] = None) -> ClassificationReport:
    """Proved verdict for q-exponential handles, scan evidence otherwise."""
    ctx = ctx or f.ctx
    if isinstance(getattr(f, "family", None), QExponential):
        return classify_q_exponential(f.family.lam, f.q, ctx, J)
    w = check_condition_W(f, J, ctx)
    if w.verdict is Verdict.INDETERMINATE_EVIDENCE:
        return w
    d = check_decay_condition(f, J, ctx)
    if d.verdict is Verdict.DETERMINATE_EVIDENCE:
        return d
    return ClassificationReport(Verdict.INCONCLUSIVE, w.witness, w.constant_estimate,
                                "neither a lower bound nor decay of r_j is visible in the scan",
                                {**w.thresholds, **d.thresholds}, {}, ctx)
