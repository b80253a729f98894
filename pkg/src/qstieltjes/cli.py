"""Command-line front end: ``qstieltjes {moments,stieltjes,classify,identities}``.

All numbers are written as decimal strings; identical invocations produce
byte-identical output.  Failures print a JSON error object on stderr and exit
with the code tabulated in ``EXIT_CODES``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import determinacy, growth
from .errors import (DivergentMoment, EpsilonOutOfRange, InvalidParameter, PrecisionInsufficient,
                     QCalculusError, UnboundedPerturbation)
from .numkernel import (NumericContext, QParam, e_q, E_q, euler_product, euler_series,
                        parse_rational, phi, required_precision)
from .qdensity import density_from_json, make_q_exponential
from .qmoments import moment_table
from .stieltjes import DEFAULT_EPSILONS, verify_class

ENV_PRECISION = "QSTIELTJES_PRECISION_BITS"
ENV_TOLERANCE = "QSTIELTJES_TOLERANCE"
DEFAULT_PRECISION = 256
DEFAULT_TOLERANCE = "1e-30"

EXIT_CODES = {
    "ok": 0,
    "bad_input": 2,
    "divergent_moment": 3,
    "precision_insufficient": 4,
    "unbounded_perturbation": 5,
    "internal": 1,
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    q: QParam
    mode: str
    precision_bits: int
    tolerance: Fraction
    output: str
    explicit_precision: bool = False

    def context(self, precision_bits: Optional[int] = None) -> NumericContext:
        return NumericContext(self.mode, precision_bits or self.precision_bits, self.tolerance)


def _parse_q(text: str) -> QParam:
    qp = QParam(text)
    if "/" not in text and not text.strip().isdigit():
        # decimal syntax declares a float-mode parameter
        qp = QParam(qp.value)
        qp.is_rational = False
    return qp


def make_config(args) -> RunConfig:
    qp = _parse_q(args.q)
    mode = args.mode
    if mode == "exact" and not qp.is_rational:
        raise InvalidParameter("exact mode requires q in p/r syntax")
    explicit = args.precision_bits is not None or ENV_PRECISION in os.environ
    bits = args.precision_bits
    if bits is None:
        bits = int(os.environ.get(ENV_PRECISION, DEFAULT_PRECISION))
    tol = args.tolerance or os.environ.get(ENV_TOLERANCE, DEFAULT_TOLERANCE)
    return RunConfig(qp, mode, int(bits), parse_rational(tol), args.output, explicit)


def _load_density(args, cfg: RunConfig, ctx: NumericContext):
    if args.density_file:
        try:
            with open(args.density_file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InvalidParameter(f"cannot read density file: {exc}") from exc
        try:
            f = density_from_json(text, ctx)
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"density file is not valid JSON: {exc}") from exc
        if f.q != cfg.q:
            raise InvalidParameter(f"density file has q={f.q.value}, command line q={cfg.q.value}")
        return f
    if args.lam is None:
        raise InvalidParameter("either --lambda or --density-file is required")
    return make_q_exponential(parse_rational(args.lam), cfg.q, ctx)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# commands ---------------------------------------------------------------------

def cmd_moments(args) -> int:
    cfg = make_config(args)
    ctx = cfg.context()
    f = _load_density(args, cfg, ctx)
    table = moment_table(f, args.k_max, ctx)
    _emit(table.to_json() if cfg.output == "json" else table.to_csv(), args.out)
    return 0


def _parse_epsilons(text: str):
    try:
        return tuple(parse_rational(e) for e in text.split(",") if e.strip())
    except InvalidParameter as exc:
        raise InvalidParameter(f"bad --epsilons value: {exc}") from exc


def cmd_stieltjes(args) -> int:
    cfg = make_config(args)
    eps = _parse_epsilons(args.epsilons) if args.epsilons else DEFAULT_EPSILONS
    for e in eps:
        if abs(e) > 1:
            raise EpsilonOutOfRange(f"epsilon {e} outside [-1, 1]")
    K_orth = args.k_orth if args.k_orth is not None else args.k_max
    bits = cfg.precision_bits
    if not cfg.explicit_precision:
        bits = max(bits, required_precision(K_orth, cfg.q))
    ctx = cfg.context(bits)
    if args.density_file:
        raise InvalidParameter("stieltjes needs a q-exponential family (--lambda)")
    f = _load_density(args, cfg, ctx)
    report = verify_class(f, args.k_max, eps, ctx, K_orth=K_orth)
    _emit(report.to_json() if cfg.output == "json" else report.moment_csv(), args.out)
    return 0 if report.ok else 1


def cmd_classify(args) -> int:
    cfg = make_config(args)
    ctx = cfg.context()
    if args.density_file:
        f = _load_density(args, cfg, ctx)
        report = determinacy.classify(f, args.scan_depth, ctx)
    else:
        if args.lam is None:
            raise InvalidParameter("either --lambda or --density-file is required")
        report = determinacy.classify_q_exponential(parse_rational(args.lam), cfg.q, ctx,
                                                    args.scan_depth)
    _emit(report.to_json(), args.out)
    return 0


def _identity_points(qp: QParam):
    return [Fraction(-3), Fraction(-1), Fraction(1, 2), Fraction(2), qp.value ** -8]


def cmd_identities(args) -> int:
    cfg = make_config(args)
    ctx = cfg.context()
    qp = cfg.q
    lines = []
    failed = False
    if args.suite in ("euler", "reciprocal"):
        for t in _identity_points(qp):
            if args.suite == "euler":
                s, cs = euler_series(t, qp, ctx)
                p, cp = euler_product(t, qp, ctx)
                dev, allow = abs(s - p), cs.bound + cp.bound
            else:
                a, ca = e_q(-t, qp, ctx)
                b, cb = E_q(t, qp, ctx)
                dev = abs(a * b - 1)
                allow = ca.bound * abs(b) + cb.bound * abs(a) + ca.bound * cb.bound \
                    + 4 * ctx.unit_roundoff * abs(a * b)
            ok = dev <= allow and dev <= ctx.tol
            failed |= not ok
            lines.append(f"{'PASS' if ok else 'FAIL'} {args.suite} t={t} "
                         f"deviation={ctx.decimal(dev, 6)} certificate={ctx.decimal(allow, 6)}")
    elif args.suite == "phi-zeros":
        for m in range(1, args.m_max + 1):
            v, c = phi(qp.value ** -m, qp, ctx)
            ok = v == 0 and c.bound == 0
            failed |= not ok
            lines.append(f"{'PASS' if ok else 'FAIL'} phi-zeros m={m} value={ctx.decimal(v, 6)} "
                         f"certificate={ctx.decimal(c.bound, 6)}")
    else:
        lo = 10 if args.m_min is None else args.m_min
        hi = (60 if qp.value <= Fraction(1, 2) else 40) if args.m_max_growth is None \
            else args.m_max_growth
        if args.suite == "zeng":
            rep = growth.zeng_envelope_check(qp, range(lo, hi + 1), ctx)
        else:
            rep = growth.lemma2_lower_bound_check(qp, range(lo, hi + 1), ctx)
        _emit(rep.to_csv(), args.out)
        return 0
    _emit("\n".join(lines) + "\n", args.out)
    return 1 if failed else 0


# parser -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, default_output: str = "csv") -> None:
    p.add_argument("--q", required=True, help="q in (0,1), as p/r (exact-capable) or decimal")
    p.add_argument("--mode", choices=("float", "exact"), default="float")
    p.add_argument("--precision-bits", type=int, default=None,
                   help=f"working precision (env {ENV_PRECISION}, default {DEFAULT_PRECISION})")
    p.add_argument("--tolerance", default=None,
                   help=f"absolute target tolerance (env {ENV_TOLERANCE}, default {DEFAULT_TOLERANCE})")
    p.add_argument("--output", choices=("json", "csv"), default=default_output)
    p.add_argument("--out", default=None, help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qstieltjes",
                                     description="q-moment problems on the lattice q^n")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="q-moment table of a density")
    _common(p)
    p.add_argument("--lambda", dest="lam", default=None)
    p.add_argument("--density-file", default=None)
    p.add_argument("--k-max", type=int, default=10)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("stieltjes", help="q-Stieltjes class of a q-exponential density")
    _common(p, "json")
    p.add_argument("--lambda", dest="lam", default=None)
    p.add_argument("--density-file", default=None)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--k-orth", type=int, default=None,
                   help="highest orthogonality order to verify (default: --k-max)")
    p.add_argument("--epsilons", default=None, help="comma-separated values in [-1, 1]")
    p.set_defaults(func=cmd_stieltjes)

    p = sub.add_parser("classify", help="q-moment determinacy verdict")
    _common(p, "json")
    p.add_argument("--lambda", dest="lam", default=None)
    p.add_argument("--density-file", default=None)
    p.add_argument("--scan-depth", type=int, default=60)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("identities", help="numerical identity suites")
    _common(p)
    p.add_argument("--suite", choices=("euler", "reciprocal", "phi-zeros", "zeng", "lemma2"),
                   required=True)
    p.add_argument("--m-max", type=int, default=50, help="phi-zeros: largest m")
    p.add_argument("--m-min", type=int, default=None, help="growth suites: first m")
    p.add_argument("--m-max-growth", type=int, default=None, help="growth suites: last m")
    p.set_defaults(func=cmd_identities)
    return parser


def _error(kind: str, exc: BaseException, **extra) -> int:
    code = EXIT_CODES[kind]
    doc = {"error": type(exc).__name__, "kind": kind, "message": str(exc), "exit_code": code}
    doc.update(extra)
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    return code


def _join_negative_values(argv):
    # argparse reads "--epsilons -1,0,1" as two options
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in ("--epsilons", "--lambda", "--q") and i + 1 < len(argv) \
                and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit():
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _error("bad_input", UsageError("invalid command line"))
    if getattr(args, "k_max", 0) is not None and getattr(args, "k_max", 0) < 0:
        return _error("bad_input", InvalidParameter("--k-max must be nonnegative"))
    try:
        return args.func(args)
    except DivergentMoment as exc:
        return _error("divergent_moment", exc, k=exc.k)
    except PrecisionInsufficient as exc:
        return _error("precision_insufficient", exc, precision_bits=exc.precision_bits)
    except UnboundedPerturbation as exc:
        return _error("unbounded_perturbation", exc)
    except (InvalidParameter, EpsilonOutOfRange, ValueError) as exc:
        return _error("bad_input", exc)
    except QCalculusError as exc:
        return _error("internal", exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
