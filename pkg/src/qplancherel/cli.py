"""Command-line front end: ``python -m qplancherel <command> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import qseries
from .asymptotics import arithmetic, classify, verify
from .errors import DomainError, NSmall, PrecisionExhausted, QPlancherelError
from .ismail_masson import ScalingParams, hn_direct, hn_normalized, sinh_xi_n
from .numtheory import RealDescriptor, approx_search, simultaneous_search
from .qseries import QContext

CSV_HEADER = [
    "regime", "n", "m", "m1", "lambda", "lambda1", "beta1", "beta2", "nu_n",
    "exact_re", "exact_im", "main_re", "main_im", "abs_diff", "bound", "pass", "n_small",
]
PRECISION_ENV = "QPLANCHEREL_PRECISION"
_NEGATIVE_VALUE = re.compile(r"^-[\d.]")

EVAL_FUNCS = ("qpoch", "qpoch-finite", "qbinomial", "Aq", "Bq", "Bq-prime", "theta",
              "theta-product", "r1", "r1-bound", "r2", "r2-bound")


class UsageError(Exception):
    pass


def parse_complex(text: str) -> tuple[Fraction, Fraction]:
    parts = text.split(",")
    if len(parts) == 1:
        parts.append("0")
    if len(parts) != 2:
        raise UsageError(f"expected re,im but got {text!r}")
    try:
        return Fraction(parts[0].strip()), Fraction(parts[1].strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse complex value {text!r}") from None


def parse_nrange(text: str) -> list[int]:
    """``a..b``, ``a..b:step`` or a comma list; must be nonempty and ascending."""
    try:
        if ".." in text:
            span, _, step = text.partition(":")
            lo, hi = (int(v) for v in span.split(".."))
            out = list(range(lo, hi + 1, int(step) if step else 1))
        else:
            out = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse n range {text!r}") from None
    if not out or out != sorted(set(out)):
        raise UsageError("n range must be nonempty and strictly ascending")
    return out


def _default_bits() -> int:
    return int(os.environ.get(PRECISION_ENV, "128"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", default="0.5", help="base q in (0, 1), read as an exact decimal")
    common.add_argument("--precision-bits", type=int, default=None)
    common.add_argument("--tail-tol", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", default="-")

    scaling = argparse.ArgumentParser(add_help=False)
    scaling.add_argument("--tau", default="0")
    scaling.add_argument("--theta", default="0")
    scaling.add_argument("--z", default="1,0")

    arith = argparse.ArgumentParser(add_help=False)
    arith.add_argument("--beta", default="0")
    arith.add_argument("--beta1", default="0")
    arith.add_argument("--beta2", default="0")
    arith.add_argument("--rho", type=float, default=0.9)
    arith.add_argument("--nrange", default=None)
    arith.add_argument("--n", type=int, default=None)

    p = argparse.ArgumentParser(prog="qplancherel", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", parents=[common], help="evaluate a q-series building block")
    ev.add_argument("func", choices=EVAL_FUNCS)
    ev.add_argument("--z", default="1,0", help="argument re,im (a or x for the real-argument functions)")
    ev.add_argument("--n", type=int, default=0)
    ev.add_argument("--k", type=int, default=0)

    hn = sub.add_parser("hn", parents=[common, scaling], help="scaled Ismail-Masson polynomial")
    hn.add_argument("--n", type=int, required=True)
    hn.add_argument("--method", choices=("normalized", "direct"), default="normalized")

    sub.add_parser("classify", parents=[common, scaling], help="regime of a scaling")

    ap = sub.add_parser("approx", parents=[common], help="|n theta - beta - m| < n^-rho search")
    ap.add_argument("--theta", required=True)
    ap.add_argument("--beta", default="0")
    ap.add_argument("--rho", type=float, default=1.0)
    ap.add_argument("--nmax", type=int, required=True)

    sub.add_parser("verify", parents=[common, scaling, arith], help="check the regime bound over n")
    sw = sub.add_parser("sweep", parents=[common, scaling, arith], help="verify in parallel")
    sw.add_argument("--workers", type=int, default=1)

    sub.add_parser("acceptance", parents=[common], help="run the acceptance suite")
    return p


def _ctx(args) -> QContext:
    bits = args.precision_bits or _default_bits()
    try:
        return QContext(Fraction(args.q), bits, None if args.tail_tol is None else Fraction(args.tail_tol))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse q = {args.q!r}") from None


def _params(args, ctx) -> ScalingParams:
    return ScalingParams(RealDescriptor.parse(args.tau), RealDescriptor.parse(args.theta),
                         parse_complex(args.z), ctx)


def _fmt(mp, x, digits) -> str:
    if x is None:
        return ""
    return mp.nstr(x, digits)


def _emit(args, header, rows, out):
    if args.format == "json":
        json.dump([dict(zip(header, r)) for r in rows], out, indent=1)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _digits(ctx) -> int:
    return max(1, ctx.precision_bits // 3)


def cmd_eval(args, out) -> int:
    ctx = _ctx(args)
    mp, d = ctx.mp, _digits(ctx)
    zr, zi = parse_complex(args.z)
    z = mp.mpc(ctx.convert(zr), ctx.convert(zi))
    f = args.func
    tail = mp.zero
    if f == "qpoch":
        r = qseries.qpoch_infinite(z, ctx)
        val, tail = r.value, r.tail_bound
    elif f == "qpoch-finite":
        val = qseries.qpoch_finite(z, ctx, args.n)
    elif f == "qbinomial":
        val = qseries.qbinomial(args.n, args.k, ctx)
    elif f in ("r1", "r1-bound", "r2", "r2-bound"):
        fn = {"r1": qseries.r1_actual, "r1-bound": qseries.r1_bound,
              "r2": qseries.r2_actual, "r2-bound": qseries.r2_bound}[f]
        val = fn(zr, ctx, args.n)
    else:
        fn = {"Aq": qseries.ramanujan_Aq, "Bq": qseries.Bq, "Bq-prime": qseries.Bq_prime,
              "theta": qseries.theta, "theta-product": qseries.theta_product}[f]
        arg = z if f in ("Aq", "theta", "theta-product") else ctx.convert(zr)
        r = fn(arg, ctx)
        val, tail = r.value, r.tail_bound
    val = mp.mpc(val)
    _emit(args, ["function", "value_re", "value_im", "tail_bound"],
          [[f, _fmt(mp, val.real, d), _fmt(mp, val.imag, d), _fmt(mp, tail, d)]], out)
    return 0


def cmd_hn(args, out) -> int:
    ctx = _ctx(args)
    params = _params(args, ctx)
    mp, d = ctx.mp, _digits(ctx)
    if args.method == "direct":
        val, tail = hn_direct(sinh_xi_n(params, args.n), args.n, ctx), mp.zero
    else:
        r = hn_normalized(params, args.n)
        val, tail = r.value, r.tail_bound
    val = mp.mpc(val)
    _emit(args, ["n", "method", "value_re", "value_im", "tail_bound"],
          [[args.n, args.method, _fmt(mp, val.real, d), _fmt(mp, val.imag, d), _fmt(mp, tail, d)]], out)
    return 0


def cmd_classify(args, out) -> int:
    regime = classify(_params(args, _ctx(args)))
    _emit(args, ["regime", "name"], [[int(regime), regime.name]], out)
    return 0


def cmd_approx(args, out) -> int:
    ctx = _ctx(args)
    mp, d = ctx.mp, _digits(ctx)
    hits = approx_search(RealDescriptor.parse(args.theta), RealDescriptor.parse(args.beta),
                         args.rho, args.nmax, ctx.precision_bits)
    _emit(args, ["n", "m", "residual"], [[h.n, h.m, _fmt(mp, h.residual, d)] for h in hits], out)
    return 0


def _n_list(args, params) -> list[int]:
    if args.nrange is None and args.n is None:
        raise UsageError("give --n or --nrange")
    ns = parse_nrange(args.nrange) if args.nrange else [args.n]
    regime = classify(params)
    if regime in (3, 5, 6, 7):
        # keep only approximation hits; other n carry no arithmetic data
        n_max, bits = ns[-1], params.ctx.precision_bits
        b = RealDescriptor.parse
        if regime in (3, 5):
            hits = {h.n for h in approx_search(params.theta, b(args.beta), args.rho, n_max, bits)}
        elif regime == 6:
            hits = {h.n for h in approx_search(-params.tau, b(args.beta), args.rho, n_max, bits)}
        else:
            hits = {h.n for h in simultaneous_search(-params.tau, params.theta, b(args.beta1),
                                                     b(args.beta2), args.rho, n_max, bits)}
        ns = [n for n in ns if n in hits]
    return ns


def _row_task(job) -> list[str]:
    q, bits, tol, tau, th, z, kw, n = job
    ctx = QContext(Fraction(q), bits, None if tol is None else Fraction(tol))
    params = ScalingParams(RealDescriptor.parse(tau), RealDescriptor.parse(th), parse_complex(z), ctx)
    arith = arithmetic(params, n, **kw)
    r = verify(params, n, arith)
    return report_row(r, ctx)


def report_row(r, ctx) -> list[str]:
    mp, d = ctx.mp, _digits(ctx)
    a = r.arithmetic
    lam = a.lam if a.lam is not None else None
    exact, main = mp.mpc(r.exact), mp.mpc(r.main)

    def num(x):
        if x is None:
            return ""
        if isinstance(x, Fraction):
            return str(x)
        if isinstance(x, RealDescriptor):
            return str(x)
        return _fmt(mp, x, d)

    return [
        str(int(r.regime)), str(r.n), "" if a.m is None else str(a.m), "" if a.m1 is None else str(a.m1),
        num(lam), num(a.lam1), num(a.beta1 if a.beta1 is not None else a.beta), num(a.beta2),
        "" if a.nu_n is None else str(a.nu_n),
        num(exact.real), num(exact.imag), num(main.real), num(main.imag),
        num(r.abs_diff), num(r.bound), "true" if r.passed else "false", "true" if r.n_small else "false",
    ]


def _verify_jobs(args):
    ctx = _ctx(args)
    params = _params(args, ctx)
    ns = _n_list(args, params)
    kw = {"beta": args.beta, "beta1": args.beta1, "beta2": args.beta2, "rho": args.rho}
    tol = None if args.tail_tol is None else args.tail_tol
    return [(args.q, ctx.precision_bits, tol, args.tau, args.theta, args.z, kw, n) for n in ns]


def _finish_rows(args, rows, out) -> int:
    _emit(args, CSV_HEADER, rows, out)
    failed = any(r[15] == "false" for r in rows)
    return 2 if failed else 0


def cmd_verify(args, out) -> int:
    rows = [_row_task(job) for job in _verify_jobs(args)]
    return _finish_rows(args, rows, out)


def cmd_sweep(args, out) -> int:
    jobs = _verify_jobs(args)
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    if args.workers == 1:
        rows = [_row_task(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            # map preserves submission order, so output is independent of scheduling
            rows = list(pool.map(_row_task, jobs, chunksize=1))
    return _finish_rows(args, rows, out)


def cmd_acceptance(args, out) -> int:
    from .acceptance import run_all

    results = run_all()
    rows = [[cid, "pass" if ok else "FAIL", detail] for cid, ok, detail in results]
    _emit(args, ["criterion", "status", "detail"], rows, out)
    return 0 if all(ok for _, ok, _ in results) else 2


COMMANDS = {
    "eval": cmd_eval, "hn": cmd_hn, "classify": cmd_classify, "approx": cmd_approx,
    "verify": cmd_verify, "sweep": cmd_sweep, "acceptance": cmd_acceptance,
}


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse mistakes "--tau -1/2" for two options; glue such values on
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if tok.startswith("--") and "=" not in tok and _NEGATIVE_VALUE.match(nxt):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    buf = io.StringIO()
    try:
        status = COMMANDS[args.command](args, buf)
    except (UsageError, DomainError, NSmall, PrecisionExhausted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except QPlancherelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.output == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    return status
