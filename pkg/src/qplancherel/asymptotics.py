"""Regime classification, main terms, error bounds and their verification."""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Any, Callable, Iterable

from ._precision import frac_to_mpf, mpctx
from .errors import DomainError, NSmall
from .ismail_masson import (
    ScalingParams,
    decomposition_sums,
    hn_normalized,
    normalized_strip_value,
    nu_n_log,
    nu_n_strip,
)
from .numtheory import RealDescriptor, chi, frac_floor
from .qseries import Bq, qpoch_infinite, ramanujan_Aq, theta

__all__ = [
    "RegimeId",
    "Arithmetic",
    "RegimeReport",
    "classify",
    "arithmetic",
    "progression",
    "main_term",
    "error_bound",
    "assembled_bound_regime2",
    "verify",
    "find_threshold",
    "REGIME_FIELDS",
]

DEFAULT_RHO = 0.9
BOUND_CONSTANTS = {2: 3, 3: 48, 4: 14, 5: 62, 6: 62, 7: 62}


class RegimeId(enum.IntEnum):
    POSITIVE = 1
    CRITICAL_RATIONAL = 2
    CRITICAL_IRRATIONAL = 3
    STRIP_RATIONAL = 4
    STRIP_THETA_IRRATIONAL = 5
    STRIP_TAU_IRRATIONAL = 6
    STRIP_IRRATIONAL = 7


@dataclass(frozen=True)
class Arithmetic:
    """Integer and fractional data attached to one n.

    Only the fields a regime uses are populated; see ``REGIME_FIELDS``.
    """

    m: int | None = None
    m1: int | None = None
    lam: Any = None
    lam1: Any = None
    beta: Any = None
    beta1: Any = None
    beta2: Any = None
    gamma_n: Any = None
    a_n: Any = None
    b_n: Any = None
    nu_n: int | None = None
    rho: float | None = None

    def populated(self) -> frozenset:
        return frozenset(f.name for f in fields(self) if getattr(self, f.name) is not None)


REGIME_FIELDS = {
    1: frozenset(),
    2: frozenset({"m", "lam"}),
    3: frozenset({"m", "beta", "gamma_n", "nu_n", "rho"}),
    4: frozenset({"m", "m1", "lam", "lam1", "nu_n"}),
    5: frozenset({"m", "m1", "lam", "beta", "b_n", "nu_n", "rho"}),
    6: frozenset({"m", "m1", "lam", "beta", "a_n", "nu_n", "rho"}),
    7: frozenset({"m", "m1", "beta1", "beta2", "a_n", "b_n", "nu_n", "rho"}),
}


@dataclass(frozen=True)
class RegimeReport:
    regime: RegimeId
    n: int
    arithmetic: Arithmetic
    exact: Any
    main: Any
    abs_diff: Any
    bound: Any
    tolerance: Any
    passed: bool
    n_small: bool
    cross_check: Any = None

    @property
    def pass_(self) -> bool:
        return self.passed


def classify(params: ScalingParams) -> RegimeId:
    tau, theta_d = params.tau, params.theta
    # an irrational decimal inside its own uncertainty of -1 or 0 raises AmbiguousFloor
    if tau.compare(-1) <= 0:
        raise DomainError("tau <= -1 is outside the scaling family")
    sign = tau.sign()
    if sign > 0:
        return RegimeId.POSITIVE
    if sign == 0:
        return RegimeId.CRITICAL_RATIONAL if theta_d.is_rational else RegimeId.CRITICAL_IRRATIONAL
    return {
        (True, True): RegimeId.STRIP_RATIONAL,
        (True, False): RegimeId.STRIP_THETA_IRRATIONAL,
        (False, True): RegimeId.STRIP_TAU_IRRATIONAL,
        (False, False): RegimeId.STRIP_IRRATIONAL,
    }[(tau.is_rational, theta_d.is_rational)]


def _as_desc(x) -> RealDescriptor:
    if isinstance(x, RealDescriptor):
        return x
    if isinstance(x, str):
        return RealDescriptor.parse(x)
    return RealDescriptor.rational(Fraction(x))


def _nearest(desc: RealDescriptor, n: int, shift: RealDescriptor, rho: float, bits: int, what: str):
    """m = nint(n x - shift) and the residual, checked against n^{-rho}."""
    mp = mpctx(bits + 2 * n.bit_length() + 16)
    v = n * desc.value(mp.prec) - shift.value(mp.prec)
    m = int(mp.nint(v))
    res = v - m
    if not abs(res) < mp.mpf(n) ** (-rho):
        raise DomainError(f"n = {n} is not an approximation hit for {what} at rho = {rho}")
    return m, mpctx(bits).mpf(res)


def _frac_exact(desc: RealDescriptor, a: int):
    fl, fr = frac_floor(desc.exact * a)
    return fl, fr


def _nu(regime: int, params: ScalingParams, n: int) -> tuple[int, bool]:
    try:
        nu = nu_n_strip(params, n) if regime == 4 else nu_n_log(params, n)
        return nu, False
    except NSmall:
        return 0, True


def arithmetic(params: ScalingParams, n: int, *, beta=0, beta1=0, beta2=0, rho: float = DEFAULT_RHO,
               regime: RegimeId | None = None) -> Arithmetic:
    """Arithmetic record for ``n``; irrational regimes require n to be a hit."""
    if n < 1:
        raise DomainError("n must be positive")
    regime = regime or classify(params)
    bits = params.ctx.precision_bits
    tau, th = params.tau, params.theta
    if regime == 1:
        return Arithmetic()
    if regime == 2:
        m, lam = _frac_exact(th, n)
        return Arithmetic(m=m, lam=lam)
    nu = _nu(regime, params, n)[0] if n >= 2 else 0
    if regime == 3:
        b = _as_desc(beta)
        m, g = _nearest(th, n, b, rho, bits, "theta")
        return Arithmetic(m=m, beta=b, gamma_n=g, nu_n=nu, rho=rho)
    if regime == 4:
        m, lam = _frac_exact(tau, -n)
        m1, lam1 = _frac_exact(th, n)
        return Arithmetic(m=m, m1=m1, lam=lam, lam1=lam1, nu_n=nu)
    if regime == 5:
        b = _as_desc(beta)
        m, lam = _frac_exact(tau, -n)
        m1, b_n = _nearest(th, n, b, rho, bits, "theta")
        return Arithmetic(m=m, m1=m1, lam=lam, beta=b, b_n=b_n, nu_n=nu, rho=rho)
    if regime == 6:
        b = _as_desc(beta)
        m, a_n = _nearest(-tau, n, b, rho, bits, "-tau")
        m1, lam = _frac_exact(th, n)
        return Arithmetic(m=m, m1=m1, lam=lam, beta=b, a_n=a_n, nu_n=nu, rho=rho)
    b1, b2 = _as_desc(beta1), _as_desc(beta2)
    m, a_n = _nearest(-tau, n, b1, rho, bits, "-tau")
    m1, b_n = _nearest(th, n, b2, rho, bits, "theta")
    return Arithmetic(m=m, m1=m1, beta1=b1, beta2=b2, a_n=a_n, b_n=b_n, nu_n=nu, rho=rho)


def progression(theta_value, lam, n_max: int, n_min: int = 1) -> list[int]:
    """All n in [n_min, n_max] with {n theta} = lam, for rational theta."""
    th = _as_desc(theta_value).exact
    if th is None:
        raise DomainError("progression needs a rational theta")
    lam = Fraction(lam)
    return [n for n in range(n_min, n_max + 1) if (n * th) % 1 == lam]


def _check_fields(regime: int, arith: Arithmetic):
    want = REGIME_FIELDS[int(regime)]
    have = arith.populated() - ({"nu_n"} if int(regime) in (1, 2) else set())
    if have != want:
        raise DomainError(f"regime {int(regime)} needs fields {sorted(want)}, got {sorted(have)}")


def _unit(mp, turns):
    if isinstance(turns, (Fraction, int)):
        t = frac_to_mpf(mp, Fraction(turns))
    else:
        t = mp.mpf(turns)
    return mp.expjpi(2 * t)


def _qpow(mp, q, e):
    if isinstance(e, (Fraction, int)):
        e = frac_to_mpf(mp, Fraction(e))
    return mp.power(q, e)


def _value(mp, x):
    if isinstance(x, RealDescriptor):
        return x.value(mp.prec)
    if isinstance(x, Fraction):
        return frac_to_mpf(mp, x)
    return mp.mpf(x)


def main_term(regime, params: ScalingParams, n: int, arith: Arithmetic):
    """Main term as a SeriesResult-like (value, tail) pair."""
    regime = RegimeId(int(regime))
    _check_fields(regime, arith)
    ctx = params.ctx
    mp = ctx.mp
    z = params.z_at(mp)
    zz = z * z
    if regime == 1:
        return mp.mpc(1), mp.zero
    if regime in (2, 3):
        turns = arith.lam if regime == 2 else _value(mp, arith.beta)
        r = ramanujan_Aq(_unit(mp, turns) / zz, ctx)
        return r.value, r.tail_bound
    q = ctx.qm
    if regime == 4:
        qe, turns = chi(arith.m) + arith.lam, arith.lam1
    elif regime == 5:
        qe, turns = chi(arith.m) + arith.lam, _value(mp, arith.beta)
    elif regime == 6:
        qe, turns = chi(arith.m) + _value(mp, arith.beta), arith.lam
    else:
        qe, turns = chi(arith.m) + _value(mp, arith.beta1), _value(mp, arith.beta2)
    w = -zz * _qpow(mp, q, qe) * _unit(mp, -turns)
    r = theta(w, ctx)
    return r.value, r.tail_bound


def _constants(params: ScalingParams):
    ctx = params.ctx
    mp = ctx.mp
    q = ctx.qm
    absz2 = abs(params.z_at(mp)) ** 2
    return ctx, mp, q, absz2


def error_bound(regime, params: ScalingParams, n: int, arith: Arithmetic, constant=None):
    """The regime's explicit bound on |exact - main|.

    ``constant`` replaces the leading numerical constant (3, 14, 48 or 62).
    """
    regime = RegimeId(int(regime))
    ctx, mp, q, absz2 = _constants(params)
    qq = ctx.qq_inf
    if regime == 1:
        tau = params.tau.value(ctx.precision_bits)
        b = Bq(q * q / absz2, ctx).upper
        c = 1 if constant is None else constant
        return c * q * b / ((1 - q) * absz2) * mp.power(q, n * tau)
    c = BOUND_CONSTANTS[int(regime)] if constant is None else constant
    pq3 = qpoch_infinite(-q ** 3, ctx).upper
    log2n = mp.log(n) ** 2
    if regime in (2, 3):
        pre = c * pq3 * Bq(1 / absz2, ctx).upper / ((1 - q) * qq)
        if regime == 2:
            return pre * (mp.power(q, mp.mpf(n) / 2) + mp.power(q, mp.mpf(n * n) / 4) / absz2 ** (n // 2))
        nu = _require_nu(arith, n)
        return pre * (log2n / mp.power(n, arith.rho) + q ** (nu * nu) / absz2 ** nu)
    th = theta(absz2, ctx.sqrt_base()).upper
    pre = c * pq3 ** 2 * th / ((1 - q) ** 2 * qq)
    nu = _require_nu(arith, n)
    if regime == 4:
        return pre * (q ** nu + q ** (nu * nu) * absz2 ** nu + mp.power(q, mp.mpf(nu * nu) / 2) / absz2 ** nu)
    return pre * (absz2 ** nu * q ** (nu * nu) + mp.power(q, mp.mpf(nu * nu) / 2) / absz2 ** nu
                  + log2n / mp.power(n, arith.rho))


def _require_nu(arith: Arithmetic, n: int) -> int:
    if not arith.nu_n:
        raise NSmall(f"nu_n < 1 at n = {n}")
    return arith.nu_n


def assembled_bound_regime2(params: ScalingParams, n: int):
    """Sum of the two sub-bounds behind the regime-2 estimate, with q^{floor(n/2)^2}.

    The tail over k >= floor(n/2) starts at q^{floor(n/2)^2}, which exceeds
    q^{n^2/4} for odd n; this keeps the odd-n case rigorous.
    """
    ctx, mp, q, absz2 = _constants(params)
    b = Bq(1 / absz2, ctx).upper
    pq3 = qpoch_infinite(-q ** 3, ctx).upper
    h = n // 2
    return (2 * q ** (h * h) * b / (ctx.qq_inf * absz2 ** h)
            + 3 * pq3 * b * mp.power(q, mp.mpf(n) / 2) / ((1 - q) * ctx.qq_inf))


def exact_value(regime, params: ScalingParams, n: int, arith: Arithmetic):
    """Normalized left-hand side and the certified error of its evaluation."""
    if int(regime) <= 3:
        r = hn_normalized(params, n)
        return r.value, r.tail_bound
    return normalized_strip_value(params, n, arith.m)


def verify(params: ScalingParams, n: int, arith: Arithmetic | None = None, *, cross_check: bool = False,
           constant=None) -> RegimeReport:
    regime = classify(params)
    if arith is None:
        arith = arithmetic(params, n, regime=regime)
    _check_fields(regime, arith)
    mp = params.ctx.mp
    exact, exact_tail = exact_value(regime, params, n, arith)
    main, main_tail = main_term(regime, params, n, arith)
    diff = abs(exact - main)
    rounding = mp.mpf(2) ** (-params.ctx.precision_bits + 16) * max(mp.one, abs(exact), abs(main))
    tol = exact_tail + main_tail + rounding
    n_small = False
    try:
        bound = error_bound(regime, params, n, arith, constant)
    except NSmall:
        n_small, bound = True, mp.inf
    alt = None
    if cross_check and regime >= 4:
        alt = decomposition_sums(params, n, arith.m)[2].normalized
    return RegimeReport(regime, n, arith, exact, main, diff, bound, tol, bool(diff <= bound + tol), n_small, alt)


def find_threshold(params: ScalingParams, arithmetic_generator: Callable[[int], Arithmetic] | None,
                   n_list: Iterable[int], **verify_kw) -> tuple[int | None, list[RegimeReport]]:
    """Smallest tested N0 from which every tested, non-small n passes."""
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise DomainError("n_list must be ascending")
    reports = []
    for n in n_list:
        arith = arithmetic_generator(n) if arithmetic_generator else None
        reports.append(verify(params, n, arith, **verify_kw))
    n0 = None
    for r in reversed(reports):
        if r.n_small:
            continue
        if not r.passed:
            break
        n0 = r.n
    return n0, reports
