"""Scaled Ismail-Masson polynomials, evaluated three independent ways.

* :func:`hn_direct` sums the defining expansion in ``e^xi`` (small n only);
* :func:`hn_normalized` sums the ratio ``h_n / (z^n q^{-n^2 s})`` directly;
* :func:`decomposition_sums` splits that ratio at ``floor(m/2)`` and rescales
  each half by the strip prefactor, so that every term is of order one.

Large quantities are handled through :class:`LogComplex`, which keeps the
argument in turns so that phases such as ``n^2 theta`` reduce exactly (for
rational theta) or at a precision that grows with ``n``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from ._precision import frac_to_mpf, mpctx, schedule_bits, to_fraction
from .errors import AmbiguousFloor, DomainError, NSmall, ScaleOverflow
from .numtheory import RealDescriptor, chi
from .qseries import QContext, SeriesResult, log_qbinomial, qbinomial

__all__ = [
    "ScalingParams",
    "LogComplex",
    "Decomposition",
    "s_of",
    "sinh_xi_n",
    "hn_direct",
    "hn_normalized",
    "normalized_terms",
    "normalization_log",
    "prefactor_log",
    "decomposition_sums",
    "e_factor",
    "f_factor",
    "nu_n_strip",
    "nu_n_log",
]

HN_DIRECT_MAX_DEGREE = 64
# natural-log magnitude beyond which raw values are not materialized
LOG_MAG_LIMIT = 2 ** 20


def _descriptor(x) -> RealDescriptor:
    if isinstance(x, RealDescriptor):
        return x
    if isinstance(x, str):
        return RealDescriptor.parse(x)
    return RealDescriptor.rational(to_fraction(x))


def _exact_complex(z) -> tuple[Fraction, Fraction]:
    if isinstance(z, tuple):
        return to_fraction(z[0]), to_fraction(z[1])
    if hasattr(z, "real") and hasattr(z, "imag") and not isinstance(z, (int, Fraction)):
        return to_fraction(z.real), to_fraction(z.imag)
    return to_fraction(z), Fraction(0)


@functools.lru_cache(maxsize=256)
def _context_at(q: Fraction, bits: int) -> QContext:
    return QContext(q, bits, Fraction(1, 2 ** (bits - 8)))


@dataclass(frozen=True)
class ScalingParams:
    """Scaling data ``(tau, theta, z)`` over a base context.

    ``z`` is kept as an exact pair of rationals so that it can be
    re-materialized at any precision.
    """

    tau: Any
    theta: Any
    z: Any
    ctx: QContext

    def __post_init__(self):
        object.__setattr__(self, "tau", _descriptor(self.tau))
        object.__setattr__(self, "theta", _descriptor(self.theta))
        zr, zi = _exact_complex(self.z)
        if zr == 0 and zi == 0:
            raise DomainError("the scaling needs z != 0")
        object.__setattr__(self, "z", (zr, zi))

    def z_at(self, mp):
        return mp.mpc(frac_to_mpf(mp, self.z[0]), frac_to_mpf(mp, self.z[1]))

    def context(self, bits: int) -> QContext:
        return _context_at(self.ctx.q, bits)

    @property
    def sigma(self):
        """Real part (1 + tau)/2 of s."""
        return (1 + self.tau.value(self.ctx.precision_bits)) / 2

    def z_arg_turns(self, mp):
        """arg(z) / (2 pi), exact when z lies on the real axis."""
        zr, zi = self.z
        if zi == 0:
            return (mp.zero, Fraction(0)) if zr > 0 else (mp.mpf(0.5), Fraction(1, 2))
        return mp.arg(self.z_at(mp)) / (2 * mp.pi), None


def _reduce_turns(mp, t):
    t = t - mp.nint(t)
    return mp.mpf(0.5) if t == -0.5 else t


def _reduce_exact(t: Fraction) -> Fraction:
    t = t - math.floor(t + Fraction(1, 2))
    return Fraction(1, 2) if t == Fraction(-1, 2) else t


@dataclass(frozen=True)
class LogComplex:
    """A nonzero complex number as ``exp(log_mag) * exp(2 pi i turns)``.

    ``turns`` lies in (-1/2, 1/2]; ``exact_turns`` carries the same argument
    as a Fraction whenever it is known exactly.
    """

    log_mag: Any
    turns: Any
    exact_turns: Fraction | None = None

    @classmethod
    def make(cls, mp, log_mag, turns, exact: Fraction | None = None) -> "LogComplex":
        if exact is not None:
            exact = _reduce_exact(exact)
            return cls(mp.mpf(log_mag), frac_to_mpf(mp, exact), exact)
        return cls(mp.mpf(log_mag), _reduce_turns(mp, mp.mpf(turns)), None)

    @classmethod
    def from_complex(cls, mp, w) -> "LogComplex":
        w = mp.mpc(w)
        if w == 0:
            raise DomainError("zero has no logarithm")
        return cls.make(mp, mp.log(abs(w)), mp.arg(w) / (2 * mp.pi))

    @property
    def _mp(self):
        return mpctx(self.log_mag.context.prec)

    @property
    def phase(self):
        return 2 * self._mp.pi * self.turns

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        mp = self._mp
        exact = None
        if self.exact_turns is not None and other.exact_turns is not None:
            exact = self.exact_turns + other.exact_turns
        return LogComplex.make(mp, self.log_mag + other.log_mag, self.turns + other.turns, exact)

    def inverse(self) -> "LogComplex":
        exact = None if self.exact_turns is None else -self.exact_turns
        return LogComplex.make(self._mp, -self.log_mag, -self.turns, exact)

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        return self * other.inverse()

    def __pow__(self, k: int) -> "LogComplex":
        exact = None if self.exact_turns is None else self.exact_turns * k
        return LogComplex.make(self._mp, self.log_mag * k, self.turns * k, exact)

    def unit(self, mp=None):
        """exp(2 pi i turns) as an mpc."""
        mp = mp or self._mp
        if self.exact_turns is not None:
            t = self.exact_turns
            return mp.mpc(mp.cospi(2 * frac_to_mpf(mp, t)), mp.sinpi(2 * frac_to_mpf(mp, t)))
        return mp.expjpi(2 * mp.mpf(self.turns))

    def to_complex(self, mp=None):
        mp = mp or self._mp
        if abs(self.log_mag) > LOG_MAG_LIMIT:
            raise ScaleOverflow("value too large to materialize; stay in normalized form")
        return mp.exp(mp.mpf(self.log_mag)) * self.unit(mp)


def _theta_turns(theta: RealDescriptor, multiplier, mp):
    """``multiplier * theta`` modulo 1 as (mpf, exact Fraction or None)."""
    multiplier = to_fraction(multiplier)
    exact = theta.exact
    if exact is not None:
        t = _reduce_exact(multiplier * exact)
        return frac_to_mpf(mp, t), t
    extra = max(0, abs(multiplier).numerator.bit_length()) + 16
    hi = mpctx(mp.prec + extra)
    v = frac_to_mpf(hi, multiplier) * theta.value(hi.prec)
    return mp.mpf(_reduce_turns(hi, v)), None


def s_of(params: ScalingParams):
    """s = (1 + tau)/2 + i theta pi / log q."""
    ctx = params.ctx
    mp = ctx.mp
    return mp.mpc(params.sigma, params.theta.value(ctx.precision_bits) * mp.pi / ctx.logq)


def _scaled_z_log(params: ScalingParams, n: int, mp) -> LogComplex:
    # q^{-ns} z: magnitude q^{-n sigma}|z|, argument -n theta pi + arg z
    ctx = params.context(mp.prec)
    sigma = (1 + params.tau.value(mp.prec)) / 2
    z = params.z_at(mp)
    zt, zt_exact = params.z_arg_turns(mp)
    tt, tt_exact = _theta_turns(params.theta, Fraction(-n, 2), mp)
    exact = None if zt_exact is None or tt_exact is None else zt_exact + tt_exact
    return LogComplex.make(mp, -n * sigma * ctx.logq + mp.log(abs(z)), zt + tt, exact)


def sinh_xi_n(params: ScalingParams, n: int):
    """(q^{-ns} z - q^{ns} / z) / 2 materialized at working precision."""
    mp = params.ctx.mp
    w = _scaled_z_log(params, n, mpctx(schedule_bits(params.ctx.precision_bits, n)))
    if abs(w.log_mag) > LOG_MAG_LIMIT:
        raise ScaleOverflow(f"sinh xi_n overflows at n = {n}; use hn_normalized")
    wc = w.to_complex()
    return mp.mpc((wc - 1 / wc) / 2)


def hn_direct(sinh_xi, n: int, ctx: QContext):
    """h_n(sinh xi | q) from its defining sum in powers of e^xi.

    e^xi is recovered on the principal branch of sqrt(sinh^2 xi + 1); h_n is
    a polynomial in sinh xi, so the branch only affects rounding.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    if n > HN_DIRECT_MAX_DEGREE:
        raise DomainError(f"hn_direct is limited to n <= {HN_DIRECT_MAX_DEGREE}; use hn_normalized")
    mp = ctx.mp
    x = mp.mpc(ctx.convert(sinh_xi))
    root = mp.sqrt(x * x + 1)
    plus, minus = x + root, x - root
    # x + root = -1/(x - root); take whichever form avoids cancellation
    e_xi = plus if abs(plus) >= abs(minus) else -1 / minus
    terms = []
    for k in range(n + 1):
        coeff = qbinomial(n, k, ctx) * ctx.qm ** (k * (k - n))
        if k % 2:
            coeff = -coeff
        terms.append(coeff * e_xi ** (n - 2 * k))
    return mp.fsum(terms)


def _log_majorant_step(ctx, tn, logz, k):
    # log|term_{k+1}| - log|term_k| without the binomial: (2k+1+tau n) log q - 2 log|z|
    return (2 * k + 1 + tn) * ctx.logq - 2 * logz


class _NormalizedSum:
    """Terms of the normalized sum at the phase-schedule precision."""

    def __init__(self, params: ScalingParams, n: int):
        self.params, self.n = params, n
        self.bits = schedule_bits(params.ctx.precision_bits, n)
        self.ctx = params.context(self.bits)
        mp = self.mp = self.ctx.mp
        self.tn = params.tau.value(self.bits) * n
        z = params.z_at(mp)
        self.logz = mp.log(abs(z))
        self.arg_turns, self.arg_exact = params.z_arg_turns(mp)
        self.theta = params.theta

    def log_quadratic(self, k):
        return (k * k + k * self.tn) * self.ctx.logq - 2 * k * self.logz

    def peak(self) -> int:
        k = self.logz / self.ctx.logq - self.tn / 2
        return int(min(max(self.mp.nint(k), 0), self.n))

    def term(self, k: int):
        mp, n = self.mp, self.n
        log_mag = log_qbinomial(n, k, self.ctx) + self.log_quadratic(k)
        # argument: (-1)^k, z^{-2k}, e^{2 n k theta pi i}
        tt, tt_exact = _theta_turns(self.theta, n * k, mp)
        exact = None
        if tt_exact is not None and self.arg_exact is not None:
            exact = Fraction(k, 2) - 2 * k * self.arg_exact + tt_exact
        lc = LogComplex.make(mp, log_mag, mp.mpf(k) / 2 - 2 * k * self.arg_turns + tt, exact)
        return mp.exp(lc.log_mag) * lc.unit(mp)

    def majorant(self, k: int):
        # |[n,k]| <= 1/(q;q)_inf
        return self.mp.exp(self.log_quadratic(k) - self.ctx._log_qfact_table[-1])

    def ratio_right(self, k: int):
        return self.mp.exp(_log_majorant_step(self.ctx, self.tn, self.logz, k))

    def ratio_left(self, k: int):
        return self.mp.exp(-_log_majorant_step(self.ctx, self.tn, self.logz, k - 1))

    def evaluate(self, min_terms: int = 0):
        mp, n = self.mp, self.n
        k0 = self.peak()
        scale = max(mp.one, mp.exp(self.log_quadratic(k0)))
        budget = frac_to_mpf(mp, self.params.ctx.tail_tol) * scale / 2
        terms = {k0: self.term(k0)}
        tail = mp.zero
        # walk right, then left, until the geometric majorant tail fits the budget
        k = k0
        while k < n:
            r = self.ratio_right(k + 1)
            if len(terms) >= min_terms and 2 * r <= 1:
                t = self.majorant(k + 1) / (1 - r)
                if t <= budget:
                    tail += t
                    break
            k += 1
            terms[k] = self.term(k)
        k = k0
        while k > 0:
            r = self.ratio_left(k - 1)
            if len(terms) >= min_terms and 2 * r <= 1:
                t = self.majorant(k - 1) / (1 - r)
                if t <= budget:
                    tail += t
                    break
            k -= 1
            terms[k] = self.term(k)
        value = mp.fsum(terms[j] for j in sorted(terms))
        return value, tail, len(terms), scale


def hn_normalized(params: ScalingParams, n: int, min_terms: int = 0) -> SeriesResult:
    """h_n(sinh xi_n | q) / (z^n q^{-n^2 s}) as a certified truncated sum.

    Only the window of k around the dominant term is summed; the discarded
    terms are covered by a geometric majorant whose total is ``tail_bound``
    (at most ``tail_tol * scale``, with ``scale`` the size of the largest
    term majorant).
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    mp = params.ctx.mp
    value, tail, used, scale = _NormalizedSum(params, n).evaluate(min_terms)
    return SeriesResult(mp.mpc(value), mp.mpf(tail), used, mp.mpf(scale))


def _normalized_high(params: ScalingParams, n: int):
    """Normalized sum and its tail at schedule precision (no rounding)."""
    value, tail, _, _ = _NormalizedSum(params, n).evaluate()
    return value, tail


def normalized_terms(params: ScalingParams, n: int, ks) -> dict:
    """Individual summands of the normalized sum, keyed by k."""
    ns = _NormalizedSum(params, n)
    mp = params.ctx.mp
    return {k: mp.mpc(ns.term(k)) for k in ks}


def normalization_log(params: ScalingParams, n: int, mp=None) -> LogComplex:
    """z^n q^{-n^2 s} in logarithmic form."""
    mp = mp or mpctx(schedule_bits(params.ctx.precision_bits, n))
    ctx = params.context(mp.prec)
    sigma = (1 + params.tau.value(mp.prec)) / 2
    zt, zt_exact = params.z_arg_turns(mp)
    tt, tt_exact = _theta_turns(params.theta, Fraction(-n * n, 2), mp)
    exact = None if zt_exact is None or tt_exact is None else n * zt_exact + tt_exact
    log_mag = n * mp.log(abs(params.z_at(mp))) - n * n * sigma * ctx.logq
    return LogComplex.make(mp, log_mag, n * zt + tt, exact)


def _require_strip(params: ScalingParams):
    if not (params.tau.compare(-1) > 0 and params.tau.compare(0) < 0):
        raise DomainError("this operation needs -1 < tau < 0")


def _default_m(params: ScalingParams, n: int) -> int:
    return params.tau.floor_affine(-n)


def prefactor_log(params: ScalingParams, n: int, m: int | None = None, mp=None) -> LogComplex:
    """Strip prefactor z^n q^{-n^2 s + M(tau n + M)} / ((-z^2 e^{-2 n theta pi i})^M (q;q)_inf), M = floor(m/2)."""
    _require_strip(params)
    if m is None:
        m = _default_m(params, n)
    mp = mp or mpctx(schedule_bits(params.ctx.precision_bits, n))
    ctx = params.context(mp.prec)
    M = m // 2
    base = normalization_log(params, n, mp)
    tn = params.tau.value(mp.prec) * n
    log_adj = M * (tn + M) * ctx.logq - 2 * M * mp.log(abs(params.z_at(mp))) - ctx._log_qfact_table[-1]
    zt, zt_exact = params.z_arg_turns(mp)
    # (-z^2)^M e^{-2 n theta pi i M} sits in the denominator
    tt, tt_exact = _theta_turns(params.theta, n * M, mp)
    exact = None
    if zt_exact is not None and tt_exact is not None:
        exact = -Fraction(M, 2) - 2 * M * zt_exact + tt_exact
    adj = LogComplex.make(mp, log_adj, -mp.mpf(M) / 2 - 2 * M * zt + tt, exact)
    return base * adj


def normalized_strip_value(params: ScalingParams, n: int, m: int | None = None):
    """h_n / prefactor, i.e. the normalized sum divided by the strip prefactor.

    Returns ``(value, tail_bound)`` at working precision.
    """
    if m is None:
        m = _default_m(params, n)
    bits = schedule_bits(params.ctx.precision_bits, n)
    mp = mpctx(bits)
    value, tail = _normalized_high(params, n)
    factor = normalization_log(params, n, mp) / prefactor_log(params, n, m, mp)
    mag = mp.exp(factor.log_mag)
    out = params.ctx.mp
    return out.mpc(value * mag * factor.unit(mp)), out.mpf(tail * mag)


def e_factor(n: int, M: int, k: int, ctx: QContext):
    """(q;q)_inf [n, M - k]_q."""
    return ctx.qq_inf * qbinomial(n, M - k, ctx)


def f_factor(n: int, M: int, k: int, ctx: QContext):
    """(q;q)_inf [n, M + k]_q."""
    return ctx.qq_inf * qbinomial(n, M + k, ctx)


@dataclass
class Decomposition:
    """Side data of the split of the normalized sum at ``M = floor(m/2)``."""

    m: int
    m1: int
    M: int
    c_n: Any
    d_n: Any
    s1_normalized: Any
    s2_normalized: Any
    tail_bound: Any
    e: dict = field(default_factory=dict)
    f: dict = field(default_factory=dict)

    @property
    def normalized(self):
        """s1 + s2 rescaled by the strip prefactor (the theta-side quantity)."""
        return self.s1_normalized + self.s2_normalized


def _geometric_sum(mp, terms_fn, first: int, last: int, ratio_fn, majorant_fn, tol):
    """Sum terms_fn(k) for first <= k <= last until a geometric tail fits ``tol``."""
    acc, tail = [], mp.zero
    k = first
    while k <= last:
        acc.append(terms_fn(k))
        r = ratio_fn(k + 1)
        if k + 1 <= last and 2 * r <= 1:
            t = majorant_fn(k + 1) / (1 - r)
            if t <= tol:
                tail = t
                break
        k += 1
    return mp.fsum(acc), tail, k


def decomposition_sums(params: ScalingParams, n: int, m: int | None = None):
    """Split of the normalized sum into the parts below and above ``floor(m/2)``.

    Each part is summed in its reorganized, prefactor-scaled form (reversed
    index for the lower part, shifted index for the upper part) and mapped
    back to the scale of :func:`hn_normalized`.  Returns ``(s1, s2, side)``.
    """
    _require_strip(params)
    if n < 1:
        raise DomainError("decomposition needs n >= 1")
    if m is None:
        m = _default_m(params, n)
        if m < 1:
            raise DomainError(f"floor(-tau n) = {m} < 1; n is too small for the split")
    bits = schedule_bits(params.ctx.precision_bits, n)
    ctx = params.context(bits)
    mp = ctx.mp
    q = ctx.qm
    M = m // 2
    tau_exact = params.tau.exact
    c_n = frac_to_mpf(mp, -n * tau_exact - m) if tau_exact is not None else -n * params.tau.value(bits) - m
    m1 = params.theta.floor_affine(n)
    d_turns, d_exact = _theta_turns(params.theta, n, mp)
    d_n = d_turns if d_turns >= 0 else d_turns + 1
    if d_exact is not None:
        d_n = frac_to_mpf(mp, d_exact % 1)
    z = params.z_at(mp)
    z2 = z * z
    phase = mp.expjpi(-2 * d_n)
    qexp = chi(m) + c_n
    x1 = -z2 * q ** qexp * phase
    x2 = -q ** (-qexp) / (z2 * phase)
    tol = ctx.tol
    side_e, side_f = {}, {}

    def t1(k):
        side_e[k] = e_factor(n, M, k, ctx)
        return q ** (k * k) * x1 ** k * side_e[k]

    def t2(k):
        side_f[k] = f_factor(n, M, k, ctx)
        return q ** (k * k) * x2 ** k * side_f[k]

    a1, a2 = abs(x1), abs(x2)
    S1, tail1, _ = _geometric_sum(mp, t1, 0, M, lambda k: q ** (2 * k - 1) * a1,
                                  lambda k: q ** (k * k) * a1 ** k, tol)
    S2, tail2, _ = _geometric_sum(mp, t2, 1, n - M, lambda k: q ** (2 * k - 1) * a2,
                                  lambda k: q ** (k * k) * a2 ** k, tol)
    factor = normalization_log(params, n, mp) / prefactor_log(params, n, m, mp)
    # factor already lives at schedule precision; divide in linear form
    f_lin = mp.exp(factor.log_mag) * factor.unit(mp)
    out = params.ctx.mp
    side = Decomposition(
        m=m, m1=m1, M=M, c_n=out.mpf(c_n), d_n=out.mpf(d_n),
        s1_normalized=out.mpc(S1), s2_normalized=out.mpc(S2),
        tail_bound=out.mpf(tail1 + tail2),
        e={k: out.mpf(v) for k, v in side_e.items()},
        f={k: out.mpf(v) for k, v in side_f.items()},
    )
    return out.mpc(S1 / f_lin), out.mpc(S2 / f_lin), side


def nu_n_strip(params: ScalingParams, n: int) -> int:
    """min(floor((1 + tau) n / 4), floor(-tau n / 4))."""
    _require_strip(params)
    nu = min(params.tau.floor_affine(Fraction(n, 4), Fraction(n, 4)),
             params.tau.floor_affine(Fraction(-n, 4)))
    if nu < 1:
        raise NSmall(f"nu_n = {nu} at n = {n}; n is not yet large enough")
    return nu


def nu_n_log(params: ScalingParams, n: int) -> int:
    """floor(q^4 log^2 n / (1 + log(1/q)))."""
    if n < 2:
        raise DomainError("nu_n needs n >= 2")
    ctx = params.ctx if isinstance(params, ScalingParams) else params
    mp = ctx.mp
    x = ctx.qm ** 4 * mp.log(n) ** 2 / (1 - ctx.logq)
    nu = int(mp.floor(x))
    if abs(x - mp.nint(x)) < mp.mpf(2) ** (-ctx.precision_bits + 8):
        raise AmbiguousFloor(f"nu_n is too close to an integer at n = {n}")
    if nu < 1:
        raise NSmall(f"nu_n = {nu} at n = {n}; n is not yet large enough")
    return nu
