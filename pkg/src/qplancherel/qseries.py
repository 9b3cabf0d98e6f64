"""Precision-controlled q-series building blocks with certified truncation tails.

Every infinite series here is summed until a rigorous majorant of the
discarded tail drops below the context's ``tail_tol``; the majorant is
returned alongside the value in a :class:`SeriesResult`.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from ._precision import MIN_PRECISION, frac_to_mpf, mpctx, to_fraction
from .errors import DomainError, TailNotConverged

__all__ = [
    "QContext",
    "SeriesResult",
    "qpoch_finite",
    "qpoch_infinite",
    "qfactorial",
    "log_qfactorial",
    "qbinomial",
    "log_qbinomial",
    "ramanujan_Aq",
    "Bq",
    "Bq_prime",
    "theta",
    "theta_product",
    "r1_actual",
    "r1_bound",
    "r2_actual",
    "r2_bound",
]

MAX_TERMS = 200_000


@dataclass(frozen=True)
class QContext:
    """Base ``q`` in (0, 1), working precision and absolute tail target.

    ``q`` is stored as an exact :class:`~fractions.Fraction`; floats and mpf
    values are converted exactly, decimal strings such as ``"0.5"`` are read
    as the decimal rational they spell.
    """

    q: Any
    precision_bits: int = 128
    tail_tol: Any = None

    def __post_init__(self):
        q = to_fraction(self.q)
        if not 0 < q < 1:
            raise DomainError(f"q must lie strictly inside (0, 1), got {q}")
        bits = int(self.precision_bits)
        if bits < MIN_PRECISION:
            raise DomainError(f"precision_bits must be >= {MIN_PRECISION}")
        floor_tol = Fraction(1, 2 ** (bits - 8))
        tol = floor_tol if self.tail_tol is None else to_fraction(self.tail_tol)
        if tol <= 0:
            raise DomainError("tail_tol must be positive")
        if tol < floor_tol:
            raise DomainError("tail_tol is finer than the working precision allows")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "precision_bits", bits)
        object.__setattr__(self, "tail_tol", tol)

    @functools.cached_property
    def mp(self):
        return mpctx(self.precision_bits)

    @functools.cached_property
    def qm(self):
        return frac_to_mpf(self.mp, self.q)

    @functools.cached_property
    def logq(self):
        return self.mp.log(self.qm)

    @functools.cached_property
    def tol(self):
        return frac_to_mpf(self.mp, self.tail_tol)

    @functools.cached_property
    def _log_qfact_table(self) -> list:
        # prefix sums of log(1 - q^j); beyond the last index (q;q)_n equals
        # (q;q)_inf to working precision
        mp = self.mp
        cutoff = mp.mpf(2) ** (-self.precision_bits - 8) * (1 - self.qm)
        table = [mp.zero]
        qj = self.qm
        while True:
            table.append(table[-1] + mp.log1p(-qj))
            if qj * self.qm < cutoff:
                return table
            qj *= self.qm

    @functools.cached_property
    def qq_inf(self):
        """(q; q)_inf at working precision."""
        return self.mp.exp(self._log_qfact_table[-1])

    def with_precision(self, bits: int) -> "QContext":
        """Same base at ``bits`` of precision with the finest admissible tail target."""
        return QContext(self.q, bits, Fraction(1, 2 ** (bits - 8)))

    def with_base(self, q) -> "QContext":
        return QContext(q, self.precision_bits, self.tail_tol)

    def sqrt_base(self) -> "QContext":
        """Context with base sqrt(q), rounded 32 bits beyond working precision."""
        hi = mpctx(self.precision_bits + 32)
        return self.with_base(to_fraction(hi.sqrt(frac_to_mpf(hi, self.q))))

    def convert(self, x):
        if isinstance(x, Fraction):
            return frac_to_mpf(self.mp, x)
        return self.mp.mpmathify(x)


@dataclass(frozen=True)
class SeriesResult:
    """A truncated-series value with a rigorous bound on the discarded tail.

    ``tail_bound <= tail_tol * scale``; ``scale`` is 1 except for sums whose
    natural size is astronomically large, where the tolerance is relative.
    """

    value: Any
    tail_bound: Any
    terms_used: int
    scale: Any = field(default=1)

    def __complex__(self) -> complex:
        return complex(self.value)

    @property
    def upper(self):
        """Certified upper bound on the magnitude of the exact series."""
        return abs(self.value) + self.tail_bound


def qpoch_finite(a, ctx: QContext, n: int):
    """(a; q)_n, the product of (1 - a q^k) for k < n."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    mp = ctx.mp
    a = ctx.convert(a)
    prod = mp.one
    qk = mp.one
    for _ in range(n):
        prod *= 1 - a * qk
        qk *= ctx.qm
    return prod


def _qpoch_product(a, mp, qbase, tol) -> SeriesResult:
    # |(w;q)_inf - 1| <= exp(|w|/(1-q)) - 1 bounds the factors left out
    prod = mp.one
    aqk = a
    absa_qk = abs(a)
    one_minus_q = 1 - qbase
    for k in range(1, MAX_TERMS + 1):
        prod *= 1 - aqk
        aqk *= qbase
        absa_qk *= qbase
        tail = abs(prod) * mp.expm1(absa_qk / one_minus_q)
        if tail <= tol:
            return SeriesResult(prod, tail, k)
    raise TailNotConverged(f"(a;q)_inf did not converge for |a| = {mp.nstr(abs(a), 8)}")


def qpoch_infinite(a, ctx: QContext, method: str = "product") -> SeriesResult:
    """(a; q)_inf, either as the direct product or as Euler's series.

    Both routes stop once the certified tail drops below ``ctx.tail_tol``.
    """
    a = ctx.convert(a)
    if method == "product":
        return _qpoch_product(a, ctx.mp, ctx.qm, ctx.tol)
    if method == "euler":
        return _euler_series(a, ctx)
    raise ValueError(f"unknown method {method!r}")


def _euler_series(a, ctx: QContext) -> SeriesResult:
    # sum q^{k(k-1)/2} (-a)^k / (q;q)_k; majorant t_k uses (q;q)_k >= (q;q)_inf
    mp, q = ctx.mp, ctx.qm
    absa = abs(a)
    term = mp.one
    majorant = mp.one / ctx.qq_inf
    qk = mp.one
    terms = []
    for k in range(MAX_TERMS):
        ratio = qk * absa
        if k >= 1 and 2 * ratio <= 1 and majorant / (1 - ratio) <= ctx.tol:
            return SeriesResult(mp.fsum(terms), majorant / (1 - ratio), k)
        terms.append(term)
        term = term * (-a) * qk / (1 - qk * q)
        majorant *= ratio
        qk *= q
    raise TailNotConverged("Euler series for (a;q)_inf did not converge")


def log_qfactorial(n: int, ctx: QContext):
    """log (q; q)_n from prefix sums of log(1 - q^j)."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    table = ctx._log_qfact_table
    return table[min(n, len(table) - 1)]


def qfactorial(n: int, ctx: QContext):
    return ctx.mp.exp(log_qfactorial(n, ctx))


def log_qbinomial(n: int, k: int, ctx: QContext):
    if not 0 <= k <= n:
        raise DomainError(f"q-binomial needs 0 <= k <= n, got n={n}, k={k}")
    return log_qfactorial(n, ctx) - log_qfactorial(k, ctx) - log_qfactorial(n - k, ctx)


def qbinomial(n: int, k: int, ctx: QContext):
    """Gaussian binomial [n, k]_q, evaluated in log space."""
    return ctx.mp.exp(log_qbinomial(n, k, ctx))


def _qsquare_series(w, ctx: QContext, min_terms: int = 0) -> SeriesResult:
    """Sum of q^{k^2} w^k / (q;q)_k with a geometric tail majorant.

    The k-th magnitude is at most t_k = q^{k^2}|w|^k/(q;q)_inf and
    t_{k+1}/t_k = q^{2k+1}|w| decreases, so once that ratio r is at most 1/2
    the tail from K on is below t_K/(1-r).
    """
    mp, q = ctx.mp, ctx.qm
    absw = abs(w)
    term = mp.one
    majorant = mp.one / ctx.qq_inf
    q2k1 = q
    terms = []
    for k in range(MAX_TERMS):
        ratio = q2k1 * absw
        if k >= max(1, min_terms) and 2 * ratio <= 1:
            tail = majorant / (1 - ratio)
            if tail <= ctx.tol:
                return SeriesResult(mp.fsum(terms), tail, k)
        terms.append(term)
        term = term * q2k1 * w / (1 - q ** (k + 1))
        majorant *= ratio
        q2k1 *= q * q
    raise TailNotConverged(f"series did not converge for |w| = {mp.nstr(absw, 8)}")


def ramanujan_Aq(z, ctx: QContext, min_terms: int = 0) -> SeriesResult:
    """Ramanujan's entire function A_q(z) = sum q^{k^2} (-z)^k / (q;q)_k."""
    return _qsquare_series(-ctx.convert(z), ctx, min_terms)


def Bq(x, ctx: QContext, min_terms: int = 0) -> SeriesResult:
    """B_q(x) = sum q^{k^2} x^k / (q;q)_k for x >= 0.

    All terms are nonnegative, so ``value`` is a lower bound and
    ``value + tail_bound`` an upper bound for the exact sum.
    """
    x = ctx.convert(x)
    if x < 0:
        raise DomainError("B_q is only used for nonnegative arguments")
    return _qsquare_series(x, ctx, min_terms)


def Bq_prime(x, ctx: QContext) -> SeriesResult:
    """Derivative sum k q^{k^2} x^{k-1} / (q;q)_k of B_q at x >= 0."""
    mp, q = ctx.mp, ctx.qm
    x = ctx.convert(x)
    if x < 0:
        raise DomainError("B_q' is only used for nonnegative arguments")
    # majorant t_k = k q^{k^2} x^{k-1}/(q;q)_inf, t_{k+1}/t_k <= 2 q^{2k+1} x
    terms = []
    term = q / (1 - q)
    majorant = q / ctx.qq_inf
    for k in range(1, MAX_TERMS):
        ratio = 2 * q ** (2 * k + 1) * x
        if k >= 2 and 2 * ratio <= 1 and majorant / (1 - ratio) <= ctx.tol:
            return SeriesResult(mp.fsum(terms), majorant / (1 - ratio), k - 1)
        terms.append(term)
        term = term * (k + 1) * q ** (2 * k + 1) * x / (k * (1 - q ** (k + 1)))
        majorant = majorant * (k + 1) * q ** (2 * k + 1) * x / k
    raise TailNotConverged("B_q' series did not converge")


def theta(z, ctx: QContext, min_terms: int = 0) -> SeriesResult:
    """Bilateral theta series sum_{n in Z} q^{n^2} z^n, truncated at |n| <= N."""
    mp, q = ctx.mp, ctx.qm
    z = ctx.convert(z)
    if z == 0:
        raise DomainError("theta(z|q) needs z != 0")
    w = max(abs(z), 1 / abs(z))
    zinv = 1 / z
    terms = [mp.one]
    zn, zmn = mp.one, mp.one
    for N in range(MAX_TERMS):
        # tail over |n| > N: 2 * sum_{n>N} q^{n^2} w^n, ratio q^{2n+1} w
        ratio = q ** (2 * N + 3) * w
        if N >= min_terms and 2 * ratio <= 1:
            lead = q ** ((N + 1) ** 2) * w ** (N + 1)
            tail = 2 * lead / (1 - ratio)
            if tail <= ctx.tol:
                return SeriesResult(mp.fsum(terms), tail, 2 * N + 1)
        zn *= z
        zmn *= zinv
        terms.append(q ** ((N + 1) ** 2) * (zn + zmn))
    raise TailNotConverged("theta series did not converge")


def theta_product(z, ctx: QContext) -> SeriesResult:
    """Jacobi triple product (q^2, -qz, -q/z; q^2)_inf with a combined tail bound."""
    mp, q = ctx.mp, ctx.qm
    z = ctx.convert(z)
    if z == 0:
        raise DomainError("theta(z|q) needs z != 0")
    q2 = q * q
    tol = ctx.tol * mp.mpf(2) ** -24
    parts = [_qpoch_product(a, mp, q2, tol) for a in (q2, -q * z, -q / z)]
    value = parts[0].value * parts[1].value * parts[2].value
    exact_mag = mp.one
    lower = mp.one
    for part in parts:
        exact_mag *= abs(part.value) + part.tail_bound
        lower *= abs(part.value)
    return SeriesResult(value, exact_mag - lower, max(p.terms_used for p in parts))


def _boosted(ctx: QContext, a, n: int) -> QContext:
    # (a q^n; q)_inf - 1 is of size a q^n; keep that many extra bits
    lost = max(0, math.ceil(n * math.log2(1 / float(ctx.q)) - math.log2(max(float(a), 1e-300))))
    return ctx.with_precision(ctx.precision_bits + min(lost, 4096) + 16)


def _check_r1(a):
    if a <= 0:
        raise DomainError("R_1(a; n) needs a > 0")


def r1_actual(a, ctx: QContext, n: int):
    """R_1(a; n) = (a q^n; q)_inf - 1, computed with enough guard bits."""
    a = to_fraction(a)
    _check_r1(a)
    hi = _boosted(ctx, a, n)
    val = qpoch_infinite(frac_to_mpf(hi.mp, a) * hi.qm ** n, hi).value - 1
    return ctx.mp.mpf(val)


def r1_bound(a, ctx: QContext, n: int):
    """(-a q^2; q)_inf a q^n / (1 - q)."""
    a = to_fraction(a)
    _check_r1(a)
    q = ctx.qm
    am = frac_to_mpf(ctx.mp, a)
    head = qpoch_infinite(-am * q * q, ctx)
    return head.upper * am * q ** n / (1 - q)


def _check_r2(a, ctx: QContext):
    if not 0 < a * ctx.q < 1:
        raise DomainError("R_2(a; n) needs 0 < a q < 1")


def r2_actual(a, ctx: QContext, n: int):
    """R_2(a; n) = 1 / (a q^n; q)_inf - 1."""
    a = to_fraction(a)
    _check_r2(a, ctx)
    hi = _boosted(ctx, a, n)
    val = 1 / qpoch_infinite(frac_to_mpf(hi.mp, a) * hi.qm ** n, hi).value - 1
    return ctx.mp.mpf(val)


def r2_bound(a, ctx: QContext, n: int):
    """a q^n / ((1 - q) (a q; q)_inf)."""
    a = to_fraction(a)
    _check_r2(a, ctx)
    q = ctx.qm
    am = frac_to_mpf(ctx.mp, a)
    head = qpoch_infinite(am * q, ctx)
    return am * q ** n / ((1 - q) * (head.value - head.tail_bound))
