"""Exact arithmetic side-data: descriptors, floors, orbits and Diophantine searches.

Real parameters are carried as :class:`RealDescriptor` values so that
rationality is known exactly and floors of quadratic surds are decided with
integer arithmetic instead of floating point.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from ._precision import frac_to_mpf, mpctx, to_fraction
from .errors import AmbiguousFloor, DomainError, PrecisionExhausted

__all__ = [
    "RealDescriptor",
    "ApproxHit",
    "SimultaneousHit",
    "frac_floor",
    "chi",
    "orbit_set",
    "cf_convergents",
    "convergent_denominators",
    "approx_search",
    "chebyshev_hits",
    "simultaneous_search",
]

_DECIMAL_RE = re.compile(r"^[+-]?\d+(\.\d+)?$")


def _is_squarefree(d: int) -> bool:
    f = 2
    while f * f <= d:
        if d % (f * f) == 0:
            return False
        f += 1
    return True


def _floor_surd(P: int, D: int, Q: int) -> int:
    """floor((P + sqrt(D)) / Q) for integers with Q != 0 and D not a square."""
    s = math.isqrt(D)
    if Q > 0:
        return (P + s) // Q
    return (-P - s - 1) // (-Q)


@dataclass(frozen=True)
class RealDescriptor:
    """Exact description of a real parameter.

    ``kind`` is ``"rational"`` (``p/r``), ``"surd"`` (``(p + r*sqrt(d))/s``) or
    ``"decimal"`` (a literal ``digits`` string that is either an exact
    rational or a truncation of an irrational number).
    """

    kind: str
    p: int = 0
    r: int = 1
    d: int = 0
    s: int = 1
    digits: str = ""
    irrational: bool = False

    @classmethod
    def rational(cls, p, r=1) -> "RealDescriptor":
        x = Fraction(p, r) if isinstance(p, int) and isinstance(r, int) else to_fraction(p) / to_fraction(r)
        return cls("rational", x.numerator, x.denominator)

    @classmethod
    def surd(cls, p: int, r: int, d: int, s: int = 1) -> "RealDescriptor":
        if s == 0:
            raise DomainError("surd denominator must be nonzero")
        if s < 0:
            p, r, s = -p, -r, -s
        if r == 0 or d == 0:
            raise DomainError("a surd with r = 0 or d = 0 is rational; use RealDescriptor.rational")
        if d < 0 or not _is_squarefree(d) or math.isqrt(d) ** 2 == d:
            raise DomainError(f"surd radicand must be a square-free non-square positive integer, got {d}")
        g = math.gcd(math.gcd(p, r), s)
        return cls("surd", p // g, r // g, d, s // g)

    @classmethod
    def decimal(cls, digits: str, irrational: bool) -> "RealDescriptor":
        if not _DECIMAL_RE.match(digits):
            raise DomainError(f"malformed decimal literal {digits!r}")
        return cls("decimal", digits=digits, irrational=bool(irrational))

    @classmethod
    def parse(cls, text: str) -> "RealDescriptor":
        """Read ``p/r``, ``p``, a plain decimal (exact), ``surd:p,r,d,s`` or ``dec:DIGITS[:irrational]``."""
        text = text.strip()
        try:
            if text.startswith("surd:"):
                p, r, d, s = (int(v) for v in text[5:].split(","))
                return cls.surd(p, r, d, s)
            if text.startswith("dec:"):
                body, _, flag = text[4:].partition(":")
                if flag not in ("", "irrational", "irr", "rational", "rat"):
                    raise ValueError
                return cls.decimal(body, flag in ("irrational", "irr"))
            return cls.rational(Fraction(text))
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"cannot parse real descriptor {text!r}") from None

    def __str__(self) -> str:
        if self.kind == "rational":
            return str(self.p) if self.r == 1 else f"{self.p}/{self.r}"
        if self.kind == "surd":
            return f"surd:{self.p},{self.r},{self.d},{self.s}"
        return f"dec:{self.digits}:irrational" if self.irrational else f"dec:{self.digits}"

    @property
    def is_rational(self) -> bool:
        return self.kind == "rational" or (self.kind == "decimal" and not self.irrational)

    @property
    def exact(self) -> Fraction | None:
        """Exact rational value, or None for irrational descriptors."""
        if self.kind == "rational":
            return Fraction(self.p, self.r)
        if self.kind == "decimal" and not self.irrational:
            return Fraction(self.digits)
        return None

    @property
    def omega_default(self) -> float | None:
        """Default generalized irrationality measure: 2 for surds and irrational decimals."""
        return None if self.is_rational else 2.0

    @property
    def uncertainty(self) -> Fraction:
        """Half-width of the interval known to contain the value (0 if exact)."""
        if self.kind == "decimal" and self.irrational:
            frac_digits = len(self.digits.partition(".")[2])
            return Fraction(1, 10 ** frac_digits)
        return Fraction(0)

    def __neg__(self) -> "RealDescriptor":
        if self.kind == "rational":
            return RealDescriptor.rational(-self.p, self.r)
        if self.kind == "surd":
            return RealDescriptor.surd(-self.p, -self.r, self.d, self.s)
        digits = self.digits[1:] if self.digits.startswith("-") else "-" + self.digits.lstrip("+")
        return RealDescriptor.decimal(digits, self.irrational)

    def value(self, prec: int):
        """The value as an mpf of the shared ``prec``-bit context."""
        mp = mpctx(prec)
        exact = self.exact
        if exact is not None:
            return frac_to_mpf(mp, exact)
        if self.kind == "surd":
            hi = mpctx(prec + 16)
            return mp.mpf((self.p + self.r * hi.sqrt(self.d)) / self.s)
        lit = Fraction(self.digits)
        if lit == 0 or self.uncertainty > abs(lit) * Fraction(1, 2 ** prec):
            raise PrecisionExhausted(f"decimal literal {self.digits} carries fewer than {prec} bits")
        return frac_to_mpf(mp, lit)

    def floor_affine(self, a, b=0) -> int:
        """Exact floor of ``a * x + b`` for rational ``a`` and ``b``."""
        a, b = to_fraction(a), to_fraction(b)
        exact = self.exact
        if exact is not None:
            return math.floor(a * exact + b)
        if a == 0:
            return math.floor(b)
        if self.kind == "surd":
            # a x + b = (P0 + R sqrt d) / S over a common denominator
            den = a.denominator * b.denominator * self.s
            P0 = a.numerator * b.denominator * self.p + b.numerator * a.denominator * self.s
            R = a.numerator * b.denominator * self.r
            if R < 0:
                P0, R, den = -P0, -R, -den
            return _floor_surd(P0, R * R * self.d, den)
        lit = Fraction(self.digits)
        width = abs(a) * self.uncertainty
        lo, hi = math.floor(a * lit + b - width), math.floor(a * lit + b + width)
        if lo != hi:
            raise AmbiguousFloor(f"floor of {a}*{self.digits}+{b} is not decided by the literal")
        return lo

    def sign(self) -> int:
        """-1, 0 or 1; raises AmbiguousFloor when a decimal literal cannot decide it."""
        exact = self.exact
        if exact is not None:
            return (exact > 0) - (exact < 0)
        if self.kind == "surd":
            return 1 if self.floor_affine(1) >= 0 else -1
        lit = Fraction(self.digits)
        if abs(lit) <= self.uncertainty:
            raise AmbiguousFloor(f"sign of {self.digits} is not decided by the literal")
        return 1 if lit > 0 else -1

    def compare(self, c) -> int:
        """Sign of ``x - c`` for rational ``c``."""
        c = to_fraction(c)
        exact = self.exact
        if exact is not None:
            return (exact > c) - (exact < c)
        if self.kind == "surd":
            # irrational, so never equal to c
            return 1 if self.floor_affine(1, -c) >= 0 else -1
        lit = Fraction(self.digits)
        if abs(lit - c) <= self.uncertainty:
            raise AmbiguousFloor(f"cannot compare {self.digits} with {c}")
        return 1 if lit > c else -1


def _as_descriptor(x) -> RealDescriptor:
    if isinstance(x, RealDescriptor):
        return x
    if isinstance(x, str):
        return RealDescriptor.parse(x)
    return RealDescriptor.rational(to_fraction(x))


def frac_floor(x, prec: int = 128):
    """Split ``x`` into ``(floor, frac)`` with ``frac`` in [0, 1).

    Rationals (including floats, which are dyadic) give an exact Fraction for
    ``frac``; irrational descriptors give an mpf at ``prec`` bits.
    """
    if not isinstance(x, RealDescriptor):
        x = RealDescriptor.rational(to_fraction(x))
    exact = x.exact
    if exact is not None:
        fl = math.floor(exact)
        return fl, exact - fl
    if x.kind == "decimal":
        lit = Fraction(x.digits)
        slack = max(x.uncertainty, abs(lit) * Fraction(1, 2 ** (prec - 4)))
        lo, hi = math.floor(lit - slack), math.floor(lit + slack)
        if lo != hi:
            raise AmbiguousFloor(f"{x.digits} is too close to an integer at {prec} bits")
        return lo, frac_to_mpf(mpctx(prec), lit - lo)
    fl = x.floor_affine(1)
    bits = prec + max(0, fl.bit_length()) + 8
    frac = mpctx(prec).mpf(x.value(bits) - fl)
    return fl, frac


def chi(n: int) -> int:
    """Principal character modulo 2: 1 for odd n, 0 for even n."""
    return n & 1


def orbit_set(theta) -> frozenset:
    """Finite set of fractional parts {n * theta} of a rational theta."""
    theta = _as_descriptor(theta)
    exact = theta.exact
    if exact is None:
        raise DomainError("the orbit of an irrational theta is infinite; use approx_search")
    p, r = exact.numerator, exact.denominator
    return frozenset(Fraction((n * p) % r, r) for n in range(1, r + 1))


def _cf_of_fraction(x: Fraction, count: int) -> list[int]:
    quotients = []
    num, den = x.numerator, x.denominator
    while den and len(quotients) < count:
        a = num // den
        quotients.append(a)
        num, den = den, num - a * den
    return quotients


def _cf_of_surd(x: RealDescriptor, count: int) -> list[int]:
    # (P + sqrt D)/Q with Q | D - P^2
    P, D, Q = x.p, x.r * x.r * x.d, x.s
    if x.r < 0:
        P, Q = -P, -Q
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    quotients = []
    while len(quotients) < count:
        a = _floor_surd(P, D, Q)
        quotients.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    return quotients


def _convergents(quotients: list[int]) -> list[tuple[int, int]]:
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in quotients:
        p0, p1 = a * p0 + p1, p0
        q0, q1 = a * q0 + q1, q0
        out.append((p0, q0))
    return out


def cf_convergents(x, count: int, prec: int = 128) -> list[tuple[int, int]]:
    """First ``count`` continued-fraction convergents ``(p_i, q_i)`` of ``x``.

    Rationals stop early at their last convergent.  Irrational decimal
    literals are expanded on both ends of their uncertainty interval and only
    the shared prefix is trusted.
    """
    x = _as_descriptor(x)
    if count < 1:
        raise DomainError("count must be positive")
    exact = x.exact
    if exact is not None:
        return _convergents(_cf_of_fraction(exact, count))
    if x.kind == "surd":
        return _convergents(_cf_of_surd(x, count))
    lit = Fraction(x.digits)
    lo = _cf_of_fraction(lit - x.uncertainty, count + 1)
    hi = _cf_of_fraction(lit + x.uncertainty, count + 1)
    shared = []
    for a, b in zip(lo, hi):
        if a != b:
            break
        shared.append(a)
    # the last shared quotient may still change further down the expansion
    trusted = shared[:-1] if len(shared) < min(len(lo), len(hi)) else shared
    if len(trusted) < count:
        raise PrecisionExhausted(f"literal {x.digits} determines only {len(trusted)} partial quotients")
    return _convergents(trusted[:count])


def convergent_denominators(x, upto: int) -> list[int]:
    """Distinct convergent denominators of ``x`` not exceeding ``upto``."""
    out: list[int] = []
    count = 8
    while True:
        convs = cf_convergents(x, count)
        dens = [qn for _, qn in convs]
        if dens[-1] > upto or len(convs) < count:
            break
        count *= 2
    for qn in dens:
        if qn <= upto and qn not in out:
            out.append(qn)
    return out


@dataclass(frozen=True)
class ApproxHit:
    """``n * theta - beta - m = residual`` with ``|residual| < n**(-rho_used)``."""

    n: int
    m: int
    residual: object
    rho_used: object


class SimultaneousHit(NamedTuple):
    n: int
    m: int
    m1: int
    a_n: object
    b_n: object


def _magnitude(x: RealDescriptor) -> float:
    if x.kind == "surd":
        return abs((x.p + x.r * math.sqrt(x.d)) / x.s)
    if x.kind == "decimal":
        return abs(float(Fraction(x.digits)))
    return abs(x.p / x.r)


def _residuals(theta: RealDescriptor, beta: RealDescriptor, n_max: int, prec: int):
    """Yield ``(n, m, residual, error)`` with m the nearest integer to n*theta - beta."""
    t_exact, b_exact = theta.exact, beta.exact
    if t_exact is not None and b_exact is not None:
        mp = mpctx(prec)
        for n in range(1, n_max + 1):
            v = n * t_exact - b_exact
            m = math.floor(v + Fraction(1, 2))
            yield n, m, frac_to_mpf(mp, v - m), mp.zero if v == m else mp.mpf(2) ** (-prec)
        return
    scale = _magnitude(theta) + _magnitude(beta) + 2
    wp = prec + math.ceil(math.log2(n_max * scale + 1)) + 16
    mp = mpctx(wp)
    tv, bv = theta.value(wp), beta.value(wp)
    err_unit = mp.mpf(2) ** (-wp + 2) * scale
    for n in range(1, n_max + 1):
        v = n * tv - bv
        m = int(mp.nint(v))
        yield n, m, v - m, err_unit * n


def approx_search(theta, beta, rho, n_max: int, prec: int = 128) -> list[ApproxHit]:
    """All ``n <= n_max`` with ``|n*theta - beta - m| < n**(-rho)`` for the nearest integer m."""
    theta, beta = _as_descriptor(theta), _as_descriptor(beta)
    rho_f = to_fraction(rho)
    if rho_f <= 0:
        raise DomainError("rho must be positive")
    hits = []
    mp = mpctx(prec + 64)
    rho_m = frac_to_mpf(mp, rho_f)
    out_mp = mpctx(prec)
    for n, m, res, err in _residuals(theta, beta, n_max, prec):
        if res == 0:
            hits.append(ApproxHit(n, m, out_mp.zero, rho))
            continue
        threshold = mp.mpf(n) ** (-rho_m)
        gap = threshold - abs(mp.mpf(res))
        if abs(gap) <= err + mp.mpf(2) ** (-prec):
            raise PrecisionExhausted(f"cannot decide the approximation inequality at n = {n}")
        if gap > 0:
            hits.append(ApproxHit(n, m, out_mp.mpf(res), rho))
    return hits


def chebyshev_hits(theta, beta, n_max: int, constant=3, prec: int = 128) -> list[tuple[int, int, object]]:
    """All ``n <= n_max`` with ``|n*theta - beta - m| <= constant / n``, as ``(n, m, residual)``."""
    theta, beta = _as_descriptor(theta), _as_descriptor(beta)
    c = to_fraction(constant)
    mp = mpctx(prec)
    out = []
    for n, m, res, err in _residuals(theta, beta, n_max, prec):
        threshold = frac_to_mpf(mp, c) / n
        gap = threshold - abs(res)
        if res != 0 and abs(gap) <= err + mp.mpf(2) ** (-prec):
            raise PrecisionExhausted(f"cannot decide the Chebyshev inequality at n = {n}")
        if res == 0 or gap >= 0:
            out.append((n, m, mp.mpf(res)))
    return out


def simultaneous_search(theta1, theta2, beta1, beta2, rho, n_max: int, prec: int = 128) -> list[SimultaneousHit]:
    """``n <= n_max`` approximating ``beta1`` by ``n*theta1`` and ``beta2`` by ``n*theta2`` at once."""
    first = {h.n: h for h in approx_search(theta1, beta1, rho, n_max, prec)}
    out = []
    for h in approx_search(theta2, beta2, rho, n_max, prec):
        g = first.get(h.n)
        if g is not None:
            out.append(SimultaneousHit(h.n, g.m, h.m, g.residual, h.residual))
    return out
