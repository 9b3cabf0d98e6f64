"""Per-precision mpmath contexts.

Each context is created once and its precision is never changed afterwards,
so contexts can be shared freely between threads.  Code that needs more bits
asks for another context instead of mutating ``prec``.
"""
from __future__ import annotations

import functools
import math
from fractions import Fraction

import mpmath

MIN_PRECISION = 64


@functools.lru_cache(maxsize=None)
def mpctx(prec: int) -> mpmath.ctx_mp.MPContext:
    if prec < 2:
        raise ValueError("precision must be at least 2 bits")
    ctx = mpmath.MPContext()
    ctx.prec = int(prec)
    return ctx


def schedule_bits(target_bits: int, n: int) -> int:
    """Precision for reducing phases like ``n**2 * theta`` modulo 1."""
    return target_bits + 2 * math.ceil(math.log2(n * n + 1)) + 32


def to_fraction(x) -> Fraction:
    """Exact rational value of an int, Fraction, float, decimal string or mpf."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    if hasattr(x, "_mpf_"):
        num, den = _mpf_to_rational(x)
        return Fraction(num, den)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


def _mpf_to_rational(x):
    sign, man, exp, _ = x._mpf_
    if not man and exp:
        raise ValueError("cannot convert an infinite or nan mpf to Fraction")
    man = -man if sign else man
    if exp >= 0:
        return int(man) << exp, 1
    return int(man), 1 << (-exp)


def frac_to_mpf(mp, x: Fraction):
    return mp.mpf(x.numerator) / x.denominator
