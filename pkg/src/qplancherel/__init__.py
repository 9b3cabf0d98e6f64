"""Large-degree behaviour of Ismail-Masson polynomials under complex scaling.

Exact values at high precision, the regime main terms and their explicit
error bounds, plus the Diophantine bookkeeping the irrational cases need.
"""
from .asymptotics import RegimeId, classify, error_bound, find_threshold, main_term, verify
from .errors import (
    AmbiguousFloor,
    DomainError,
    NSmall,
    PrecisionExhausted,
    QPlancherelError,
    ScaleOverflow,
)
from .ismail_masson import ScalingParams, hn_direct, hn_normalized
from .numtheory import RealDescriptor, approx_search, cf_convergents
from .qseries import QContext, Bq, qbinomial, qpoch_finite, qpoch_infinite, ramanujan_Aq, theta

__all__ = [
    "AmbiguousFloor", "Bq", "DomainError", "NSmall", "PrecisionExhausted", "QContext",
    "QPlancherelError", "RealDescriptor", "RegimeId", "ScaleOverflow", "ScalingParams",
    "approx_search", "cf_convergents", "classify", "error_bound", "find_threshold",
    "hn_direct", "hn_normalized", "main_term", "qbinomial", "qpoch_finite",
    "qpoch_infinite", "ramanujan_Aq", "theta", "verify",
]
