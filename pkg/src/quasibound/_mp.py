"""Precision plumbing shared by every module.

All high-precision reals are :class:`gmpy2.mpfr`.  Operations that accept a
``precision_bits`` argument run inside :func:`workprec`, which installs a
copy of the current gmpy2 context with the requested mantissa size.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

DEFAULT_PRECISION = 256


@contextmanager
def workprec(bits):
    bits = int(bits)
    if bits < 2:
        raise ValueError(f"precision must be at least 2 bits, got {bits}")
    with gmpy2.context(gmpy2.get_context(), precision=bits) as ctx:
        yield ctx


def current_precision():
    return gmpy2.get_context().precision


def to_mpfr(x):
    """Convert ``x`` to an mpfr at the current precision.

    Strings are parsed as decimals, so serialized values round-trip.
    """
    if isinstance(x, Fraction):
        return mpfr(gmpy2.mpq(x.numerator, x.denominator))
    if isinstance(x, str):
        return mpfr(x.strip())
    return mpfr(x)


def decimal_digits(bits):
    return int(math.ceil(bits * math.log10(2.0))) + 3


def to_decimal(x, bits=None):
    """Decimal string carrying enough digits to recover ``x`` at ``bits``."""
    if bits is None:
        bits = max(current_precision(), getattr(x, "precision", 53))
    if not isinstance(x, gmpy2.mpfr):
        x = mpfr(x)
    return format(x, f".{decimal_digits(bits)}g")
