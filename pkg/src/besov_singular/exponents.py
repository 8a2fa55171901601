"""Extended-real exponents with exact reciprocals.

Exponents ``p, q`` live in ``(0, inf]``. Rational inputs are kept as
:class:`fractions.Fraction` so that critical-line comparisons are exact;
``INF`` is ``math.inf`` and its reciprocal is exactly zero.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Real
from typing import Union

INF = math.inf

Exponent = Union[Fraction, float]
Scalar = Union[Fraction, float]

#: Absolute tolerance used whenever a float (non-rational) input enters a
#: boundary comparison.
FLOAT_TOL = 1e-12


def parse_scalar(value) -> Scalar:
    """Parse a real number, keeping rationals exact.

    Accepts ``int``, ``Fraction``, ``float`` and strings such as ``"3"``,
    ``"-1/2"``, ``"0.25"``. Floats that are not integers stay floats.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"expected a finite number, got {value!r}")
        return Fraction(value) if value.is_integer() else value
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            pass
        try:
            return parse_scalar(float(text))
        except ValueError:
            raise ValueError(f"cannot parse number {value!r}") from None
    if isinstance(value, Real):
        return parse_scalar(float(value))
    raise ValueError(f"cannot parse number {value!r}")


def parse_exponent(value) -> Exponent:
    """Parse an exponent in ``(0, inf]``; ``"inf"`` and ``math.inf`` map to ``INF``."""
    if isinstance(value, str) and value.strip().lower() in {"inf", "infinity", "oo", "∞"}:
        return INF
    if isinstance(value, float) and math.isinf(value):
        if value < 0:
            raise ValueError("exponent must be positive")
        return INF
    p = parse_scalar(value)
    if p <= 0:
        raise ValueError(f"exponent must be positive, got {value!r}")
    return p


def is_inf(p) -> bool:
    return isinstance(p, float) and math.isinf(p)


def recip(p: Exponent) -> Scalar:
    """``1/p`` with the convention ``1/inf = 0``."""
    if is_inf(p):
        return Fraction(0)
    if isinstance(p, Fraction):
        return 1 / p
    return 1.0 / p


def is_exact(*values) -> bool:
    return all(isinstance(v, Fraction) or is_inf(v) for v in values)


def compare(a, b) -> int:
    """Three-way comparison; exact on rationals, ``FLOAT_TOL`` otherwise."""
    if is_exact(a, b):
        if a == b:
            return 0
        return -1 if a < b else 1
    diff = float(a) - float(b)
    if math.isnan(diff):
        # inf - inf
        return 0
    if abs(diff) <= FLOAT_TOL:
        return 0
    return -1 if diff < 0 else 1


def format_exponent(p) -> str:
    if is_inf(p):
        return "inf"
    if isinstance(p, Fraction):
        return str(p)
    return repr(float(p))


def to_json_exponent(p):
    """JSON form: ``"inf"``, an int, a rational string or a float."""
    if is_inf(p):
        return "inf"
    if isinstance(p, Fraction):
        if p.denominator == 1:
            return int(p)
        return str(p)
    return float(p)
