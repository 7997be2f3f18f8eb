"""Dual-mode scalar arithmetic: exact rationals or high-precision reals.

Every analytic engine in this package is written generically over a scalar
field and runs in one of two modes:

* **rational** — all quantities are :class:`fractions.Fraction` (Python ints
  are absorbed transparently).  Results are bit-exact; equality assertions
  in the test-suite and the acceptance harness rely on this.
* **real** — quantities are ``mpmath.mpf`` values carried at no less than
  :data:`MIN_REAL_PRECISION_BITS` bits of mantissa.  This mode exists for
  models whose parameters are not rational (or whose user explicitly asks
  for floating evaluation); tolerances in this mode are documented per
  operation.

Infinite moments are *values*, not errors.  They are represented by the IEEE
infinities (``math.inf`` / ``-math.inf``), which compare correctly against
both Fractions and mpf values.  Because Python would silently coerce
``Fraction * inf`` to a float, engines must branch on :func:`is_infinite`
before arithmetic; the helpers here keep that cheap and uniform.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import mpmath

__all__ = [
    "Scalar",
    "INF",
    "NEG_INF",
    "MIN_REAL_PRECISION_BITS",
    "is_infinite",
    "is_rational",
    "ensure_real_precision",
    "to_real",
    "parse_exact",
    "format_scalar",
    "rational_inputs",
    "exact_div",
]

#: A scalar in either mode.  Infinite values are plain floats (``math.inf``).
Scalar = Union[int, Fraction, float, "mpmath.mpf"]

INF = math.inf
NEG_INF = -math.inf

#: Floor on the working mantissa for real mode (bits).
MIN_REAL_PRECISION_BITS = 160


def is_infinite(x: Scalar) -> bool:
    """True if ``x`` is a flagged infinity (either sign, float or mpf)."""
    if isinstance(x, float):
        return math.isinf(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.isinf(x)
    return False


def is_rational(x: Scalar) -> bool:
    """True if ``x`` is an exact value (int or Fraction)."""
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def ensure_real_precision(min_bits: int = MIN_REAL_PRECISION_BITS) -> None:
    """Raise the global mpmath working precision to at least ``min_bits``.

    Never lowers an already-higher precision, so importing this package does
    not degrade another library's settings.
    """
    if mpmath.mp.prec < min_bits:
        mpmath.mp.prec = min_bits


def to_real(x: Scalar) -> Scalar:
    """Convert ``x`` to an ``mpmath.mpf`` at the current working precision.

    Fractions convert via exact integer numerator/denominator division;
    infinities pass through unchanged.
    """
    if is_infinite(x):
        return x
    ensure_real_precision()
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator)
    return mpmath.mpf(x)


def parse_exact(text: str) -> Fraction:
    """Parse a decimal or rational string to an exact Fraction.

    Accepts integers (``"3"``), ratios (``"-5/7"``), and decimal literals
    with optional exponent (``"0.25"``, ``"1e-3"``) — all parsed exactly.
    """
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not an exact number: {text!r}") from exc


def format_scalar(x: Scalar) -> str:
    """Canonical text form: rationals as ``p/q`` (or ``p``), reals at 17
    significant digits, infinities as ``inf``/``-inf``."""
    if is_infinite(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, bool):  # bools are ints; reject silently odd input
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 17)
    return f"{float(x):.17g}"


def rational_inputs(*values: Scalar) -> bool:
    """True when every value is exact (int/Fraction) or a flagged infinity.

    This is the mode-detection rule: a model whose finite parameters are all
    exact runs in rational mode; any float/mpf parameter switches the model
    to real mode.
    """
    return all(is_infinite(v) or is_rational(v) for v in values)


def exact_div(a: Scalar, b: Scalar) -> Scalar:
    """Field-preserving division: exact inputs give an exact Fraction."""
    if is_rational(a) and is_rational(b):
        return Fraction(a) / Fraction(b)
    return a / b
