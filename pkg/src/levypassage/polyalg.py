"""Dense univariate polynomial algebra over an exact or real scalar field.

Polynomials are the common currency of the analytic engines: the integral
functionals being averaged are polynomial images of the path, the operator
calculus maps polynomials to polynomials, and every intermediate moment
computation is a polynomial in the starting level.  The representation is a
dense coefficient tuple indexed by degree with no trailing zeros, so two
equal polynomials always have identical tuples and ``==`` is structural.

Coefficients live in one scalar field at a time (Fractions/ints in rational
mode, ``mpmath.mpf`` in real mode); mixing fields inside one polynomial is a
caller bug and is not defended beyond Python's own coercion rules.  Infinite
coefficients are rejected outright — infinite *results* are flagged at the
operator layer, never smuggled into a coefficient list.

The zero polynomial is the empty tuple; constants have degree 0; the
canonical basis monomial x^k is :func:`monomial`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

from .scalars import Scalar, format_scalar, is_infinite

__all__ = [
    "Polynomial",
    "monomial",
    "poly_add",
    "poly_sub",
    "poly_mul",
    "poly_scale",
    "poly_integrate_from_zero",
    "poly_derivative",
    "poly_eval",
    "ZERO",
    "ONE",
    "X",
]


def _normalized(coeffs: Iterable[Scalar]) -> Tuple[Scalar, ...]:
    cs = list(coeffs)
    for c in cs:
        if is_infinite(c):
            raise ValueError("polynomial coefficients must be finite")
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


@dataclass(frozen=True)
class Polynomial:
    """Immutable dense polynomial; ``coeffs[k]`` multiplies x^k.

    Construct from any coefficient iterable; trailing zeros are stripped so
    the representation is canonical.  The empty tuple is the zero polynomial.
    """

    coeffs: Tuple[Scalar, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _normalized(self.coeffs))

    # -- structure -------------------------------------------------------

    @property
    def degree(self) -> int:
        """Degree; the zero polynomial reports -1."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, k: int) -> Scalar:
        """Coefficient of x^k (0 beyond the stored degree)."""
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return 0

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return poly_add(self, other)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return poly_sub(self, other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(tuple(-c for c in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return poly_mul(self, other)
        return poly_scale(other, self)

    def __rmul__(self, other):
        return poly_scale(other, self)

    def __call__(self, x: Scalar) -> Scalar:
        return poly_eval(self, x)

    # -- display ---------------------------------------------------------

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            text = format_scalar(c)
            if k == 0:
                parts.append(text)
            else:
                xk = "x" if k == 1 else f"x^{k}"
                parts.append(xk if text == "1" else f"{text}*{xk}")
        return " + ".join(parts)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Polynomial({self})"


def monomial(k: int, coeff: Scalar = 1) -> Polynomial:
    """The monomial ``coeff * x^k`` (k >= 0)."""
    if k < 0:
        raise ValueError("monomial degree must be nonnegative")
    return Polynomial((0,) * k + (coeff,))


ZERO = Polynomial()
ONE = Polynomial((1,))
X = monomial(1)


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    """Sum of two polynomials."""
    a, b = p.coeffs, q.coeffs
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for k, c in enumerate(b):
        out[k] = out[k] + c
    return Polynomial(out)


def poly_sub(p: Polynomial, q: Polynomial) -> Polynomial:
    """Difference ``p - q``."""
    return poly_add(p, -q)


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    """Product of two polynomials (schoolbook convolution)."""
    if p.is_zero() or q.is_zero():
        return ZERO
    out: list = [0] * (len(p.coeffs) + len(q.coeffs) - 1)
    for i, a in enumerate(p.coeffs):
        if a == 0:
            continue
        for j, b in enumerate(q.coeffs):
            if b == 0:
                continue
            out[i + j] = out[i + j] + a * b
    return Polynomial(out)


def poly_scale(c: Scalar, p: Polynomial) -> Polynomial:
    """Scalar multiple ``c * p``."""
    if is_infinite(c):
        raise ValueError("cannot scale a polynomial by an infinite scalar")
    if c == 0 or p.is_zero():
        return ZERO
    return Polynomial(tuple(c * a for a in p.coeffs))


def poly_integrate_from_zero(p: Polynomial) -> Polynomial:
    """Antiderivative vanishing at zero: x^k maps to x^(k+1)/(k+1).

    In rational mode the division is exact (int coefficients are promoted to
    Fractions as needed); in real mode it is an mpf division.
    """
    if p.is_zero():
        return ZERO
    out: list = [0]
    for k, c in enumerate(p.coeffs):
        out.append(_divide_exactly(c, k + 1))
    return Polynomial(out)


def poly_derivative(p: Polynomial) -> Polynomial:
    """Formal derivative."""
    if p.degree < 1:
        return ZERO
    return Polynomial(tuple(k * c for k, c in enumerate(p.coeffs) if k >= 1))


def poly_eval(p: Polynomial, x: Scalar) -> Scalar:
    """Evaluate by Horner's scheme."""
    acc: Scalar = 0
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def _divide_exactly(c: Scalar, n: int) -> Scalar:
    """Divide a coefficient by a positive integer without leaving the field."""
    from fractions import Fraction

    if isinstance(c, int) and not isinstance(c, bool):
        if c % n == 0:
            return c // n
        return Fraction(c, n)
    return c / n
