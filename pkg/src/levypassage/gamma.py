"""Operator calculus for expected path functionals of one descent cycle.

A *cycle* starts the process at level ``x >= 0`` and runs it until the first
passage (strictly) below 0 at time ``tau_x``.  For a polynomial ``f`` two
functionals matter:

* the running integral ``A_f(x) = integral_0^{tau_x} f(J(t)) dt``;
* the jump sum ``D_f(x) = sum over jump times t <= tau_x of f(J(t-))``,
  i.e. ``f`` sampled at the pre-jump levels.

Both have expectations that are again polynomials in the starting level, and
the maps ``f -> E A_f`` and ``f -> E D_f`` are linear operators with an
explicit action on monomials:

    gamma_a(x^k) = (-1/rho) * sum_{i=0}^{k} C(k, i) * E zeta^i
                   * x^(k-i+1) / (k-i+1),

where ``rho = phi'(0+) < 0`` is the mean slope and ``E zeta^i`` are the
supremum moments from the psi table.  The jump-sum operator is the same up
to the arrival-rate factor: ``gamma_d = lambda * gamma_a``.

Nested products of cycles reduce to *composition chains*: for polynomials
``f_1 .. f_m``,

    compose_chain([f_1, .., f_m]) = gamma_a(f_1 * gamma_a(f_2 * ... *
                                     gamma_a(f_m)))

with the innermost application consuming the LAST list element; the empty
chain is the constant 1.  Chains are the raw material for joint moments of
several functionals (see :mod:`levypassage.moments`).

A degree-d polynomial consumes supremum moments through order d; the context
must be provisioned at least that far, and every needed moment must be
finite — an infinite one raises :class:`FiniteMomentRequired` naming the
jump-measure moment at fault (higher layers convert that into a flagged
infinite moment where "infinite" is a legitimate answer).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence, Union

from .errors import FiniteMomentRequired, MissingMoment
from .model import LevyModel, PushSpec, push_moments
from .polyalg import ONE, ZERO, Polynomial, poly_mul
from .psi import PsiTable, psi_for_model
from .scalars import INF, NEG_INF, Scalar, exact_div, is_infinite

__all__ = [
    "GammaContext",
    "InfinitePolynomial",
    "INFINITE_POLYNOMIAL",
    "gamma_a",
    "gamma_d",
    "compose_chain",
    "push_expectation",
]


class InfinitePolynomial:
    """Sentinel for an operator image that is infinite identically in x."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "InfinitePolynomial"

    def is_zero(self) -> bool:
        return False


INFINITE_POLYNOMIAL = InfinitePolynomial()


@dataclass(frozen=True)
class GammaContext:
    """Everything the cycle operators need about a model.

    Attributes
    ----------
    psi:
        Supremum-moment table, provisioned through some order.
    rho:
        Mean slope ``phi'(0+) < 0``.
    lam:
        Jump arrival rate (0, positive, or flagged infinite).
    """

    psi: PsiTable
    rho: Scalar
    lam: Scalar

    @classmethod
    def for_model(cls, model: LevyModel, order: int) -> "GammaContext":
        """Provision a context whose psi table reaches ``order`` (>= 0).

        Raises :class:`MissingMoment` eagerly (naming the first jump-measure
        moment the model cannot supply) if the table cannot be built.
        """
        if order < 0:
            raise ValueError("context order must be >= 0")
        psi = psi_for_model(model, max(order, 1))
        return cls(psi=psi, rho=model.rho, lam=model.lam)

    def capacity(self) -> int:
        return self.psi.order


def gamma_a(ctx: GammaContext, f: Polynomial) -> Polynomial:
    """Expected running integral as a polynomial of the starting level.

    Linear in ``f``; maps degree d to degree d+1 with zero constant term.
    Needs finite supremum moments through order ``deg f``.
    """
    if f.is_zero():
        return ZERO
    degree = f.degree
    if ctx.capacity() < degree:
        raise MissingMoment(
            "supremum moment",
            degree,
            f"context provisioned through order {ctx.capacity()} but the "
            f"operand has degree {degree}",
        )
    out: list = [0] * (degree + 2)
    neg_inv_rho = exact_div(-1, ctx.rho)
    for k, coeff in enumerate(f.coeffs):
        if coeff == 0:
            continue
        for i in range(k + 1):
            zeta_i = ctx.psi.zeta_moment(i)
            if is_infinite(zeta_i):
                raise FiniteMomentRequired(
                    "jump-measure raw moment",
                    i + 1,
                    f"the operator needs E zeta^{i} finite to act on x^{k}",
                )
            term = exact_div(comb(k, i) * zeta_i, k - i + 1)
            out[k - i + 1] = out[k - i + 1] + coeff * term * neg_inv_rho
    return Polynomial(out)


def gamma_d(ctx: GammaContext, f: Polynomial) -> Union[Polynomial, InfinitePolynomial]:
    """Expected jump sum: ``lambda`` times :func:`gamma_a`.

    Zero arrival rate gives the zero polynomial regardless of ``f`` (there
    are no jumps to sum); infinite arrival rate gives the zero polynomial
    for ``f = 0`` and the flagged :data:`INFINITE_POLYNOMIAL` otherwise.
    """
    if ctx.lam == 0 or f.is_zero():
        return ZERO
    if is_infinite(ctx.lam):
        return INFINITE_POLYNOMIAL
    return ctx.lam * gamma_a(ctx, f)


def compose_chain(ctx: GammaContext, fs: Sequence[Polynomial]) -> Polynomial:
    """Nested operator chain; innermost application takes the LAST element.

    ``compose_chain(ctx, [])`` is the constant polynomial 1.  The chain on m
    polynomials has degree ``sum(deg f_j + 1)`` and consumes supremum
    moments through one less than that.
    """
    acc = ONE
    for f in reversed(list(fs)):
        acc = gamma_a(ctx, poly_mul(f, acc))
    return acc


def push_expectation(push: PushSpec, p: Polynomial) -> Scalar:
    """Average the polynomial against the push law: ``E p(V)``.

    Infinite push moments weighted by nonzero coefficients make the result a
    flagged infinity of the appropriate sign; contributions of conflicting
    infinite signs have no meaningful value and raise
    :class:`FiniteMomentRequired`.  A push moment list that simply stops too
    early raises :class:`MissingMoment`.
    """
    total: Scalar = 0
    infinite_sign = 0
    for k, coeff in enumerate(p.coeffs):
        if coeff == 0:
            continue
        mu_k = push_moments(push, k)
        if is_infinite(mu_k):
            sign = 1 if coeff > 0 else -1
            if infinite_sign and sign != infinite_sign:
                raise FiniteMomentRequired(
                    "push raw moment",
                    k,
                    "infinite contributions of conflicting signs",
                )
            infinite_sign = sign
            continue
        total = total + coeff * mu_k
    if infinite_sign:
        return INF if infinite_sign > 0 else NEG_INF
    return total
