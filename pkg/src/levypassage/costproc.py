"""The cost process x -> A_k(x): moments, theta rates, autocovariance.

For a deterministic starting level x, write A_k(x) for the running integral
of the k-th power of the workload over the first-passage cycle.  Holding the
randomness fixed and varying x makes A_k(.) a stochastic process with
locally Lipschitz paths; this module computes its moment polynomials, the
small-level rates

    theta(u) = lim_{y -> 0} E A_1^u(y) / y,

its autocovariance function, and the moment ODE ladder.

Two independent routes to theta(u) are implemented.  The explicit route
sums over the composition set I(u): all (i_1, ..., i_u) of nonnegative
integers with i_1 + ... + i_u = 2u - 1 and the prefix bounds
i_j <= 2j - 1 - (i_1 + ... + i_{j-1}); each composition contributes the
product over j of

    binom(2j - 1 - prefix_j, i_j) * E zeta^{i_j} / (2j - prefix_j - i_j),

scaled by u! / (-rho)^u, where zeta is the Pollaczek-Khinchine variable and
rho < 0 the mean slope.  (The prefix bound is exactly the condition that
makes each binomial nonzero and each denominator positive; it also makes
the set finite and nonempty, containing (0, ..., 0, 2u-1).)  The limit
route reads theta(u) off the linear coefficient of the u-fold nested
composition of Gamma_a applied to the identity.  The two must agree
exactly; their equality is part of the acceptance suite.

The moment ODE ladder: the corrected recursion integrates

    d/dx E A_1^l(x) = sum_{i<l} binom(l,i) theta(l-i) E A_1^i(x)
                      + l * E[A_1^{l-1}(x) tau_x],

whose solution equals the nested-composition value l! * Gamma_a-chain of l
identity slots exactly.  A historical variant of this recursion omits the
final cross term l * E[A_1^{l-1}(x) tau_x]; it is retained behind
``corrected=False`` purely for diagnostic comparison, and it already
disagrees at l = 1 (2x instead of 2x + x^2).  The cross term arises because
expanding E[A_1(x) + y tau_x + A_1'(y)]^l in y keeps, besides the
(A_1'(y)-only) terms that produce the theta rates, the first-order-in-y
term with one factor of tau_x; dropping it is only valid when l = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import ArgumentOrder, FiniteMomentRequired
from .gamma import GammaContext, compose_chain, gamma_a
from .model import DeterministicPush, LevyModel
from .moments import FunctionalSpec, Kind, joint_moment_polynomial
from .polyalg import (
    ONE,
    Polynomial,
    monomial,
    poly_add,
    poly_eval,
    poly_integrate_from_zero,
    poly_scale,
)
from .scalars import Scalar, exact_div, is_infinite

__all__ = [
    "CostContext",
    "ThetaTable",
    "CostMomentPoly",
    "cost_context",
    "index_set",
    "theta_explicit",
    "theta_from_limit",
    "theta_table",
    "cost_moment_poly",
    "ode_recursion",
    "autocovariance",
]


@dataclass
class CostContext:
    """A model plus cached per-order operator contexts.

    All cost-process operations accept either a :class:`CostContext` or a
    bare :class:`~levypassage.model.LevyModel`; passing a context makes
    repeated calls share their supremum-moment tables.
    """

    model: LevyModel
    _gamma_cache: Dict[int, GammaContext] = field(default_factory=dict, repr=False)

    def gamma_context(self, order: int) -> GammaContext:
        """A Gamma-operator context whose psi table reaches ``order``."""
        have = max(self._gamma_cache, default=-1)
        if have >= order:
            return self._gamma_cache[have]
        ctx = GammaContext.for_model(self.model, order)
        self._gamma_cache[order] = ctx
        return ctx


def cost_context(model: LevyModel) -> CostContext:
    return CostContext(model)


def _as_context(ctx: Union[CostContext, LevyModel]) -> CostContext:
    if isinstance(ctx, CostContext):
        return ctx
    return CostContext(ctx)


def _zeta_moments(ctx: CostContext, order: int) -> List[Scalar]:
    """E zeta^0 .. E zeta^order, all required finite."""
    gctx = ctx.gamma_context(order)
    out: List[Scalar] = []
    for k in range(order + 1):
        value = gctx.psi.zeta_moment(k)
        if is_infinite(value):
            raise FiniteMomentRequired(
                "supremum moment",
                k,
                f"theta/cost computations need finite moments through order {order}",
            )
        out.append(value)
    return out


# ---------------------------------------------------------------------------
# theta(u): explicit composition sum and limit definition
# ---------------------------------------------------------------------------


def index_set(u: int) -> Tuple[Tuple[int, ...], ...]:
    """The composition set I(u), materialized.

    All u-tuples of nonnegative integers summing to 2u - 1 whose prefixes
    obey i_j <= 2j - 1 - (i_1 + ... + i_{j-1}).
    """
    if u < 1:
        raise ValueError("index_set needs u >= 1")
    total = 2 * u - 1
    out: List[Tuple[int, ...]] = []

    def rec(j: int, prefix_sum: int, acc: Tuple[int, ...]) -> None:
        remaining = total - prefix_sum
        bound = 2 * j - 1 - prefix_sum
        if j == u:
            if 0 <= remaining <= bound:
                out.append(acc + (remaining,))
            return
        # Leave at least 0 and at most what later slots can absorb;
        # later bounds only grow, so no forward pruning is needed for
        # correctness — the terminal check culls infeasible branches.
        for i in range(0, min(bound, remaining) + 1):
            rec(j + 1, prefix_sum + i, acc + (i,))

    rec(1, 0, ())
    return tuple(out)


def theta_explicit(ctx: Union[CostContext, LevyModel], u: int) -> Scalar:
    """theta(u) by the explicit composition sum over I(u)."""
    cctx = _as_context(ctx)
    if u < 1:
        raise ValueError("theta is defined for u >= 1")
    order = 2 * u - 1
    zeta = _zeta_moments(cctx, order)
    rho = cctx.model.rho

    total: Scalar = 0
    for comp in index_set(u):
        term: Scalar = 1
        prefix = 0
        for j, i_j in enumerate(comp, start=1):
            bound = 2 * j - 1 - prefix
            prefix += i_j
            term = term * comb(bound, i_j) * zeta[i_j]
            term = exact_div(term, 2 * j - prefix)
        total = total + term
    scale = exact_div(factorial(u), _power(-rho, u))
    return scale * total


def _power(base: Scalar, n: int) -> Scalar:
    out: Scalar = 1
    for _ in range(n):
        out = out * base
    return out


def theta_from_limit(ctx: Union[CostContext, LevyModel], u: int) -> Scalar:
    """theta(u) as u! times the linear coefficient of the u-fold chain."""
    cctx = _as_context(ctx)
    if u < 1:
        raise ValueError("theta is defined for u >= 1")
    gctx = cctx.gamma_context(2 * u - 1)
    chain = compose_chain(gctx, [monomial(1)] * u)
    return factorial(u) * chain.coefficient(1)


@dataclass(frozen=True)
class ThetaTable:
    """theta(1) .. theta(U) with the materialized index sets I(u)."""

    values: Tuple[Scalar, ...]
    index_sets: Tuple[Tuple[Tuple[int, ...], ...], ...]

    @property
    def max_order(self) -> int:
        return len(self.values)

    def theta(self, u: int) -> Scalar:
        if not 1 <= u <= self.max_order:
            raise IndexError(f"theta table holds orders 1..{self.max_order}")
        return self.values[u - 1]


def theta_table(ctx: Union[CostContext, LevyModel], max_order: int) -> ThetaTable:
    """Explicit-sum theta values through ``max_order``."""
    cctx = _as_context(ctx)
    values = tuple(theta_explicit(cctx, u) for u in range(1, max_order + 1))
    sets = tuple(index_set(u) for u in range(1, max_order + 1))
    return ThetaTable(values, sets)


# ---------------------------------------------------------------------------
# Moment polynomials of A_1(x)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostMomentPoly:
    """E A_1^ell(x) as a polynomial in the deterministic starting level."""

    ell: int
    poly: Polynomial

    def __call__(self, x: Scalar) -> Scalar:
        return poly_eval(self.poly, x)


def cost_moment_poly(ctx: Union[CostContext, LevyModel], ell: int) -> CostMomentPoly:
    """Direct nested-composition value: ell! times the ell-fold chain."""
    cctx = _as_context(ctx)
    if ell < 0:
        raise ValueError("moment order must be >= 0")
    if ell == 0:
        return CostMomentPoly(0, ONE)
    gctx = cctx.gamma_context(2 * ell - 1)
    chain = compose_chain(gctx, [monomial(1)] * ell)
    return CostMomentPoly(ell, poly_scale(factorial(ell), chain))


def _cross_term_poly(cctx: CostContext, ell: int) -> Polynomial:
    """E[A_1^{ell-1}(x) tau_x] as a polynomial in x, from the joint engine."""
    specs = [FunctionalSpec(Kind.AREA, monomial(1))] * (ell - 1)
    specs.append(FunctionalSpec(Kind.AREA, ONE))
    poly = joint_moment_polynomial(cctx.model, specs)
    if isinstance(poly, Polynomial):
        return poly
    raise FiniteMomentRequired(
        "supremum moment", 2 * ell - 1, "the ODE cross term is infinite"
    )


def ode_recursion(
    ctx: Union[CostContext, LevyModel], ell: int, corrected: bool = True
) -> CostMomentPoly:
    """Moment of A_1(x) by integrating the ODE ladder.

    ``corrected=True`` (default) integrates the full derivative, including
    the ``ell * E[A_1^{ell-1}(x) tau_x]`` cross term, and agrees exactly
    with :func:`cost_moment_poly`.  ``corrected=False`` evaluates the
    cross-term-free variant (with exact lower-order moments) purely for
    diagnostic comparison; it understates every moment from ell = 1 on.
    """
    cctx = _as_context(ctx)
    if ell < 0:
        raise ValueError("moment order must be >= 0")
    if ell == 0:
        return CostMomentPoly(0, ONE)
    thetas = [theta_explicit(cctx, u) for u in range(1, ell + 1)]
    lower = [cost_moment_poly(cctx, i).poly for i in range(ell)]

    deriv = Polynomial()
    for i in range(ell):
        deriv = poly_add(deriv, poly_scale(comb(ell, i) * thetas[ell - i - 1], lower[i]))
    if corrected:
        deriv = poly_add(deriv, poly_scale(ell, _cross_term_poly(cctx, ell)))
    return CostMomentPoly(ell, poly_integrate_from_zero(deriv))


# ---------------------------------------------------------------------------
# Autocovariance of the cost process
# ---------------------------------------------------------------------------


def autocovariance(
    ctx: Union[CostContext, LevyModel], k: int, x1: Scalar, x2: Scalar
) -> Scalar:
    """Cov[A_k(x1), A_k(x2)] for 0 <= x1 <= x2.

    Uses the path decomposition at the first passage from x2 down to x1:
    the cycle from x2 consists of a descent segment distributed like an
    independent copy of the cycle from x2 - x1 (with the workload shifted
    up by x1) followed by the cycle from x1 itself.  Binomially expanding
    the shifted powers gives

        E[A_k(x1) A_k(x2)] = sum_i binom(k,i) (x2-x1)^{k-i}
                             E[A_k(x1) A_i(x1)]
                             + E A_k(x2-x1) * E A_k(x1),

    with every joint factor supplied by the moment engine at deterministic
    push x1 (A_0 is the cycle length tau).
    """
    cctx = _as_context(ctx)
    if k < 0:
        raise ValueError("the cost exponent k must be >= 0")
    if not 0 <= x1 <= x2:
        raise ArgumentOrder(f"levels must satisfy 0 <= x1 <= x2, got ({x1!r}, {x2!r})")
    if x1 == 0:
        return 0

    gctx = cctx.gamma_context(2 * (k + 1) - 1)
    mean_poly = gamma_a(gctx, monomial(k))
    mean_x1 = poly_eval(mean_poly, x1)
    mean_x2 = poly_eval(mean_poly, x2)
    mean_gap = poly_eval(mean_poly, x2 - x1)

    push = DeterministicPush(x1)
    spec_k = FunctionalSpec(Kind.AREA, monomial(k))
    cross: Scalar = 0
    gap = x2 - x1
    from .moments import joint_moment  # local import to avoid cycle at module load

    for i in range(k + 1):
        spec_i = FunctionalSpec(Kind.AREA, monomial(i) if i else ONE)
        joint = joint_moment(cctx.model, push, [spec_k, spec_i]).value
        if is_infinite(joint):
            raise FiniteMomentRequired(
                "supremum moment", 2 * (k + 1) - 1, "the joint cost moment is infinite"
            )
        cross = cross + comb(k, i) * _power(gap, k - i) * joint
    joint_x1_x2 = cross + mean_gap * mean_x1
    return joint_x1_x2 - mean_x1 * mean_x2
