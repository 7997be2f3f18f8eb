"""Queueing closed forms and the bivariate transform-series fixed point.

Under unit downward drift (``c = -1``) a compound-Poisson model is the
workload of an M/G/1 queue: jumps are service requirements arriving at rate
``lambda``, the load is ``rho = lambda * mu_1 < 1``, and one descent cycle
started from a jump-distributed level is a busy period.  This module carries
two independent routes to busy-period moments, both pinned against the
operator-chain engine of :mod:`levypassage.moments`:

* **Closed forms** for the expected cycle area, its second moment, and the
  area/length cross moment, as explicit rational functions of the load and
  the service moments (:func:`iglehart_EA`, :func:`cohen_EA2`,
  :func:`joint_EA_tau`).

* **A series fixed point** for the joint transform
  ``gamma(alpha, beta) = E[e^{-alpha N} e^{-beta tau}]`` of the number of
  arrivals ``N`` and the length ``tau`` of a cycle, which satisfies

      gamma = E exp(-V * (beta + lambda * (1 - e^{-alpha} * gamma)))

  with ``V`` the cycle-starting level.  The equation is solved on truncated
  bivariate series with exact rational coefficients, order by order: the
  order-d coefficient block appears in its own equation linearly with factor
  ``rho``, so each sweep finalizes one total order by a scalar division by
  ``(1 - rho)``; after sweep d the coefficients of total order <= d never
  change again.  Joint moments fall out as
  ``E N^n tau^m = (-1)^(m+n) m! n! c_{n,m}`` with ``c_{n,m}`` the
  coefficient of ``alpha^n beta^m``.

When the push differs from the jump law, the inner fixed point is still the
jump-started one (sub-cycles are spawned by arrivals); the push's transform
is composed once around the solved kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, Mapping, Sequence, Tuple, Union

from .errors import FiniteMomentRequired, InvalidRho, MissingMoment
from .model import (
    Family,
    LevyModel,
    PushSpec,
    as_push,
    push_moments,
    resolve_push,
    SameAsJumps,
)
from .scalars import Scalar, exact_div, is_infinite

__all__ = [
    "iglehart_EA",
    "cohen_EA2",
    "joint_EA_tau",
    "BivariateSeries",
    "gamma_series_fixed_point",
    "series_joint_moments",
    "raw_moment_vector",
]


def _check_load(rho: Scalar) -> None:
    if is_infinite(rho) or not (0 < rho < 1):
        raise InvalidRho(f"load must lie strictly between 0 and 1, got {rho!r}")


def iglehart_EA(lam: Scalar, mu2: Scalar, rho: Scalar) -> Scalar:
    """Expected cycle area for unit drift and jump-distributed start.

    ``E A = mu_2 / (2 (1 - rho)^2)`` — depends on the arrival rate only
    through the load; ``lam`` is accepted for signature uniformity with the
    other closed forms.
    """
    _check_load(rho)
    one_minus = 1 - rho
    return exact_div(mu2, 2 * one_minus * one_minus)


def cohen_EA2(lam: Scalar, mu2: Scalar, mu3: Scalar, mu4: Scalar, rho: Scalar) -> Scalar:
    """Second moment of the cycle area for unit drift, jump-distributed start.

    ``E A^2 = mu_4 / (4 (1-rho)^3) + 4 lam mu_2 mu_3 / (3 (1-rho)^4)
             + 5 lam^2 mu_2^3 / (4 (1-rho)^5)``.
    """
    _check_load(rho)
    om = 1 - rho
    om2 = om * om
    term1 = exact_div(mu4, 4 * om * om2)
    term2 = exact_div(4 * lam * mu2 * mu3, 3 * om2 * om2)
    term3 = exact_div(5 * lam * lam * mu2 * mu2 * mu2, 4 * om2 * om2 * om)
    return term1 + term2 + term3


def joint_EA_tau(lam: Scalar, mu2: Scalar, mu3: Scalar, rho: Scalar) -> Scalar:
    """Cycle area/length cross moment for unit drift, jump-distributed start.

    ``E[A tau] = mu_3 / (2 (1-rho)^3) + lam mu_2^2 / (1-rho)^4``.
    """
    _check_load(rho)
    om = 1 - rho
    om2 = om * om
    return exact_div(mu3, 2 * om * om2) + exact_div(lam * mu2 * mu2, om2 * om2)


# ---------------------------------------------------------------------------
# Truncated bivariate series with exact coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BivariateSeries:
    """Polynomial truncation of a two-variable power series.

    ``coeffs[(i, j)]`` multiplies ``alpha^i beta^j``; only total orders
    ``i + j <= max_total`` are carried and only nonzero coefficients are
    stored, so equality is structural.
    """

    max_total: int
    coeffs: Mapping[Tuple[int, int], Scalar] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned = {
            ij: c
            for ij, c in self.coeffs.items()
            if sum(ij) <= self.max_total and c != 0
        }
        object.__setattr__(self, "coeffs", cleaned)

    def coefficient(self, i: int, j: int) -> Scalar:
        return self.coeffs.get((i, j), 0)

    def __add__(self, other: "BivariateSeries") -> "BivariateSeries":
        self._check(other)
        out = dict(self.coeffs)
        for ij, c in other.coeffs.items():
            out[ij] = out.get(ij, 0) + c
        return BivariateSeries(self.max_total, out)

    def __sub__(self, other: "BivariateSeries") -> "BivariateSeries":
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, BivariateSeries):
            self._check(other)
            out: Dict[Tuple[int, int], Scalar] = {}
            for (i1, j1), c1 in self.coeffs.items():
                for (i2, j2), c2 in other.coeffs.items():
                    i, j = i1 + i2, j1 + j2
                    if i + j > self.max_total:
                        continue
                    key = (i, j)
                    out[key] = out.get(key, 0) + c1 * c2
            return BivariateSeries(self.max_total, out)
        return BivariateSeries(
            self.max_total, {ij: other * c for ij, c in self.coeffs.items()}
        )

    def __rmul__(self, other):
        return self * other

    def truncate_above(self, order: int) -> "BivariateSeries":
        """Drop all coefficients of total order > ``order``."""
        return BivariateSeries(
            self.max_total, {ij: c for ij, c in self.coeffs.items() if sum(ij) <= order}
        )

    def order_block(self, order: int) -> Dict[Tuple[int, int], Scalar]:
        return {ij: c for ij, c in self.coeffs.items() if sum(ij) == order}

    def _check(self, other: "BivariateSeries") -> None:
        if self.max_total != other.max_total:
            raise ValueError("series truncation orders differ")


def _series_const(M: int, value: Scalar) -> BivariateSeries:
    return BivariateSeries(M, {(0, 0): value})


def _series_beta(M: int) -> BivariateSeries:
    return BivariateSeries(M, {(0, 1): 1})


def _series_exp_neg_alpha(M: int) -> BivariateSeries:
    return BivariateSeries(
        M, {(i, 0): Fraction((-1) ** i, factorial(i)) for i in range(M + 1)}
    )


def _lst_series(moment_vector: Sequence[Scalar], u: BivariateSeries) -> BivariateSeries:
    """Transform series ``sum_j mu_j (-u)^j / j!`` for a series ``u`` with
    zero constant term (Horner evaluation, truncation-exact)."""
    if u.coefficient(0, 0) != 0:
        raise ValueError("LST composition needs a series with zero constant term")
    M = u.max_total
    neg_u = (-1) * u
    acc = _series_const(M, exact_div(moment_vector[M], factorial(M)))
    for j in range(M - 1, -1, -1):
        acc = acc * neg_u + _series_const(M, exact_div(moment_vector[j], factorial(j)))
    return acc


def raw_moment_vector(push, M: int, jumps=None) -> Tuple[Scalar, ...]:
    """Raw moments 0..M of a push-like object, all required finite.

    Accepts a push specification, bare family, scalar, or an explicit
    moment sequence ``(mu_1, .., mu_K)`` / ``(1, mu_1, .., mu_K)``.
    """
    if isinstance(push, (list, tuple)):
        seq = list(push)
        values: list = [1]
        for n in range(1, M + 1):
            if n <= len(seq):
                values.append(seq[n - 1])
            else:
                raise MissingMoment(
                    "raw moment", n, f"vector carries orders 1..{len(seq)}"
                )
    else:
        spec = resolve_push(as_push(push), jumps)
        values = [push_moments(spec, n) for n in range(M + 1)]
    for n, v in enumerate(values):
        if is_infinite(v):
            raise FiniteMomentRequired(
                "raw moment", n, "the transform series needs finite moments"
            )
    return tuple(values)


def gamma_series_fixed_point(
    lam: Scalar,
    jump_moments,
    push,
    M: int,
) -> BivariateSeries:
    """Solve the cycle-transform fixed point on series truncated at order M.

    Parameters
    ----------
    lam:
        Arrival rate (>= 0, finite).
    jump_moments:
        Per-jump raw moments: a distribution family or a sequence
        ``(mu_1, .., mu_K)`` with K >= M.
    push:
        Cycle-starting level: push spec, family, scalar level, moment
        sequence, or ``SameAsJumps()``.
    M:
        Truncation order (total degree in (alpha, beta)).

    Returns the truncated series of
    ``gamma(alpha, beta) = E[e^{-alpha N - beta tau}]``.  Runs the spec'd
    M+2 sweeps; sweep d finalizes the total-order-d coefficient block by
    solving its linear self-reference exactly, so sweeps beyond M are
    idempotent and every returned coefficient is an exact fixed-point
    coefficient (rational when the inputs are).
    """
    if M < 0:
        raise ValueError("truncation order must be >= 0")
    if is_infinite(lam) or lam < 0:
        raise InvalidRho(f"arrival rate must be finite and >= 0, got {lam!r}")
    jump_vec = raw_moment_vector(jump_moments, M)
    rho = lam * jump_vec[1] if M >= 1 else 0
    if lam > 0 and M >= 1 and not rho < 1:
        raise InvalidRho(f"load lambda*mu1 must be < 1, got {rho!r}")
    if M == 0:
        # Any transform of a proper cycle is 1 at the origin.
        return BivariateSeries(0, {(0, 0): 1})

    z = _series_exp_neg_alpha(M)
    beta = _series_beta(M)
    lam_series = _series_const(M, lam)
    one = _series_const(M, 1)

    def substitution(g: BivariateSeries) -> BivariateSeries:
        u = beta + lam_series * (one - z * g)
        return _lst_series(jump_vec, u)

    # Layered solve: gamma starts exact at order 0; sweep d computes the
    # substitution image with the unknown block absent and divides the new
    # order-d coefficients by (1 - rho), their linear self-reference factor.
    gamma = one
    denom = 1 - rho
    for sweep in range(1, M + 3):
        d = min(sweep, M)
        image = substitution(gamma.truncate_above(d - 1))
        block = {
            ij: exact_div(c, denom) for ij, c in image.order_block(d).items()
        }
        merged = dict(gamma.truncate_above(d - 1).coeffs)
        merged.update(block)
        gamma = BivariateSeries(M, merged)

    if isinstance(push, SameAsJumps):
        return gamma

    # The solved series is an exact fixed point of the substitution map on
    # the truncated ring, so composing the push transform around it is a
    # no-op when the push happens to share the jump moments.
    push_vec = raw_moment_vector(push, M)
    if push_vec == jump_vec:
        return gamma
    u_final = beta + lam_series * (one - z * gamma)
    return _lst_series(push_vec, u_final)


def series_joint_moments(series: BivariateSeries) -> Dict[Tuple[int, int], Scalar]:
    """Extract ``E N^n tau^m`` for all ``n + m <= max_total`` from the series.

    Keyed ``(n, m)``: ``E N^n tau^m = (-1)^(n+m) n! m! c_{n,m}`` with
    ``c_{n,m}`` the coefficient of ``alpha^n beta^m``.
    """
    M = series.max_total
    out: Dict[Tuple[int, int], Scalar] = {}
    for n in range(M + 1):
        for m in range(M + 1 - n):
            sign = -1 if (n + m) % 2 else 1
            out[(n, m)] = sign * factorial(n) * factorial(m) * series.coefficient(n, m)
    return out
