"""Moments of the all-time maximum via the Taylor-table recursion.

Let ``zeta = sup_{t >= 0} J(t)`` be the all-time supremum of the (downward
drifting, spectrally positive) process started at 0.  Its raw moments are
generated by a triangular recursion on the Taylor table of the Laplace
exponent: writing ``psi_k = (-1)^k E zeta^k`` and ``phi_i = phi^(i)(0+)``,

    psi_0 = 1,
    psi_k = -1 / ((k+1) * phi_1) * sum_{i=0}^{k-1} C(k+1, i) psi_i phi_{k+1-i}.

Only ``phi_1 < 0`` (finite) is needed for the recursion to make sense; the
k-th entry exists finitely if and only if the jump measure's (k+1)-th raw
moment is finite.  When it is not, the entry is *flagged infinite* (with the
sign that makes ``E zeta^k = +inf``) rather than raising: infinite moments
are answers, not errors, and once an entry is infinite all later entries
stay infinite.

For a pure Brownian model with drift (no jumps) the table collapses to the
closed form ``E zeta^k = k! * (sigma2 / (-2c))^k``, which the test-suite
pins against this recursion; for compound-Poisson models the entries agree
with the stationary-workload moment recursion of an M/G/1 queue under the
load-duality mapping, giving a second independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Tuple

from .errors import FiniteMomentRequired, InvalidRho, MissingMoment
from .model import LevyModel, PhiTable, build_phi_table
from .scalars import INF, Scalar, exact_div, is_infinite

__all__ = ["PsiTable", "psi_recursion", "psi_for_model"]


@dataclass(frozen=True)
class PsiTable:
    """Signed supremum-moment table ``psi_0 .. psi_K``.

    ``values[k]`` is ``psi_k = (-1)^k E zeta^k``; flagged-infinite entries
    carry the sign consistent with ``E zeta^k = +inf``.
    """

    values: Tuple[Scalar, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))

    @property
    def order(self) -> int:
        return len(self.values) - 1

    def psi(self, k: int) -> Scalar:
        if not 0 <= k <= self.order:
            raise MissingMoment(
                "signed supremum moment psi", k, f"table holds orders 0..{self.order}"
            )
        return self.values[k]

    def is_finite(self, k: int) -> bool:
        return not is_infinite(self.psi(k))

    def zeta_moment(self, k: int) -> Scalar:
        """Raw moment ``E zeta^k`` (a flagged ``inf`` when infinite)."""
        value = self.psi(k)
        if is_infinite(value):
            return INF
        return value if k % 2 == 0 else -value

    def require_finite(self, k: int, context: str) -> Scalar:
        """Return ``psi_k`` or raise naming the jump-measure moment at fault."""
        value = self.psi(k)
        if is_infinite(value):
            raise FiniteMomentRequired(
                "jump-measure raw moment",
                k + 1,
                f"{context} needs E zeta^{k} finite, which requires that moment",
            )
        return value


def psi_recursion(phi: PhiTable, K: int) -> PsiTable:
    """Run the triangular recursion through order ``K`` (K >= 1).

    The input table must carry ``phi_0 .. phi_{K+1}``: the order-k entry
    consumes ``phi_{k+1}``.  A too-short table raises :class:`MissingMoment`
    naming the first absent order.  ``phi_1`` must be finite and strictly
    negative (:class:`InvalidRho` otherwise).
    """
    if K < 1:
        raise ValueError("psi table order must be >= 1")
    if phi.order < K + 1:
        raise MissingMoment(
            "Laplace-exponent Taylor coefficient",
            phi.order + 1,
            f"a psi table of order {K} consumes phi through order {K + 1}",
        )
    phi1 = phi.entry(1)
    if is_infinite(phi1) or not phi1 < 0:
        raise InvalidRho(f"phi_1 must be finite and strictly negative, got {phi1!r}")

    values: list = [1]
    infinite_from_now_on = False
    for k in range(1, K + 1):
        if infinite_from_now_on or is_infinite(phi.entry(k + 1)):
            infinite_from_now_on = True
            # Flag with the sign that renders E zeta^k = +inf.
            values.append(INF if k % 2 == 0 else -INF)
            continue
        acc: Scalar = 0
        for i in range(k):
            acc = acc + comb(k + 1, i) * values[i] * phi.entry(k + 1 - i)
        values.append(exact_div(-acc, (k + 1) * phi1))
    return PsiTable(tuple(values))


def psi_for_model(model: LevyModel, K: int) -> PsiTable:
    """Convenience: build the phi table through order ``K+1`` and recurse.

    Jump-measure moments the model cannot even name (a raw-moment list that
    simply stops) raise :class:`MissingMoment` from the table build; moments
    known to be infinite flow through as flagged entries.
    """
    return psi_recursion(build_phi_table(model, K + 1), K)
