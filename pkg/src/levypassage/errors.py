"""Exception hierarchy for the levypassage package.

Every failure mode that a caller can provoke through legal Python (as opposed
to a bug in this library) is reported through a subclass of
:class:`LevyPassageError`, so ``except LevyPassageError`` catches exactly the
domain-level failures.  Where a failure is also a sensible built-in category
(a bad argument value, say) the subclass additionally inherits the built-in
so existing generic handlers keep working.

Two failure families deserve emphasis:

* **Missing vs. infinite moments.**  Asking for a moment the model cannot
  supply because the input data stops too early raises
  :class:`MissingMoment` (the request is unanswerable).  Asking for a moment
  that is *known to be infinite* is not an error at all — the engines return
  a flagged infinity instead.  :class:`FiniteMomentRequired` is raised only
  by operations whose mathematics genuinely needs a finite value (for
  example an operator application whose coefficients would be undefined).

* **Domain preconditions.**  Stability (:class:`InvalidRho`), transform
  denominators (:class:`NonpositiveDenominator`, :class:`ZeroDenominator`),
  model class (:class:`NonCPPModel`), simulation mode (:class:`EulerRequired`)
  and argument ordering (:class:`ArgumentOrder`) each get a named type so
  tests and CLI error reporting can name the violated condition precisely.
"""

from __future__ import annotations

__all__ = [
    "LevyPassageError",
    "MissingMoment",
    "FiniteMomentRequired",
    "InvalidRho",
    "NonpositiveDenominator",
    "ZeroDenominator",
    "NonCPPModel",
    "EulerRequired",
    "ArgumentOrder",
    "ConfigError",
    "QuadratureError",
]


class LevyPassageError(Exception):
    """Base class for all domain-level errors raised by this package."""


class MissingMoment(LevyPassageError, ValueError):
    """A computation needs a moment the input specification does not carry.

    Raised eagerly, naming the first missing order, before any partial work
    is done.
    """

    def __init__(self, what: str, order: int, detail: str = "") -> None:
        self.what = what
        self.order = order
        msg = f"missing {what} of order {order}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class FiniteMomentRequired(LevyPassageError, ValueError):
    """An operation requires a finite moment but the model's is infinite."""

    def __init__(self, what: str, order: int, detail: str = "") -> None:
        self.what = what
        self.order = order
        msg = f"{what} of order {order} is infinite but must be finite"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InvalidRho(LevyPassageError, ValueError):
    """The model's mean drift / load factor violates the stability condition.

    The analytic engines require a strictly negative mean slope
    (equivalently, queueing load strictly below one).
    """


class NonpositiveDenominator(LevyPassageError, ValueError):
    """A transform denominator that must be positive is zero or negative."""


class ZeroDenominator(LevyPassageError, ZeroDivisionError):
    """A transform denominator is exactly zero at the requested point."""


class NonCPPModel(LevyPassageError, ValueError):
    """The operation needs a compound-Poisson model with evaluable jump transform."""


class EulerRequired(LevyPassageError, ValueError):
    """Exact path simulation was requested for a model with a diffusion part."""


class ArgumentOrder(LevyPassageError, ValueError):
    """Arguments that must be ordered (e.g. 0 <= x1 <= x2) are not."""


class ConfigError(LevyPassageError, ValueError):
    """A configuration file or CLI override is malformed or inconsistent."""


class QuadratureError(LevyPassageError, ArithmeticError):
    """Numerical integration failed to reach its tolerance; the message
    reports the achieved error estimate."""
