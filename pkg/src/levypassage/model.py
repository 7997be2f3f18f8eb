"""Model layer: spectrally positive Lévy processes and starting-level laws.

The driving process is

    J(t) = c*t + sigma * B(t) + sum of positive jumps,

a Lévy process with no negative jumps: a deterministic drift ``c``, an
optional Brownian part with variance parameter ``sigma2 = sigma^2``, and a
jump part described either parametrically (compound Poisson with rate
``lambda`` and a named jump-size family) or abstractly through the raw
moments of its jump measure.  Writing ``eta_i`` for the i-th raw moment of
the jump measure (for a compound Poisson model, ``lambda`` times the i-th
raw moment of a single jump), the Laplace exponent is

    phi(alpha) = c*alpha - sigma2*alpha^2/2 - integral(exp(-alpha*y) - 1),

so that E exp(-alpha*J(t)) = exp(t*phi(alpha)).  All analytic engines demand
a strictly negative mean slope ``phi'(0+) = c + eta_1 < 0``: the process
drifts downward, and the first passage below the starting level happens in
finite time with all the moments the inputs can support.

The *push* is the random (or deterministic) nonnegative starting level from
which the process must descend to zero.  Engines only ever need its raw
moments, so a push can be given as a point mass, a bare moment list, a
parametric family, or "same law as the jumps".

Scalar-mode policy: if every model parameter is exact (int/Fraction) the
model computes in exact rational arithmetic end to end; one float or mpf
parameter switches the whole model to high-precision real mode.  The mode is
decided here, once, by normalizing every stored parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple, Union

from .errors import (
    ConfigError,
    InvalidRho,
    MissingMoment,
    NonCPPModel,
)
from .scalars import (
    INF,
    NEG_INF,
    Scalar,
    exact_div as _div,
    is_infinite,
    rational_inputs,
    to_real,
)

__all__ = [
    "Exponential",
    "Deterministic",
    "Gamma",
    "Uniform",
    "Family",
    "ParametricJumps",
    "RawMomentJumps",
    "JumpSpec",
    "no_jumps",
    "DeterministicPush",
    "MomentPush",
    "ParametricPush",
    "SameAsJumps",
    "PushSpec",
    "as_push",
    "resolve_push",
    "push_moments",
    "LevyModel",
    "PhiTable",
    "build_phi_table",
    "RATIONAL_MODE",
    "REAL_MODE",
]

RATIONAL_MODE = "rational"
REAL_MODE = "real"


def _require_positive(name: str, value: Scalar) -> None:
    if is_infinite(value) or not value > 0:
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")


def _require_nonnegative(name: str, value: Scalar) -> None:
    if is_infinite(value) or value < 0:
        raise ConfigError(f"{name} must be a nonnegative finite number, got {value!r}")


# ---------------------------------------------------------------------------
# Jump-size / push-size distribution families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    """Exponential law with the given rate; mean ``1/rate``."""

    rate: Scalar

    def __post_init__(self) -> None:
        _require_positive("Exponential rate", self.rate)

    def raw_moment(self, i: int) -> Scalar:
        if i == 0:
            return 1
        return _div(math.factorial(i), _power(self.rate, i))

    def lst(self, u):
        """Laplace transform E exp(-u Y) = rate / (rate + u)."""
        return self.rate / (self.rate + u)

    def convert(self, conv: Callable[[Scalar], Scalar]) -> "Exponential":
        return Exponential(conv(self.rate))

    def parameters(self) -> Tuple[Scalar, ...]:
        return (self.rate,)


@dataclass(frozen=True)
class Deterministic:
    """Point mass at ``size``."""

    size: Scalar

    def __post_init__(self) -> None:
        _require_positive("Deterministic size", self.size)

    def raw_moment(self, i: int) -> Scalar:
        return _power(self.size, i)

    def lst(self, u):
        return math.exp(-float(self.size) * u) if not _is_mp(u) else _mp_exp(-self.size * u)

    def convert(self, conv: Callable[[Scalar], Scalar]) -> "Deterministic":
        return Deterministic(conv(self.size))

    def parameters(self) -> Tuple[Scalar, ...]:
        return (self.size,)


@dataclass(frozen=True)
class Gamma:
    """Gamma law with the given shape and rate; mean ``shape/rate``."""

    shape: Scalar
    rate: Scalar

    def __post_init__(self) -> None:
        _require_positive("Gamma shape", self.shape)
        _require_positive("Gamma rate", self.rate)

    def raw_moment(self, i: int) -> Scalar:
        # E Y^i = shape (shape+1) ... (shape+i-1) / rate^i, exact for
        # rational shape/rate.
        num: Scalar = 1
        for j in range(i):
            num = num * (self.shape + j)
        return _div(num, _power(self.rate, i))

    def lst(self, u):
        base = self.rate / (self.rate + u)
        if _is_mp(u) or _is_mp(base):
            import mpmath

            return mpmath.power(base, self.shape)
        return float(base) ** float(self.shape)

    def convert(self, conv: Callable[[Scalar], Scalar]) -> "Gamma":
        return Gamma(conv(self.shape), conv(self.rate))

    def parameters(self) -> Tuple[Scalar, ...]:
        return (self.shape, self.rate)


@dataclass(frozen=True)
class Uniform:
    """Uniform law on the interval (a, b) with 0 < a < b."""

    a: Scalar
    b: Scalar

    def __post_init__(self) -> None:
        _require_positive("Uniform lower endpoint", self.a)
        if is_infinite(self.b) or not self.b > self.a:
            raise ConfigError(
                f"Uniform endpoints must satisfy 0 < a < b, got a={self.a!r} b={self.b!r}"
            )

    def raw_moment(self, i: int) -> Scalar:
        if i == 0:
            return 1
        num = _power(self.b, i + 1) - _power(self.a, i + 1)
        return _div(num, (i + 1) * (self.b - self.a))

    def lst(self, u):
        if u == 0:
            return 1.0
        a, b = float(self.a), float(self.b)
        uu = float(u)
        return (math.exp(-a * uu) - math.exp(-b * uu)) / ((b - a) * uu)

    def convert(self, conv: Callable[[Scalar], Scalar]) -> "Uniform":
        return Uniform(conv(self.a), conv(self.b))

    def parameters(self) -> Tuple[Scalar, ...]:
        return (self.a, self.b)


Family = Union[Exponential, Deterministic, Gamma, Uniform]

FAMILY_NAMES = {
    Exponential: "exponential",
    Deterministic: "deterministic",
    Gamma: "gamma",
    Uniform: "uniform",
}


def _power(base: Scalar, i: int) -> Scalar:
    out: Scalar = 1
    for _ in range(i):
        out = out * base
    return out


def _is_mp(x) -> bool:
    import mpmath

    return isinstance(x, mpmath.mpf)


def _mp_exp(x):
    import mpmath

    return mpmath.exp(x)


# ---------------------------------------------------------------------------
# Jump specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParametricJumps:
    """Compound-Poisson jumps: arrival rate ``cpp_rate`` and a jump-size family."""

    family: Family
    cpp_rate: Scalar

    def __post_init__(self) -> None:
        _require_positive("compound-Poisson rate", self.cpp_rate)

    def eta(self, i: int) -> Scalar:
        """i-th raw moment of the jump measure: rate times E Y^i."""
        if i == 0:
            return self.cpp_rate
        return self.cpp_rate * self.family.raw_moment(i)

    def jump_raw_moment(self, i: int) -> Scalar:
        return self.family.raw_moment(i)

    def convert(self, conv: Callable[[Scalar], Scalar]) -> "ParametricJumps":
        return ParametricJumps(self.family.convert(conv), conv(self.cpp_rate))

    def parameters(self) -> Tuple[Scalar, ...]:
        return self.family.parameters() + (self.cpp_rate,)


@dataclass(frozen=True)
class RawMomentJumps:
    """Jump measure known only through raw moments ``eta_1 .. eta_K``.

    ``eta_values[i-1]`` is the i-th raw moment of the jump measure; a finite
    prefix may be followed by flagged infinities (once infinite, always
    infinite).  ``cpp_rate`` may be 0 (no jumps; the moment list must then be
    empty), any positive number, or ``inf`` for an infinite-activity process
    described purely through the (then necessarily finite-indexed) moments.
    """

    eta_values: Tuple[Scalar, ...] = ()
    cpp_rate: Scalar = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta_values", tuple(self.eta_values))
        if not (self.cpp_rate >= 0):
            raise ConfigError(f"compound-Poisson rate must be >= 0, got {self.cpp_rate!r}")
        if self.cpp_rate == 0 and self.eta_values:
            raise ConfigError("a model with rate 0 must not carry jump moments")
        seen_infinite = False
        for k, v in enumerate(self.eta_values, start=1):
            if is_infinite(v):
                if v < 0:
                    raise ConfigError("jump-measure moments cannot be -inf")
                seen_infinite = True
            else:
                if seen_infinite:
                    raise ConfigError(
                        "jump-measure moments must stay infinite once infinite "
                        f"(order {k} is finite after an infinite order)"
                    )
                if v < 0:
                    raise ConfigError(f"jump-measure moment of order {k} is negative")

    def eta(self, i: int) -> Scalar:
        if self.cpp_rate == 0:
            return 0
        if i == 0:
            return self.cpp_rate
        if i <= len(self.eta_values):
            return self.eta_values[i - 1]
        if self.eta_values and is_infinite(self.eta_values[-1]):
            return INF
        raise MissingMoment(
            "jump-measure raw moment",
            i,
            f"only orders 1..{len(self.eta_values)} were provided",
        )

    def jump_raw_moment(self, i: int) -> Scalar:
        if self.cpp_rate == 0 or is_infinite(self.cpp_rate):
            raise NonCPPModel(
                "per-jump moments need a compound-Poisson model with 0 < rate < inf"
            )
        value = self.eta(i)
        return INF if is_infinite(value) else _div(value, self.cpp_rate)

    def convert(self, conv: Callable[[Scalar], Scalar]) -> "RawMomentJumps":
        return RawMomentJumps(
            tuple(v if is_infinite(v) else conv(v) for v in self.eta_values),
            self.cpp_rate if is_infinite(self.cpp_rate) else conv(self.cpp_rate),
        )

    def parameters(self) -> Tuple[Scalar, ...]:
        return self.eta_values + (self.cpp_rate,)


JumpSpec = Union[ParametricJumps, RawMomentJumps]


def no_jumps() -> RawMomentJumps:
    """The null jump part (pure drift / Brownian models)."""
    return RawMomentJumps((), 0)


# ---------------------------------------------------------------------------
# Push (starting level) specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeterministicPush:
    """Start every cycle from the fixed level ``x >= 0``."""

    x: Scalar

    def __post_init__(self) -> None:
        _require_nonnegative("deterministic push level", self.x)


@dataclass(frozen=True)
class MomentPush:
    """Start level known only through raw moments ``mu_1 .. mu_K``.

    A finite prefix may be followed by flagged infinities, mirroring
    :class:`RawMomentJumps`.
    """

    moments: Tuple[Scalar, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "moments", tuple(self.moments))
        seen_infinite = False
        for k, v in enumerate(self.moments, start=1):
            if is_infinite(v):
                if v < 0:
                    raise ConfigError("push moments cannot be -inf")
                seen_infinite = True
            else:
                if seen_infinite:
                    raise ConfigError(
                        "push moments must stay infinite once infinite "
                        f"(order {k} is finite after an infinite order)"
                    )
                if v < 0:
                    raise ConfigError(f"push moment of order {k} is negative")


@dataclass(frozen=True)
class ParametricPush:
    """Start level drawn from a named distribution family."""

    family: Family


@dataclass(frozen=True)
class SameAsJumps:
    """Start level drawn from the jump-size law (parametric jumps only)."""


PushSpec = Union[DeterministicPush, MomentPush, ParametricPush, SameAsJumps]


def as_push(obj) -> PushSpec:
    """Coerce a convenient value to a push specification.

    Accepts an existing push spec, a bare distribution family (wrapped as
    parametric), or a nonnegative scalar (wrapped as deterministic).
    """
    if isinstance(obj, (DeterministicPush, MomentPush, ParametricPush, SameAsJumps)):
        return obj
    if isinstance(obj, (Exponential, Deterministic, Gamma, Uniform)):
        return ParametricPush(obj)
    if isinstance(obj, (int, Fraction, float)) and not isinstance(obj, bool):
        return DeterministicPush(obj)
    raise ConfigError(f"cannot interpret {obj!r} as a push specification")


def resolve_push(push: PushSpec, jumps: Optional[JumpSpec]) -> PushSpec:
    """Replace :class:`SameAsJumps` by the concrete jump family."""
    if isinstance(push, SameAsJumps):
        if not isinstance(jumps, ParametricJumps):
            raise ConfigError(
                "push 'same-as-jumps' needs parametric compound-Poisson jumps"
            )
        return ParametricPush(jumps.family)
    return push


def push_moments(push: PushSpec, n: int) -> Scalar:
    """n-th raw moment of the push level; ``mu_0 = 1`` always.

    Raises :class:`MissingMoment` when a moment-list push stops before order
    ``n``; returns a flagged infinity when the order is known infinite.
    :class:`SameAsJumps` must be resolved (see :func:`resolve_push`) first.
    """
    if n < 0:
        raise ValueError("moment order must be nonnegative")
    if n == 0:
        return 1
    if isinstance(push, DeterministicPush):
        return _power(push.x, n)
    if isinstance(push, ParametricPush):
        return push.family.raw_moment(n)
    if isinstance(push, MomentPush):
        if n <= len(push.moments):
            return push.moments[n - 1]
        if push.moments and is_infinite(push.moments[-1]):
            return INF
        raise MissingMoment(
            "push raw moment", n, f"only orders 1..{len(push.moments)} were provided"
        )
    if isinstance(push, SameAsJumps):
        raise ConfigError("push 'same-as-jumps' was not resolved against a model")
    raise ConfigError(f"unknown push specification {push!r}")


# ---------------------------------------------------------------------------
# The Lévy model and its Taylor table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyModel:
    """A spectrally positive Lévy process with strictly negative mean slope.

    Parameters
    ----------
    c:
        Deterministic drift per unit time.
    sigma2:
        Variance parameter of the Brownian part (>= 0).
    jumps:
        Jump specification (parametric compound Poisson or raw moments).

    On construction the scalar mode is decided (exact if every parameter is
    exact, high-precision real otherwise), all parameters are normalized to
    that mode, and the stability condition ``c + eta_1 < 0`` is enforced.
    """

    c: Scalar
    sigma2: Scalar
    jumps: JumpSpec

    def __post_init__(self) -> None:
        params = (self.c, self.sigma2) + self.jumps.parameters()
        if rational_inputs(*params):
            object.__setattr__(self, "_mode", RATIONAL_MODE)
            conv: Callable[[Scalar], Scalar] = _to_fraction
        else:
            object.__setattr__(self, "_mode", REAL_MODE)
            conv = to_real
        object.__setattr__(self, "c", conv(self.c))
        object.__setattr__(self, "sigma2", conv(self.sigma2))
        object.__setattr__(self, "jumps", self.jumps.convert(conv))

        if is_infinite(self.c):
            raise ConfigError("drift must be finite")
        if is_infinite(self.sigma2) or self.sigma2 < 0:
            raise ConfigError(f"sigma2 must be a finite nonnegative number, got {self.sigma2!r}")
        eta1 = self.jumps.eta(1) if not self._is_null_jumps() else 0
        if is_infinite(eta1):
            raise InvalidRho("the jump measure's first moment is infinite; mean slope undefined")
        rho = self.c + eta1
        if not rho < 0:
            raise InvalidRho(
                f"mean slope c + eta_1 must be < 0 for downward passage, got {rho!r}"
            )

    def _is_null_jumps(self) -> bool:
        return isinstance(self.jumps, RawMomentJumps) and self.jumps.cpp_rate == 0

    # -- basic derived quantities -----------------------------------------

    @property
    def scalar_mode(self) -> str:
        return self._mode  # type: ignore[attr-defined]

    @property
    def lam(self) -> Scalar:
        """Jump arrival rate (0 when there are no jumps; may be inf)."""
        return self.jumps.cpp_rate

    def eta(self, i: int) -> Scalar:
        """i-th raw moment of the jump measure (0 for the null jump part)."""
        if self._is_null_jumps():
            return 0
        return self.jumps.eta(i)

    @property
    def rho(self) -> Scalar:
        """Mean slope ``phi'(0+) = c + eta_1``; strictly negative."""
        eta1 = self.eta(1)
        return self.c + eta1

    @property
    def load(self) -> Scalar:
        """Queueing load ``eta_1 / (-c)`` (meaningful for negative drift)."""
        return _div(self.eta(1), -self.c)

    @property
    def is_parametric_cpp(self) -> bool:
        return isinstance(self.jumps, ParametricJumps)

    @property
    def jump_family(self) -> Optional[Family]:
        return self.jumps.family if isinstance(self.jumps, ParametricJumps) else None

    def jump_raw_moment(self, i: int) -> Scalar:
        """i-th raw moment of a single jump (finite-rate models only)."""
        if self._is_null_jumps():
            raise NonCPPModel("the model has no jumps; per-jump moments undefined")
        return self.jumps.jump_raw_moment(i)

    # -- Laplace exponent --------------------------------------------------

    def phi(self, u):
        """Pointwise Laplace exponent ``phi(u)``, for models where the jump
        transform is evaluable (parametric jumps, or no jumps at all).

        E exp(-u J(t)) = exp(t phi(u)) with
        phi(u) = c u - sigma2 u^2 / 2 + lambda (1 - E exp(-u Y)).
        """
        base = self.c * u - self.sigma2 * u * u / 2
        if self._is_null_jumps():
            return base
        if not isinstance(self.jumps, ParametricJumps):
            raise NonCPPModel(
                "pointwise phi needs parametric jumps (raw-moment jump data "
                "determines phi only through its Taylor table)"
            )
        return base + self.jumps.cpp_rate * (1 - self.jumps.family.lst(u))

    @property
    def has_polynomial_phi(self) -> bool:
        """True when phi is a polynomial in u (no jump part)."""
        return self._is_null_jumps()


def _to_fraction(x: Scalar) -> Scalar:
    if is_infinite(x):
        return x
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


@dataclass(frozen=True)
class PhiTable:
    """Taylor coefficients of the Laplace exponent at zero.

    ``values[i]`` is the i-th derivative ``phi^(i)(0+)``:

        phi_0 = 0
        phi_1 = c + eta_1          (the mean slope, strictly negative)
        phi_2 = -(sigma2 + eta_2)
        phi_i = (-1)^(i+1) eta_i   for i >= 3

    Entries of order >= 2 may be flagged infinities when the corresponding
    jump-measure moment is infinite; the sign of the infinity follows the
    sign rule above.
    """

    values: Tuple[Scalar, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))

    @property
    def order(self) -> int:
        return len(self.values) - 1

    def entry(self, i: int) -> Scalar:
        if not 0 <= i <= self.order:
            raise MissingMoment(
                "Laplace-exponent derivative", i, f"table holds orders 0..{self.order}"
            )
        return self.values[i]


def build_phi_table(model: LevyModel, K: int) -> PhiTable:
    """Taylor table of ``phi`` at zero through order ``K`` (K >= 1).

    Raises :class:`MissingMoment` eagerly, naming the first jump-measure
    moment order the model cannot supply.
    """
    if K < 1:
        raise ValueError("phi table order must be >= 1")
    values: list = [0, model.rho]
    if K >= 2:
        eta2 = model.eta(2)
        values.append(NEG_INF if is_infinite(eta2) else -(model.sigma2 + eta2))
    for i in range(3, K + 1):
        eta_i = model.eta(i)
        if is_infinite(eta_i):
            values.append(INF if i % 2 == 1 else NEG_INF)
        else:
            values.append(eta_i if i % 2 == 1 else -eta_i)
    return PhiTable(tuple(values))
