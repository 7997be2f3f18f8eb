"""Exact Monte Carlo oracle for cycle functionals and the reflected area.

For compound-Poisson models (no Brownian part, finite arrival rate) the
workload path is piecewise linear, so every replication is simulated
*exactly*: segment contributions to running integrals of polynomials are
closed-form antiderivatives, the passage time is read off the final
segment's linear descent, and jump-sum functionals evaluate at the exact
pre-jump levels.  No time grid exists anywhere in exact mode.

Determinism contract: replication ``rep`` of a run with seed ``S`` always
draws from the counter-based Philox stream keyed by the 128-bit integer
``(S << 64) | rep`` — its own stream, never shared.  Results are therefore
bit-identical however replications are scheduled, and the first R
replications of a longer run coincide bit-for-bit with a shorter run.
Aggregation uses numpy's pairwise summation to keep floating error at the
O(sqrt(log R)) level.

Draw order (fixed, part of the determinism contract):

* busy cycles: starting level, then alternately one inter-arrival time and
  one jump size;
* reflected runs: the Exp(beta) kill time first (by inversion of a single
  uniform), then the starting level, then inter-arrivals and jumps;
* coupled autocovariance runs: one cycle from the *higher* level x2 per
  replication; the lower level's cycle is the same path's initial segment
  shifted down by x2 - x1 — all levels share one driving process from
  time zero, so the x1-cycle ends when the x2-path first descends to
  x2 - x1 (same stream, same path — the canonical coupling of the cost
  process).

Models with a Brownian part can only be simulated on a time grid (Euler
scheme with hitting detection at grid points).  That scheme's hitting-time
overshoot makes it biased; it is provided for exploration only and the
analytic-vs-MC acceptance oracles never use it.  Requesting exact-mode
simulation of such a model raises :class:`EulerRequired`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ArgumentOrder, ConfigError, EulerRequired
from .model import (
    Deterministic,
    DeterministicPush,
    Exponential,
    Family,
    Gamma,
    LevyModel,
    MomentPush,
    ParametricPush,
    PushSpec,
    Uniform,
    as_push,
    resolve_push,
)
from .moments import FunctionalSpec, Kind
from .polyalg import Polynomial
from .scalars import Scalar, is_infinite

__all__ = [
    "SimConfig",
    "CycleSample",
    "ProductSpec",
    "SimEstimate",
    "rep_generator",
    "simulate_busy_cycle",
    "estimate_moments",
    "simulate_reflected_area",
    "estimate_autocovariance",
]

#: Two-sided 95% normal quantile used for the reported confidence interval.
_CI_FACTOR = 1.959963984540054

_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# Configuration and samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """One simulation experiment: model, starting law, streams, outputs."""

    model: LevyModel
    push: PushSpec
    replications: int = 1
    seed: int = 0
    functionals: Tuple[FunctionalSpec, ...] = ()
    kill_rate: Optional[Scalar] = None
    alpha: Scalar = 0
    dt: Optional[Scalar] = None

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.seed < 0 or self.seed > _MASK64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "functionals", tuple(self.functionals))
        if self.kill_rate is not None and not self.kill_rate > 0:
            raise ConfigError(f"kill_rate must be positive, got {self.kill_rate!r}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha!r}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt!r}")


@dataclass(frozen=True)
class CycleSample:
    """One exact busy cycle: passage time, functional values, jump count."""

    tau: float
    values: Tuple[float, ...]
    n_jumps: int


@dataclass(frozen=True)
class ProductSpec:
    """One product estimator over cycle fields: tau^a * N^b * prod F_i^{p_i}."""

    tau_power: int = 0
    count_power: int = 0
    functional_powers: Tuple[int, ...] = ()
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "functional_powers", tuple(self.functional_powers))
        if self.tau_power < 0 or self.count_power < 0 or any(
            p < 0 for p in self.functional_powers
        ):
            raise ConfigError("product powers must be nonnegative")

    def describe(self, functionals: Sequence[FunctionalSpec]) -> str:
        if self.label:
            return self.label
        parts = []
        if self.tau_power:
            parts.append("tau" + (f"^{self.tau_power}" if self.tau_power > 1 else ""))
        if self.count_power:
            parts.append("N" + (f"^{self.count_power}" if self.count_power > 1 else ""))
        for power, spec in zip(self.functional_powers, functionals):
            if power:
                parts.append(f"[{spec}]" + (f"^{power}" if power > 1 else ""))
        return "E[" + ("1" if not parts else " ".join(parts)) + "]"


@dataclass(frozen=True)
class SimEstimate:
    """A Monte Carlo point estimate with its precision bookkeeping."""

    label: str
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    replications: int
    seed: int

    def within(self, target: Scalar, multiplier: float = 3.5) -> bool:
        """Whether ``target`` lies within ``multiplier`` stderr of the mean."""
        return abs(self.mean - float(target)) <= multiplier * self.stderr


# ---------------------------------------------------------------------------
# Streams and samplers
# ---------------------------------------------------------------------------


def rep_generator(seed: int, rep: int) -> np.random.Generator:
    """The counter-based stream for one replication (see module docstring)."""
    key = ((seed & _MASK64) << 64) | (rep & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def _family_sampler(family: Family) -> Callable[[np.random.Generator], float]:
    if isinstance(family, Exponential):
        scale = 1.0 / float(family.rate)
        return lambda rng: rng.exponential(scale)
    if isinstance(family, Deterministic):
        size = float(family.size)
        return lambda rng: size
    if isinstance(family, Gamma):
        shape, scale = float(family.shape), 1.0 / float(family.rate)
        return lambda rng: rng.gamma(shape, scale)
    if isinstance(family, Uniform):
        lo, hi = float(family.a), float(family.b)
        return lambda rng: rng.uniform(lo, hi)
    raise ConfigError(f"unsupported family {family!r}")


def _push_sampler(push: PushSpec, model: LevyModel) -> Callable[[np.random.Generator], float]:
    spec = resolve_push(as_push(push), model.jumps)
    if isinstance(spec, DeterministicPush):
        level = float(spec.x)
        return lambda rng: level
    if isinstance(spec, ParametricPush):
        return _family_sampler(spec.family)
    if isinstance(spec, MomentPush):
        raise ConfigError("a moment-list push does not determine a law to sample")
    raise ConfigError(f"cannot sample push {spec!r}")


def _exact_mode_parameters(model: LevyModel) -> Tuple[float, float, Optional[Callable]]:
    """(drain speed, arrival rate, jump sampler); rejects non-exact models."""
    if model.sigma2 != 0:
        raise EulerRequired(
            "exact path simulation needs sigma2 = 0; pass an Euler step dt "
            "to simulate the diffusion on a grid (biased)"
        )
    lam = model.lam
    if is_infinite(lam):
        raise ConfigError("an infinite arrival rate cannot be simulated exactly")
    speed = -float(model.c)
    if speed <= 0:
        raise ConfigError("simulation needs strictly negative drift")
    if lam == 0:
        return speed, 0.0, None
    family = model.jump_family
    if family is None:
        raise ConfigError(
            "simulation needs a named jump-size family (raw moments do not "
            "determine a law to sample)"
        )
    return speed, float(lam), _family_sampler(family)


# ---------------------------------------------------------------------------
# Exact busy cycles
# ---------------------------------------------------------------------------


def _area_coefficients(poly: Polynomial, speed: float) -> Tuple[float, ...]:
    """c_k / ((k+1) speed), ready for segment sums of w0^{k+1} - w1^{k+1}."""
    return tuple(
        float(c) / ((k + 1) * speed) for k, c in enumerate(poly.coeffs)
    )


def _segment_area(coeffs: Tuple[float, ...], w0: float, w1: float) -> float:
    """Sum of coeffs[k] * (w0^{k+1} - w1^{k+1}) over k."""
    total = 0.0
    p0, p1 = 1.0, 1.0
    for c in coeffs:
        p0 *= w0
        p1 *= w1
        total += c * (p0 - p1)
    return total


def _poly_eval_float(poly: Polynomial, x: float) -> float:
    total = 0.0
    for c in reversed(poly.coeffs):
        total = total * x + float(c)
    return total


def simulate_busy_cycle(
    config: SimConfig, rep: int = 0, rng: Optional[np.random.Generator] = None
) -> CycleSample:
    """One exact busy cycle under ``config`` (replication ``rep``'s stream)."""
    model = config.model
    speed, lam, jump = _exact_mode_parameters(model)
    if rng is None:
        rng = rep_generator(config.seed, rep)
    draw_push = _push_sampler(config.push, model)

    area_specs: List[Tuple[int, Tuple[float, ...]]] = []
    jump_specs: List[Tuple[int, Polynomial]] = []
    for idx, spec in enumerate(config.functionals):
        if spec.kind is Kind.AREA:
            area_specs.append((idx, _area_coefficients(spec.poly, speed)))
        else:
            jump_specs.append((idx, spec.poly))

    values = [0.0] * len(config.functionals)
    w = draw_push(rng)
    t = 0.0
    n = 0
    inv_lam = 1.0 / lam if lam > 0 else 0.0
    while True:
        t_hit = w / speed
        gap = rng.exponential(inv_lam) if lam > 0 else math.inf
        if t_hit <= gap:
            for idx, coeffs in area_specs:
                values[idx] += _segment_area(coeffs, w, 0.0)
            return CycleSample(tau=t + t_hit, values=tuple(values), n_jumps=n)
        w1 = w - speed * gap
        for idx, coeffs in area_specs:
            values[idx] += _segment_area(coeffs, w, w1)
        for idx, poly in jump_specs:
            values[idx] += _poly_eval_float(poly, w1)
        w = w1 + jump(rng)
        n += 1
        t += gap


def estimate_moments(
    config: SimConfig, powers: Sequence[ProductSpec]
) -> List[SimEstimate]:
    """Plug-in product estimators over ``config.replications`` exact cycles."""
    powers = list(powers)
    for p in powers:
        if len(p.functional_powers) > len(config.functionals):
            raise ConfigError(
                "a product references more functionals than the config carries"
            )
    samples = np.empty((config.replications, len(powers)), dtype=np.float64)
    for rep in range(config.replications):
        cycle = simulate_busy_cycle(config, rep)
        for j, p in enumerate(powers):
            value = cycle.tau ** p.tau_power if p.tau_power else 1.0
            if p.count_power:
                value *= float(cycle.n_jumps) ** p.count_power
            for power, v in zip(p.functional_powers, cycle.values):
                if power:
                    value *= v ** power
            samples[rep, j] = value
    return [
        _estimate_from_samples(
            samples[:, j], powers[j].describe(config.functionals), config.seed
        )
        for j in range(len(powers))
    ]


def _estimate_from_samples(column: np.ndarray, label: str, seed: int) -> SimEstimate:
    n = column.shape[0]
    mean = float(np.sum(column) / n)  # pairwise summation
    if n > 1:
        sd = float(np.std(column, ddof=1))
        stderr = sd / math.sqrt(n)
    else:
        stderr = math.inf
    half = _CI_FACTOR * stderr
    return SimEstimate(
        label=label,
        mean=mean,
        stderr=stderr,
        ci_low=mean - half,
        ci_high=mean + half,
        replications=n,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Reflected workload with exponential killing
# ---------------------------------------------------------------------------


def simulate_reflected_area(config: SimConfig) -> SimEstimate:
    """Estimate E exp(-alpha * area of the reflected path up to T_beta).

    The reflected workload starts at the push level, drains at the model
    speed, floors at zero (idle stretches contribute zero area), and jumps
    with the model's compound-Poisson stream.  The kill time is drawn first
    in each replication by inverting a single uniform against the Exp(beta)
    survival function.
    """
    model = config.model
    if config.kill_rate is None:
        raise ConfigError("simulate_reflected_area needs kill_rate (beta)")
    speed, lam, jump = _exact_mode_parameters(model)
    draw_push = _push_sampler(config.push, model)
    beta = float(config.kill_rate)
    alpha = float(config.alpha)
    inv_lam = 1.0 / lam if lam > 0 else 0.0

    out = np.empty(config.replications, dtype=np.float64)
    for rep in range(config.replications):
        rng = rep_generator(config.seed, rep)
        kill = -math.log1p(-rng.random()) / beta
        w = draw_push(rng)
        t = 0.0
        area = 0.0
        while True:
            remaining = kill - t
            gap = rng.exponential(inv_lam) if lam > 0 else math.inf
            seg = gap if gap < remaining else remaining
            drain_time = w / speed
            if drain_time >= seg:
                area += w * seg - 0.5 * speed * seg * seg
                w -= speed * seg
            else:
                area += 0.5 * w * w / speed
                w = 0.0
            if gap >= remaining:
                break
            w += jump(rng)
            t += gap
        out[rep] = math.exp(-alpha * area)
    return _estimate_from_samples(
        out, f"E[exp(-{alpha} * reflected area to T_beta)]", config.seed
    )


# ---------------------------------------------------------------------------
# Coupled autocovariance of the cost process
# ---------------------------------------------------------------------------


def estimate_autocovariance(
    model: LevyModel,
    k: int,
    x1: Scalar,
    x2: Scalar,
    replications: int,
    seed: int = 0,
) -> SimEstimate:
    """Monte Carlo Cov[A_k(x1), A_k(x2)] from coupled paths.

    Each replication simulates one exact cycle from the deterministic level
    x2.  Because the drained path descends continuously, it hits x1 exactly
    once; the integral of W^k over the sub-path from that instant onward is
    exactly the coupled A_k(x1).  Both functionals come from the same
    stream, which is the joint law the analytic decomposition describes.
    """
    if k < 0:
        raise ConfigError("the cost exponent k must be >= 0")
    if not 0 <= x1 <= x2:
        raise ArgumentOrder(f"levels must satisfy 0 <= x1 <= x2, got ({x1!r}, {x2!r})")
    if replications < 2:
        raise ConfigError("covariance estimation needs at least 2 replications")
    speed, lam, jump = _exact_mode_parameters(model)
    inv_lam = 1.0 / lam if lam > 0 else 0.0
    level1, level2 = float(x1), float(x2)
    coeffs = _area_coefficients(Polynomial((0,) * k + (1,)), speed)

    full = np.empty(replications, dtype=np.float64)
    sub = np.empty(replications, dtype=np.float64)
    for rep in range(replications):
        rng = rep_generator(seed, rep)
        w = level2
        total = 0.0
        tail = 0.0
        above = level2 > level1
        while True:
            gap = rng.exponential(inv_lam) if lam > 0 else math.inf
            drain_time = w / speed
            hit = drain_time <= gap
            seg = drain_time if hit else gap
            w_end = w - speed * seg
            if above and w_end <= level1:
                # the descent crosses x1 inside this segment: split there
                total += _segment_area(coeffs, w, level1)
                piece = _segment_area(coeffs, level1, w_end)
                total += piece
                tail += piece
                above = False
            else:
                piece = _segment_area(coeffs, w, w_end)
                total += piece
                if not above:
                    tail += piece
            if hit:
                break
            w = w_end + jump(rng)
        full[rep] = total
        sub[rep] = tail

    mean_full = float(np.sum(full) / replications)
    mean_sub = float(np.sum(sub) / replications)
    centered = (full - mean_full) * (sub - mean_sub)
    cov = float(np.sum(centered) / (replications - 1))
    stderr = float(np.std(centered, ddof=1)) / math.sqrt(replications)
    half = _CI_FACTOR * stderr
    return SimEstimate(
        label=f"Cov[A_{k}({x1}), A_{k}({x2})]",
        mean=cov,
        stderr=stderr,
        ci_low=cov - half,
        ci_high=cov + half,
        replications=replications,
        seed=seed,
    )
