"""Configuration files: canonical grammar, exact parsing, fingerprints.

Every command of the package reads the same TOML grammar, so a single
config file is a complete, reproducible record of an experiment.  All
numeric fields are written as strings (or TOML numbers) and parsed
*exactly*: in rational mode a literal like ``"0.35"`` becomes the exact
fraction 7/20, never a binary float.  TOML floats are intercepted at parse
time for the same reason.

Canonical grammar
-----------------

.. code-block:: toml

    mode = "rational"            # optional: "rational" (default) | "real"

    [model]
    drift = "-1"                 # required; must make the mean slope negative
    sigma2 = "0"                 # optional Brownian variance, default 0

    [model.jumps]                # optional; omit for a jump-free model
    rate = "1/2"                 # arrival rate; "inf" allowed with eta lists
    # EITHER a parametric jump-size family ...
    [model.jumps.family]
    kind = "exponential"         # exponential | deterministic | gamma | uniform
    rate = "1"                   # exponential: rate; gamma: shape & rate;
                                 # deterministic: size; uniform: lower & upper
    # ... OR raw jump-measure moments in [model.jumps]:
    # eta = ["1/2", "1", "3"]    # rate * E Y^i for i = 1, 2, ...; a trailing
    #                            # "inf" marks the first infinite order

    [push]                       # optional; the starting-level law
    kind = "same-as-jumps"       # deterministic | moments | parametric
                                 #   | same-as-jumps
    # level = "1"                #   deterministic
    # moments = ["1", "2", "6"]  #   moments: E V, E V^2, ...
    # [push.family]              #   parametric: same keys as a jump family
    # kind = "exponential"
    # rate = "1"

    [sim]                        # optional; Monte Carlo settings
    replications = 1000000
    seed = 20260822
    kill_rate = "1"              # optional Exp(beta) killing rate
    alpha = "1/20"               # optional transform argument
    dt = "0.001"                 # optional Euler step (Brownian models only)

Field values may be TOML strings ("1/2", "-0.25", "1e-3", "inf"), TOML
integers, or TOML floats; all three forms parse to the same exact value.
In real mode the parsed exact values are converted once to high-precision
reals.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import tomli

from .errors import ConfigError
from .model import (
    Deterministic,
    DeterministicPush,
    Exponential,
    Family,
    Gamma,
    LevyModel,
    MomentPush,
    ParametricJumps,
    ParametricPush,
    PushSpec,
    RATIONAL_MODE,
    REAL_MODE,
    RawMomentJumps,
    SameAsJumps,
    Uniform,
    no_jumps,
)
from .scalars import INF, Scalar, format_scalar, is_infinite, parse_exact, to_real

__all__ = [
    "SimSettings",
    "LoadedConfig",
    "parse_scalar_field",
    "build_family",
    "build_push",
    "build_model",
    "parse_config_text",
    "load_config",
    "config_fingerprint",
    "ARTIFACT_VERSION",
]

#: Version stamp emitted in every provenance header.
ARTIFACT_VERSION = "0.1.0"

_MODES = (RATIONAL_MODE, REAL_MODE)

_FAMILY_FIELDS = {
    "exponential": ("rate",),
    "deterministic": ("size",),
    "gamma": ("shape", "rate"),
    "uniform": ("lower", "upper"),
}

_PUSH_KINDS = ("deterministic", "moments", "parametric", "same-as-jumps")


# ---------------------------------------------------------------------------
# Scalar fields
# ---------------------------------------------------------------------------


def parse_scalar_field(value, field_name: str) -> Scalar:
    """Parse one config value to an exact scalar (Fraction/int or inf).

    Accepts strings, ints, and Fractions (TOML floats arrive as Fractions
    because :func:`parse_config_text` installs ``parse_float=Fraction``).
    """
    if isinstance(value, bool):
        raise ConfigError(f"field {field_name!r} must be a number, got a boolean")
    if isinstance(value, (int, Fraction)):
        return value
    if isinstance(value, float):
        if is_infinite(value):
            return value
        raise ConfigError(
            f"field {field_name!r} arrived as a binary float; "
            "pass numbers as strings or through the config loader"
        )
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return INF
        try:
            return parse_exact(value)
        except ValueError as exc:
            raise ConfigError(f"field {field_name!r}: {exc}") from exc
    raise ConfigError(f"field {field_name!r} has unsupported type {type(value).__name__}")


def _convert_mode(x: Scalar, mode: str) -> Scalar:
    if mode == REAL_MODE and not is_infinite(x):
        return to_real(x)
    return x


def _scalar(table: Mapping, key: str, field_name: str, mode: str, default=None) -> Scalar:
    if key not in table:
        if default is None:
            raise ConfigError(f"missing required field {field_name!r}")
        return _convert_mode(default, mode)
    return _convert_mode(parse_scalar_field(table[key], field_name), mode)


def _scalar_list(values, field_name: str, mode: str) -> Tuple[Scalar, ...]:
    if not isinstance(values, Sequence) or isinstance(values, (str, bytes)):
        raise ConfigError(f"field {field_name!r} must be a list of numbers")
    return tuple(
        _convert_mode(parse_scalar_field(v, f"{field_name}[{i}]"), mode)
        for i, v in enumerate(values)
    )


def _known_keys(table: Mapping, allowed: Sequence[str], where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown field(s) {unknown} in {where} (allowed: {sorted(allowed)})")


# ---------------------------------------------------------------------------
# Section builders
# ---------------------------------------------------------------------------


def build_family(table: Mapping, mode: str, where: str) -> Family:
    """Build a distribution family from a ``kind`` + parameter table."""
    if not isinstance(table, Mapping):
        raise ConfigError(f"{where} must be a table")
    kind = table.get("kind")
    if kind not in _FAMILY_FIELDS:
        raise ConfigError(
            f"{where}.kind must be one of {sorted(_FAMILY_FIELDS)}, got {kind!r}"
        )
    _known_keys(table, ("kind",) + _FAMILY_FIELDS[kind], where)
    get = lambda key: _scalar(table, key, f"{where}.{key}", mode)  # noqa: E731
    if kind == "exponential":
        return Exponential(get("rate"))
    if kind == "deterministic":
        return Deterministic(get("size"))
    if kind == "gamma":
        return Gamma(get("shape"), get("rate"))
    return Uniform(get("lower"), get("upper"))


def build_model(table: Mapping, mode: str) -> LevyModel:
    """Build a :class:`LevyModel` from the ``[model]`` table."""
    if not isinstance(table, Mapping):
        raise ConfigError("[model] must be a table")
    _known_keys(table, ("drift", "sigma2", "jumps"), "[model]")
    c = _scalar(table, "drift", "model.drift", mode)
    sigma2 = _scalar(table, "sigma2", "model.sigma2", mode, default=0)

    jumps_tbl = table.get("jumps")
    if jumps_tbl is None:
        jumps = no_jumps()
    else:
        if not isinstance(jumps_tbl, Mapping):
            raise ConfigError("[model.jumps] must be a table")
        _known_keys(jumps_tbl, ("rate", "family", "eta"), "[model.jumps]")
        rate = _scalar(jumps_tbl, "rate", "model.jumps.rate", mode)
        has_family = "family" in jumps_tbl
        has_eta = "eta" in jumps_tbl
        if has_family and has_eta:
            raise ConfigError("[model.jumps] takes either a family or eta, not both")
        if has_family:
            family = build_family(jumps_tbl["family"], mode, "model.jumps.family")
            jumps = ParametricJumps(family, rate)
        elif has_eta:
            eta = _scalar_list(jumps_tbl["eta"], "model.jumps.eta", mode)
            jumps = RawMomentJumps(eta, rate)
        else:
            raise ConfigError("[model.jumps] needs a [model.jumps.family] table or an eta list")
    return LevyModel(c=c, sigma2=sigma2, jumps=jumps)


def build_push(table: Mapping, mode: str) -> PushSpec:
    """Build a push specification from the ``[push]`` table."""
    if not isinstance(table, Mapping):
        raise ConfigError("[push] must be a table")
    kind = table.get("kind")
    if kind not in _PUSH_KINDS:
        raise ConfigError(f"push.kind must be one of {_PUSH_KINDS}, got {kind!r}")
    if kind == "deterministic":
        _known_keys(table, ("kind", "level"), "[push]")
        return DeterministicPush(_scalar(table, "level", "push.level", mode))
    if kind == "moments":
        _known_keys(table, ("kind", "moments"), "[push]")
        if "moments" not in table:
            raise ConfigError("push kind 'moments' needs a moments list")
        return MomentPush(_scalar_list(table["moments"], "push.moments", mode))
    if kind == "parametric":
        _known_keys(table, ("kind", "family"), "[push]")
        if "family" not in table:
            raise ConfigError("push kind 'parametric' needs a [push.family] table")
        return ParametricPush(build_family(table["family"], mode, "push.family"))
    _known_keys(table, ("kind",), "[push]")
    return SameAsJumps()


@dataclass(frozen=True)
class SimSettings:
    """Monte Carlo settings from the ``[sim]`` table (all optional)."""

    replications: int = 100_000
    seed: int = 0
    kill_rate: Optional[Scalar] = None
    alpha: Scalar = 0
    dt: Optional[Scalar] = None

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ConfigError("sim.replications must be >= 1")
        if self.seed < 0:
            raise ConfigError("sim.seed must be >= 0")


def _build_sim(table: Optional[Mapping], mode: str) -> SimSettings:
    if table is None:
        return SimSettings()
    if not isinstance(table, Mapping):
        raise ConfigError("[sim] must be a table")
    _known_keys(table, ("replications", "seed", "kill_rate", "alpha", "dt"), "[sim]")

    def _int_field(key: str, default: int) -> int:
        if key not in table:
            return default
        raw = table[key]
        value = parse_scalar_field(raw, f"sim.{key}")
        if is_infinite(value) or Fraction(value).denominator != 1:
            raise ConfigError(f"sim.{key} must be an integer, got {raw!r}")
        return int(value)

    kill = None
    if "kill_rate" in table:
        kill = _convert_mode(parse_scalar_field(table["kill_rate"], "sim.kill_rate"), mode)
    dt = None
    if "dt" in table:
        dt = _convert_mode(parse_scalar_field(table["dt"], "sim.dt"), mode)
    return SimSettings(
        replications=_int_field("replications", 100_000),
        seed=_int_field("seed", 0),
        kill_rate=kill,
        alpha=_scalar(table, "alpha", "sim.alpha", mode, default=0),
        dt=dt,
    )


# ---------------------------------------------------------------------------
# Whole files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoadedConfig:
    """A fully parsed configuration: model, push, sim settings, provenance."""

    mode: str
    model: LevyModel
    push: Optional[PushSpec]
    sim: SimSettings
    source: str = "<inline>"
    fingerprint: str = field(default="", compare=False)

    def require_push(self) -> PushSpec:
        if self.push is None:
            raise ConfigError(
                "this command needs a starting-level law: add a [push] section "
                "or pass --push"
            )
        return self.push


def parse_config_text(text: str, source: str = "<inline>") -> LoadedConfig:
    """Parse a TOML config document (see the module docstring for grammar)."""
    try:
        data = tomli.loads(text, parse_float=Fraction)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: invalid TOML: {exc}") from exc
    _known_keys(data, ("mode", "model", "push", "sim"), source)

    mode = data.get("mode", RATIONAL_MODE)
    if mode not in _MODES:
        raise ConfigError(f"mode must be one of {_MODES}, got {mode!r}")
    if "model" not in data:
        raise ConfigError(f"{source}: missing required [model] section")
    model = build_model(data["model"], mode)
    push = build_push(data["push"], mode) if "push" in data else None
    sim = _build_sim(data.get("sim"), mode)
    loaded = LoadedConfig(mode=mode, model=model, push=push, sim=sim, source=source)
    return LoadedConfig(
        mode=mode,
        model=model,
        push=push,
        sim=sim,
        source=source,
        fingerprint=config_fingerprint(loaded),
    )


def load_config(path: Union[str, Path]) -> LoadedConfig:
    """Load a config file; :class:`ConfigError` on absence or bad content."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {p}: {exc}") from exc
    return parse_config_text(text, source=str(p))


# ---------------------------------------------------------------------------
# Fingerprints
# ---------------------------------------------------------------------------


def _push_canonical(push: Optional[PushSpec]) -> str:
    if push is None:
        return "none"
    if isinstance(push, DeterministicPush):
        return f"det({format_scalar(push.x)})"
    if isinstance(push, MomentPush):
        return "moments(" + ",".join(format_scalar(m) for m in push.moments) + ")"
    if isinstance(push, ParametricPush):
        return _family_canonical(push.family)
    return "same-as-jumps"


def _family_canonical(family: Family) -> str:
    from .model import FAMILY_NAMES

    name = FAMILY_NAMES[type(family)]
    return name + "(" + ",".join(format_scalar(p) for p in family.parameters()) + ")"


def config_fingerprint(cfg: LoadedConfig) -> str:
    """Deterministic short hash of the *effective* configuration.

    Computed over a canonical text rendering of every semantic field (never
    over raw file bytes), so the same effective run — whether it came from a
    file, from flags, or from overridden fields — always carries the same
    fingerprint in its provenance header.
    """
    model = cfg.model
    if isinstance(model.jumps, ParametricJumps):
        jumps = (
            f"cpp(rate={format_scalar(model.jumps.cpp_rate)},"
            f"family={_family_canonical(model.jumps.family)})"
        )
    else:
        eta = ",".join(format_scalar(v) for v in model.jumps.eta_values)
        jumps = f"raw(rate={format_scalar(model.jumps.cpp_rate)},eta=[{eta}])"
    parts = [
        f"mode={cfg.mode}",
        f"drift={format_scalar(model.c)}",
        f"sigma2={format_scalar(model.sigma2)}",
        f"jumps={jumps}",
        f"push={_push_canonical(cfg.push)}",
        f"reps={cfg.sim.replications}",
        f"seed={cfg.sim.seed}",
        f"kill={'none' if cfg.sim.kill_rate is None else format_scalar(cfg.sim.kill_rate)}",
        f"alpha={format_scalar(cfg.sim.alpha)}",
        f"dt={'none' if cfg.sim.dt is None else format_scalar(cfg.sim.dt)}",
    ]
    digest = hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()
    return digest[:16]
