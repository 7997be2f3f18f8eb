"""Joint moments of cycle functionals via an exact operator expansion.

For one descent cycle (start at the random push level ``V``, run to first
passage below zero) the functionals of interest are running integrals
``A_f = integral_0^tau f(W(t)) dt`` and jump sums ``D_g = sum_jumps
g(W(t-))`` (the integrand sampled at pre-jump levels), for polynomial
integrands.  The expectation of a product of such factors expands exactly
over two combinatorial layers:

1. *Coincidence patterns.*  Several jump-sum factors may sample the same
   jump epoch, so the jump factors are partitioned into blocks; each block
   samples one common epoch and carries the product of its members'
   integrands.  Patterns are enumerated as multiset partitions with exact
   symmetry counts.
2. *Time orderings.*  For a fixed pattern, the distinct epochs and the
   integration times are totally ordered; each ordering contributes one
   operator chain, evaluated right-to-left (innermost = latest time).  An
   area slot with integrand ``f`` maps the continuation ``h`` to
   ``Gamma_a(f * h)``.  A jump slot with block integrand ``g`` maps it to
   ``Gamma_a(g * S h)`` and contributes one arrival-rate factor, where
   ``(S h)(x) = E h(x + Y)`` averages the continuation over an independent
   jump size ``Y``: after a sampled jump, the remaining (later) factors see
   the post-jump level.

Pure-area products need neither partitions nor the shift ``S`` and reduce
to the plain permutation sum of ``Gamma_a`` chains.  The orderings
collapse: only the *multiset* of remaining slots matters, so a dynamic
program over slot multisets evaluates ``m!/prod(counts!)`` distinct chains
and multiplies back the ``prod(counts!)`` interchange factor.  Brute-force
enumerations of raw orderings and raw set partitions are kept in the
test-suite to certify both collapses, and the whole expansion is checked
against two independent oracles: the bivariate fixed-point series (exact
rational agreement of all ``E[N^n tau^m]``, ``m + n <= 5``, on two
compound-Poisson models) and Monte Carlo.  Dropping the post-jump shift
and the coincidence layer would give e.g. ``E[N tau] = 8`` and
``E[N^2] = 6`` on the reference model (unit drain, arrival rate 1/2,
unit-mean exponential jumps and push), where the true values — classical
fixed point, branching argument, and simulation all agree — are 10 and 7.

Special values follow the probabilistic meaning: an empty product is 1;
any identically-zero integrand kills the product; a jump-sum factor with
zero arrival rate gives 0; one with infinite arrival rate gives a flagged
infinite moment.  An infinite supremum moment anywhere in the chain demand
makes the joint moment itself a flagged ``inf`` — infinity is an answer
here, not an error; only a model whose data stops too early to decide
raises :class:`MissingMoment`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb
from typing import (
    Callable,
    Dict,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from .errors import ConfigError, FiniteMomentRequired
from .gamma import (
    INFINITE_POLYNOMIAL,
    GammaContext,
    InfinitePolynomial,
    gamma_a,
    push_expectation,
)
from .model import LevyModel, PushSpec, as_push, resolve_push
from .polyalg import ONE, ZERO, Polynomial, poly_mul
from .scalars import INF, Scalar, is_infinite

__all__ = [
    "Kind",
    "FunctionalSpec",
    "MomentResult",
    "MomentGrid",
    "joint_moment",
    "joint_moment_polynomial",
    "jump_shift_average",
    "moment_grid",
    "functional_moment_grid",
    "parse_polynomial",
    "parse_functional",
    "MAX_TOTAL_ORDER",
]

#: Hard cap on the total product order accepted by the grid/joint engines.
MAX_TOTAL_ORDER = 12


class Kind(Enum):
    """Which cycle functional a factor is."""

    AREA = "area"
    JUMP_SUM = "jump-sum"


@dataclass(frozen=True)
class FunctionalSpec:
    """One factor of a joint product: a kind and a polynomial integrand."""

    kind: Kind
    poly: Polynomial

    def __str__(self) -> str:
        tag = "A" if self.kind is Kind.AREA else "D"
        return f"{tag}:{self.poly}"


@dataclass(frozen=True)
class MomentResult:
    """A computed joint moment plus the expansion bookkeeping.

    ``value`` may be a flagged ``inf`` (the moment is genuinely infinite).
    ``level_polynomial`` is the same joint moment as a polynomial in a
    deterministic starting level (``None`` when the moment is infinite), so
    ``value = E level_polynomial(V)`` with arrival-rate factors included.
    ``permutations_represented`` counts raw (pattern, ordering) terms of the
    expansion; ``chains_evaluated`` counts the distinct chains actually
    computed after the multiset collapse.
    """

    value: Scalar
    level_polynomial: Optional[Polynomial]
    permutations_represented: int
    chains_evaluated: int
    psi_order: int
    coincidence_patterns: int = 1

    @property
    def is_infinite(self) -> bool:
        return is_infinite(self.value)


def _factorial(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


def _power(base: Scalar, n: int) -> Scalar:
    out: Scalar = 1
    for _ in range(n):
        out = out * base
    return out


# ---------------------------------------------------------------------------
# Post-jump displacement
# ---------------------------------------------------------------------------


def jump_shift_average(
    jump_moment: Callable[[int], Scalar], poly: Polynomial
) -> Polynomial:
    """Average a polynomial over an independent jump displacement.

    Returns ``x -> E poly(x + Y)`` where ``jump_moment(i)`` is the i-th raw
    moment of the jump size ``Y``.  A needed infinite moment means the
    product moment containing this continuation diverges, reported as
    :class:`FiniteMomentRequired` (callers flag the result infinite).
    """
    degree = poly.degree
    if degree <= 0:
        return poly
    out: List[Scalar] = [0] * (degree + 1)
    for k, c in enumerate(poly.coeffs):
        if c == 0:
            continue
        out[k] = out[k] + c
        for i in range(1, k + 1):
            m = jump_moment(i)
            if is_infinite(m):
                raise FiniteMomentRequired(
                    "jump-size raw moment",
                    i,
                    "the post-jump displacement average needs E Y^i finite",
                )
            out[k - i] = out[k - i] + (comb(k, i) * m) * c
    return Polynomial(out)


# ---------------------------------------------------------------------------
# Ordering layer: collapsed chain sums over slot multisets
# ---------------------------------------------------------------------------

_AREA_TAG = 0
_JUMP_TAG = 1

#: One chain slot: (tag, integrand).  Jump slots carry block integrands.
_Slot = Tuple[int, Polynomial]


@dataclass(frozen=True)
class _EngineContext:
    """Operator context plus the per-jump moment accessor for the shift."""

    gctx: GammaContext
    jump_moment: Callable[[int], Scalar]


def _slot_sort_key(slot: _Slot):
    tag, poly = slot
    return (tag, poly.degree, str(poly))


def _sorted_slots(slots: Sequence[_Slot]) -> Tuple[_Slot, ...]:
    return tuple(sorted(slots, key=_slot_sort_key))


def _chain_multiset_sum(
    ectx: _EngineContext,
    slots: Tuple[_Slot, ...],
    memo: Dict[Tuple[_Slot, ...], Polynomial],
) -> Polynomial:
    """Sum of chain polynomials over all *distinct* arrangements of ``slots``.

    Recursion picks the outermost (earliest-time) slot among the distinct
    slot values; the remaining multiset is the continuation.
    """
    if not slots:
        return ONE
    cached = memo.get(slots)
    if cached is not None:
        return cached
    total = ZERO
    seen: List[_Slot] = []
    for j, slot in enumerate(slots):
        if any(slot == s for s in seen):
            continue
        seen.append(slot)
        inner = _chain_multiset_sum(ectx, slots[:j] + slots[j + 1 :], memo)
        tag, poly = slot
        if tag == _JUMP_TAG:
            inner = jump_shift_average(ectx.jump_moment, inner)
        total = total + gamma_a(ectx.gctx, poly_mul(poly, inner))
    memo[slots] = total
    return total


def _interchange_factor(slots: Sequence[_Slot]) -> int:
    """``prod(multiplicity!)`` over the distinct slot values."""
    remaining = list(slots)
    factor = 1
    while remaining:
        head = remaining[0]
        count = sum(1 for s in remaining if s == head)
        factor *= _factorial(count)
        remaining = [s for s in remaining if s != head]
    return factor


# ---------------------------------------------------------------------------
# Coincidence layer: multiset partitions of the jump factors
# ---------------------------------------------------------------------------


def _submultisets(base: Tuple[int, ...]) -> Iterator[Tuple[Tuple[int, ...], int]]:
    """Yield ``(vector, ways)`` over sub-multisets of ``base``.

    ``ways`` counts the selections of distinct underlying factors realizing
    the vector: a product of binomial coefficients.
    """
    if not base:
        yield (), 1
        return
    for tail, tail_ways in _submultisets(base[1:]):
        for c in range(base[0] + 1):
            yield (c,) + tail, comb(base[0], c) * tail_ways


#: A coincidence pattern: sorted tuple of block vectors (counts per type).
_Pattern = Tuple[Tuple[int, ...], ...]


def _jump_partition_patterns(counts: Tuple[int, ...]) -> Dict[_Pattern, int]:
    """All coincidence patterns of a multiset of jump factors.

    ``counts[t]`` is the number of factors of type ``t``.  Returns a map
    from pattern to the number of set partitions of the (distinct)
    underlying factors realizing it; the total of the multiplicities is the
    Bell number of ``sum(counts)``.
    """
    memo: Dict[Tuple[int, ...], Dict[_Pattern, int]] = {}

    def rec(state: Tuple[int, ...]) -> Dict[_Pattern, int]:
        if not any(state):
            return {(): 1}
        cached = memo.get(state)
        if cached is not None:
            return cached
        first = next(t for t, c in enumerate(state) if c)
        base = list(state)
        base[first] -= 1
        base_t = tuple(base)
        out: Dict[_Pattern, int] = {}
        # The block containing one anchored factor of type `first` is formed
        # by every sub-multiset of the rest; anchoring makes each set
        # partition arise exactly once.
        for sub, ways in _submultisets(base_t):
            block = tuple(
                sub[t] + (1 if t == first else 0) for t in range(len(state))
            )
            remaining = tuple(base_t[t] - sub[t] for t in range(len(state)))
            for blocks, mult in rec(remaining).items():
                key = tuple(sorted(blocks + (block,)))
                out[key] = out.get(key, 0) + ways * mult
        memo[state] = out
        return out

    return rec(counts)


def _group_polys(
    polys: Sequence[Polynomial],
) -> Tuple[Tuple[Polynomial, ...], Tuple[int, ...]]:
    """Group a list of polynomials by value, preserving first-seen order."""
    ids: List[Polynomial] = []
    counts: List[int] = []
    for p in polys:
        try:
            j = ids.index(p)
        except ValueError:
            ids.append(p)
            counts.append(1)
        else:
            counts[j] += 1
    return tuple(ids), tuple(counts)


# ---------------------------------------------------------------------------
# Core expansion shared by joint_moment and the grids
# ---------------------------------------------------------------------------


@dataclass
class _ExpansionStats:
    patterns: int = 0
    orderings: int = 0


def _pattern_sum(
    ectx: _EngineContext,
    lam: Scalar,
    area_polys: Sequence[Polynomial],
    jump_polys: Sequence[Polynomial],
    memo: Dict[Tuple[_Slot, ...], Polynomial],
    stats: Optional[_ExpansionStats] = None,
) -> Union[Polynomial, InfinitePolynomial]:
    """Level polynomial of the full expansion, arrival-rate factors included.

    Returns :data:`INFINITE_POLYNOMIAL` when some required supremum or
    jump-size moment is infinite (the joint moment is then a flagged
    infinity).
    """
    area_slots = [(_AREA_TAG, p) for p in area_polys]
    if jump_polys:
        jtypes, jcounts = _group_polys(jump_polys)
        patterns = _jump_partition_patterns(jcounts)
    else:
        jtypes = ()
        patterns = {(): 1}

    block_cache: Dict[Tuple[int, ...], Polynomial] = {}
    total = ZERO
    for blocks, ways in patterns.items():
        jump_slots: List[_Slot] = []
        for bvec in blocks:
            bpoly = block_cache.get(bvec)
            if bpoly is None:
                bpoly = ONE
                for t, c in enumerate(bvec):
                    for _ in range(c):
                        bpoly = poly_mul(bpoly, jtypes[t])
                block_cache[bvec] = bpoly
            jump_slots.append((_JUMP_TAG, bpoly))
        slots = _sorted_slots(area_slots + jump_slots)
        try:
            chain = _chain_multiset_sum(ectx, slots, memo)
        except FiniteMomentRequired:
            return INFINITE_POLYNOMIAL
        weight = ways * _interchange_factor(slots)
        contribution = _power(lam, len(blocks)) * (weight * chain)
        total = total + contribution
        if stats is not None:
            stats.patterns += 1
            stats.orderings += ways * _factorial(len(slots))
    return total


def _total_order(specs: Sequence[FunctionalSpec]) -> int:
    return sum(s.poly.degree + 1 for s in specs)


def _check_cap(specs: Sequence[FunctionalSpec]) -> None:
    if len(specs) > MAX_TOTAL_ORDER:
        raise ConfigError(
            f"a product of {len(specs)} functionals exceeds the supported cap "
            f"of {MAX_TOTAL_ORDER}; split the computation or reduce the order"
        )


def _split_specs(
    specs: Sequence[FunctionalSpec],
) -> Tuple[List[Polynomial], List[Polynomial]]:
    area = [s.poly for s in specs if s.kind is Kind.AREA]
    jump = [s.poly for s in specs if s.kind is Kind.JUMP_SUM]
    return area, jump


def _engine_context(model: LevyModel, psi_order: int) -> _EngineContext:
    return _EngineContext(
        GammaContext.for_model(model, psi_order), model.jump_raw_moment
    )


def joint_moment(
    model: LevyModel,
    push,
    specs: Sequence[FunctionalSpec],
) -> MomentResult:
    """Exact joint moment ``E[prod_j F_j]`` of cycle functionals.

    ``push`` may be a push specification, a bare distribution family, or a
    nonnegative scalar (coerced as in :func:`levypassage.model.as_push`).
    """
    specs = list(specs)
    _check_cap(specs)
    push_spec = resolve_push(as_push(push), model.jumps)

    if not specs:
        return MomentResult(1, ONE, 1, 0, 0)
    if any(s.poly.is_zero() for s in specs):
        return MomentResult(0, ZERO, _factorial(len(specs)), 0, 0)

    area_polys, jump_polys = _split_specs(specs)
    lam = model.lam
    if jump_polys and lam == 0:
        return MomentResult(0, ZERO, _factorial(len(specs)), 0, 0)
    if jump_polys and is_infinite(lam):
        return MomentResult(INF, None, _factorial(len(specs)), 0, 0)

    psi_order = max(_total_order(specs) - 1, 0)
    ectx = _engine_context(model, psi_order)
    memo: Dict[Tuple[_Slot, ...], Polynomial] = {}
    stats = _ExpansionStats()
    level = _pattern_sum(ectx, lam, area_polys, jump_polys, memo, stats)
    if level is INFINITE_POLYNOMIAL:
        return MomentResult(
            INF, None, stats.orderings, len(memo), psi_order, stats.patterns
        )
    value = push_expectation(push_spec, level)
    return MomentResult(
        value, level, stats.orderings, len(memo), psi_order, stats.patterns
    )


def joint_moment_polynomial(
    model: LevyModel, specs: Sequence[FunctionalSpec]
) -> Union[Polynomial, InfinitePolynomial]:
    """Joint moment as a polynomial in a deterministic starting level.

    Arrival-rate factors for jump slots are included, so evaluating the
    result at ``x`` equals ``joint_moment(model, x, specs).value``.
    """
    specs = list(specs)
    _check_cap(specs)
    if not specs:
        return ONE
    if any(s.poly.is_zero() for s in specs):
        return ZERO
    area_polys, jump_polys = _split_specs(specs)
    lam = model.lam
    if jump_polys and lam == 0:
        return ZERO
    if jump_polys and is_infinite(lam):
        return INFINITE_POLYNOMIAL
    psi_order = max(_total_order(specs) - 1, 0)
    ectx = _engine_context(model, psi_order)
    return _pattern_sum(ectx, lam, area_polys, jump_polys, {})


# ---------------------------------------------------------------------------
# Moment grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentGrid:
    """Joint moments ``E[F_a^m F_b^n]`` for all ``m + n <= max_total``.

    ``values[(m, n)]`` is the exact joint moment (possibly a flagged
    infinity); ``(0, 0)`` is always 1.
    """

    spec_a: FunctionalSpec
    spec_b: FunctionalSpec
    max_total: int
    values: Mapping[Tuple[int, int], Scalar] = field(repr=False)

    def value(self, m: int, n: int) -> Scalar:
        if m < 0 or n < 0 or m + n > self.max_total:
            raise KeyError((m, n))
        return self.values[(m, n)]

    def cells(self):
        return sorted(self.values.items(), key=lambda kv: (sum(kv[0]), kv[0]))


def functional_moment_grid(
    model: LevyModel,
    push,
    spec_a: FunctionalSpec,
    spec_b: FunctionalSpec,
    max_total: int,
) -> MomentGrid:
    """Grid of joint moments of powers of two functionals.

    Shares one chain memo across all cells and patterns, so the full grid
    costs barely more than its largest cell.
    """
    if max_total < 0:
        raise ValueError("max_total must be >= 0")
    if max_total > MAX_TOTAL_ORDER:
        raise ConfigError(
            f"max_total {max_total} exceeds the supported cap of "
            f"{MAX_TOTAL_ORDER}; reduce the grid order"
        )
    push_spec = resolve_push(as_push(push), model.jumps)
    pa, pb = spec_a.poly, spec_b.poly
    zero_a, zero_b = pa.is_zero(), pb.is_zero()
    lam = model.lam

    # Worst-case supremum-moment demand over the whole grid; the finest
    # coincidence pattern (all blocks singletons) dominates.
    worst = max(
        (m * (pa.degree + 1) + n * (pb.degree + 1))
        for m in range(max_total + 1)
        for n in range(max_total + 1 - m)
        if not ((m and zero_a) or (n and zero_b))
    )
    ectx = _engine_context(model, max(worst - 1, 1))

    memo: Dict[Tuple[_Slot, ...], Polynomial] = {}
    values: Dict[Tuple[int, int], Scalar] = {}
    for m in range(max_total + 1):
        for n in range(max_total + 1 - m):
            values[(m, n)] = _grid_cell(
                ectx, push_spec, spec_a, spec_b, m, n, lam, memo
            )
    return MomentGrid(spec_a=spec_a, spec_b=spec_b, max_total=max_total, values=values)


def _grid_cell(
    ectx: _EngineContext,
    push_spec: PushSpec,
    spec_a: FunctionalSpec,
    spec_b: FunctionalSpec,
    m: int,
    n: int,
    lam: Scalar,
    memo: Dict[Tuple[_Slot, ...], Polynomial],
) -> Scalar:
    if m == 0 and n == 0:
        return 1
    if (m and spec_a.poly.is_zero()) or (n and spec_b.poly.is_zero()):
        return 0
    specs = [spec_a] * m + [spec_b] * n
    area_polys, jump_polys = _split_specs(specs)
    if jump_polys and lam == 0:
        return 0
    if jump_polys and is_infinite(lam):
        return INF
    level = _pattern_sum(ectx, lam, area_polys, jump_polys, memo)
    if level is INFINITE_POLYNOMIAL:
        return INF
    return push_expectation(push_spec, level)


def moment_grid(
    model: LevyModel,
    push,
    fA: Polynomial,
    fD: Polynomial,
    maxTotal: int,
) -> MomentGrid:
    """Grid ``E[A_fA^m D_fD^n]`` for ``m + n <= maxTotal``.

    The first axis is the running-integral functional of ``fA``, the second
    the jump-sum functional of ``fD``.
    """
    return functional_moment_grid(
        model,
        push,
        FunctionalSpec(Kind.AREA, fA),
        FunctionalSpec(Kind.JUMP_SUM, fD),
        maxTotal,
    )


# ---------------------------------------------------------------------------
# Mini-grammar for functional specs ("A:x^2+3x", "D:1", ...)
# ---------------------------------------------------------------------------

_TERM_RE = re.compile(
    r"""
    (?P<sign>[+-])?\s*
    (?P<coeff>\d+(?:/\d+)?)?\s*
    (?:(?P<var>x)(?:\^(?P<power>\d+))?)?
    \s*
    """,
    re.VERBOSE,
)


def parse_polynomial(text: str) -> Polynomial:
    """Parse an integer/rational-coefficient polynomial expression in x.

    Accepts forms like ``1``, ``x``, ``x^2``, ``3x``, ``2x^3 + x - 4``,
    ``5/2x^2``.  Whitespace is free; an empty expression is an error.
    """
    s = text.strip()
    if not s:
        raise ConfigError("empty polynomial expression")
    pos = 0
    coeffs: Dict[int, Fraction] = {}
    found = False
    while pos < len(s):
        match = _TERM_RE.match(s, pos)
        if not match or match.end() == pos:
            raise ConfigError(f"cannot parse polynomial {text!r} at {s[pos:]!r}")
        sign_txt, coeff_txt, var, power_txt = (
            match.group("sign"),
            match.group("coeff"),
            match.group("var"),
            match.group("power"),
        )
        if coeff_txt is None and var is None:
            raise ConfigError(f"cannot parse polynomial {text!r} at {s[pos:]!r}")
        sign = -1 if sign_txt == "-" else 1
        coeff = Fraction(coeff_txt) if coeff_txt else Fraction(1)
        power = 0
        if var:
            power = int(power_txt) if power_txt else 1
        coeffs[power] = coeffs.get(power, Fraction(0)) + sign * coeff
        pos = match.end()
        if found and sign_txt is None:
            raise ConfigError(
                f"terms after the first need an explicit sign in {text!r}"
            )
        found = True
    degree = max(coeffs) if coeffs else 0
    out = [coeffs.get(k, Fraction(0)) for k in range(degree + 1)]
    return Polynomial([c if c.denominator != 1 else int(c) for c in out])


def parse_functional(text: str) -> FunctionalSpec:
    """Parse ``A:<poly>`` (running integral) or ``D:<poly>`` (jump sum)."""
    head, sep, body = text.partition(":")
    if not sep:
        raise ConfigError(
            f"functional spec {text!r} needs the form 'A:<polynomial>' or 'D:<polynomial>'"
        )
    kind_key = head.strip().upper()
    if kind_key == "A":
        kind = Kind.AREA
    elif kind_key == "D":
        kind = Kind.JUMP_SUM
    else:
        raise ConfigError(f"unknown functional kind {head!r} (use 'A' or 'D')")
    return FunctionalSpec(kind, parse_polynomial(body))
