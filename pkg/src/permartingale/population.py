"""Finite populations and sequential sampling without replacement.

A population is a fixed multiset of rational values.  Drawing all of it
in random order induces a filtration; the :class:`PathState` objects
below realize one history through that filtration together with the
running power sums that every formula in this package consumes.

Enumeration over all ``n!`` orderings is the ground truth for exact
checks, so it is guarded by a size cutoff with an explicit override,
never by silent sampling.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Iterable, Iterator, Sequence

from .errors import (
    EnumerationLimitError,
    InvalidInputError,
    PreconditionError,
)
from .rationals import as_fraction, format_rational, parse_rational, parse_scalar

DEFAULT_ENUMERATION_CUTOFF = 10
MAX_ENUMERATION_CUTOFF = 12


def resolve_cutoff(cutoff: int | None) -> int:
    """Normalize a user cutoff; None means the default of 10."""
    if cutoff is None:
        return DEFAULT_ENUMERATION_CUTOFF
    if not isinstance(cutoff, int) or isinstance(cutoff, bool):
        raise InvalidInputError(f"cutoff must be an int, got {cutoff!r}")
    if not 2 <= cutoff <= MAX_ENUMERATION_CUTOFF:
        raise InvalidInputError(
            f"cutoff must be between 2 and {MAX_ENUMERATION_CUTOFF}, got {cutoff}"
        )
    return cutoff


def ensure_enumerable(n: int, cutoff: int | None, what: str) -> None:
    """Refuse exact enumeration above the cutoff with actionable advice."""
    limit = resolve_cutoff(cutoff)
    if n > limit:
        raise EnumerationLimitError(
            f"{what} needs enumeration over a population of size {n}, above "
            f"the cutoff {limit}; raise the cutoff (hard maximum "
            f"{MAX_ENUMERATION_CUTOFF}) or use Monte Carlo mode"
        )


@dataclass(frozen=True)
class Population:
    """Immutable multiset of rational values with cached power sums.

    ``power_sums[r-1]`` is ``sum(x**r)`` for r = 1..4.  Duplicated
    values are distinct labeled items: the uniform random order is over
    labels, so a repeated value gets proportionally higher draw weight.
    """

    values: tuple[Fraction, ...]
    power_sums: tuple[Fraction, Fraction, Fraction, Fraction]

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def total(self) -> Fraction:
        return self.power_sums[0]

    @property
    def square_sum(self) -> Fraction:
        return self.power_sums[1]

    @property
    def cube_sum(self) -> Fraction:
        return self.power_sums[2]

    @property
    def fourth_sum(self) -> Fraction:
        return self.power_sums[3]

    def power_sum(self, r: int) -> Fraction:
        if not 1 <= r <= 4:
            raise InvalidInputError(f"power sums cached for r in 1..4, got {r}")
        return self.power_sums[r - 1]

    @property
    def is_centered(self) -> bool:
        return self.total == 0

    def require_centered(self, context: str) -> None:
        if not self.is_centered:
            raise PreconditionError(
                f"{context} requires a centered population (values summing "
                f"to 0); this one sums to {format_rational(self.total)}"
            )

    def as_floats(self) -> tuple[float, ...]:
        """Float image of the values, for Monte Carlo estimators only."""
        return tuple(float(v) for v in self.values)

    def __str__(self) -> str:
        return "{" + ", ".join(format_rational(v) for v in self.values) + "}"


def make_population(values: Iterable) -> Population:
    """Build a :class:`Population` from ints, Fractions, or 'p/q' strings."""
    vals = tuple(as_fraction(v) for v in values)
    if len(vals) < 2:
        raise InvalidInputError("a population needs at least two values")
    sums = tuple(
        sum((v**r for v in vals), Fraction(0)) for r in (1, 2, 3, 4)
    )
    return Population(values=vals, power_sums=sums)  # type: ignore[arg-type]


def make_bridge_population(m: int) -> Population:
    """The ±1 population with m ones and m minus-ones (size 2m)."""
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise InvalidInputError(f"bridge parameter must be an int >= 1, got {m!r}")
    return make_population((1,) * m + (-1,) * m)


def bridge_parameter(population: Population) -> int | None:
    """Return m if the population is exactly m ones and m minus-ones."""
    n = population.n
    if n % 2:
        return None
    m = n // 2
    ones = sum(1 for v in population.values if v == 1)
    minus = sum(1 for v in population.values if v == -1)
    return m if ones == m and minus == m else None


@dataclass(frozen=True)
class PathState:
    """One history of draws: k values drawn, the rest remaining.

    ``partial_sum``, ``partial_square_sum``, and ``partial_cube_sum``
    are the running sums of x, x^2, x^3 over the drawn prefix; they are
    maintained incrementally so a path of length n costs O(n) updates.
    """

    population: Population
    drawn: tuple[Fraction, ...]
    remaining: tuple[Fraction, ...]
    partial_sum: Fraction
    partial_square_sum: Fraction
    partial_cube_sum: Fraction

    @property
    def k(self) -> int:
        return len(self.drawn)

    @classmethod
    def initial(cls, population: Population) -> "PathState":
        return cls(
            population=population,
            drawn=(),
            remaining=population.values,
            partial_sum=Fraction(0),
            partial_square_sum=Fraction(0),
            partial_cube_sum=Fraction(0),
        )

    def extend(self, value) -> "PathState":
        """Draw one more value, which must still be in ``remaining``."""
        v = as_fraction(value)
        try:
            i = self.remaining.index(v)
        except ValueError:
            raise InvalidInputError(
                f"value {format_rational(v)} is not among the remaining items"
            ) from None
        return PathState(
            population=self.population,
            drawn=self.drawn + (v,),
            remaining=self.remaining[:i] + self.remaining[i + 1 :],
            partial_sum=self.partial_sum + v,
            partial_square_sum=self.partial_square_sum + v * v,
            partial_cube_sum=self.partial_cube_sum + v * v * v,
        )


def state_for_prefix(population: Population, prefix: Sequence) -> PathState:
    """PathState after drawing ``prefix`` in order."""
    st = PathState.initial(population)
    for v in prefix:
        st = st.extend(v)
    return st


def validate_permutation(permutation: Sequence[int], n: int) -> tuple[int, ...]:
    """Require a bijection on 1..n, returned as a tuple."""
    perm = tuple(permutation)
    if sorted(perm) != list(range(1, n + 1)):
        raise InvalidInputError(
            f"expected a permutation of 1..{n}, got {perm!r}"
        )
    return perm


@dataclass(frozen=True)
class PathTrajectory:
    """All n+1 states along one permutation of the population."""

    population: Population
    permutation: tuple[int, ...]
    states: tuple[PathState, ...]

    @property
    def sums(self) -> tuple[Fraction, ...]:
        return tuple(st.partial_sum for st in self.states)

    @property
    def square_sums(self) -> tuple[Fraction, ...]:
        return tuple(st.partial_square_sum for st in self.states)

    @property
    def cube_sums(self) -> tuple[Fraction, ...]:
        return tuple(st.partial_cube_sum for st in self.states)


def path_for(population: Population, permutation: Sequence[int]) -> PathTrajectory:
    """Trajectory of PathStates for drawing order ``permutation``.

    ``permutation`` is 1-based over item labels, so duplicates in the
    population are handled as distinct items.
    """
    perm = validate_permutation(permutation, population.n)
    states = [PathState.initial(population)]
    for idx in perm:
        states.append(states[-1].extend(population.values[idx - 1]))
    return PathTrajectory(
        population=population, permutation=perm, states=tuple(states)
    )


def iter_permutations(n: int) -> Iterator[tuple[int, ...]]:
    """All permutations of 1..n in lexicographic order."""
    if n < 1:
        raise InvalidInputError(f"need n >= 1, got {n}")
    return itertools.permutations(range(1, n + 1))


def _as_rng(rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    if isinstance(rng, int) and not isinstance(rng, bool):
        return random.Random(rng)
    raise InvalidInputError(f"rng must be a random.Random or int seed, got {rng!r}")


def random_permutation(n: int, rng) -> tuple[int, ...]:
    """One uniform permutation of 1..n from the given seed or generator."""
    if n < 1:
        raise InvalidInputError(f"need n >= 1, got {n}")
    items = list(range(1, n + 1))
    _as_rng(rng).shuffle(items)
    return tuple(items)


def random_centered_population(
    n: int,
    rng,
    max_numerator: int = 9,
    max_denominator: int = 4,
) -> Population:
    """Random centered population of small rationals, never all zero.

    The first n-1 values are independent numerator/denominator draws and
    the last is the negated sum, so the total is exactly 0 and the
    square sum is positive.
    """
    if n < 2:
        raise InvalidInputError(f"need n >= 2, got {n}")
    r = _as_rng(rng)
    while True:
        head = [
            Fraction(r.randint(-max_numerator, max_numerator),
                     r.randint(1, max_denominator))
            for _ in range(n - 1)
        ]
        vals = head + [-sum(head, Fraction(0))]
        if any(v != 0 for v in vals):
            return make_population(vals)


def parse_population_text(text: str, lenient: bool = False) -> Population:
    """Parse one value per line; '#' starts a comment, blanks ignored."""
    vals: list[Fraction] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals.append(parse_scalar(line, lenient=lenient))
        except InvalidInputError as exc:
            raise InvalidInputError(f"line {lineno}: {exc}") from None
    return make_population(vals)


def load_population(path: str, lenient: bool = False) -> Population:
    """Read a population file (one value per line)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read population file {path}: {exc}") from None
    return parse_population_text(text, lenient=lenient)


def mean_over_orderings(
    population: Population,
    statistic: Callable[[tuple[Fraction, ...]], Fraction],
    cutoff: int | None = None,
) -> Fraction:
    """Exact mean of ``statistic(ordering)`` over all n! orderings."""
    n = population.n
    ensure_enumerable(n, cutoff, "mean over orderings")
    total = sum(
        (statistic(perm) for perm in itertools.permutations(population.values)),
        Fraction(0),
    )
    return total / factorial(n)


def max_over_orderings(
    population: Population,
    statistic: Callable[[tuple[Fraction, ...]], Fraction],
    cutoff: int | None = None,
) -> Fraction:
    """Exact max of ``statistic(ordering)`` over all n! orderings."""
    ensure_enumerable(population.n, cutoff, "max over orderings")
    return max(
        statistic(perm) for perm in itertools.permutations(population.values)
    )


def mean_over_ordered_draws(
    population: Population,
    r: int,
    fn: Callable[..., Fraction],
) -> Fraction:
    """Exact mean of ``fn(x_1, ..., x_r)`` over ordered distinct draws.

    This is the distribution of the first r draws without replacement,
    enumerated directly; it is the oracle the closed-form moments are
    frozen against.
    """
    n = population.n
    if not 1 <= r <= n:
        raise InvalidInputError(f"need 1 <= r <= {n}, got {r}")
    total = sum(
        (fn(*draw) for draw in itertools.permutations(population.values, r)),
        Fraction(0),
    )
    count = 1
    for i in range(n, n - r, -1):
        count *= i
    return Fraction(total, count)


def mean_over_subsets(
    population: Population,
    m: int,
    fn: Callable[[tuple[Fraction, ...]], Fraction],
) -> Fraction:
    """Exact mean of ``fn(subset)`` over all size-m draws, order ignored.

    Valid as an oracle only for statistics symmetric in the first m
    draws; each of the C(n, m) label subsets is equally likely.
    """
    n = population.n
    if not 0 <= m <= n:
        raise InvalidInputError(f"need 0 <= m <= {n}, got {m}")
    total = Fraction(0)
    count = 0
    for subset in itertools.combinations(population.values, m):
        total += fn(subset)
        count += 1
    return total / count
