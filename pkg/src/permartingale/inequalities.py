"""Permutation maximal inequalities: exact and Monte Carlo verification.

Each inequality id binds a per-permutation path statistic and an exact
right-hand side built from the population's power sums B = sum x_i^2
and Q = sum x_i^4.  For all ids except ``hardy`` the left-hand side is
the expectation of the statistic over all n! equally likely orderings;
for ``hardy`` it is the maximum over orderings.  With S_k the running
sum, T_k the running square sum, W_k = sum_{i<=k} a_i x_{sigma(i)}, and
alpha_2(n) = sum a_i^2:

  max_averages       E max_{1<=k<=n} (S_k/k)^2    <= 4 B / n
  garsia_unweighted  E max_{1<=k<=n} S_k^2        <= (41/5) B
  quadratic          E max_{2<=k<=n} ((S_k^2 - ((n-k)/(n-1)) T_k)
                         / (k(k-1)))^2            <= 4 (B^2 - Q)/(n-1)^2
  bridge             E max_{1<=k<=2m-1} (S_k^2 - k(2m-k)/(2m-1))^2
                                                  <= 128 m^2
  alternating        weights (-1)^i:
                     E max_k W_k^2                <= (305/17) B
  vna_weighted       E max_k W_k^2  <= (16/(n-1)) (1 + 2 V(a)) alpha_2(n) B
  garsia_weighted    E max_k W_k^2  <= (16404/205) alpha_2(n) B / (n-1)
  hardy              max_sigma sum_k (S_k/k)^2    <= 4 B

All ids require a centered population; ``bridge`` requires the ±1
bridge population of m ones and m minus-ones.

Exact mode enumerates every ordering with integer-only kernels (values
scaled by their common denominator; maxima compared by
cross-multiplication) and is bit-for-bit an expectation, not an
estimate.  Monte Carlo mode samples uniformly random orderings in
floating point with a block-seeded generator, so results are
reproducible bit-for-bit for a fixed seed and sample count.  A Monte
Carlo run can never prove an inequality: its verdict is "consistent",
"inconclusive", or "violation-suspected".
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import permutations
from math import factorial, lcm, sqrt
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainError,
    EnumerationLimitError,
    InvalidInputError,
    PreconditionError,
    coerce_enum,
)
from .population import (
    Population,
    bridge_parameter,
    ensure_enumerable,
    make_bridge_population,
    validate_permutation,
)
from .rationals import format_rational, fraction_sequence, scaled_integers
from .weights import (
    alternating_weights,
    validate_weights,
    weight_prefix_sum,
    weight_square_sum,
)

MC_BLOCK_SIZE = 1 << 16
HARDY_EXACT_LIMIT = 10


class InequalityId(str, Enum):
    MAX_AVERAGES = "max_averages"
    GARSIA_UNWEIGHTED = "garsia_unweighted"
    QUADRATIC = "quadratic"
    BRIDGE = "bridge"
    ALTERNATING = "alternating"
    VNA_WEIGHTED = "vna_weighted"
    GARSIA_WEIGHTED = "garsia_weighted"
    HARDY = "hardy"


class VerifyMode(str, Enum):
    EXACT = "exact"
    MONTE_CARLO = "mc"


_NEEDS_WEIGHTS = frozenset(
    {InequalityId.VNA_WEIGHTED, InequalityId.GARSIA_WEIGHTED}
)
_WEIGHTED_STATISTIC = _NEEDS_WEIGHTS | {InequalityId.ALTERNATING}


def _resolve(
    id,
    population: Population | None,
    weights: Sequence | None,
    bridge_m: int | None,
) -> tuple[InequalityId, Population, tuple[Fraction, ...] | None, int | None]:
    """Validate the (id, population, weights, bridge_m) combination.

    Returns the effective weights (the fixed alternating signs for
    ``alternating``) and the bridge parameter m for ``bridge``.
    """
    iid = coerce_enum(InequalityId, id, "inequality id")
    if iid is InequalityId.BRIDGE:
        if weights is not None:
            raise InvalidInputError("the bridge inequality takes no weights")
        if population is None:
            if bridge_m is None:
                raise InvalidInputError(
                    "the bridge inequality needs a population or bridge_m"
                )
            population = make_bridge_population(bridge_m)
        m = bridge_parameter(population)
        if m is None:
            raise PreconditionError(
                "the bridge inequality needs the ±1 bridge population "
                "(m ones and m minus-ones)"
            )
        if bridge_m is not None and bridge_m != m:
            raise InvalidInputError(
                f"bridge_m={bridge_m} does not match the population (m={m})"
            )
        return iid, population, None, m
    if bridge_m is not None:
        raise InvalidInputError(
            f"bridge_m only applies to the bridge inequality, not {iid.value!r}"
        )
    if population is None:
        raise InvalidInputError("a population is required")
    population.require_centered(f"the {iid.value} inequality")
    if iid in _NEEDS_WEIGHTS:
        if weights is None:
            raise InvalidInputError(f"the {iid.value} inequality needs weights")
        return iid, population, validate_weights(weights, population.n), None
    if weights is not None:
        detail = (
            "; its signs (-1)^i are fixed"
            if iid is InequalityId.ALTERNATING
            else ""
        )
        raise InvalidInputError(
            f"the {iid.value} inequality takes no weights{detail}"
        )
    if iid is InequalityId.ALTERNATING:
        return iid, population, alternating_weights(population.n), None
    return iid, population, None, None


def lhs_statistic(
    id,
    population: Population | None,
    permutation: Sequence[int],
    weights: Sequence | None = None,
    bridge_m: int | None = None,
) -> Fraction:
    """Exact per-permutation path statistic, the reference route.

    This straightforward rational evaluation is kept independent of the
    integer enumeration kernels so each can check the other.
    """
    iid, pop, ws, m = _resolve(id, population, weights, bridge_m)
    n = pop.n
    perm = validate_permutation(permutation, n)
    xs = [pop.values[i - 1] for i in perm]
    if iid is InequalityId.HARDY:
        s = Fraction(0)
        total = Fraction(0)
        for k, x in enumerate(xs, 1):
            s += x
            total += (s / k) ** 2
        return total
    if iid in _WEIGHTED_STATISTIC:
        w = Fraction(0)
        best = None
        for a, x in zip(ws, xs):
            w += a * x
            v = w * w
            if best is None or v > best:
                best = v
        return best
    if iid is InequalityId.MAX_AVERAGES:
        s = Fraction(0)
        best = None
        for k, x in enumerate(xs, 1):
            s += x
            v = (s / k) ** 2
            if best is None or v > best:
                best = v
        return best
    if iid is InequalityId.GARSIA_UNWEIGHTED:
        s = Fraction(0)
        best = None
        for x in xs:
            s += x
            v = s * s
            if best is None or v > best:
                best = v
        return best
    if iid is InequalityId.QUADRATIC:
        s = Fraction(0)
        t = Fraction(0)
        best = None
        for k, x in enumerate(xs, 1):
            s += x
            t += x * x
            if k < 2:
                continue
            v = ((s * s - Fraction(n - k, n - 1) * t) / Fraction(k * (k - 1))) ** 2
            if best is None or v > best:
                best = v
        return best
    # bridge
    s = Fraction(0)
    best = None
    for k, x in enumerate(xs[: 2 * m - 1], 1):
        s += x
        v = (s * s - Fraction(k * (2 * m - k), 2 * m - 1)) ** 2
        if best is None or v > best:
            best = v
    return best


def vna(weights: Sequence) -> Fraction:
    """Cancelation measure of a weight sequence:
    max_{1<=k<=n-1} alpha_1(k)^2 / alpha_2(n).

    Small when prefix sums of the weights stay near zero (alternating
    signs give 1/n), large when they accumulate (all-ones gives
    (n-1)^2/n).
    """
    ws = fraction_sequence(tuple(weights))
    n = len(ws)
    if n < 2:
        raise InvalidInputError("need at least two weights")
    a2 = weight_square_sum(ws, n)
    if a2 == 0:
        raise DomainError("the cancelation measure needs a nonzero weight")
    best = max(weight_prefix_sum(ws, k) ** 2 for k in range(1, n))
    return best / a2


def rhs_value(
    id,
    population: Population | None = None,
    weights: Sequence | None = None,
    bridge_m: int | None = None,
) -> Fraction:
    """Exact right-hand side for an inequality id."""
    iid, pop, ws, m = _resolve(id, population, weights, bridge_m)
    n = pop.n
    b = pop.square_sum
    if iid is InequalityId.MAX_AVERAGES:
        return Fraction(4, n) * b
    if iid is InequalityId.GARSIA_UNWEIGHTED:
        return Fraction(41, 5) * b
    if iid is InequalityId.QUADRATIC:
        return Fraction(4, (n - 1) ** 2) * (b * b - pop.fourth_sum)
    if iid is InequalityId.BRIDGE:
        return Fraction(128 * m * m)
    if iid is InequalityId.ALTERNATING:
        return Fraction(305, 17) * b
    if iid is InequalityId.VNA_WEIGHTED:
        a2 = weight_square_sum(ws, n)
        if a2 == 0:
            raise DomainError(
                "the vna_weighted bound needs a nonzero weight"
            )
        return Fraction(16, n - 1) * (1 + 2 * vna(ws)) * a2 * b
    if iid is InequalityId.GARSIA_WEIGHTED:
        return Fraction(16404, 205) * weight_square_sum(ws, n) * b / (n - 1)
    return 4 * b  # hardy


def folding_constant(id, n: int, m: int | None = None) -> Fraction:
    """The named constant function on the id's folding path.

    ``garsia_unweighted``: 4 (m/(n-m) + (n-m)/m); minimized near the
    even split, worst over the relevant range at (n, m) = (9, 4) where
    it equals 41/5.

    ``alternating``: 16 n/(n-1) + 18/n, a function of n alone; equals
    305/17 at n = 18.

    ``garsia_weighted``: 16 (2 + m/(n-m) + (n-m)/m + m^2/(n(n-m))
    + (n-m)^2/(n m)); exactly 80 at every even split, 80 + 4/205 at
    (n, m) = (81, 40).
    """
    iid = coerce_enum(InequalityId, id, "inequality id")
    if iid is InequalityId.ALTERNATING:
        if m is not None:
            raise InvalidInputError(
                "the alternating constant depends only on n"
            )
        if n < 2:
            raise DomainError(f"need n >= 2, got {n}")
        return Fraction(16 * n, n - 1) + Fraction(18, n)
    if iid not in (InequalityId.GARSIA_UNWEIGHTED, InequalityId.GARSIA_WEIGHTED):
        raise InvalidInputError(
            f"no folding-constant path for id {iid.value!r}"
        )
    if m is None:
        raise InvalidInputError(f"the {iid.value} constant needs m")
    if not 1 <= m < n:
        raise DomainError(f"need 1 <= m < n, got m={m}, n={n}")
    if iid is InequalityId.GARSIA_UNWEIGHTED:
        return 4 * (Fraction(m, n - m) + Fraction(n - m, m))
    return 16 * (
        2
        + Fraction(m, n - m)
        + Fraction(n - m, m)
        + Fraction(m * m, n * (n - m))
        + Fraction((n - m) ** 2, n * m)
    )


@dataclass(frozen=True)
class InequalityReport:
    """Verification outcome for one (id, population, mode) triple.

    In exact mode ``lhs`` is the true expectation (maximum for
    ``hardy``) over all n! orderings and ``status`` is "holds" or
    "fails".  In Monte Carlo mode ``lhs`` is a float estimate with
    ``stderr`` and ``samples``; ``status`` is "consistent" when
    estimate + 4 stderr <= rhs, "violation-suspected" when estimate -
    4 stderr > rhs, otherwise "inconclusive", and ``holds`` is True
    only for "consistent".  For ``hardy`` in Monte Carlo mode the
    estimate is the sampled maximum (a lower bound on the true one) and
    ``stderr`` is None.
    """

    id: InequalityId
    mode: VerifyMode
    n: int
    lhs: Fraction | float
    rhs: Fraction
    holds: bool
    status: str
    stderr: float | None = None
    samples: int | None = None
    seed: int | None = None
    weights: tuple[Fraction, ...] | None = None
    bridge_m: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id.value,
            "mode": self.mode.value,
            "n": self.n,
            "lhs": (
                format_rational(self.lhs)
                if isinstance(self.lhs, Fraction)
                else self.lhs
            ),
            "rhs": format_rational(self.rhs),
            "holds": self.holds,
            "status": self.status,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "params": {
                "weights": (
                    None
                    if self.weights is None
                    else [format_rational(w) for w in self.weights]
                ),
                "bridge_m": self.bridge_m,
            },
        }


def _exact_lhs(
    iid: InequalityId,
    pop: Population,
    ws: tuple[Fraction, ...] | None,
    m: int | None,
    cutoff: int | None,
) -> Fraction:
    """Exact LHS by full enumeration with integer kernels.

    Values are scaled to integers by their common denominator d (and
    weights by e); statistics become integer numerators over per-k
    constant denominators, maxima are taken by cross-multiplication,
    and the scale is divided out once at the end.
    """
    n = pop.n
    ensure_enumerable(n, cutoff, f"exact verification of {iid.value!r}")
    if iid is InequalityId.HARDY and n > HARDY_EXACT_LIMIT:
        raise EnumerationLimitError(
            f"exact maximization for 'hardy' is provided for "
            f"n <= {HARDY_EXACT_LIMIT} only; use Monte Carlo mode or the "
            f"per-permutation statistic"
        )
    xs, d = scaled_integers(pop.values)
    count = factorial(n)

    if iid is InequalityId.MAX_AVERAGES:
        k2 = [k * k for k in range(n + 1)]
        acc: dict[int, int] = {}
        for perm in permutations(xs):
            s = 0
            k = 0
            bn = -1
            bd = 1
            for x in perm:
                k += 1
                s += x
                n2 = s * s
                d2 = k2[k]
                if n2 * bd > bn * d2:
                    bn = n2
                    bd = d2
            acc[bd] = acc.get(bd, 0) + bn
        total = sum((Fraction(v, dk) for dk, v in acc.items()), Fraction(0))
        return total / (count * d * d)

    if iid is InequalityId.GARSIA_UNWEIGHTED:
        total_int = 0
        for perm in permutations(xs):
            s = 0
            best = 0
            for x in perm:
                s += x
                n2 = s * s
                if n2 > best:
                    best = n2
            total_int += best
        return Fraction(total_int, count * d * d)

    if iid is InequalityId.QUADRATIC:
        c1 = n - 1
        dens = [0, 0] + [(c1 * k * (k - 1)) ** 2 for k in range(2, n + 1)]
        acc = {}
        for perm in permutations(xs):
            s = 0
            t = 0
            k = 0
            bn = -1
            bd = 1
            for x in perm:
                k += 1
                s += x
                t += x * x
                if k < 2:
                    continue
                u = c1 * s * s - (n - k) * t
                n2 = u * u
                d2 = dens[k]
                if n2 * bd > bn * d2:
                    bn = n2
                    bd = d2
            acc[bd] = acc.get(bd, 0) + bn
        total = sum((Fraction(v, dk) for dk, v in acc.items()), Fraction(0))
        return total / (count * d**4)

    if iid is InequalityId.BRIDGE:
        two_m = 2 * m
        dd = d * d
        comp = [k * (two_m - k) * dd for k in range(two_m)]
        last = two_m - 1
        total_int = 0
        for perm in permutations(xs):
            s = 0
            best = -1
            for k in range(1, last + 1):
                s += perm[k - 1]
                u = (two_m - 1) * s * s - comp[k]
                n2 = u * u
                if n2 > best:
                    best = n2
            total_int += best
        return Fraction(total_int, count * ((two_m - 1) * dd) ** 2)

    if iid in _WEIGHTED_STATISTIC:
        wsc, e = scaled_integers(ws)
        total_int = 0
        for perm in permutations(xs):
            w = 0
            best = 0
            for a, x in zip(wsc, perm):
                w += a * x
                n2 = w * w
                if n2 > best:
                    best = n2
            total_int += best
        return Fraction(total_int, count * (d * e) ** 2)

    # hardy: max over orderings of sum_k (S_k/k)^2
    big = lcm(*range(1, n + 1))
    mult = [0] + [(big // k) ** 2 for k in range(1, n + 1)]
    best_total = -1
    for perm in permutations(xs):
        s = 0
        tot = 0
        k = 0
        for x in perm:
            k += 1
            s += x
            tot += s * s * mult[k]
        if tot > best_total:
            best_total = tot
    return Fraction(best_total, (big * d) ** 2)


def _float_statistic(
    iid: InequalityId,
    n: int,
    ws: tuple[Fraction, ...] | None,
    m: int | None,
) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized float statistic over a (block, n) matrix of orderings."""
    ks = np.arange(1, n + 1, dtype=np.float64)
    if iid in (InequalityId.MAX_AVERAGES, InequalityId.HARDY):
        if iid is InequalityId.MAX_AVERAGES:
            return lambda X: ((np.cumsum(X, axis=1) / ks) ** 2).max(axis=1)
        return lambda X: ((np.cumsum(X, axis=1) / ks) ** 2).sum(axis=1)
    if iid is InequalityId.GARSIA_UNWEIGHTED:
        return lambda X: (np.cumsum(X, axis=1) ** 2).max(axis=1)
    if iid is InequalityId.QUADRATIC:
        coef = (n - ks) / (n - 1)
        den = ks * (ks - 1)

        def stat(X: np.ndarray) -> np.ndarray:
            s = np.cumsum(X, axis=1)
            t = np.cumsum(X * X, axis=1)
            vals = (s[:, 1:] ** 2 - coef[1:] * t[:, 1:]) / den[1:]
            return (vals**2).max(axis=1)

        return stat
    if iid is InequalityId.BRIDGE:
        last = 2 * m - 1
        comp = ks[:last] * (2 * m - ks[:last]) / (2 * m - 1)

        def stat(X: np.ndarray) -> np.ndarray:
            s = np.cumsum(X[:, :last], axis=1)
            return ((s * s - comp) ** 2).max(axis=1)

        return stat
    a = np.array([float(w) for w in ws])
    return lambda X: (np.cumsum(X * a, axis=1) ** 2).max(axis=1)


def _mc_lhs(
    iid: InequalityId,
    pop: Population,
    ws: tuple[Fraction, ...] | None,
    m: int | None,
    samples: int,
    seed: int,
) -> tuple[float, float | None]:
    """Monte Carlo estimate of the LHS over uniform random orderings.

    Orderings are generated in fixed-size blocks; block i uses the
    generator seeded by SeedSequence((seed, i)), and blocks are reduced
    in index order, so the result is reproducible bit-for-bit for a
    given (seed, samples) regardless of when or where it runs.
    """
    n = pop.n
    base = np.array(pop.as_floats(), dtype=np.float64)
    stat = _float_statistic(iid, n, ws, m)
    take_max = iid is InequalityId.HARDY
    done = 0
    block = 0
    total = 0.0
    total_sq = 0.0
    running_max = -np.inf
    while done < samples:
        b = min(MC_BLOCK_SIZE, samples - done)
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=(seed, block)))
        )
        x = rng.permuted(np.tile(base, (b, 1)), axis=1)
        v = stat(x)
        if take_max:
            running_max = max(running_max, float(v.max()))
        else:
            total += float(v.sum())
            total_sq += float((v * v).sum())
        done += b
        block += 1
    if take_max:
        return running_max, None
    mean = total / samples
    if samples < 2:
        return mean, None
    var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return mean, sqrt(var / samples)


def verify(
    id,
    population: Population | None = None,
    weights: Sequence | None = None,
    bridge_m: int | None = None,
    mode: VerifyMode | str = VerifyMode.EXACT,
    samples: int | None = None,
    seed: int | None = None,
    cutoff: int | None = None,
) -> InequalityReport:
    """Check one inequality and return an :class:`InequalityReport`.

    Exact mode enumerates all n! orderings (subject to the cutoff) and
    decides lhs <= rhs exactly.  Monte Carlo mode needs ``samples`` and
    ``seed`` and reports a verdict that is never stronger than
    "consistent".
    """
    iid, pop, ws, m = _resolve(id, population, weights, bridge_m)
    mode = coerce_enum(VerifyMode, mode, "verification mode")
    rhs = rhs_value(iid, pop, weights=weights, bridge_m=bridge_m)
    if mode is VerifyMode.EXACT:
        if samples is not None or seed is not None:
            raise InvalidInputError("samples and seed only apply to Monte Carlo mode")
        lhs = _exact_lhs(iid, pop, ws, m, cutoff)
        holds = lhs <= rhs
        return InequalityReport(
            id=iid,
            mode=mode,
            n=pop.n,
            lhs=lhs,
            rhs=rhs,
            holds=holds,
            status="holds" if holds else "fails",
            weights=ws if iid in _NEEDS_WEIGHTS else None,
            bridge_m=m,
        )
    if samples is None or seed is None:
        raise InvalidInputError("Monte Carlo mode needs samples and seed")
    if not isinstance(samples, int) or isinstance(samples, bool) or samples < 1:
        raise InvalidInputError(f"samples must be a positive int, got {samples!r}")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise InvalidInputError(f"seed must be a nonnegative int, got {seed!r}")
    estimate, stderr = _mc_lhs(iid, pop, ws, m, samples, seed)
    rhs_f = float(rhs)
    if iid is InequalityId.HARDY:
        # sampled maximum: only a violation can ever be concluded
        suspected = estimate > rhs_f
        status = "violation-suspected" if suspected else "consistent"
        holds = not suspected
    elif stderr is not None and estimate + 4 * stderr <= rhs_f:
        status = "consistent"
        holds = True
    elif stderr is not None and estimate - 4 * stderr > rhs_f:
        status = "violation-suspected"
        holds = False
    else:
        status = "inconclusive"
        holds = False
    return InequalityReport(
        id=iid,
        mode=mode,
        n=pop.n,
        lhs=estimate,
        rhs=rhs,
        holds=holds,
        status=status,
        stderr=stderr,
        samples=samples,
        seed=seed,
        weights=ws if iid in _NEEDS_WEIGHTS else None,
        bridge_m=m,
    )
