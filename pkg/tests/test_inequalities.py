import itertools
import math
import random
from fractions import Fraction

import pytest

from permartingale import (
    DomainError,
    EnumerationLimitError,
    HARDY_EXACT_LIMIT,
    InequalityId,
    InvalidInputError,
    PreconditionError,
    VerifyMode,
    alternating_weights,
    folding_constant,
    iter_permutations,
    lhs_statistic,
    make_bridge_population,
    make_population,
    mean_over_orderings,
    random_centered_population,
    rhs_value,
    verify,
    vna,
)

FOUR = make_population([1, -1, 2, -2])

MEAN_IDS = (
    InequalityId.MAX_AVERAGES,
    InequalityId.GARSIA_UNWEIGHTED,
    InequalityId.QUADRATIC,
    InequalityId.ALTERNATING,
    InequalityId.VNA_WEIGHTED,
    InequalityId.GARSIA_WEIGHTED,
)


def weights_for(iid, n, rng):
    if iid in (InequalityId.VNA_WEIGHTED, InequalityId.GARSIA_WEIGHTED):
        while True:
            ws = [Fraction(rng.randint(-3, 3)) for _ in range(n)]
            if any(ws):
                return ws
    return None


def test_exact_engine_agrees_with_reference_statistic():
    rng = random.Random(500)
    for n in (2, 3, 4, 5):
        pop = random_centered_population(n, rng)
        for iid in MEAN_IDS:
            ws = weights_for(iid, n, rng)
            report = verify(iid, population=pop, weights=ws)
            total = sum(
                (
                    lhs_statistic(iid, pop, perm, weights=ws)
                    for perm in iter_permutations(n)
                ),
                Fraction(0),
            )
            assert report.lhs == total / math.factorial(n), (iid, n)
            assert report.rhs == rhs_value(iid, pop, weights=ws)
            assert report.holds and report.status == "holds"


def test_exact_engine_agrees_on_bridges():
    for m in (1, 2, 3):
        report = verify(InequalityId.BRIDGE, bridge_m=m)
        pop = make_bridge_population(m)
        total = sum(
            (
                lhs_statistic(InequalityId.BRIDGE, pop, perm)
                for perm in iter_permutations(2 * m)
            ),
            Fraction(0),
        )
        assert report.lhs == total / math.factorial(2 * m)
        assert report.rhs == 128 * m * m


def test_exact_hardy_is_the_maximum_over_orderings():
    rng = random.Random(501)
    for n in (2, 3, 4, 5):
        pop = random_centered_population(n, rng)
        report = verify(InequalityId.HARDY, population=pop)
        best = max(
            lhs_statistic(InequalityId.HARDY, pop, perm)
            for perm in iter_permutations(n)
        )
        assert report.lhs == best
        assert report.rhs == 4 * pop.square_sum
        assert report.holds


def test_pinned_examples():
    pair = make_population([1, -1])
    r = verify(InequalityId.MAX_AVERAGES, population=pair)
    assert (r.lhs, r.rhs) == (1, 4)
    r = verify(InequalityId.GARSIA_UNWEIGHTED, population=pair)
    assert (r.lhs, r.rhs) == (1, Fraction(82, 5))
    r = verify(InequalityId.BRIDGE, bridge_m=2)
    assert (r.lhs, r.rhs) == (Fraction(32, 9), 512)
    assert verify(InequalityId.MAX_AVERAGES, population=FOUR).lhs == Fraction(
        65, 24
    )


def test_per_permutation_statistic_examples():
    pair = make_population([1, -1])
    assert lhs_statistic(InequalityId.MAX_AVERAGES, pair, (1, 2)) == 1
    assert lhs_statistic(InequalityId.ALTERNATING, pair, (1, 2)) == 4
    # bridge m=2: only the middle index contributes when S_2 = 2
    stat = lhs_statistic(InequalityId.BRIDGE, None, (1, 2, 3, 4), bridge_m=2)
    assert stat == Fraction(64, 9)
    # hardy sums every k instead of maximizing
    assert lhs_statistic(InequalityId.HARDY, pair, (1, 2)) == 1


def test_rhs_formulas():
    n, b, q = FOUR.n, FOUR.square_sum, FOUR.fourth_sum
    assert rhs_value(InequalityId.MAX_AVERAGES, FOUR) == 4 * b / n
    assert rhs_value(InequalityId.GARSIA_UNWEIGHTED, FOUR) == Fraction(41, 5) * b
    assert rhs_value(InequalityId.QUADRATIC, FOUR) == 4 * (b * b - q) / (
        (n - 1) ** 2
    )
    assert rhs_value(InequalityId.BRIDGE, None, bridge_m=3) == 128 * 9
    assert rhs_value(InequalityId.ALTERNATING, FOUR) == Fraction(305, 17) * b
    assert rhs_value(InequalityId.HARDY, FOUR) == 4 * b
    ws = [1, 0, 0, 0]
    v = vna(ws)
    assert rhs_value(
        InequalityId.VNA_WEIGHTED, FOUR, weights=ws
    ) == Fraction(16, n - 1) * (1 + 2 * v) * 1 * b
    assert rhs_value(
        InequalityId.GARSIA_WEIGHTED, FOUR, weights=ws
    ) == Fraction(16404, 205) * 1 * b / (n - 1)


def test_reversal_identity_of_compensated_maxima():
    rng = random.Random(502)
    for n in range(2, 8):
        pop = random_centered_population(n, rng)

        def emax(denom):
            def stat(xs):
                s = Fraction(0)
                best = None
                for k, x in enumerate(xs[: n - 1], 1):
                    s += x
                    v = (s / denom(k)) ** 2
                    if best is None or v > best:
                        best = v
                return best

            return mean_over_orderings(pop, stat)

        assert emax(lambda k: n - k) == emax(lambda k: k), n


def test_reversal_identity_with_integer_values_n8():
    values = [1, -1, 2, -2, 3, -3, 4, -4]
    n = len(values)
    total_fwd = 0
    total_rev = 0
    # scale S_k/(n-k) and S_k/k by lcm(1..7) to compare integers
    scale = math.lcm(*range(1, n))
    for perm in itertools.permutations(values):
        s = 0
        best_fwd = best_rev = 0
        for k in range(1, n):
            s += perm[k - 1]
            fwd = (s * (scale // (n - k))) ** 2
            rev = (s * (scale // k)) ** 2
            best_fwd = max(best_fwd, fwd)
            best_rev = max(best_rev, rev)
        total_fwd += best_fwd
        total_rev += best_rev
    assert total_fwd == total_rev


def test_crude_folding_bound_is_sound():
    rng = random.Random(503)
    for n in range(2, 8):
        values = [rng.randint(-5, 5) for _ in range(n - 1)]
        values.append(-sum(values))
        if not any(values):
            values[0] = 1
            values[-1] = -1
        whole_total = 0
        split_totals = [0] * (n - 1)
        for perm in itertools.permutations(values):
            s = 0
            prefix_best = []
            best = 0
            for x in perm:
                s += x
                best = max(best, s * s)
                prefix_best.append(best)
            whole_total += prefix_best[-1]
            for m in range(1, n):
                # the second half keeps the full running sum S_k, k > m
                s = sum(perm[:m])
                tail_best = 0
                for x in perm[m:]:
                    s += x
                    tail_best = max(tail_best, s * s)
                split_totals[m - 1] += prefix_best[m - 1] + tail_best
        for m in range(1, n):
            assert whole_total <= split_totals[m - 1], (n, m)


def test_alternating_constant_is_decreasing_and_crosses_at_18():
    def c(n):
        return Fraction(16 * n, n - 1) + Fraction(18, n)

    assert c(18) == Fraction(305, 17)
    prev = c(5)
    for n in range(6, 10001):
        cur = c(n)
        assert cur < prev
        prev = cur
    for n in range(2, 18):
        assert c(n) > Fraction(305, 17)
    for n in range(18, 200):
        assert c(n) <= Fraction(305, 17)


def test_cauchy_pathwise_bounds():
    rng = random.Random(504)
    for n in (2, 4, 6):
        pop = random_centered_population(n, rng)
        b = pop.square_sum
        ws = weights_for(InequalityId.GARSIA_WEIGHTED, n, rng)
        a2 = sum(w * w for w in ws)
        for perm in iter_permutations(n):
            stat = lhs_statistic(InequalityId.GARSIA_UNWEIGHTED, pop, perm)
            assert stat <= n * b
            stat = lhs_statistic(
                InequalityId.GARSIA_WEIGHTED, pop, perm, weights=ws
            )
            assert stat <= a2 * b


def test_vna_values():
    assert vna(alternating_weights(6)) == Fraction(1, 6)
    assert vna([1] * 5) == Fraction(16, 5)
    assert vna([1, -1]) == Fraction(1, 2)
    with pytest.raises(DomainError):
        vna([0, 0, 0])
    with pytest.raises(InvalidInputError):
        vna([])


def test_folding_constants():
    assert folding_constant(InequalityId.GARSIA_UNWEIGHTED, 9, 4) == Fraction(
        41, 5
    )
    assert folding_constant(InequalityId.ALTERNATING, 18) == Fraction(305, 17)
    assert folding_constant(
        InequalityId.GARSIA_WEIGHTED, 81, 40
    ) == 80 + Fraction(4, 205)
    for n in (4, 10, 50):
        assert folding_constant(InequalityId.GARSIA_WEIGHTED, n, n // 2) == 80
    with pytest.raises(InvalidInputError):
        folding_constant(InequalityId.ALTERNATING, 18, 9)
    with pytest.raises(DomainError):
        folding_constant(InequalityId.GARSIA_UNWEIGHTED, 9, 9)
    with pytest.raises(DomainError):
        folding_constant(InequalityId.GARSIA_UNWEIGHTED, 9, 0)
    with pytest.raises(InvalidInputError):
        folding_constant(InequalityId.MAX_AVERAGES, 9, 4)


def test_verify_parameter_validation():
    with pytest.raises(InvalidInputError):
        verify(InequalityId.MAX_AVERAGES, population=FOUR, samples=100)
    with pytest.raises(InvalidInputError):
        verify(InequalityId.MAX_AVERAGES, population=FOUR, seed=1)
    with pytest.raises(InvalidInputError):
        verify(
            InequalityId.MAX_AVERAGES,
            population=FOUR,
            mode=VerifyMode.MONTE_CARLO,
            samples=100,
        )
    with pytest.raises(InvalidInputError):
        verify(
            InequalityId.MAX_AVERAGES,
            population=FOUR,
            mode="mc",
            samples=0,
            seed=1,
        )
    with pytest.raises(InvalidInputError):
        verify(
            InequalityId.MAX_AVERAGES,
            population=FOUR,
            mode="mc",
            samples=100,
            seed=-1,
        )
    with pytest.raises(InvalidInputError):
        verify(InequalityId.MAX_AVERAGES, population=FOUR, weights=[1] * 4)
    with pytest.raises(InvalidInputError):
        verify(InequalityId.VNA_WEIGHTED, population=FOUR)
    with pytest.raises(InvalidInputError):
        verify(InequalityId.VNA_WEIGHTED, population=FOUR, weights=[1, 2])
    with pytest.raises(InvalidInputError):
        verify(InequalityId.MAX_AVERAGES, population=FOUR, bridge_m=2)
    with pytest.raises(InvalidInputError):
        verify(InequalityId.BRIDGE)
    with pytest.raises(PreconditionError):
        verify(InequalityId.BRIDGE, population=FOUR)
    with pytest.raises(InvalidInputError):
        verify(
            InequalityId.BRIDGE,
            population=make_bridge_population(2),
            bridge_m=3,
        )
    with pytest.raises(PreconditionError):
        verify(
            InequalityId.MAX_AVERAGES, population=make_population([1, 2, 3])
        )
    with pytest.raises(InvalidInputError):
        verify("not_an_id", population=FOUR)


def test_bridge_accepts_matching_population_and_m():
    report = verify(
        InequalityId.BRIDGE, population=make_bridge_population(2), bridge_m=2
    )
    assert report.lhs == Fraction(32, 9)


def test_exact_mode_respects_enumeration_cutoff():
    big = make_population([1, -1] * 6)
    with pytest.raises(EnumerationLimitError):
        verify(InequalityId.GARSIA_UNWEIGHTED, population=big)


def test_hardy_exact_has_a_hard_limit():
    assert HARDY_EXACT_LIMIT == 10
    big = make_population([1, -1] * 6)
    with pytest.raises(EnumerationLimitError, match="[Hh]ardy|maximum"):
        verify(InequalityId.HARDY, population=big, cutoff=12)


def test_mc_reports_are_deterministic_and_consistent():
    pop = make_population([1, -1, 2, -2, 3, -3])
    a = verify(
        InequalityId.GARSIA_UNWEIGHTED,
        population=pop,
        mode=VerifyMode.MONTE_CARLO,
        samples=50_000,
        seed=11,
    )
    b = verify(
        InequalityId.GARSIA_UNWEIGHTED,
        population=pop,
        mode="mc",
        samples=50_000,
        seed=11,
    )
    assert a.lhs == b.lhs and a.stderr == b.stderr
    assert a.status == "consistent" and a.holds
    assert a.samples == 50_000 and a.seed == 11
    assert a.stderr > 0
    exact = verify(InequalityId.GARSIA_UNWEIGHTED, population=pop)
    assert abs(a.lhs - float(exact.lhs)) <= 5 * a.stderr
    c = verify(
        InequalityId.GARSIA_UNWEIGHTED,
        population=pop,
        mode="mc",
        samples=50_000,
        seed=12,
    )
    assert c.lhs != a.lhs


def test_mc_multi_block_runs_are_deterministic():
    # more samples than one block, with a partial final block
    from permartingale.inequalities import MC_BLOCK_SIZE

    pop = make_population([1, -1, 2, -2])
    n_samples = MC_BLOCK_SIZE + 500
    a = verify(
        InequalityId.MAX_AVERAGES,
        population=pop,
        mode="mc",
        samples=n_samples,
        seed=3,
    )
    b = verify(
        InequalityId.MAX_AVERAGES,
        population=pop,
        mode="mc",
        samples=n_samples,
        seed=3,
    )
    assert (a.lhs, a.stderr) == (b.lhs, b.stderr)
    assert a.samples == n_samples


def test_mc_hardy_reports_a_sampled_maximum():
    pop = make_population([1, -1, 2, -2, 3, -3])
    report = verify(
        InequalityId.HARDY,
        population=pop,
        mode="mc",
        samples=20_000,
        seed=5,
    )
    assert report.stderr is None
    assert report.status == "consistent"
    exact = verify(InequalityId.HARDY, population=pop)
    assert report.lhs <= float(exact.lhs) + 1e-9


def test_report_serialization_shapes():
    exact = verify(InequalityId.BRIDGE, bridge_m=2).to_dict()
    assert exact["lhs"] == "32/9"
    assert exact["rhs"] == "512"
    assert exact["mode"] == "exact"
    assert exact["stderr"] is None
    assert exact["params"] == {"weights": None, "bridge_m": 2}
    mc = verify(
        InequalityId.VNA_WEIGHTED,
        population=FOUR,
        weights=[1, -1, 1, -1],
        mode="mc",
        samples=1000,
        seed=2,
    ).to_dict()
    assert isinstance(mc["lhs"], float)
    assert mc["params"]["weights"] == ["1", "-1", "1", "-1"]
    assert set(exact) == {
        "id",
        "mode",
        "n",
        "lhs",
        "rhs",
        "holds",
        "status",
        "stderr",
        "samples",
        "seed",
        "params",
    }


def test_exact_holds_on_many_random_populations():
    rng = random.Random(505)
    for _ in range(15):
        n = rng.randint(2, 6)
        pop = random_centered_population(n, rng)
        for iid in MEAN_IDS + (InequalityId.HARDY,):
            ws = weights_for(iid, n, rng)
            assert verify(iid, population=pop, weights=ws).holds, (iid, n)
