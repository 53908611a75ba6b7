import random
from fractions import Fraction

import pytest

from permartingale import (
    Basis,
    DomainError,
    InvalidInputError,
    build_transition_system,
    identity_matrix,
    make_population,
    matrix_as_strings,
    matrix_inverse,
    matrix_multiply,
    matrix_vector,
    product_of_inverses,
    quadratic_inverse_product,
    quadratic_transition,
    state_for_prefix,
    vector_martingale_value,
    weighted_inverse_product,
    weighted_transition,
)


def frac_matrix(rows):
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def test_matrix_helpers():
    a = frac_matrix([[1, 2], [3, 4]])
    i2 = identity_matrix(2)
    assert matrix_multiply(a, i2) == a
    assert matrix_multiply(i2, a) == a
    assert matrix_vector(a, (Fraction(1), Fraction(-1))) == (-1, -1)
    inv = matrix_inverse(a)
    assert matrix_multiply(a, inv) == i2
    assert matrix_multiply(inv, a) == i2


def test_matrix_inverse_rejects_singular():
    singular = frac_matrix([[1, 2], [2, 4]])
    with pytest.raises(DomainError, match="singular"):
        matrix_inverse(singular)


def test_product_of_inverses_order():
    a = frac_matrix([[2, 1], [0, 1]])
    b = frac_matrix([[1, 3], [0, 2]])
    # inv(a) inv(b) = inv(b a)
    assert product_of_inverses([a, b]) == matrix_inverse(matrix_multiply(b, a))


def expected_next_vector(system, state):
    """Average the one-step state vectors directly over the next draws."""
    vecs = [system.state_vector(state.extend(x)) for x in state.remaining]
    total = tuple(sum(col, Fraction(0)) for col in zip(*vecs))
    return tuple(v / len(vecs) for v in total)


def test_quadratic_transition_matches_sampling():
    pop = make_population([1, -1, 2, -2, 3])
    system = build_transition_system(Basis.QUADRATIC, population=pop)
    for prefix in [(), (2,), (2, -1), (-2, 3)]:
        state = state_for_prefix(pop, prefix)
        if state.k > system.max_step_state:
            continue
        lhs = matrix_vector(
            system.step_matrix(state.k), system.state_vector(state)
        )
        assert lhs == expected_next_vector(system, state)


def test_quadratic_transition_on_uncentered_population():
    pop = make_population([1, 2, 4, 8])
    system = build_transition_system(Basis.QUADRATIC, population=pop)
    for prefix in [(), (2,)]:
        state = state_for_prefix(pop, prefix)
        lhs = matrix_vector(
            system.step_matrix(state.k), system.state_vector(state)
        )
        assert lhs == expected_next_vector(system, state)


def test_weighted_transition_matches_sampling():
    pop = make_population([1, -1, 2, -2])
    ws = [Fraction(1), Fraction(-2), Fraction(1, 3), Fraction(0)]
    system = build_transition_system(
        Basis.WEIGHTED, population=pop, multipliers=ws
    )
    for prefix in [(), (1,), (1, -2), (2, -1)]:
        state = state_for_prefix(pop, prefix)
        lhs = matrix_vector(
            system.step_matrix(state.k), system.state_vector(state)
        )
        assert lhs == expected_next_vector(system, state)


def test_transition_range_errors():
    with pytest.raises(DomainError):
        quadratic_transition(5, Fraction(0), Fraction(10), 3)
    with pytest.raises(DomainError):
        quadratic_transition(5, Fraction(0), Fraction(10), -1)
    with pytest.raises(DomainError):
        quadratic_transition(2, Fraction(0), Fraction(2), 0)
    with pytest.raises(DomainError):
        weighted_transition(4, Fraction(1), 3)
    with pytest.raises(DomainError):
        quadratic_inverse_product(5, Fraction(0), Fraction(10), 4)
    with pytest.raises(DomainError):
        weighted_inverse_product(4, [Fraction(1)] * 4, 4)


def test_closed_form_products_equal_iterative_products():
    rng = random.Random(2024)
    for n in range(3, 13):
        total = Fraction(rng.randint(-6, 6), rng.randint(1, 3))
        square = Fraction(rng.randint(1, 40), rng.randint(1, 3))
        steps = [
            quadratic_transition(n, total, square, k) for k in range(n - 2)
        ]
        for k in range(1, n - 1):
            assert quadratic_inverse_product(
                n, total, square, k
            ) == product_of_inverses(steps[:k])
        ws = [
            Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(n)
        ]
        steps = [weighted_transition(n, ws[k], k) for k in range(n - 1)]
        for k in range(1, n):
            assert weighted_inverse_product(n, ws, k) == product_of_inverses(
                steps[:k]
            )


def test_transition_system_shape_and_bounds():
    pop = make_population([1, -1, 2, -2, 3, -3])
    system = build_transition_system(Basis.QUADRATIC, population=pop)
    assert system.n == 6
    assert system.max_step_state == 3
    assert system.max_product_index == 4
    assert len(system.inverse_products) == system.max_product_index
    state = state_for_prefix(pop, (1, -1))
    assert system.state_vector(state) == (0, 0, 2, 1)
    with pytest.raises(DomainError):
        system.step_matrix(4)
    with pytest.raises(DomainError):
        system.inverse_product(0)
    with pytest.raises(DomainError):
        system.inverse_product(5)


def test_weighted_system_state_vector():
    pop = make_population([1, -1, 2, -2])
    ws = [Fraction(2), Fraction(0), Fraction(1), Fraction(1)]
    system = build_transition_system(
        Basis.WEIGHTED, population=pop, multipliers=ws
    )
    state = state_for_prefix(pop, (1, 2))
    assert system.state_vector(state) == (2, 3)
    assert system.max_product_index == 3


def test_build_transition_system_input_validation():
    pop = make_population([1, -1, 2, -2])
    with pytest.raises(InvalidInputError):
        build_transition_system(Basis.QUADRATIC)
    with pytest.raises(InvalidInputError):
        build_transition_system(Basis.QUADRATIC, population=pop, n=4)
    with pytest.raises(InvalidInputError):
        build_transition_system(
            Basis.QUADRATIC, population=pop, multipliers=[1, 1, 1, 1]
        )
    with pytest.raises(InvalidInputError):
        build_transition_system(Basis.WEIGHTED, population=pop)
    with pytest.raises(DomainError):
        build_transition_system(
            Basis.QUADRATIC, population=make_population([1, -1])
        )
    explicit = build_transition_system(
        Basis.QUADRATIC, n=5, total=Fraction(0), square_sum=Fraction(10)
    )
    assert explicit.n == 5


def test_vector_martingale_value_bounds():
    pop = make_population([1, -1, 2, -2])
    system = build_transition_system(Basis.QUADRATIC, population=pop)
    state = state_for_prefix(pop, (2, -1))
    value = vector_martingale_value(system, state)
    assert value == matrix_vector(
        system.inverse_product(2), system.state_vector(state)
    )
    with pytest.raises(DomainError):
        vector_martingale_value(system, state_for_prefix(pop, ()))
    with pytest.raises(DomainError):
        vector_martingale_value(system, state_for_prefix(pop, (1, -1, 2)))


def test_matrix_as_strings():
    assert matrix_as_strings(frac_matrix([[1, -1], [0, Fraction(1, 2)]])) == [
        ["1", "-1"],
        ["0", "1/2"],
    ]
