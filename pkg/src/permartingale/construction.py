"""Transition matrices for linearized draw recursions.

One step of sampling without replacement acts linearly, in conditional
expectation, on a well-chosen state vector.  With n items, running sum
S_k, running square sum T_k, grand total M, and grand square total B:

* quadratic basis, state (S_k^2, S_k, T_k, 1):

      E[state_{k+1} | first k draws] = A * state_k,

      A = 1/(n-k) * [ n-k-2   2M   -1      B  ]
                    [ 0     n-k-1   0      M  ]
                    [ 0       0   n-k-1    B  ]
                    [ 0       0     0     n-k ]

* weighted basis, state (W_k, S_k) with W_k = a_1 X_1 + ... + a_k X_k
  for deterministic multipliers a_i:

      A = [ 1   -a_{k+1}/(n-k) ]
          [ 0   (n-k-1)/(n-k)  ]

Indexing convention: ``quadratic_transition(n, total, square_sum, k)``
and ``weighted_transition(n, multiplier, k)`` take the index k of the
state the matrix acts on, i.e. they return the step k+1 matrix mapping
the state after k draws to the conditional expectation of the state
after k+1 draws.

Multiplying the inverses of the first k step matrices onto the state
vector yields a vector-valued martingale; the closed forms of those
inverse products are implemented here and cross-checked against the
step-by-step products.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, InvalidInputError, coerce_enum
from .population import PathState, Population
from .rationals import as_fraction, format_rational
from .weights import validate_weights, weight_prefix_sum

Matrix = tuple[tuple[Fraction, ...], ...]
Vector = tuple[Fraction, ...]


class Basis(str, Enum):
    """Which state vector a transition system linearizes."""

    QUADRATIC = "quadratic"
    WEIGHTED = "weighted"


def _as_matrix(rows: Sequence[Sequence]) -> Matrix:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def identity_matrix(size: int) -> Matrix:
    return tuple(
        tuple(Fraction(1) if i == j else Fraction(0) for j in range(size))
        for i in range(size)
    )


def matrix_multiply(a: Matrix, b: Matrix) -> Matrix:
    if len(a[0]) != len(b):
        raise InvalidInputError("matrix shapes do not compose")
    cols = range(len(b[0]))
    return tuple(
        tuple(sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
              for j in cols)
        for i in range(len(a))
    )


def matrix_vector(a: Matrix, v: Vector) -> Vector:
    if len(a[0]) != len(v):
        raise InvalidInputError("matrix and vector shapes do not match")
    return tuple(
        sum((a[i][j] * v[j] for j in range(len(v))), Fraction(0))
        for i in range(len(a))
    )


def matrix_inverse(a: Matrix) -> Matrix:
    """Exact Gauss-Jordan inverse of a square rational matrix."""
    size = len(a)
    if any(len(row) != size for row in a):
        raise InvalidInputError("matrix is not square")
    work = [list(row) + list(identity_matrix(size)[i]) for i, row in enumerate(a)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if work[r][col] != 0), None)
        if pivot is None:
            raise DomainError("matrix is singular, no inverse exists")
        work[col], work[pivot] = work[pivot], work[col]
        inv = Fraction(1) / work[col][col]
        work[col] = [x * inv for x in work[col]]
        for r in range(size):
            if r != col and work[r][col] != 0:
                factor = work[r][col]
                work[r] = [x - factor * y for x, y in zip(work[r], work[col])]
    return tuple(tuple(row[size:]) for row in work)


def product_of_inverses(matrices: Sequence[Matrix]) -> Matrix:
    """Compute inv(A_1) * inv(A_2) * ... * inv(A_k) step by step.

    This is the slow reference route the closed-form inverse products
    are verified against; it is kept deliberately independent of them.
    """
    if not matrices:
        raise InvalidInputError("need at least one matrix")
    out = matrix_inverse(matrices[0])
    for m in matrices[1:]:
        out = matrix_multiply(out, matrix_inverse(m))
    return out


def quadratic_transition(n: int, total, square_sum, k: int) -> Matrix:
    """Step matrix on the state (S_k^2, S_k, T_k, 1) after k draws.

    Valid for 0 <= k <= n-3; at k = n-2 the matrix degenerates (the
    leading entry divides n-k-2 = 0 into the inverse later).
    """
    m = as_fraction(total)
    b = as_fraction(square_sum)
    if n < 3:
        raise DomainError(f"quadratic basis needs n >= 3, got n={n}")
    if not 0 <= k <= n - 3:
        raise DomainError(
            f"step matrix after k={k} draws is outside 0..n-3 for n={n}; "
            f"after k={n - 2} draws the leading entry (n-k-2)/(n-k) vanishes "
            f"and the matrix is singular"
        )
    r = Fraction(1, n - k)
    return _as_matrix(
        [
            [(n - k - 2) * r, 2 * m * r, -r, b * r],
            [0, (n - k - 1) * r, 0, m * r],
            [0, 0, (n - k - 1) * r, b * r],
            [0, 0, 0, 1],
        ]
    )


def quadratic_inverse_product(n: int, total, square_sum, k: int) -> Matrix:
    """Closed form of inv(A_1)...inv(A_k) for the quadratic basis.

    Valid for 1 <= k <= n-2.  With M = total and B = square sum:

        1/(n-k) * [ n(n-1)/(n-k-1)  -2knM/(n-k-1)  kn/(n-k-1)  (k(k+1)M^2 - knB)/(n-k-1) ]
                  [ 0                n              0           -kM                       ]
                  [ 0                0              n           -kB                       ]
                  [ 0                0              0           n-k                       ]
    """
    m = as_fraction(total)
    b = as_fraction(square_sum)
    if n < 3:
        raise DomainError(f"quadratic basis needs n >= 3, got n={n}")
    if not 1 <= k <= n - 2:
        raise DomainError(
            f"inverse product at k={k} is outside 1..n-2 for n={n}; "
            f"k={n - 1} would divide by n-k-1 = 0"
        )
    r = Fraction(1, n - k)
    s = Fraction(1, n - k - 1)
    return _as_matrix(
        [
            [
                n * (n - 1) * s * r,
                -2 * k * n * m * s * r,
                k * n * s * r,
                (k * (k + 1) * m * m - k * n * b) * s * r,
            ],
            [0, n * r, 0, -k * m * r],
            [0, 0, n * r, -k * b * r],
            [0, 0, 0, (n - k) * r],
        ]
    )


def weighted_transition(n: int, multiplier, k: int) -> Matrix:
    """Step matrix on the state (W_k, S_k) after k draws.

    ``multiplier`` is a_{k+1}, the weight of the next draw.  Valid for
    0 <= k <= n-2; the k = n-1 step matrix is singular.
    """
    a_next = as_fraction(multiplier)
    if n < 2:
        raise DomainError(f"weighted basis needs n >= 2, got n={n}")
    if not 0 <= k <= n - 2:
        raise DomainError(
            f"step matrix after k={k} draws is outside 0..n-2 for n={n}; "
            f"the k={n - 1} step matrix is singular"
        )
    r = Fraction(1, n - k)
    return _as_matrix(
        [
            [1, -a_next * r],
            [0, (n - k - 1) * r],
        ]
    )


def weighted_inverse_product(n: int, multipliers: Sequence, k: int) -> Matrix:
    """Closed form of inv(A_1)...inv(A_k) for the weighted basis.

    Valid for 1 <= k <= n-1.  With alpha_1(k) = a_1 + ... + a_k:

        [ 1   alpha_1(k)/(n-k) ]
        [ 0   n/(n-k)          ]
    """
    if n < 2:
        raise DomainError(f"weighted basis needs n >= 2, got n={n}")
    ws = validate_weights(multipliers, n)
    if not 1 <= k <= n - 1:
        raise DomainError(
            f"inverse product at k={k} is outside 1..n-1 for n={n}; "
            f"k={n} would divide by n-k = 0"
        )
    r = Fraction(1, n - k)
    return _as_matrix(
        [
            [1, weight_prefix_sum(ws, k) * r],
            [0, n * r],
        ]
    )


@dataclass(frozen=True)
class TransitionSystem:
    """A population's transition matrices with cached inverse products.

    ``inverse_products[k-1]`` is inv(A_1)...inv(A_k).  The cache is
    filled from the closed forms at construction; ``step_matrix`` and
    ``product_of_inverses`` remain available as the independent route.
    """

    basis: Basis
    n: int
    total: Fraction
    square_sum: Fraction
    multipliers: tuple[Fraction, ...] | None
    inverse_products: tuple[Matrix, ...]

    @property
    def max_step_state(self) -> int:
        """Largest k for which step_matrix(k) exists."""
        return self.n - 3 if self.basis is Basis.QUADRATIC else self.n - 2

    @property
    def max_product_index(self) -> int:
        """Largest k for which inverse_product(k) exists."""
        return self.n - 2 if self.basis is Basis.QUADRATIC else self.n - 1

    def step_matrix(self, k: int) -> Matrix:
        """Matrix mapping the state after k draws to the expected state
        after k+1 draws."""
        if self.basis is Basis.QUADRATIC:
            return quadratic_transition(self.n, self.total, self.square_sum, k)
        return weighted_transition(self.n, self.multipliers[k], k)

    def inverse_product(self, k: int) -> Matrix:
        if not 1 <= k <= self.max_product_index:
            raise DomainError(
                f"inverse product at k={k} is outside "
                f"1..{self.max_product_index} for n={self.n}"
            )
        return self.inverse_products[k - 1]

    def state_vector(self, state: PathState) -> Vector:
        """The linearized state at ``state``: (S^2, S, T, 1) for the
        quadratic basis, (W, S) for the weighted basis."""
        s = state.partial_sum
        if self.basis is Basis.QUADRATIC:
            return (s * s, s, state.partial_square_sum, Fraction(1))
        w = sum(
            (a * x for a, x in zip(self.multipliers, state.drawn)),
            Fraction(0),
        )
        return (w, s)


def build_transition_system(
    basis: Basis | str,
    population: Population | None = None,
    multipliers: Sequence | None = None,
    n: int | None = None,
    total=None,
    square_sum=None,
) -> TransitionSystem:
    """Assemble a :class:`TransitionSystem`.

    Pass either ``population`` or explicit ``(n, total, square_sum)``.
    The weighted basis requires ``multipliers`` of length n.
    """
    basis = coerce_enum(Basis, basis, "basis")
    if population is not None:
        if n is not None or total is not None or square_sum is not None:
            raise InvalidInputError(
                "pass either a population or explicit (n, total, square_sum),"
                " not both"
            )
        n = population.n
        total = population.total
        square_sum = population.square_sum
    if n is None or total is None or square_sum is None:
        raise InvalidInputError(
            "need a population or explicit (n, total, square_sum)"
        )
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise InvalidInputError(f"need integer n >= 2, got {n!r}")
    total = as_fraction(total)
    square_sum = as_fraction(square_sum)
    ws: tuple[Fraction, ...] | None = None
    if basis is Basis.WEIGHTED:
        if multipliers is None:
            raise InvalidInputError("the weighted basis needs multipliers")
        ws = validate_weights(multipliers, n)
        products = tuple(
            weighted_inverse_product(n, ws, k) for k in range(1, n)
        )
    else:
        if multipliers is not None:
            raise InvalidInputError("the quadratic basis takes no multipliers")
        if n < 3:
            raise DomainError(f"quadratic basis needs n >= 3, got n={n}")
        products = tuple(
            quadratic_inverse_product(n, total, square_sum, k)
            for k in range(1, n - 1)
        )
    return TransitionSystem(
        basis=basis,
        n=n,
        total=total,
        square_sum=square_sum,
        multipliers=ws,
        inverse_products=products,
    )


def vector_martingale_value(system: TransitionSystem, state: PathState) -> Vector:
    """inv(A_1)...inv(A_k) applied to the state vector after k draws.

    Coordinatewise this is a martingale in k over the valid range
    (1..n-2 quadratic, 1..n-1 weighted).
    """
    if state.population.n != system.n:
        raise InvalidInputError(
            f"state comes from a population of size {state.population.n}, "
            f"system has n={system.n}"
        )
    k = state.k
    if not 1 <= k <= system.max_product_index:
        raise DomainError(
            f"vector martingale defined for k in 1..{system.max_product_index},"
            f" got k={k}"
        )
    return matrix_vector(system.inverse_product(k), system.state_vector(state))


def matrix_as_strings(matrix: Matrix) -> list[list[str]]:
    """Rows of 'p/q' strings, the JSON wire form for exact matrices."""
    return [[format_rational(x) for x in row] for row in matrix]
