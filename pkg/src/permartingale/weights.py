"""Helpers for deterministic multiplier sequences.

A weighted partial sum ``W_k = a_1 X_1 + ... + a_k X_k`` is controlled
by the prefix sums of its multipliers: ``weight_prefix_sum`` gives
``a_1 + ... + a_k`` and ``weight_square_sum`` gives
``a_1^2 + ... + a_k^2``.  Both are needed by the compensator terms and
by the variance bounds built on them.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import InvalidInputError
from .rationals import fraction_sequence


def validate_weights(weights: Sequence, n: int) -> tuple[Fraction, ...]:
    """Coerce ``weights`` to Fractions and require length ``n``."""
    ws = fraction_sequence(weights)
    if len(ws) != n:
        raise InvalidInputError(
            f"expected {n} multipliers, got {len(ws)}"
        )
    return ws


def weight_prefix_sum(weights: Sequence[Fraction], k: int) -> Fraction:
    """Sum of the first ``k`` multipliers (0 <= k <= len)."""
    if not 0 <= k <= len(weights):
        raise InvalidInputError(f"prefix length {k} out of range")
    return sum(weights[:k], Fraction(0))


def weight_square_sum(weights: Sequence[Fraction], k: int) -> Fraction:
    """Sum of squares of the first ``k`` multipliers."""
    if not 0 <= k <= len(weights):
        raise InvalidInputError(f"prefix length {k} out of range")
    return sum((w * w for w in weights[:k]), Fraction(0))


def alternating_weights(n: int) -> tuple[Fraction, ...]:
    """Signs ``(-1)^i`` for i = 1..n, so the sequence starts at -1."""
    if n < 1:
        raise InvalidInputError("need n >= 1")
    return tuple(Fraction(-1 if i % 2 else 1) for i in range(1, n + 1))
