"""Shared helpers for the test suite.

Randomized tests draw centered rational populations from a seeded
generator so every run exercises the same inputs.
"""

import random

from permartingale import random_centered_population


def centered_pops(n, count, seed):
    """A reproducible list of ``count`` centered populations of size n."""
    rng = random.Random(seed)
    return [random_centered_population(n, rng) for _ in range(count)]


def pop_file(tmp_path, values, name="pop.txt"):
    """Write one value per line and return the path as a string."""
    path = tmp_path / name
    path.write_text("".join(f"{v}\n" for v in values), encoding="utf-8")
    return str(path)
