"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class Error(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(Error):
    """Malformed or inconsistent caller input (bad scalar syntax, wrong
    vector length, not a permutation, unknown identifier)."""


class DomainError(Error):
    """Structurally valid input outside the domain of an operation, such
    as an index past the last step where a formula is defined."""


class PreconditionError(Error):
    """A mathematical precondition fails, e.g. a population that must be
    centered is not."""


class EnumerationLimitError(Error):
    """An exact enumeration was requested above the configured size
    cutoff.  The message says how to proceed (raise the cutoff, up to
    its hard maximum, or switch to Monte Carlo)."""


def coerce_enum(enum_cls, value, what: str):
    """Convert ``value`` to ``enum_cls``, raising InvalidInputError with
    the valid choices instead of a bare ValueError."""
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(member.value for member in enum_cls)
        raise InvalidInputError(
            f"unknown {what} {value!r}; expected one of: {choices}"
        ) from None
