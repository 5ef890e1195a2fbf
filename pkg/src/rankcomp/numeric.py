"""Numeric core: exact rationals vs floats under one comparison policy.

Game computations run in one of two modes.  When every input is an int or
a Fraction, all arithmetic stays exact and comparisons use equality with
zero tolerance.  As soon as a float enters, comparisons fall back to an
absolute tolerance of 1e-9.  Equality-at-peak situations are tie-sensitive,
so equilibrium verification should always be driven with rationals.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, float, Fraction]

#: comparison tolerance used whenever floats are involved
FLOAT_TOL = 1e-9

#: slack allowed on the simplex cap for float inputs (arithmetic noise)
SIMPLEX_TOL = 1e-12


class DomainError(ValueError):
    """A request that is outside the defined domain of an operation."""


class CapacityError(RuntimeError):
    """A computation that would exceed a configured enumeration budget."""


def is_exact(*values: Number) -> bool:
    """True when every value is an int or Fraction (no float anywhere)."""
    return all(not isinstance(v, float) for v in values)


def all_exact(values: Iterable[Number]) -> bool:
    return all(not isinstance(v, float) for v in values)


def numbers_equal(a: Number, b: Number, tol: float = FLOAT_TOL) -> bool:
    if is_exact(a, b):
        return a == b
    return abs(a - b) <= tol


def number_less(a: Number, b: Number, tol: float = FLOAT_TOL) -> bool:
    """a < b strictly, beyond tolerance in float mode."""
    if is_exact(a, b):
        return a < b
    return a < b - tol


def parse_number(value) -> Number:
    """Parse a JSON/CLI scalar into an exact number where possible.

    Ints stay ints, strings accept both "p/q" and decimal forms, and
    floats are read back through their shortest decimal representation
    (so a user-written 0.45 becomes Fraction(9, 20), not the binary
    float).  Callers that really want float semantics should pass floats
    through :func:`float` themselves.
    """
    if isinstance(value, bool):
        raise DomainError(f"expected a number, got bool {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse number from {value!r}") from exc
    raise DomainError(f"cannot parse number from {value!r}")


def number_to_json(value: Number):
    """Render a number for JSON output.

    Exact non-integer rationals are emitted as "p/q" strings so that a
    round-trip through the CLI keeps equilibrium checks exact; floats
    and integers pass through unchanged.
    """
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return int(value)
        return f"{value.numerator}/{value.denominator}"
    return value


def as_float(value: Number) -> float:
    return float(value)


def ceil_div(a: int, b: int) -> int:
    """Exact ceiling of a/b for integers, b > 0."""
    return -((-a) // b)
