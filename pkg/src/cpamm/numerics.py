"""Exact rational arithmetic helpers and a controlled-precision square root.

Every amount, reserve and price in the model is a :data:`Rational`, GMP's
exact rational type (``gmpy2.mpq``). It compares and hashes equal to the
matching :class:`fractions.Fraction`, which is accepted on input, but stays
fast when repeated constant-product updates grow numerators and
denominators to hundreds of thousands of bits. Only :func:`sqrt_approx`
(used by the arbitrage formula) ever rounds.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Union

import gmpy2
from gmpy2 import isqrt

Rational = gmpy2.mpq
RationalLike = Union[Rational, Fraction, int, str]

DEFAULT_SQRT_TOL = Rational(1, 10**18)


def as_rational(value: RationalLike) -> Rational:
    """Coerce ``value`` to an exact Rational.

    Floats are rejected: they would silently import binary rounding error.
    Strings are parsed with :func:`parse_rational`.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not amounts")
    if type(value) is Rational:
        return value
    if isinstance(value, int):
        return Rational(value)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, _RationalABC):
        return Rational(value.numerator, value.denominator)
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def nonneg(value: RationalLike, name: str = "value") -> Rational:
    """Return ``value`` as a Rational, raising ValueError if it is negative."""
    q = as_rational(value)
    if q < 0:
        raise ValueError(f"{name} must be >= 0, got {format_rational(q)}")
    return q


def positive(value: RationalLike, name: str = "value") -> Rational:
    """Return ``value`` as a Rational, raising ValueError unless it is > 0."""
    q = as_rational(value)
    if q <= 0:
        raise ValueError(f"{name} must be > 0, got {format_rational(q)}")
    return q


def sub_nonneg(a: Rational, b: Rational) -> Rational:
    # Subtraction on nonnegative amounts: going below zero is an error, never saturation.
    r = a - b
    if r < 0:
        raise ValueError(f"{format_rational(a)} - {format_rational(b)} is negative")
    return r


def parse_rational(text: str) -> Rational:
    """Parse ``"num/den"``, a plain integer, or a finite decimal string."""
    if not isinstance(text, str):
        raise TypeError(f"expected a string, got {type(text).__name__}")
    try:
        q = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc
    return Rational(q.numerator, q.denominator)


def format_rational(q: Rational) -> str:
    """Serialize as ``"num/den"`` (always with the denominator, e.g. ``"6/1"``)."""
    return f"{q.numerator}/{q.denominator}"


def format_decimal(q: Rational, places: int) -> str:
    """Human-readable decimal rendering of ``q`` rounded half-even to ``places``."""
    if places < 0:
        raise ValueError("places must be >= 0")
    scaled = round(q * 10**places)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    if places == 0:
        return sign + digits
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def _isqrt_exact(n: int) -> int | None:
    return isqrt(n) if gmpy2.is_square(n) else None


def sqrt_approx(v: RationalLike, rel_tol: RationalLike = DEFAULT_SQRT_TOL) -> Rational:
    """Square root of a nonnegative rational.

    Returns ``s`` with ``|s*s - v| <= rel_tol * max(v, 1)``. When both the
    numerator and the denominator of ``v`` are perfect squares the root is
    returned exactly.

    >>> sqrt_approx(81)
    mpq(9,1)
    >>> sqrt_approx("9/4")
    mpq(3,2)
    """
    v = nonneg(v, "v")
    rel_tol = positive(rel_tol, "rel_tol")
    if v == 0:
        return Rational(0)
    n, d = v.numerator, v.denominator
    rn, rd = _isqrt_exact(n), _isqrt_exact(d)
    if rn is not None and rd is not None:
        return Rational(rn, rd)

    bound = rel_tol * max(v, Rational(1))
    # floor(sqrt(v) * 2**p) / 2**p undershoots v by at most (2*sqrt(v) + 1) / 4**p.
    need = (2 * (isqrt(n // d) + 1) + 1) / bound
    p = max(1, (need.numerator // need.denominator + 1).bit_length())
    while True:
        root = isqrt((n << (2 * p)) // d)
        s = Rational(root, 1 << p)
        if abs(s * s - v) <= bound:
            return s
        p += 16
