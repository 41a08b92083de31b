"""Exact rational parsing/formatting used across scenario files and reports.

All quantities in this package are `fractions.Fraction`; floats never enter
the semantics.
"""

from __future__ import annotations

from fractions import Fraction


def parse_rational(value) -> Fraction:
    """Parse an exact rational from an int, Fraction, or string.

    Strings may be integers ("42"), fractions ("7/6", "-3/4") or decimal
    literals ("1.1", "-0.25"), all parsed exactly.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    if isinstance(value, float):
        raise ValueError(
            f"refusing float {value!r}: pass rationals as strings or integers"
        )
    raise ValueError(f"not a rational: {value!r}")


def format_rational(q: Fraction) -> str:
    """Render a Fraction as "p" or "p/q" (canonical reduced form)."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
