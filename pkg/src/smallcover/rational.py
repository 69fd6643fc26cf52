"""Exact rational helpers: parsing, formatting and certified bounds on e."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from .errors import ConfigError


def as_fraction(value, field=None) -> Fraction:
    """Coerce ``value`` to a Fraction.

    Accepts ints, Fractions and strings such as ``"3/4"``, ``"0.25"`` or ``"2"``.
    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, bool):
        raise ConfigError(f"expected a rational, got {value!r}", field)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"expected a finite rational, got {value!r}", field)
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse rational {value!r}", field) from exc
    raise ConfigError(f"expected a rational, got {type(value).__name__}", field)


def fmt(q: Fraction) -> str:
    """Canonical ``"num/den"`` string (integers keep the ``/1``)."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def fmt_weight(q: Fraction) -> dict:
    return {"exact": fmt(q), "decimal": float(q)}


@lru_cache(maxsize=None)
def e_bounds(terms: int = 20) -> tuple[Fraction, Fraction]:
    """Rational enclosure ``lo < e < hi`` from the Taylor series.

    The tail after ``terms`` terms is below ``1/(terms! * terms)``.
    """
    if terms < 2:
        raise ValueError("need at least 2 terms")
    lo = Fraction(0)
    fact = 1
    for k in range(terms + 1):
        if k:
            fact *= k
        lo += Fraction(1, fact)
    return lo, lo + Fraction(1, fact * terms)


def certified_ceil(expr: Callable[[Fraction], Fraction]) -> int:
    """``ceil(expr(e))`` for an expression monotone in e, decided exactly.

    Tightens the enclosure of e until both ends give the same ceiling.
    """
    for terms in (15, 25, 40, 80, 160):
        lo, hi = e_bounds(terms)
        a, b = math.ceil(expr(lo)), math.ceil(expr(hi))
        if a == b:
            return a
    raise ArithmeticError("could not separate ceiling from an integer")


def certified_le(lhs: Callable[[Fraction], Fraction], rhs: Fraction) -> bool:
    """Decide ``lhs(e) <= rhs`` for an expression monotone in e."""
    for terms in (15, 25, 40, 80, 160):
        lo, hi = e_bounds(terms)
        a, b = lhs(lo), lhs(hi)
        if max(a, b) <= rhs:
            return True
        if min(a, b) > rhs:
            return False
    raise ArithmeticError("comparison too close to decide")
