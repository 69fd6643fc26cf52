"""Covers of a family F and their three smallness weights."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

from .errors import ConfigError, PreconditionError
from .model import DiscreteLaw, ValueMap
from .rational import as_fraction


@dataclass(frozen=True)
class CoverEntry:
    """Upset ``{x : x(i) >= x_star(i) for i in W}``; W is a set of 1-based coordinates.

    ``x_star`` holds integer codes for discrete covers and rational thresholds
    for lifted (continuous) covers.
    """

    x_star: tuple
    W: frozenset

    def __post_init__(self):
        object.__setattr__(self, "x_star", tuple(self.x_star))
        W = frozenset(int(i) for i in self.W)
        if any(not 1 <= i <= len(self.x_star) for i in W):
            raise ConfigError(f"W={sorted(W)} out of range for dimension {len(self.x_star)}", "W")
        object.__setattr__(self, "W", W)

    def contains(self, x: Sequence) -> bool:
        return all(x[i - 1] >= self.x_star[i - 1] for i in self.W)

    def event(self) -> tuple:
        """Canonical form of the event: the thresholds actually constrained."""
        return tuple((i, self.x_star[i - 1]) for i in sorted(self.W))

    def as_dict(self) -> dict:
        return {"x_star": list(self.x_star), "W": sorted(self.W)}


class Cover(tuple):
    """An ordered collection of CoverEntry values (duplicates count)."""

    def __new__(cls, entries: Iterable[CoverEntry] = ()):
        return super().__new__(cls, entries)

    def as_list(self) -> list[dict]:
        return [e.as_dict() for e in self]

    @classmethod
    def from_list(cls, items) -> "Cover":
        try:
            return cls(CoverEntry(tuple(it["x_star"]), frozenset(it["W"])) for it in items)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed cover entry: {exc}", "cover") from exc


def entry_is_positive(entry: CoverEntry, f: ValueMap) -> bool:
    """Every constrained coordinate sits at a code with positive value."""
    return all(f(entry.x_star[i - 1]) > 0 for i in entry.W)


class CoverReport(NamedTuple):
    covered: bool
    first_uncovered: tuple | None


def verify_cover(F: Iterable[Sequence[int]], G: Iterable[CoverEntry]) -> CoverReport:
    G = list(G)
    for x in sorted(tuple(x) for x in F):
        if not any(e.contains(x) for e in G):
            return CoverReport(False, x)
    return CoverReport(True, None)


def _product(values) -> Fraction:
    out = Fraction(1)
    for v in values:
        out *= v
    return out


def entry_weight_delta(entry: CoverEntry, law: DiscreteLaw) -> Fraction:
    return _product(law.tail(entry.x_star[i - 1]) for i in entry.W)


def entry_weight_weak(entry: CoverEntry, law: DiscreteLaw) -> Fraction:
    return _product(law.mass(entry.x_star[i - 1]) for i in entry.W)


def cover_weight_delta(G: Iterable[CoverEntry], law: DiscreteLaw) -> Fraction:
    """Sum over entries of ``P(X_i >= x_star(i) for all i in W)``."""
    return sum((entry_weight_delta(e, law) for e in G), Fraction(0))


def cover_weight_weak(G: Iterable[CoverEntry], law: DiscreteLaw) -> Fraction:
    """Sum over entries of ``P(X_i = x_star(i) for all i in W)``."""
    return sum((entry_weight_weak(e, law) for e in G), Fraction(0))


def interval_probability(a, survival: Callable, survival_above: Callable | None = None) -> Fraction:
    """``P(a <= X <= 2a)`` from ``survival(t) = P(X >= t)``.

    ``survival_above(t) = P(X > t)`` is needed when the law has an atom at 2a;
    without it ``survival(2a)`` is used, which is exact for atomless laws.
    """
    a = as_fraction(a)
    upper = survival(a)
    lower = survival_above(2 * a) if survival_above is not None else survival(2 * a)
    if lower > upper:
        raise PreconditionError(f"survival increases between {a} and {2 * a}")
    return upper - lower


def cover_weight_interval(G: Iterable[CoverEntry], survival: Callable,
                          survival_above: Callable | None = None) -> Fraction:
    """Sum over entries of ``P(X_i in [x_star(i), 2 x_star(i)] for all i in W)``."""
    return sum((_product(interval_probability(e.x_star[i - 1], survival, survival_above)
                         for i in e.W) for e in G), Fraction(0))
