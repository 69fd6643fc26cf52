"""Witness selection, the witness cover G(y) and the class partition.

Coordinates are 1-based throughout. Because f is strictly increasing with
f(1) = 0, every comparison ``f(u) >= f(v)`` is done on the codes ``u >= v``.
A replica matrix enters only through its column maxima ("tops", which fix
the sets S_y(j)) and its column f-sums ("totals", which decide badness).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

from .cover import Cover, CoverEntry
from .errors import PreconditionError
from .model import (DEFAULT_BUDGET, Instance, Profile, check_replica, column_tops,
                    column_totals, maximizer, replica_profiles, threshold_family)

log = logging.getLogger(__name__)


def _coords(indices) -> frozenset:
    return frozenset(i + 1 for i in indices)


# -- the piecewise-linear balance function -------------------------------------

def balance(a: Sequence[Fraction], S: Iterable[int], eps) -> Fraction:
    """``sum_{i in S} min(a_i, eps) - 1/2 sum_i min(a_i, eps)``; S is 1-based."""
    S = set(S)
    eps = Fraction(eps)
    covered = sum((min(ai, eps) for i, ai in enumerate(a, 1) if i in S), Fraction(0))
    return covered - sum((min(ai, eps) for ai in a), Fraction(0)) / 2


def epsilon_from_weights(a: Sequence[Fraction], S: Iterable[int]) -> Fraction:
    """``sup{eps >= 0 : balance(eps) >= 0}`` by an exact breakpoint scan.

    The balance is zero at 0, linear between the breakpoints ``a_i`` and
    constant past the largest one, where it equals
    ``sum_S a_i - 1/2 sum a_i``; that constant must be negative.
    """
    a = [Fraction(v) for v in a]
    S = set(S)
    final = sum((ai for i, ai in enumerate(a, 1) if i in S), Fraction(0)) - sum(a, Fraction(0)) / 2
    if final >= 0:
        raise PreconditionError("covered weight is at least half the total; no finite epsilon")
    points = sorted({Fraction(0), *a})
    values = [balance(a, S, b) for b in points]
    last = max(k for k, v in enumerate(values) if v >= 0)
    # a later breakpoint exists because the value at the largest one is `final` < 0
    b0, b1 = points[last], points[last + 1]
    v0, v1 = values[last], values[last + 1]
    return b0 + v0 * (b1 - b0) / (v0 - v1)


class EpsilonCertificate(NamedTuple):
    epsilon: Fraction
    at_epsilon: Fraction
    probe: Fraction
    at_probe: Fraction
    beyond: Fraction

    @property
    def ok(self) -> bool:
        return self.at_epsilon >= 0 and self.at_probe < 0 and self.beyond < 0


def epsilon_certificate(a: Sequence[Fraction], S: Iterable[int]) -> EpsilonCertificate:
    """Values that pin down epsilon: nonnegative at it, negative just after and at the end."""
    S = set(S)
    eps = epsilon_from_weights(a, S)
    above = [ai for ai in a if ai > eps]
    nxt = min(above) if above else eps + 1
    probe = (eps + nxt) / 2
    beyond = max(a) + 1
    return EpsilonCertificate(eps, balance(a, S, eps), probe, balance(a, S, probe),
                              balance(a, S, beyond))


# -- per-(x, y) data -------------------------------------------------------------

@dataclass(frozen=True)
class IndexFamilies:
    """All index sets attached to a pair (x, y) for a given epsilon.

    ``tops[i]`` is the maximum code in column i of y. Every method returns a
    frozenset of 1-based coordinates; j ranges over ``1..n+1`` with the
    ``n+1`` sets empty.
    """

    x: tuple
    tops: tuple
    weights: tuple
    epsilon: Fraction
    n: int

    @property
    def d(self) -> int:
        return len(self.x)

    def _where(self, pred) -> frozenset:
        return _coords(i for i in range(self.d) if pred(i))

    def S_y(self, j):
        return self._where(lambda i: self.tops[i] >= j)

    def S_eq_y(self, j):
        return self._where(lambda i: self.tops[i] == j)

    def J_x(self, j):
        return self._where(lambda i: self.x[i] >= j)

    def J_eq_x(self, j):
        return self._where(lambda i: self.x[i] == j)

    @property
    def S_xy(self):
        return self._where(lambda i: self.tops[i] >= self.x[i])

    @property
    def J_xy(self):
        return self._where(lambda i: self.weights[i] > self.epsilon)

    @property
    def W_xy(self):
        return self.J_xy - self.S_xy

    def J_xy_at(self, j):
        return self.J_xy & self.J_x(j)

    def J_eq_xy(self, j):
        return self.J_xy & self.J_eq_x(j)

    def S_xy_at(self, j):
        return self.S_xy & self.J_x(j)

    def W_xy_at(self, j):
        return self.J_xy_at(j) - self.S_xy

    def W_eq_xy(self, j):
        return self.W_xy_at(j) - self.W_xy_at(j + 1)

    def as_dict(self) -> dict:
        js = range(1, self.n + 1)

        def per_j(fn):
            return {str(j): sorted(fn(j)) for j in js}

        return {
            "S_y": per_j(self.S_y), "S_eq_y": per_j(self.S_eq_y),
            "J_x": per_j(self.J_x), "J_eq_x": per_j(self.J_eq_x),
            "S_xy": sorted(self.S_xy), "J_xy": sorted(self.J_xy), "W_xy": sorted(self.W_xy),
            "J_xy_j": per_j(self.J_xy_at), "J_eq_xy": per_j(self.J_eq_xy),
            "S_xy_j": per_j(self.S_xy_at), "W_xy_j": per_j(self.W_xy_at),
            "W_eq_xy": per_j(self.W_eq_xy),
        }


class Core(NamedTuple):
    """What witness selection needs from (x, y): J_{x,y}, W_{x,y} and epsilon."""

    x: tuple
    epsilon: Fraction
    J: frozenset
    W: frozenset


class WitnessClassKey(NamedTuple):
    j: int
    t: int
    Z: tuple  # Z(1), ..., Z(n) as frozensets

    def sort_key(self):
        return (self.j, self.t, tuple(tuple(sorted(z)) for z in self.Z))

    def as_dict(self) -> dict:
        return {"j": self.j, "t": self.t, "Z": [sorted(z) for z in self.Z]}


class WitnessEngine:
    """Caches t^x, weights and per-tops results for one instance and family F."""

    def __init__(self, inst: Instance, F: Sequence[tuple] | None = None,
                 budget: int = DEFAULT_BUDGET):
        if not inst.f.zero_base:
            raise PreconditionError("witness machinery needs f(1) = 0")
        self.inst = inst
        self.budget = budget
        self.F = tuple(sorted(tuple(x) for x in (threshold_family(inst, budget) if F is None else F)))
        self.L = inst.threshold
        self.t_index = {}
        self.weights = {}
        for x in self.F:
            k, _ = maximizer(x, inst)
            t = inst.T.vectors[k]
            self.t_index[x] = k
            self.weights[x] = tuple(t[i] * inst.f(x[i]) for i in range(inst.d))
        self.directions = [inst.T.vectors[k] for k in sorted(set(self.t_index.values()))]
        self._cores = {}
        self._ranked = {}
        self._covers = {}

    # badness ---------------------------------------------------------------
    def replica_sup(self, totals: Sequence[Fraction]) -> Fraction:
        """``sup_{x in F} sum_i t^x_i totals_i``; zero for an empty family."""
        if not self.directions:
            return Fraction(0)
        return max(sum((ti * s for ti, s in zip(t, totals)), Fraction(0)) for t in self.directions)

    def is_bad_totals(self, totals) -> bool:
        return self.replica_sup(totals) <= self.L / 2

    def weights_for(self, x) -> tuple:
        x = tuple(x)
        if x not in self.weights:
            k, _ = maximizer(x, self.inst)
            t = self.inst.T.vectors[k]
            self.weights[x] = tuple(t[i] * self.inst.f(x[i]) for i in range(self.inst.d))
        return self.weights[x]

    # per (x, y) ------------------------------------------------------------
    def core(self, x, tops) -> Core:
        key = (tuple(x), tuple(tops))
        hit = self._cores.get(key)
        if hit is None:
            x, tops = key
            a = self.weights_for(x)
            S = _coords(i for i in range(len(x)) if tops[i] >= x[i])
            eps = epsilon_from_weights(a, S)
            J = _coords(i for i in range(len(x)) if a[i] > eps)
            hit = Core(x, eps, J, J - S)
            self._cores[key] = hit
        return hit

    def families(self, x, tops) -> IndexFamilies:
        c = self.core(x, tops)
        return IndexFamilies(tuple(x), tuple(tops), self.weights_for(x), c.epsilon, self.inst.n)

    def ranked(self, tops) -> list[Core]:
        """Cores of all x' in F ordered by (|J|, |W|, x')."""
        tops = tuple(tops)
        hit = self._ranked.get(tops)
        if hit is None:
            hit = sorted((self.core(xp, tops) for xp in self.F),
                         key=lambda c: (len(c.J), len(c.W), c.x))
            self._ranked[tops] = hit
        return hit

    def witness(self, x, tops) -> Core:
        x = tuple(x)
        for c in self.ranked(tops):
            if all(c.x[i - 1] <= x[i - 1] for i in c.W):
                return c
        raise AssertionError(f"no admissible element for x={x}; x should admit itself")

    def cover(self, tops) -> Cover:
        tops = tuple(tops)
        hit = self._covers.get(tops)
        if hit is None:
            seen = set()
            entries = []
            for x in self.F:
                c = self.witness(x, tops)
                entry = CoverEntry(c.x, c.W)
                if entry.event() not in seen:
                    seen.add(entry.event())
                    entries.append(entry)
            hit = Cover(entries)
            self._covers[tops] = hit
        return hit

    def class_key(self, core: Core, tops) -> WitnessClassKey:
        n = self.inst.n
        fam = IndexFamilies(core.x, tuple(tops), self.weights_for(core.x), core.epsilon, n)
        Z = tuple(fam.S_y(k) | fam.W_xy_at(k) for k in range(1, n + 1))
        return WitnessClassKey(len(core.J), len(core.W), Z)

    # enumeration -----------------------------------------------------------
    def bad_profiles(self) -> list[Profile]:
        return [pr for pr in replica_profiles(self.inst, self.budget)
                if self.is_bad_totals(pr.totals)]


@lru_cache(maxsize=32)
def _engine(inst: Instance, F: tuple | None, budget: int) -> WitnessEngine:
    return WitnessEngine(inst, F, budget)


def engine_for(inst: Instance, F: Sequence[tuple] | None = None,
               budget: int = DEFAULT_BUDGET) -> WitnessEngine:
    key = None if F is None else tuple(sorted(tuple(x) for x in F))
    return _engine(inst, key, budget)


def _tops(y, inst):
    return column_tops(check_replica(y, inst))


# -- public operations -------------------------------------------------------------

def epsilon(x, y, inst: Instance) -> Fraction:
    return engine_for(inst).core(tuple(x), _tops(y, inst)).epsilon


def index_families(x, y, inst: Instance) -> IndexFamilies:
    return engine_for(inst).families(tuple(x), _tops(y, inst))


def is_bad(y, inst: Instance, F: Sequence[tuple] | None = None) -> bool:
    eng = engine_for(inst, F)
    if not eng.F:
        log.info("empty family: every replica matrix is bad (sup over nothing is 0)")
    return eng.is_bad_totals(column_totals(check_replica(y, inst), inst))


def admissible_by_levels(fam: IndexFamilies, x) -> bool:
    """The level-wise form: f(j) <= f(x(i)) for all j and all i in W_{x',y}(j)."""
    return all(j <= x[i - 1] for j in range(1, fam.n + 1) for i in fam.W_xy_at(j))


def is_admissible(x_prime, x, y, inst: Instance, cross_check: bool = False) -> bool:
    """x' is admissible for (x, y) when f(x'(i)) <= f(x(i)) on W_{x',y}."""
    fam = index_families(x_prime, y, inst)
    ok = all(fam.x[i - 1] <= x[i - 1] for i in fam.W_xy)
    if cross_check:
        assert ok == admissible_by_levels(fam, x), "admissibility forms disagree"
    return ok


def select_witness(x, y, inst: Instance) -> tuple[tuple, frozenset]:
    c = engine_for(inst).witness(tuple(x), _tops(y, inst))
    return c.x, c.W


def build_cover_for_y(y, inst: Instance, F: Sequence[tuple] | None = None) -> Cover:
    """The witness cover G(y), one entry per distinct event, in lexicographic order of x."""
    eng = engine_for(inst, F)
    tops = _tops(y, inst)
    if eng.F and not eng.is_bad_totals(column_totals(check_replica(y, inst), inst)):
        raise PreconditionError("G(y) is only defined for bad y")
    return eng.cover(tops)


def witness_trace(x, y, inst: Instance) -> dict:
    """Everything computed for one (x, y): epsilon, index families and the witness."""
    from .rational import fmt

    eng = engine_for(inst)
    y = check_replica(y, inst)
    tops = column_tops(y)
    x = tuple(x)
    fam = eng.families(x, tops)
    w = eng.witness(x, tops)
    return {
        "x": list(x),
        "y": [list(row) for row in y],
        "in_family": x in eng.F,
        "bad": eng.is_bad_totals(column_totals(y, inst)),
        "t_index": eng.t_index.get(x, maximizer(x, inst)[0]),
        "weights": [fmt(v) for v in fam.weights],
        "epsilon": fmt(fam.epsilon),
        "families": fam.as_dict(),
        "witness": {"x_star": list(w.x), "W": sorted(w.W), "J_size": len(w.J)},
    }


# -- class partition -----------------------------------------------------------------

class WitnessRecord(NamedTuple):
    key: WitnessClassKey
    x_star: tuple
    W: frozenset
    tops: tuple
    y: tuple
    prob: Fraction


class ClassPartition(NamedTuple):
    classes: dict  # WitnessClassKey -> frozenset of W
    records: list  # distinct (x_star, profile) WitnessRecords
    reconstruction_ok: bool

    def sorted_keys(self):
        return sorted(self.classes, key=WitnessClassKey.sort_key)

    def rows(self) -> list[dict]:
        return [{"j": k.j, "t": k.t, "Z": [sorted(z) for z in k.Z],
                 "members": sorted(sorted(w) for w in self.classes[k])}
                for k in self.sorted_keys()]


def reconstruct(key: WitnessClassKey, W: frozenset, fam: IndexFamilies) -> bool:
    """Check that the chain Z recovers W^=_{x*,y}(k) and S^=_y(k) minus W."""
    n = len(key.Z)
    for k in range(1, n + 1):
        z_eq = key.Z[k - 1] - (key.Z[k] if k < n else frozenset())
        if z_eq & W != fam.W_eq_xy(k) or z_eq - W != fam.S_eq_y(k) - fam.W_xy:
            return False
    return True


def class_partition(inst: Instance, F: Sequence[tuple] | None = None,
                    budget: int = DEFAULT_BUDGET) -> ClassPartition:
    """Group the witness sets of every bad y by (|J|, |W|, Z chain)."""
    eng = engine_for(inst, F, budget)
    classes: dict = {}
    records = []
    ok = True
    for prof in eng.bad_profiles():
        seen = set()
        for x in eng.F:
            c = eng.witness(x, prof.tops)
            if c.x in seen:
                continue
            seen.add(c.x)
            key = eng.class_key(c, prof.tops)
            classes.setdefault(key, set()).add(c.W)
            records.append(WitnessRecord(key, c.x, c.W, prof.tops, prof.y, prof.prob))
            ok = ok and reconstruct(key, c.W, eng.families(c.x, prof.tops))
    frozen = {k: frozenset(v) for k, v in classes.items()}
    return ClassPartition(frozen, records, ok)
