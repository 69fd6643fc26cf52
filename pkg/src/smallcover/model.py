"""Laws, value maps, index sets and the supremum of the canonical process.

Supports are 1-based: a configuration ``x`` is a tuple of codes in ``1..n`` and
``f(x(i))`` is read from ``ValueMap.values[x[i] - 1]``. All probabilities,
values and index-set coordinates are Fractions; Monte Carlo routines are the
only place floats appear.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from . import sampling
from .errors import BudgetExceeded, ConfigError, EmptyFamilyError
from .rational import as_fraction

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**7

Config = tuple  # tuple[int, ...] of 1-based codes


@dataclass(frozen=True)
class DiscreteLaw:
    """Probability vector over the codes ``1..n``."""

    p: tuple

    def __post_init__(self):
        p = tuple(as_fraction(q, "p") for q in self.p)
        if not p:
            raise ConfigError("law needs at least one atom", "p")
        if any(q < 0 for q in p):
            raise ConfigError("probabilities must be nonnegative", "p")
        if sum(p) != 1:
            raise ConfigError(f"probabilities sum to {sum(p)}, not 1", "p")
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return len(self.p)

    def mass(self, k: int) -> Fraction:
        return self.p[k - 1]

    @cached_property
    def _tails(self):
        out = [Fraction(0)] * (self.n + 2)
        for k in range(self.n, 0, -1):
            out[k] = out[k + 1] + self.p[k - 1]
        return out

    def tail(self, k: int) -> Fraction:
        """P(X >= k); zero beyond ``n``."""
        if k <= 1:
            return Fraction(1)
        return self._tails[k] if k <= self.n else Fraction(0)

    def cdf(self, k: int) -> Fraction:
        """P(X <= k)."""
        return 1 - self.tail(k + 1)

    def mean(self, f: "ValueMap") -> Fraction:
        return sum((q * v for q, v in zip(self.p, f.values)), Fraction(0))


@dataclass(frozen=True)
class ValueMap:
    """Strictly increasing map ``f: [n] -> Q>=0``."""

    values: tuple

    def __post_init__(self):
        vals = tuple(as_fraction(v, "f") for v in self.values)
        if not vals:
            raise ConfigError("value map needs at least one value", "f")
        if vals[0] < 0:
            raise ConfigError("values must be nonnegative", "f")
        for a, b in zip(vals, vals[1:]):
            if not a < b:
                raise ConfigError("value map must be strictly increasing", "f")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def zero_base(self) -> bool:
        return self.values[0] == 0

    def __call__(self, k: int) -> Fraction:
        return self.values[k - 1]


@dataclass(frozen=True)
class IndexSet:
    """Finite ordered index set T of nonnegative vectors; order breaks ties."""

    vectors: tuple

    def __post_init__(self):
        vecs = tuple(tuple(as_fraction(c, "T") for c in t) for t in self.vectors)
        if not vecs:
            raise ConfigError("index set must be nonempty", "T")
        d = len(vecs[0])
        if d == 0 or any(len(t) != d for t in vecs):
            raise ConfigError("all vectors in T need the same positive dimension", "T")
        if any(c < 0 for t in vecs for c in t):
            raise ConfigError("coordinates of T must be nonnegative", "T")
        object.__setattr__(self, "vectors", vecs)

    @property
    def d(self) -> int:
        return len(self.vectors[0])

    def __len__(self):
        return len(self.vectors)

    def __getitem__(self, k):
        return self.vectors[k]


@dataclass(frozen=True)
class Instance:
    """A canonical-process instance with replica count, delta and threshold.

    Exactly one of ``L`` (explicit threshold) and ``Kprime`` (threshold
    ``Kprime * S(T)``) must be given.
    """

    law: DiscreteLaw
    f: ValueMap
    T: IndexSet
    K: int = 1
    delta: Fraction = Fraction(1, 2)
    L: Fraction | None = None
    Kprime: Fraction | None = None

    def __post_init__(self):
        if self.f.n != self.law.n:
            raise ConfigError(f"f has {self.f.n} values but the law has {self.law.n} atoms", "f")
        if not isinstance(self.K, int) or isinstance(self.K, bool) or self.K < 1:
            raise ConfigError("K must be a positive integer", "K")
        delta = as_fraction(self.delta, "delta")
        if not 0 < delta <= 1:
            raise ConfigError("delta must lie in (0, 1]", "delta")
        object.__setattr__(self, "delta", delta)
        if (self.L is None) == (self.Kprime is None):
            raise ConfigError("give exactly one of L and Kprime", "L")
        if self.L is not None:
            L = as_fraction(self.L, "L")
            if L <= 0:
                raise ConfigError("L must be positive", "L")
            object.__setattr__(self, "L", L)
        else:
            Kp = as_fraction(self.Kprime, "Kprime")
            if Kp <= 0:
                raise ConfigError("Kprime must be positive", "Kprime")
            object.__setattr__(self, "Kprime", Kp)

    @property
    def n(self) -> int:
        return self.law.n

    @property
    def d(self) -> int:
        return self.T.d

    @cached_property
    def threshold(self) -> Fraction:
        """The level L defining F (``Kprime * S(T)`` when given through Kprime)."""
        if self.L is not None:
            return self.L
        return self.Kprime * expected_supremum_exact(self)

    def with_threshold(self, L) -> "Instance":
        return Instance(self.law, self.f, self.T, self.K, self.delta, L=as_fraction(L))


def _check_config(x: Sequence[int], inst: Instance) -> Config:
    x = tuple(int(c) for c in x)
    if len(x) != inst.d or any(not 1 <= c <= inst.n for c in x):
        raise ConfigError(f"configuration {x} not in [{inst.n}]^{inst.d}", "x")
    return x


def maximizer(x: Sequence[int], inst: Instance) -> tuple[int, Fraction]:
    """Index of the first t in T maximising ``sum_i t_i f(x(i))``, and that maximum."""
    x = _check_config(x, inst)
    fx = [inst.f(c) for c in x]
    best_idx, best = 0, None
    for idx, t in enumerate(inst.T.vectors):
        val = sum((ti * v for ti, v in zip(t, fx)), Fraction(0))
        if best is None or val > best:
            best_idx, best = idx, val
    return best_idx, best


def sup_value(x: Sequence[int], inst: Instance) -> Fraction:
    return maximizer(x, inst)[1]


def _guard(states: int, budget: int, what="states"):
    if states > budget:
        raise BudgetExceeded(states, budget, what)


def configurations(inst: Instance, budget: int = DEFAULT_BUDGET) -> Iterator[Config]:
    """All of ``[n]^d`` in lexicographic order."""
    _guard(inst.n ** inst.d, budget, f"configurations (n^d = {inst.n}^{inst.d})")
    return product(range(1, inst.n + 1), repeat=inst.d)


def config_probability(x: Config, law: DiscreteLaw) -> Fraction:
    out = Fraction(1)
    for c in x:
        out *= law.p[c - 1]
    return out


def expected_supremum_exact(inst: Instance, budget: int = DEFAULT_BUDGET) -> Fraction:
    """S(T) = E sup_t sum_i t_i f(X_i), by enumerating ``[n]^d``."""
    total = Fraction(0)
    for x in configurations(inst, budget):
        pr = config_probability(x, inst.law)
        if pr:
            total += pr * sup_value(x, inst)
    return total


def _float_tables(inst: Instance):
    fvals = np.array([0.0] + [float(v) for v in inst.f.values])
    tmat = np.array([[float(c) for c in t] for t in inst.T.vectors])
    return fvals, tmat


def expected_supremum_mc(inst: Instance, samples: int, seed: int,
                         workers: int = 1, chunk: int = sampling.CHUNK) -> tuple[float, float]:
    """Monte Carlo estimate of S(T) with its standard error."""
    fvals, tmat = _float_tables(inst)

    def kernel(rng, size):
        codes = sampling.sample_codes(rng, inst.law.p, (size, inst.d))
        return (fvals[codes] @ tmat.T).max(axis=1)

    return sampling.mean_and_stderr(kernel, samples, seed, workers, chunk)


def threshold_family(inst: Instance, budget: int = DEFAULT_BUDGET) -> list[Config]:
    """``{x : sup_t sum_i t_i f(x(i)) > L}`` in lexicographic order."""
    L = inst.threshold
    return [x for x in configurations(inst, budget) if sup_value(x, inst) > L]


def jensen_bound(inst: Instance) -> Fraction:
    """``max_t sum_i t_i E f(X_i)``, a lower bound for S(T)."""
    m = inst.law.mean(inst.f)
    return max(sum(t, Fraction(0)) * m for t in inst.T.vectors)


class ColumnState(NamedTuple):
    total: Fraction  # sum over replicas of f(y^l(i))
    top: int  # max code over replicas
    prob: Fraction
    codes: tuple  # one representative column (y^1(i), ..., y^K(i))


def column_states(law: DiscreteLaw, f: ValueMap, K: int) -> list[ColumnState]:
    """Joint law of (sum of f-values, max code) for one column of K replicas."""
    states = {(Fraction(0), 0): (Fraction(1), ())}
    for _ in range(K):
        nxt = {}
        for (s, m), (pr, rep) in states.items():
            for k in range(1, law.n + 1):
                q = law.p[k - 1]
                if not q:
                    continue
                key = (s + f(k), max(m, k))
                if key in nxt:
                    nxt[key] = (nxt[key][0] + pr * q, nxt[key][1])
                else:
                    nxt[key] = (pr * q, rep + (k,))
        states = nxt
    return [ColumnState(s, m, pr, rep) for (s, m), (pr, rep) in sorted(states.items())]


class Profile(NamedTuple):
    """Replica matrices grouped by per-column (sum, max); ``y`` is a representative."""

    totals: tuple
    tops: tuple
    prob: Fraction
    y: tuple  # K rows of d codes


def replica_profiles(inst: Instance, budget: int = DEFAULT_BUDGET) -> Iterator[Profile]:
    """Enumerate the distinct column profiles of the replica matrix Y.

    Everything the witness machinery needs from Y is its column maxima and
    column f-sums, so each profile stands for every matrix sharing them.
    """
    cols = column_states(inst.law, inst.f, inst.K)
    _guard(len(cols) ** inst.d, budget, "replica profiles")
    for combo in product(cols, repeat=inst.d):
        pr = Fraction(1)
        for c in combo:
            pr *= c.prob
        y = tuple(tuple(c.codes[l] for c in combo) for l in range(inst.K))
        yield Profile(tuple(c.total for c in combo), tuple(c.top for c in combo), pr, y)


def column_totals(y: Sequence[Sequence[int]], inst: Instance) -> tuple:
    return tuple(sum((inst.f(row[i]) for row in y), Fraction(0)) for i in range(inst.d))


def column_tops(y: Sequence[Sequence[int]]) -> tuple:
    return tuple(max(col) for col in zip(*y))


def check_replica(y, inst: Instance) -> tuple:
    y = tuple(tuple(int(c) for c in row) for row in y)
    if len(y) != inst.K or any(len(row) != inst.d for row in y):
        raise ConfigError(f"replica matrix must be {inst.K}x{inst.d}", "y")
    if any(not 1 <= c <= inst.n for row in y for c in row):
        raise ConfigError(f"replica entries must lie in [1, {inst.n}]", "y")
    return y


def _family_directions(inst: Instance, F: Iterable[Config]) -> list[tuple]:
    """Distinct maximisers t^x over the family, in T order."""
    idx = sorted({maximizer(x, inst)[0] for x in F})
    return [inst.T.vectors[k] for k in idx]


def expected_replica_supremum(inst: Instance, F: Sequence[Config], mode: str = "exact",
                              samples: int = 10**5, seed: int = 0, workers: int = 1,
                              budget: int = DEFAULT_BUDGET):
    """``E sup_{x in F} sum_i sum_l t^x_i f(Y^l_i)`` over K replicas.

    Returns a Fraction in exact mode and ``(estimate, stderr)`` in ``"mc"`` mode.
    """
    F = list(F)
    if not F:
        raise EmptyFamilyError("supremum over an empty family is undefined")
    dirs = _family_directions(inst, F)
    if mode == "exact":
        per_col = {}
        for c in column_states(inst.law, inst.f, inst.K):
            per_col[c.total] = per_col.get(c.total, Fraction(0)) + c.prob
        cols = sorted(per_col.items())
        _guard(len(cols) ** inst.d, budget, "column-sum states")
        total = Fraction(0)
        for combo in product(cols, repeat=inst.d):
            pr = Fraction(1)
            for _, q in combo:
                pr *= q
            sums = [s for s, _ in combo]
            total += pr * max(sum((ti * s for ti, s in zip(t, sums)), Fraction(0)) for t in dirs)
        return total
    if mode != "mc":
        raise ConfigError(f"unknown mode {mode!r}", "mode")
    fvals = np.array([0.0] + [float(v) for v in inst.f.values])
    tmat = np.array([[float(c) for c in t] for t in dirs])

    def kernel(rng, size):
        codes = sampling.sample_codes(rng, inst.law.p, (size, inst.K, inst.d))
        sums = fvals[codes].sum(axis=1)
        return (sums @ tmat.T).max(axis=1)

    return sampling.mean_and_stderr(kernel, samples, seed, workers)


class TailReport(NamedTuple):
    holds: bool
    first_violation: int | None


def tail_condition_check_discrete(law: DiscreteLaw, f: ValueMap, C) -> TailReport:
    """Check ``p_k >= (1 - 1/C) P(X >= k)`` for every k."""
    C = as_fraction(C, "C")
    if C <= 1:
        raise ConfigError("C must exceed 1", "C")
    if f.n != law.n:
        raise ConfigError("f and law sizes differ", "f")
    ratio = 1 - 1 / C
    for k in range(1, law.n + 1):
        if law.mass(k) < ratio * law.tail(k):
            return TailReport(False, k)
    return TailReport(True, None)


def largest_tail_constant(law: DiscreteLaw) -> Fraction | None:
    """Largest C for which the discrete tail condition holds (None if no C > 1 works).

    Returns ``math.inf`` as a float when every positive tail is a point mass.
    """
    r = None
    for k in range(1, law.n + 1):
        tail = law.tail(k)
        if tail:
            q = law.mass(k) / tail
            r = q if r is None else min(r, q)
    if r is None or r == 0:
        return None
    if r == 1:
        return math.inf
    return 1 / (1 - r)
