"""From continuous laws to discrete instances, and back to continuous covers.

A nonnegative law is normalised to mean one, truncated to a dyadic window
``[2^l, 2^n)`` and bucketed to powers of two, which gives a law on the codes
``1..n+1-l`` with values ``0, 2^l, ..., 2^(n-1)``. Covers found for the
discrete problem lift back to thresholds ``2^(code+l-2)`` plus one singleton
``{x_i >= 2^n}`` per coordinate.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

from .cover import Cover, CoverEntry, cover_weight_delta, cover_weight_interval, cover_weight_weak
from .errors import ConfigError, PreconditionError
from .model import (DEFAULT_BUDGET, DiscreteLaw, IndexSet, Instance, ValueMap,
                    expected_supremum_exact, tail_condition_check_discrete, threshold_family)
from .rational import as_fraction, certified_ceil, certified_le

KP_GENERAL_BOUND = 2102  # the general bound asks for K' > 2102


# -- constants -----------------------------------------------------------------------

def constants(C, delta) -> dict:
    """Replica counts and threshold multipliers of the covering bounds, with e handled exactly.

    ``K_*`` are replica counts, ``Kprime_*`` threshold multipliers; ``tail`` needs
    the tail condition with constant C, ``point`` weighs covers by point masses.
    """
    C = as_fraction(C, "C")
    delta = as_fraction(delta, "delta")
    if C <= 1:
        raise ConfigError("C must exceed 1", "C")
    if not 0 < delta <= 1:
        raise ConfigError("delta must lie in (0, 1]", "delta")
    r = 1 - 1 / C
    K_tail = certified_ceil(lambda e: C + 12 * e / (r * delta))
    K_point = certified_ceil(lambda e: 12 * e / delta)
    Kp_continuous = math.ceil(18 * C + 2200 / r)
    inner = certified_ceil(lambda e: C + 48 * e / r)
    return {
        "K_tail": K_tail,
        "Kprime_tail": 8 * K_tail,
        "K_bad_tail": certified_ceil(lambda e: 12 * e / (r * delta)),
        "K_bad_point": K_point,
        "Kprime_point": 8 * K_point,
        "Kprime_continuous_tail": Kp_continuous,
        "Kprime_general_bound": KP_GENERAL_BOUND,
        "Kprime_general": KP_GENERAL_BOUND + 1,
        # the continuous reduction needs (K' - 2C)/2 >= 8 * ceil(C + 48e/(1 - 1/C))
        "continuous_reduction_ok": (Kp_continuous - 2 * C) / 2 >= 8 * inner,
    }


def geometric_tail_bound(K: int, C, delta) -> dict:
    """The closing estimate ``4e / (K(1-1/C) - 4e) <= delta/2`` (C=None drops the factor)."""
    r = Fraction(1) if C is None else 1 - 1 / as_fraction(C)
    delta = as_fraction(delta)
    positive = not certified_le(lambda e: K * r - 4 * e, Fraction(0))
    holds = positive and certified_le(lambda e: 4 * e / (K * r - 4 * e), delta / 2)
    return {"K": K, "holds": holds}


# -- continuous laws --------------------------------------------------------------------

class ContinuousLaw:
    """A nonnegative law given through exact tails.

    ``survival(t) = P(X >= t)`` and ``survival_above(t) = P(X > t)`` take and
    return Fractions.
    """

    def __init__(self, tag: str, survival: Callable, mean, survival_above: Callable | None = None,
                 params: dict | None = None):
        self.tag = tag
        self._survival = survival
        self._above = survival_above
        self.mean = as_fraction(mean, "mean")
        self.params = params or {}
        if self.mean <= 0:
            raise ConfigError("mean must be positive", "mean")
        if self.survival(Fraction(0)) != 1:
            raise ConfigError("survival(0) must equal 1", "survival")

    def survival(self, t) -> Fraction:
        return self._survival(as_fraction(t))

    def survival_above(self, t) -> Fraction:
        if self._above is None:
            return self.survival(t)
        return self._above(as_fraction(t))

    def interval(self, a, b) -> Fraction:
        """P(a <= X < b)."""
        upper, lower = self.survival(a), self.survival(b)
        if lower > upper:
            raise PreconditionError(f"survival increases between {a} and {b}")
        return upper - lower

    def normalized(self) -> "ContinuousLaw":
        """The same law rescaled to mean one."""
        if self.mean == 1:
            return self
        m = self.mean
        return ContinuousLaw(self.tag, lambda t: self._survival(m * t), 1,
                             None if self._above is None else (lambda t: self._above(m * t)),
                             dict(self.params, rescaled_by=str(m)))


def atoms(values: Sequence, probs: Sequence, tag: str = "atoms") -> ContinuousLaw:
    """Finitely many atoms; also the generic tabulated tail."""
    vals = [as_fraction(v, "values") for v in values]
    ps = [as_fraction(q, "probs") for q in probs]
    if len(vals) != len(ps) or not vals:
        raise ConfigError("values and probs must be nonempty and of equal length", "probs")
    if any(v < 0 for v in vals) or any(q < 0 for q in ps) or sum(ps) != 1:
        raise ConfigError("atoms need nonnegative values and probabilities summing to 1", "probs")
    pairs = sorted(zip(vals, ps))

    def survival(t):
        return sum((q for v, q in pairs if v >= t), Fraction(0))

    def above(t):
        return sum((q for v, q in pairs if v > t), Fraction(0))

    mean = sum((v * q for v, q in pairs), Fraction(0))
    return ContinuousLaw(tag, survival, mean, above,
                         {"values": [str(v) for v, _ in pairs], "probs": [str(q) for _, q in pairs]})


def dyadic_geometric(m: int) -> ContinuousLaw:
    """Mean-one law with ``P(X >= 2^k) = q 2^-k`` for ``k = 0..m`` and nothing above ``2^m``.

    The rest of the mass, ``1 - q`` with ``q = 2/(m+2)``, sits at zero. The
    tail ratio on the dyadic grid is exactly 2.
    """
    if m < 0:
        raise ConfigError("m must be nonnegative", "m")
    q = Fraction(2, m + 2)
    values = [Fraction(0)] + [Fraction(2) ** k for k in range(m + 1)]
    probs = [1 - q] + [q / 2 ** (k + 1) for k in range(m)] + [q / 2 ** m]
    law = atoms(values, probs, "dyadic-geometric")
    law.params = {"m": m}
    return law


def two_point(a, b, prob_a) -> ContinuousLaw:
    prob_a = as_fraction(prob_a, "prob_a")
    law = atoms([a, b], [prob_a, 1 - prob_a], "two-point")
    law.params = {"a": str(as_fraction(a)), "b": str(as_fraction(b)), "prob_a": str(prob_a)}
    return law


def pareto_truncated(alpha: int, scale, cap) -> ContinuousLaw:
    """``min(P, cap)`` for a Pareto variable with ``P(P >= t) = (scale/t)^alpha``, t >= scale."""
    scale = as_fraction(scale, "scale")
    cap = as_fraction(cap, "cap")
    if not isinstance(alpha, int) or alpha < 2:
        raise ConfigError("alpha must be an integer >= 2 for an exact mean", "alpha")
    if not 0 < scale < cap:
        raise ConfigError("need 0 < scale < cap", "cap")

    def survival(t):
        if t <= scale:
            return Fraction(1)
        if t > cap:
            return Fraction(0)
        return (scale / t) ** alpha

    def above(t):
        if t < scale:
            return Fraction(1)
        if t >= cap:
            return Fraction(0)
        return (scale / t) ** alpha

    mean = scale + scale ** alpha * (scale ** (1 - alpha) - cap ** (1 - alpha)) / (alpha - 1)
    return ContinuousLaw("pareto-truncated", survival, mean, above,
                         {"alpha": alpha, "scale": str(scale), "cap": str(cap)})


CATALOG = {
    "dyadic-geometric": lambda spec: dyadic_geometric(int(spec.get("m", 2))),
    "two-point": lambda spec: two_point(spec["a"], spec["b"], spec["prob_a"]),
    "pareto-truncated": lambda spec: pareto_truncated(int(spec["alpha"]), spec["scale"], spec["cap"]),
    "atoms": lambda spec: atoms(spec["values"], spec["probs"]),
}


def law_from_spec(spec: dict) -> ContinuousLaw:
    kind = spec.get("kind")
    if kind not in CATALOG:
        raise ConfigError(f"unknown continuous law {kind!r}; choose from {sorted(CATALOG)}", "continuous.kind")
    try:
        return CATALOG[kind](spec)
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc} for {kind}", f"continuous.{exc.args[0]}") from exc


# -- tail conditions and the plan --------------------------------------------------------------

class ContinuousTailReport(NamedTuple):
    holds: bool
    first_violation: int | None  # exponent k of the failing grid point base * 2^k


def tail_condition_check_continuous(law: ContinuousLaw, C, n_max: int = 64,
                                    base=None) -> ContinuousTailReport:
    """Check ``P(X >= t) >= C P(X >= 2t)`` at ``t = base * 2^k`` (base defaults to the mean)."""
    C = as_fraction(C, "C")
    base = law.mean if base is None else as_fraction(base)
    for k in range(n_max + 1):
        t = base * 2 ** k
        if law.survival(t) < C * law.survival(2 * t):
            return ContinuousTailReport(False, k)
    return ContinuousTailReport(True, None)


class ReductionPlan(NamedTuple):
    C: Fraction | None
    d: int
    l: int
    n: int
    K_prime: int | None = None

    @property
    def codes(self) -> int:
        return self.n + 1 - self.l


def choose_truncation(law: ContinuousLaw, C, d: int, n_max: int = 256,
                      K_prime: int | None = None, l: int | None = None) -> ReductionPlan:
    """Smallest ``l`` with ``2^l >= C`` and smallest ``n > l`` with ``d P(X >= 2^n) <= 1/4``.

    Passing ``l=0`` (and ``C=None``) gives the plan used without a tail condition.
    """
    if l is None:
        C = as_fraction(C, "C")
        if C <= 1:
            raise ConfigError("C must exceed 1", "C")
        l = 0
        while 2 ** l < C:
            l += 1
    for n in range(l + 1, n_max + 1):
        if d * law.survival(Fraction(2) ** n) <= Fraction(1, 4):
            return ReductionPlan(None if C is None else as_fraction(C), d, l, n, K_prime)
    raise PreconditionError(f"no n <= {n_max} with d*P(X >= 2^n) <= 1/4")


def dyadic_value(t, plan: ReductionPlan) -> Fraction:
    """``2^k`` when ``2^k <= t < 2^(k+1)`` for some ``l <= k < n``; zero otherwise."""
    t = as_fraction(t)
    lo, hi = Fraction(2) ** plan.l, Fraction(2) ** plan.n
    if not lo <= t < hi:
        return Fraction(0)
    k = plan.l
    while Fraction(2) ** (k + 1) <= t:
        k += 1
    return Fraction(2) ** k


def dyadic_code(t, plan: ReductionPlan) -> int:
    """Code of ``t`` in the discretised law (1 outside the window)."""
    g = dyadic_value(t, plan)
    if g == 0:
        return 1
    return g.numerator.bit_length() - 1 - plan.l + 2


def discretize(law: ContinuousLaw, plan: ReductionPlan) -> tuple[DiscreteLaw, ValueMap]:
    l, n = plan.l, plan.n
    two = Fraction(2)
    p = [1 - law.survival(two ** l) + law.survival(two ** n)]
    p += [law.interval(two ** (l + k - 2), two ** (l + k - 1)) for k in range(2, n + 2 - l)]
    f = [Fraction(0)] + [two ** (k + l - 2) for k in range(2, n + 2 - l)]
    return DiscreteLaw(tuple(p)), ValueMap(tuple(f))


class LiftedCover(NamedTuple):
    entries: Cover  # lifted discrete entries followed by the d tail singletons
    discrete_weight: Fraction
    tail_mass: Fraction  # d * P(X >= 2^n)
    total_weight: Fraction  # discrete_weight + tail_mass
    lifted_weight: Fraction  # sum of the actual continuous entry probabilities


def lift_cover(G: Sequence[CoverEntry], plan: ReductionPlan, law: ContinuousLaw, d: int,
               discrete_law: DiscreteLaw | None = None) -> LiftedCover:
    """Map a discrete cover to thresholds ``2^(code+l-2)`` and add the tail singletons."""
    if discrete_law is None:
        discrete_law, _ = discretize(law, plan)
    two = Fraction(2)
    lifted = []
    for e in G:
        if any(e.x_star[i - 1] < 2 for i in e.W):
            raise ConfigError(f"entry {e.as_dict()} constrains a coordinate to code 1", "cover")
        x = tuple(two ** (e.x_star[i - 1] + plan.l - 2) if i in e.W else Fraction(0)
                  for i in range(1, d + 1))
        lifted.append(CoverEntry(x, e.W))
    edge = two ** plan.n
    tails = [CoverEntry(tuple(edge if i == j else Fraction(0) for i in range(1, d + 1)), {j})
             for j in range(1, d + 1)]
    disc = cover_weight_delta(G, discrete_law)
    tail_mass = d * law.survival(edge)
    total = disc + tail_mass
    if total > disc + Fraction(1, 4):
        raise PreconditionError("plan violates d*P(X >= 2^n) <= 1/4")
    lifted_weight = tail_mass
    for e in lifted:
        w = Fraction(1)
        for i in e.W:
            w *= law.survival(e.x_star[i - 1])
        lifted_weight += w
    return LiftedCover(Cover(lifted + tails), disc, tail_mass, total, lifted_weight)


# -- the threshold transform ---------------------------------------------------------------------

class ThresholdTransform(NamedTuple):
    k0: int | None
    law_hat: DiscreteLaw | None
    f_hat: ValueMap | None
    code_map: tuple | None  # code_map[X-1] is the new code of X
    boundary: bool  # some f(k) equals K * E f(X) exactly

    @property
    def trivial(self) -> bool:
        return self.k0 is None


def threshold_transform(law: DiscreteLaw, f: ValueMap, K: int) -> ThresholdTransform:
    """Keep only values above ``K * E f(X)`` and re-index them from code 2.

    X below k0 maps to code 1 (value 0) and X >= k0 maps to ``X - k0 + 2``, so
    ``f_hat(X_hat) = f(X) 1{f(X) > K E f(X)}`` holds at every support point.
    """
    level = K * law.mean(f)
    boundary = any(v == level for v in f.values)
    k0 = next((k for k in range(1, law.n + 1) if f(k) > level), None)
    if k0 is None:
        return ThresholdTransform(None, None, None, None, boundary)
    code_map = tuple(1 if x < k0 else x - k0 + 2 for x in range(1, law.n + 1))
    size = law.n - k0 + 2
    p = [Fraction(0)] * size
    for x, c in enumerate(code_map, 1):
        p[c - 1] += law.mass(x)
    f_hat = [Fraction(0)] + [f(k + k0 - 2) for k in range(2, size + 1)]
    return ThresholdTransform(k0, DiscreteLaw(tuple(p)), ValueMap(tuple(f_hat)), code_map, boundary)


def literal_threshold_map(law: DiscreteLaw, f: ValueMap, K: int) -> tuple | None:
    """The re-indexing ``X <= k0 -> 1``, ``X > k0 -> X - k0`` with ``f_hat(x) = f(x + k0)``.

    Returns ``(k0, code_map, f_hat_values)``; codes whose ``f_hat`` is undefined map to None.
    """
    level = K * law.mean(f)
    k0 = next((k for k in range(1, law.n + 1) if f(k) > level), None)
    if k0 is None:
        return None
    code_map = tuple(1 if x <= k0 else x - k0 for x in range(1, law.n + 1))
    f_hat = [Fraction(0)] + [f(c + k0) if c + k0 <= law.n else None for c in range(2, law.n + 1)]
    return k0, code_map, tuple(f_hat)


def identity_violations(law: DiscreteLaw, f: ValueMap, K: int, code_map: Sequence[int],
                        f_hat: Sequence) -> list[int]:
    """Support points X where ``f_hat(X_hat) != f(X) 1{f(X) > K E f}``."""
    level = K * law.mean(f)
    bad = []
    for x in range(1, law.n + 1):
        want = f(x) if f(x) > level else Fraction(0)
        c = code_map[x - 1]
        got = f_hat[c - 1] if 1 <= c <= len(f_hat) else None
        if got != want:
            bad.append(x)
    return bad


# -- end-to-end pipeline ----------------------------------------------------------------------------

def _best_witness_cover(inst: Instance, F, budget: int):
    """Lowest-weight G(y) over bad y (all-ones y if enumeration is over budget)."""
    from .errors import BudgetExceeded
    from .witness import engine_for

    eng = engine_for(inst, F, budget)
    ones = tuple([1] * inst.d)
    best = (cover_weight_delta(eng.cover(ones), inst.law), ones)
    try:
        for prof in eng.bad_profiles():
            w = cover_weight_delta(eng.cover(prof.tops), inst.law)
            if w < best[0]:
                best = (w, prof.tops)
    except BudgetExceeded:
        pass
    return eng.cover(best[1]), best[1]


def reduce_pipeline(law: ContinuousLaw, T: IndexSet, C=None, Kprime=None, K: int = 1,
                    variant: str = "tail", budget: int = DEFAULT_BUDGET) -> dict:
    """Continuous instance -> discrete instance -> witness cover -> lifted cover.

    ``variant="tail"`` uses the tail condition with constant C (window starts at
    ``2^l >= C``); ``variant="general"`` needs no tail condition and uses l = 0.
    """
    d = T.d
    law = law.normalized()
    report: dict = {"variant": variant, "law": law.tag, "params": law.params}
    if variant == "tail":
        C = as_fraction(C, "C")
        Kp = Kprime if Kprime is not None else constants(C, Fraction(1, 4))["Kprime_continuous_tail"]
        report["continuous_tail"] = tail_condition_check_continuous(law, C)._asdict()
        plan = choose_truncation(law, C, d, K_prime=Kp)
        drop = 2 * C
    elif variant == "general":
        Kp = Kprime if Kprime is not None else KP_GENERAL_BOUND + 1
        plan = choose_truncation(law, None, d, K_prime=Kp, l=0)
        drop = Fraction(1)
    else:
        raise ConfigError(f"unknown variant {variant!r}", "variant")
    Kp = as_fraction(Kp, "Kprime")
    dlaw, dval = discretize(law, plan)
    report["plan"] = {"l": plan.l, "n": plan.n, "codes": plan.codes, "K_prime": Kp}
    report["discrete"] = {"p": list(dlaw.p), "f": list(dval.values)}
    if variant == "tail":
        report["discrete_tail"] = tail_condition_check_discrete(dlaw, dval, C)._asdict()
        report["markov_ok"] = dlaw.p[0] >= 1 - 1 / C
    level = (Kp - drop) / 2
    probe = Instance(dlaw, dval, T, K, L=1)
    S = expected_supremum_exact(probe, budget)
    report["S_T_discrete"] = S
    L = level * S if S else None
    if L is None:
        report["family_size"] = 0
        G, tops = Cover(), None
    else:
        inst = Instance(dlaw, dval, T, K, L=L)
        F = threshold_family(inst, budget)
        report["family_size"] = len(F)
        if F:
            G, tops = _best_witness_cover(inst, F, budget)
        else:
            G, tops = Cover(), None
    report["L_discrete"] = L
    report["discrete_cover"] = G.as_list()
    report["replica_tops"] = None if tops is None else list(tops)
    report["discrete_weight_weak"] = cover_weight_weak(G, dlaw)
    lifted = lift_cover(G, plan, law, d, dlaw)
    report["lifted_cover"] = lifted.entries.as_list()
    report["discrete_weight"] = lifted.discrete_weight
    report["tail_mass"] = lifted.tail_mass
    report["total_weight"] = lifted.total_weight
    report["lifted_weight"] = lifted.lifted_weight
    report["total_weight_le_half"] = lifted.total_weight <= Fraction(1, 2)
    if variant == "general":
        report["interval_weight"] = cover_weight_interval(lifted.entries, law.survival,
                                                          law.survival_above)
    return report
