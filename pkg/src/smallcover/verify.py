"""Exhaustive and seeded checks of the witness machinery and of the bad-set bound.

Everything the witness machinery computes from a replica matrix depends on
its column maxima only (badness also uses the column sums), so pair checks
run over the distinct column-maximum vectors of the bad profiles. Violation
payloads carry the instance, a representative replica matrix and the
configurations involved, so they can be replayed.
"""
from __future__ import annotations

import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import sampling
from .cover import cover_weight_delta, entry_is_positive, verify_cover
from .model import (DEFAULT_BUDGET, DiscreteLaw, IndexSet, Instance, ValueMap, column_states,
                    expected_replica_supremum, largest_tail_constant, replica_profiles,
                    tail_condition_check_discrete)
from .rational import certified_ceil, certified_le
from .serialize import instance_to_dict, jsonable
from .witness import (admissible_by_levels, class_partition, engine_for, epsilon_certificate)

log = logging.getLogger(__name__)


@dataclass
class CheckReport:
    lemma: str
    instances_checked: int = 0
    pairs_checked: int = 0
    violations: list = field(default_factory=list)
    inconclusive: bool = False
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def bump(self, key: str, amount=1):
        self.stats[key] = self.stats.get(key, 0) + amount

    def finish(self) -> "CheckReport":
        self.inconclusive = self.pairs_checked == 0
        return self

    def merge(self, other: "CheckReport") -> "CheckReport":
        self.instances_checked += other.instances_checked
        self.pairs_checked += other.pairs_checked
        self.violations.extend(other.violations)
        for k, v in other.stats.items():
            if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
                continue
            self.stats[k] = self.stats.get(k, 0) + v
        self.inconclusive = self.pairs_checked == 0
        return self

    def as_dict(self) -> dict:
        return jsonable({
            "lemma": self.lemma,
            "instances_checked": self.instances_checked,
            "pairs_checked": self.pairs_checked,
            "violations": self.violations,
            "inconclusive": self.inconclusive,
            "passed": self.passed,
            "stats": self.stats,
        })


# -- shared enumeration ---------------------------------------------------------------

class Analysis(NamedTuple):
    inst: Instance
    eng: object  # WitnessEngine
    bad: list  # bad Profiles
    bad_tops: list  # (tops, representative y), distinct tops in first-seen order


@lru_cache(maxsize=16)
def analyze(inst: Instance, budget: int = DEFAULT_BUDGET) -> Analysis:
    eng = engine_for(inst, None, budget)
    bad = eng.bad_profiles()
    seen = {}
    for pr in bad:
        seen.setdefault(pr.tops, pr.y)
    return Analysis(inst, eng, bad, list(seen.items()))


@lru_cache(maxsize=16)
def _partition(inst: Instance, budget: int):
    eng = engine_for(inst, None, budget)
    return class_partition(inst, eng.F, budget)


def _payload(inst: Instance, y=None, **detail) -> dict:
    out = {"instance": instance_to_dict(inst)}
    if y is not None:
        out["y"] = [list(row) for row in y]
    out.update(detail)
    return jsonable(out)


def _report(lemma: str) -> CheckReport:
    return CheckReport(lemma, instances_checked=1)


# -- heavy coordinates, the epsilon certificate and the set identities ---------------------------------

def _heavy_half_ok(fam) -> bool:
    return 2 * len(fam.S_xy & fam.J_xy) <= len(fam.J_xy)


def check_heavy_half(inst: Instance, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """``2 |S_{x,y} & J_{x,y}| <= |J_{x,y}|`` for every x in F and bad y."""
    rep = _report("heavy_half")
    an = analyze(inst, budget)
    for tops, y in an.bad_tops:
        for x in an.eng.F:
            fam = an.eng.families(x, tops)
            rep.pairs_checked += 1
            if not _heavy_half_ok(fam):
                rep.violations.append(_payload(inst, y, x=x, S=fam.S_xy, J=fam.J_xy))
            elif 2 * len(fam.S_xy & fam.J_xy) < len(fam.J_xy):
                rep.bump("strict")
    return rep.finish()


def check_epsilon_certificate(inst: Instance, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """The balance is >= 0 at epsilon, < 0 just past it and < 0 past every breakpoint."""
    rep = _report("epsilon_certificate")
    an = analyze(inst, budget)
    for tops, y in an.bad_tops:
        for x in an.eng.F:
            fam = an.eng.families(x, tops)
            cert = epsilon_certificate(fam.weights, fam.S_xy)
            rep.pairs_checked += 1
            if not cert.ok or cert.epsilon != fam.epsilon:
                rep.violations.append(_payload(inst, y, x=x, certificate=cert._asdict()))
    return rep.finish()


def _set_identity_failures(fam) -> list[str]:
    n = fam.n
    empty = frozenset()
    bad = []
    if fam.W_xy != fam.W_xy_at(1):
        bad.append("W equals W(1)")
    for j in range(1, n + 1):
        W_j, W_next = fam.W_xy_at(j), (fam.W_xy_at(j + 1) if j < n else empty)
        S_j, S_next = fam.S_y(j), (fam.S_y(j + 1) if j < n else empty)
        if (W_j | S_j) - (W_next | S_next) != fam.W_eq_xy(j) | (fam.S_eq_y(j) - fam.W_xy):
            bad.append(f"level identity at j={j}")
        graded = frozenset().union(*(fam.J_eq_xy(l) - fam.S_y(l) for l in range(j, n + 1)))
        if W_j != graded:
            bad.append(f"graded W at j={j}")
        if j < n and not (fam.J_xy_at(j) >= fam.J_xy_at(j + 1) and W_j >= W_next):
            bad.append(f"monotone chains at j={j}")
    return bad


def check_set_identity(inst: Instance, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """Level identity for (W(j) | S(j)), the graded form of W(j) and W = W(1)."""
    rep = _report("set_identity")
    an = analyze(inst, budget)
    for tops, y in an.bad_tops:
        for x in an.eng.F:
            fam = an.eng.families(x, tops)
            rep.pairs_checked += 1
            failures = _set_identity_failures(fam)
            if failures:
                rep.violations.append(_payload(inst, y, x=x, failures=failures))
    return rep.finish()


def check_cover_property(inst: Instance, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """G(y) covers F, witnesses sit between code 2 and x on W, both admissibility forms agree."""
    rep = _report("cover_property")
    an = analyze(inst, budget)
    eng = an.eng
    for tops, y in an.bad_tops:
        G = eng.cover(tops)
        cov = verify_cover(eng.F, G)
        if not cov.covered:
            rep.violations.append(_payload(inst, y, uncovered=cov.first_uncovered))
        if not all(entry_is_positive(e, inst.f) for e in G):
            rep.violations.append(_payload(inst, y, nonpositive_entry=True))
        for x in eng.F:
            c = eng.witness(x, tops)
            rep.pairs_checked += 1
            if not all(2 <= c.x[i - 1] <= x[i - 1] for i in c.W):
                rep.violations.append(_payload(inst, y, x=x, x_star=c.x, W=c.W))
            if not admissible_by_levels(eng.families(c.x, tops), x):
                rep.violations.append(_payload(inst, y, x=x, x_star=c.x, level_form=False))
    return rep.finish()


# -- same-class witness pairs and the class bound -------------------------------------------------

def _distinct_records(inst: Instance, budget: int) -> list:
    """One witness record per (x_star, tops), in partition order."""
    seen = set()
    out = []
    for r in _partition(inst, budget).records:
        tag = (r.x_star, r.tops)
        if tag not in seen:
            seen.add(tag)
            out.append(r)
    return out


def _class_pairs(inst: Instance, budget: int):
    """Ordered pairs of witness records sharing a class key (reflexive pairs included)."""
    groups: dict = {}
    for r in _distinct_records(inst, budget):
        groups.setdefault(r.key, []).append(r)
    for key in sorted(groups, key=lambda k: k.sort_key()):
        rs = groups[key]
        for a in rs:
            for b in rs:
                yield a, b


def _equal_size_pairs(inst: Instance, budget: int):
    """Ordered pairs of witness records with the same ``|W|`` (reflexive pairs included)."""
    rs = _distinct_records(inst, budget)
    for a in rs:
        for b in rs:
            if len(a.W) == len(b.W):
                yield a, b


def _tech_sides(eng, r, rp) -> tuple[int, int]:
    """Both sides of the counting inequality for witnesses r=(x*, y), rp=(x'*, y')."""
    fp = eng.families(rp.x_star, rp.tops)
    f = eng.families(r.x_star, r.tops)
    n = fp.n
    lhs = sum(len(fp.J_eq_xy(j) & (fp.W_xy_at(j) - fp.S_y(j))) for j in range(1, n + 1))
    rhs = sum(len(fp.J_eq_x(j) & (f.W_xy_at(j) - f.S_y(j))) for j in range(1, n + 1))
    return lhs, rhs


def check_epsilon_monotone(inst: Instance, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """``eps(x'*, y') <= eps(x'*, y)`` on same-class witness pairs; the counting
    inequality it rests on, on every pair with equal ``|W|``."""
    rep = _report("epsilon_monotone")
    eng = analyze(inst, budget).eng
    for r, rp in _class_pairs(inst, budget):
        rep.pairs_checked += 1
        rep.bump("epsilon_pairs")
        if (r.x_star, r.tops) != (rp.x_star, rp.tops):
            rep.bump("cross_pairs")
        e_own = eng.core(rp.x_star, rp.tops).epsilon
        e_other = eng.core(rp.x_star, r.tops).epsilon
        if not e_own <= e_other:
            rep.violations.append(_payload(inst, r.y, kind="epsilon", y_prime=rp.y,
                                           x_star=r.x_star, x_star_prime=rp.x_star,
                                           eps_prime=e_own, eps_cross=e_other))
    for r, rp in _equal_size_pairs(inst, budget):
        rep.pairs_checked += 1
        rep.bump("counting_pairs")
        lhs, rhs = _tech_sides(eng, r, rp)
        if lhs < rhs:
            rep.violations.append(_payload(inst, r.y, kind="counting", y_prime=rp.y,
                                           x_star=r.x_star, x_star_prime=rp.x_star,
                                           lhs=lhs, rhs=rhs))
    return rep.finish()


def check_witness_containment(inst: Instance, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """On same-class witness pairs: ``W_{x*,y}`` lies inside ``J_{x'*,y'}``."""
    rep = _report("witness_containment")
    eng = analyze(inst, budget).eng
    for r, rp in _class_pairs(inst, budget):
        rep.pairs_checked += 1
        if (r.x_star, r.tops) != (rp.x_star, rp.tops):
            rep.bump("cross_pairs")
        J = eng.core(rp.x_star, rp.tops).J
        if not r.W <= J:
            rep.violations.append(_payload(inst, r.y, y_prime=rp.y, x_star=r.x_star,
                                           x_star_prime=rp.x_star, W=r.W, J_prime=J))
    return rep.finish()


def check_class_bound(inst: Instance, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """Class sizes at most ``C(j, t)``, no class with ``t < j/2``, ``W`` inside ``Z(1)``."""
    rep = _report("class_bound")
    cp = _partition(inst, budget)
    if not cp.reconstruction_ok:
        rep.violations.append(_payload(inst, reconstruction=False))
    for key in cp.sorted_keys():
        members = cp.classes[key]
        rep.pairs_checked += len(members)
        rep.stats["largest_class"] = max(rep.stats.get("largest_class", 0), len(members))
        if len(members) > math.comb(key.j, key.t):
            rep.violations.append(_payload(inst, key=key.as_dict(), size=len(members)))
        if 2 * key.t < key.j:
            rep.violations.append(_payload(inst, key=key.as_dict(), t_below_half=True))
        if any(not key.Z[k] >= key.Z[k + 1] for k in range(len(key.Z) - 1)):
            rep.violations.append(_payload(inst, key=key.as_dict(), chain=False))
        for W in members:
            if not W <= key.Z[0]:
                rep.violations.append(_payload(inst, key=key.as_dict(), W=W))
    return rep.finish()


# -- the bad-set bound and its proof chain ---------------------------------------------------

def _ratio(C) -> Fraction:
    """``1 - 1/C`` (1 for an unbounded tail constant)."""
    return Fraction(1) if C == math.inf else 1 - 1 / Fraction(C)


def bound_hypotheses(inst: Instance, C=None) -> dict:
    """Tail condition at C, ``p_1 >= 1 - 1/K`` and ``K >= ceil(12e / ((1-1/C) delta))``.

    C defaults to the largest constant for which the tail condition holds.
    """
    law, K = inst.law, inst.K
    if C is None:
        C = largest_tail_constant(law)
    if C is None:
        return {"C": None, "tail_ok": False, "p1_ok": law.p[0] >= 1 - Fraction(1, K),
                "K_required": None, "K_ok": False, "holds": False}
    r = _ratio(C)
    tail_ok = True if C == math.inf else tail_condition_check_discrete(law, inst.f, C).holds
    K_req = certified_ceil(lambda e: 12 * e / (r * inst.delta))
    out = {
        "C": C,
        "tail_ok": tail_ok,
        "p1_ok": law.p[0] >= 1 - Fraction(1, K),
        "K_required": K_req,
        "K_ok": K >= K_req,
    }
    out["holds"] = out["tail_ok"] and out["p1_ok"] and out["K_ok"]
    return out


class _Tables(NamedTuple):
    delta_k: tuple  # index k: P(max of K copies == k), from the cdf formula
    top_marginal: dict  # the same law computed by convolving one column


def _tables(inst: Instance) -> _Tables:
    law, K = inst.law, inst.K
    delta_k = (None,) + tuple(law.cdf(k) ** K - law.cdf(k - 1) ** K for k in range(1, law.n + 1))
    marg: dict = {}
    for c in column_states(law, inst.f, K):
        marg[c.top] = marg.get(c.top, Fraction(0)) + c.prob
    return _Tables(delta_k, marg)


def _covered_below_half(eng, x, tops, totals) -> bool:
    a = eng.weights_for(x)
    fam = eng.families(x, tops)
    t = eng.inst.T.vectors[eng.t_index[x]]
    covered = sum((a[i - 1] for i in fam.S_xy), Fraction(0))
    mid = sum((ti * s for ti, s in zip(t, totals)), Fraction(0))
    return covered <= mid < sum(a, Fraction(0)) / 2


def _entry_chain(inst: Instance, eng, tab: _Tables, key, core, tops, C, p1_ok: bool) -> list[str]:
    """Per-entry steps: tail product, Kp_k/e bound and the Z-event probability."""
    law, K = inst.law, inst.K
    fam = eng.families(core.x, tops)
    W, t, n = core.W, len(core.W), law.n
    failures = []
    levels = {k: len(fam.W_eq_xy(k)) for k in range(1, n + 1)}
    tail = Fraction(1)
    for i in W:
        tail *= law.tail(core.x[i - 1])
    by_level = Fraction(1)
    point = Fraction(1)
    for k, m in levels.items():
        by_level *= law.tail(k) ** m
        point *= law.p[k - 1] ** m
    if tail != by_level:
        failures.append("tail product")
    if C is not None and tail > point / _ratio(C) ** t:
        failures.append("tail condition bound")
    for k, m in levels.items():
        if not m:
            continue
        if k == 1:
            failures.append("W meets level 1")
            continue
        step = K * law.p[k - 1] * law.cdf(k - 1) ** (K - 1)
        if tab.delta_k[k] < step:
            failures.append(f"binomial step at k={k}")
        if p1_ok:
            floor = (1 - Fraction(1, K)) ** (K - 1)
            if law.cdf(k - 1) ** (K - 1) < floor:
                failures.append(f"cdf floor at k={k}")
            if not certified_le(lambda e: 1 / e, floor):
                failures.append("(1-1/K)^(K-1) >= 1/e")
    if p1_ok and t:
        gain = Fraction(1)
        for k, m in levels.items():
            gain *= tab.delta_k[k] ** m
        if not certified_le(lambda e: point * (K / e) ** t, gain):
            failures.append("Kp_k/e product")
    z_eq = _z_levels(key.Z)
    outside = Fraction(1)
    for k in range(1, n + 1):
        outside *= tab.delta_k[k] ** len(z_eq[k - 1] - W)
        if z_eq[k - 1] & W != fam.W_eq_xy(k):
            failures.append(f"Z level {k} inside W")
    direct = Fraction(1)
    for i in range(1, inst.d + 1):
        if i not in W:
            direct *= tab.top_marginal.get(tops[i - 1], Fraction(0))
    if direct != outside:
        failures.append("Z-event probability")
    return failures


def _z_levels(Z) -> list:
    """``Z=(k) = Z(k) - Z(k+1)`` for a chain Z(1), ..., Z(n)."""
    return [Z[k] - (Z[k + 1] if k + 1 < len(Z) else frozenset()) for k in range(len(Z))]


def _hockey_stick(d: int) -> bool:
    return all(sum(math.comb(j, t) for j in range(t, 2 * t + 1)) == math.comb(2 * t + 1, t + 1)
               <= 4 ** t for t in range(1, d + 1))


def _closing_bound(K: int, r: Fraction, delta: Fraction) -> tuple[bool, bool]:
    """(``K r > 4e``, ``4e / (K r - 4e) <= delta/2``)."""
    positive = not certified_le(lambda e: K * r - 4 * e, Fraction(0))
    small = positive and certified_le(lambda e: 4 * e / (K * r - 4 * e), delta / 2)
    return positive, small


def check_bad_probability(inst: Instance, mode: str = "auto", samples: int = 1000, seed: int = 0,
                          C=None, workers: int = 1, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """P(bad), the weighted average of the G(y) weights and every step of the chain bounding it.

    ``mode="auto"`` enumerates profiles when the budget allows and samples otherwise.
    """
    if mode == "auto":
        cols = len(column_states(inst.law, inst.f, inst.K))
        mode = "exact" if cols ** inst.d <= budget else "mc"
    hyp = bound_hypotheses(inst, C)
    rep = _report("bad_probability")
    rep.stats.update(mode=mode, hypotheses=hyp)
    eng = engine_for(inst, None, budget)
    if not eng.F:
        rep.stats["degenerate"] = "empty family: every y is bad and G(y) is empty"
        rep.stats["p_bad"] = Fraction(1)
        return rep.finish()
    if inst.law.p[0] == 1:
        rep.stats["degenerate"] = "p_1 = 1: every value vanishes, so every y is bad with weight-0 covers"
    C_used = hyp["C"] if hyp["tail_ok"] else None
    r = _ratio(C_used) if C_used is not None else None
    tab = _tables(inst)
    if not _hockey_stick(inst.d):
        rep.violations.append(_payload(inst, step="binomial sum"))
    if r is not None:
        positive, small = _closing_bound(inst.K, r, inst.delta)
        rep.stats["closing_bound_defined"] = positive
        rep.stats["closing_bound_le_half_delta"] = small
        if hyp["holds"] and not small:
            rep.violations.append(_payload(inst, step="closing geometric sum"))

    def audit(prof_tops, prof_totals, y):
        for x in eng.F:
            rep.pairs_checked += 1
            if not _covered_below_half(eng, x, prof_tops, prof_totals):
                rep.violations.append(_payload(inst, y, step="covered < half", x=x))
        for c in _cover_cores(eng, prof_tops):
            rep.pairs_checked += 1
            key = eng.class_key(c, prof_tops)
            bad = _entry_chain(inst, eng, tab, key, c, prof_tops, C_used, hyp["p1_ok"])
            if bad:
                rep.violations.append(_payload(inst, y, x_star=c.x, W=c.W, steps=bad))

    if mode == "exact":
        _exact_average(inst, eng, rep, hyp, r, tab, audit, budget)
    else:
        _mc_average(inst, eng, rep, hyp, audit, samples, seed, workers)
    return rep.finish()


def _cover_cores(eng, tops):
    """Cores of the entries of G(y), in the order of the cover."""
    seen = set()
    out = []
    for x in eng.F:
        c = eng.witness(x, tops)
        ev = tuple((i, c.x[i - 1]) for i in sorted(c.W))
        if ev not in seen:
            seen.add(ev)
            out.append(c)
    return out


def _exact_average(inst, eng, rep, hyp, r, tab, audit, budget):
    law = inst.law
    p_bad = Fraction(0)
    avg = Fraction(0)
    min_weight = None
    to_class: dict = {}  # (key, W) -> [P(Y -> W), entry probability]
    for prof in replica_profiles(inst, budget):
        if not eng.is_bad_totals(prof.totals):
            continue
        p_bad += prof.prob
        w = cover_weight_delta(eng.cover(prof.tops), law)
        avg += prof.prob * w
        min_weight = w if min_weight is None else min(min_weight, w)
        audit(prof.tops, prof.totals, prof.y)
        for c in _cover_cores(eng, prof.tops):
            key = eng.class_key(c, prof.tops)
            slot = to_class.setdefault((key, c.W), [Fraction(0), None])
            slot[0] += prof.prob
            tail = Fraction(1)
            for i in c.W:
                tail *= law.tail(c.x[i - 1])
            if slot[1] is None:
                slot[1] = tail
            elif slot[1] != tail:
                rep.violations.append(_payload(inst, step="class determines entry", W=c.W))
    regrouped = sum((mass * w for mass, w in to_class.values()), Fraction(0))
    if regrouped != avg:
        rep.violations.append(_payload(inst, step="regrouping by class", average=avg,
                                       regrouped=regrouped))
    for (key, W), (mass, _) in sorted(to_class.items(), key=lambda kv: (kv[0][0].sort_key(),
                                                                        sorted(kv[0][1]))):
        z_eq = _z_levels(key.Z)
        bound = Fraction(1)
        for k in range(1, law.n + 1):
            bound *= tab.delta_k[k] ** len(z_eq[k - 1] - W)
        if mass > bound:
            rep.violations.append(_payload(inst, step="P(Y -> W) bound", key=key.as_dict(), W=W,
                                           mass=mass, bound=bound))
    if r is not None and hyp["p1_ok"] and to_class:
        # sum over classes of (e / (K r))^t prod_k Delta_k^{|Z=(k)|}
        K = inst.K

        def middle(e):
            total = Fraction(0)
            for key, W in to_class:
                z = Fraction(1)
                for k, lvl in enumerate(_z_levels(key.Z), 1):
                    z *= tab.delta_k[k] ** len(lvl)
                total += (e / (K * r)) ** len(W) * z
            return total

        if not certified_le(lambda e: avg - middle(e), Fraction(0)):
            rep.violations.append(_payload(inst, step="class-sum bound", average=avg))
        z_total = Fraction(0)
        for Z in {key.Z for key, _ in to_class}:
            z = Fraction(1)
            for k, lvl in enumerate(_z_levels(Z), 1):
                z *= tab.delta_k[k] ** len(lvl)
            z_total += z
        if z_total > 1:
            rep.violations.append(_payload(inst, step="Z-chain probabilities exceed 1"))
    rep.stats.update(p_bad=p_bad, weighted_weight=avg, min_bad_weight=min_weight,
                     classes=len(to_class))
    if hyp["holds"]:
        K = inst.K
        if not certified_le(lambda e: avg - 4 * e / (K * r - 4 * e), Fraction(0)):
            rep.violations.append(_payload(inst, step="averaging bound", average=avg))
        if p_bad > Fraction(1, 2) and not (min_weight is not None and min_weight < inst.delta):
            rep.violations.append(_payload(inst, step="small G(y) when P(bad) > 1/2",
                                           p_bad=p_bad, min_weight=min_weight))


def _mc_average(inst, eng, rep, hyp, audit, samples, seed, workers):
    law, K, d = inst.law, inst.K, inst.d
    f_vals = inst.f.values

    def kernel(rng, size):
        return sampling.sample_codes(rng, law.p, (size, K, d))

    values = []
    bad_count = 0
    min_weight = None
    audited = set()
    weights: dict = {}
    for block in sampling.map_chunks(kernel, samples, seed, workers):
        for y in block:
            tops = tuple(int(v) for v in y.max(axis=0))
            counts = [np.bincount(y[:, i], minlength=law.n + 1) for i in range(d)]
            totals = tuple(sum((int(cnt[k]) * f_vals[k - 1] for k in range(2, law.n + 1)), Fraction(0))
                           for cnt in counts)
            if not eng.is_bad_totals(totals):
                values.append(0.0)
                continue
            bad_count += 1
            if tops not in weights:
                weights[tops] = cover_weight_delta(eng.cover(tops), law)
            w = weights[tops]
            min_weight = w if min_weight is None else min(min_weight, w)
            values.append(float(w))
            if (tops, totals) not in audited:
                audited.add((tops, totals))
                audit(tops, totals, tuple(tuple(int(c) for c in row) for row in y))
    arr = np.asarray(values)
    est = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    p_hat = bad_count / len(arr)
    p_se = math.sqrt(p_hat * (1 - p_hat) / len(arr))
    half = float(inst.delta / 2)
    rep.stats.update(samples=len(arr), seed=seed, weighted_weight_estimate=est,
                     weighted_weight_stderr=se, p_bad_estimate=p_hat, p_bad_stderr=p_se,
                     bad_samples=bad_count, distinct_bad_profiles=len(audited),
                     min_bad_weight=min_weight, within_margin=est <= half + 3 * se)
    if hyp["holds"]:
        if est > half + 3 * se:
            rep.violations.append(_payload(inst, step="averaging bound (MC)", estimate=est,
                                           stderr=se))
        if p_hat - 3 * p_se > 0.5 and not (min_weight is not None and min_weight < inst.delta):
            rep.violations.append(_payload(inst, step="small G(y) when P(bad) > 1/2 (MC)",
                                           p_bad=p_hat))


def check_replica_mean(inst: Instance, mode: str = "exact", samples: int = 10**5, seed: int = 0,
                       C=None, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """If the replica mean is below L/4, exhibit a G(y) of weight at most delta.

    A missing certificate counts as a violation only when the replica count
    and tail hypotheses hold; otherwise it is recorded in ``stats``.
    """
    rep = _report("replica_mean")
    eng = engine_for(inst, None, budget)
    L = inst.threshold
    if not eng.F:
        rep.stats["degenerate"] = ("empty family: the mean is undefined and smallness is vacuous"
                                   if inst.law.p[0] != 1 else
                                   "p_1 = 1: all values vanish so F is empty for L > 0")
        return rep.finish()
    if inst.law.p[0] == 1:
        rep.stats["degenerate"] = "p_1 = 1: the mean is 0 and F holds only null configurations"
    if mode == "exact":
        mean = expected_replica_supremum(inst, eng.F, "exact", budget=budget)
        below = mean < L / 4
    else:
        est, se = expected_replica_supremum(inst, eng.F, "mc", samples=samples, seed=seed)
        mean = est
        below = est + 3 * se < float(L / 4)
    rep.pairs_checked = 1
    rep.stats.update(mean=mean, quarter_L=L / 4, below_quarter=below)
    if not below:
        rep.stats["conclusion"] = "satisfied: mean >= L/4"
        return rep.finish()
    best = None
    for prof in eng.bad_profiles():
        G = eng.cover(prof.tops)
        w = cover_weight_delta(G, inst.law)
        if best is None or w < best[0]:
            best = (w, G, prof.y)
    hyp = bound_hypotheses(inst, C)
    rep.stats["hypotheses"] = hyp
    if best is None:
        rep.violations.append(_payload(inst, step="mean below L/4 but no bad y"))
        return rep.finish()
    w, G, y = best
    covered = verify_cover(eng.F, G).covered
    rep.stats.update(certificate=G.as_list(), certificate_y=y,
                     certificate_weight=w, certificate_covers=covered,
                     certificate_small=w <= inst.delta)
    if not covered or (hyp["holds"] and w > inst.delta):
        rep.violations.append(_payload(inst, y, step="no small certificate", weight=w,
                                       covered=covered))
    elif w > inst.delta:
        rep.stats["conclusion"] = "no G(y) certificate; replica count below the required constant"
    else:
        rep.stats["conclusion"] = "certificate found"
    return rep.finish()


# -- random instances and the suite ---------------------------------------------------------

def random_instance(rng: random.Random, max_d: int = 3, max_n: int = 3, max_K: int = 2,
                    max_T: int = 4) -> Instance:
    """A small instance with rational data and an L that keeps F nonempty."""
    d = rng.randint(1, max_d)
    n = rng.randint(2, max_n)
    K = rng.randint(1, max_K)
    w = [rng.randint(1, 6) for _ in range(n)]
    if rng.random() < 0.15:
        w[rng.randrange(1, n)] = 0
    total = sum(w)
    p = tuple(Fraction(v, total) for v in w)
    f = [Fraction(0)]
    for _ in range(n - 1):
        f.append(f[-1] + Fraction(rng.randint(1, 4), rng.randint(1, 3)))
    vecs = []
    for _ in range(rng.randint(1, max_T)):
        vecs.append([Fraction(rng.randint(0, 4), rng.randint(1, 3)) for _ in range(d)])
    if all(c == 0 for v in vecs for c in v):
        vecs[0][0] = Fraction(1)
    top = max(sum(v, Fraction(0)) for v in vecs) * f[-1]
    L = top * Fraction(rng.randint(1, 9), 10)
    return Instance(DiscreteLaw(p), ValueMap(tuple(f)), IndexSet(tuple(map(tuple, vecs))), K,
                    Fraction(1, 2), L=L)


def random_batch(count: int, seed: int, **limits) -> list[Instance]:
    rng = random.Random(seed)
    return [random_instance(rng, **limits) for _ in range(count)]


CHECKS: dict[str, Callable[..., CheckReport]] = {
    "heavy_half": check_heavy_half,
    "epsilon_certificate": check_epsilon_certificate,
    "set_identity": check_set_identity,
    "cover_property": check_cover_property,
    "epsilon_monotone": check_epsilon_monotone,
    "witness_containment": check_witness_containment,
    "class_bound": check_class_bound,
    "bad_probability": check_bad_probability,
    "replica_mean": check_replica_mean,
}


def _run_one(inst: Instance, names: Sequence[str], budget: int) -> dict:
    return {name: CHECKS[name](inst, budget=budget) for name in names}


def run_suite(instances: Sequence[Instance], checks: Sequence[str] | None = None,
              workers: int = 1, fail_fast: bool = False,
              budget: int = DEFAULT_BUDGET) -> dict[str, CheckReport]:
    """Run the named checks on every instance and merge reports in instance order.

    With ``fail_fast`` the suite stops after the first instance that produced a
    violation; instances are processed in blocks of ``workers`` and everything
    after the first failing instance is discarded, so the output does not
    depend on the worker count.
    """
    names = list(CHECKS) if checks is None else list(checks)
    unknown = [c for c in names if c not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks {unknown}")
    merged = {name: CheckReport(name) for name in names}
    step = max(1, workers) if fail_fast else max(1, len(instances))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for start in range(0, len(instances), step):
            block = instances[start:start + step]
            results = list(pool.map(lambda inst: _run_one(inst, names, budget), block))
            for idx, res in enumerate(results, start):
                for name in names:
                    for v in res[name].violations:
                        v.setdefault("instance_id", idx)
                    merged[name].merge(res[name])
                if fail_fast and any(res[name].violations for name in names):
                    for name in names:
                        merged[name].stats["stopped_at_instance"] = idx
                    return merged
    return merged


def replay(lemma: str, payload: dict, budget: int = DEFAULT_BUDGET) -> bool:
    """Re-run a check on the instance stored in a violation payload; True if it still fails."""
    from .serialize import instance_from_dict

    inst = instance_from_dict(payload["instance"])
    rep = CHECKS[lemma](inst, budget=budget)
    keys = [k for k in ("x", "y", "x_star", "step", "kind") if k in payload]
    return any(all(v.get(k) == payload[k] for k in keys) for v in rep.violations)
