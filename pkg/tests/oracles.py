"""Brute-force reference computations, deliberately independent of the package.

Everything here enumerates raw configurations / replica matrices with plain
loops and Fractions. It must never import ``smallcover``.
"""
from fractions import Fraction as Fr
from itertools import combinations, product

# worked instance I1
I1_P = (Fr(1, 2), Fr(1, 4), Fr(1, 4))
I1_F = (Fr(0), Fr(1), Fr(2))
I1_T = ((Fr(1), Fr(0)), (Fr(0), Fr(1)), (Fr(1, 2), Fr(1, 2)))


def sup_value(x, f, T):
    return max(sum(t[i] * f[x[i] - 1] for i in range(len(x))) for t in T)


def argmax_first(x, f, T):
    vals = [sum(t[i] * f[x[i] - 1] for i in range(len(x))) for t in T]
    best = max(vals)
    return vals.index(best), best


def prob_config(x, p):
    out = Fr(1)
    for c in x:
        out *= p[c - 1]
    return out


def expected_sup(p, f, T):
    d = len(T[0])
    return sum(prob_config(x, p) * sup_value(x, f, T)
               for x in product(range(1, len(p) + 1), repeat=d))


def family(p, f, T, L):
    d = len(T[0])
    return [x for x in product(range(1, len(p) + 1), repeat=d)
            if sup_value(x, f, T) > L]


def replica_matrices(n, K, d):
    for flat in product(range(1, n + 1), repeat=K * d):
        yield tuple(tuple(flat[l * d:(l + 1) * d]) for l in range(K))


def replica_value(x, y, f, T):
    t = T[argmax_first(x, f, T)[0]]
    return sum(t[i] * f[row[i] - 1] for row in y for i in range(len(x)))


def expected_replica_sup(p, f, T, F, K):
    d = len(T[0])
    total = Fr(0)
    for y in replica_matrices(len(p), K, d):
        pr = Fr(1)
        for row in y:
            pr *= prob_config(row, p)
        total += pr * max(replica_value(x, y, f, T) for x in F)
    return total


def bad_matrices(p, f, T, F, K, L):
    d = len(T[0])
    out = []
    for y in replica_matrices(len(p), K, d):
        sup = max((replica_value(x, y, f, T) for x in F), default=Fr(0))
        if sup <= L / 2:
            pr = Fr(1)
            for row in y:
                pr *= prob_config(row, p)
            out.append((y, pr))
    return out


def min_selector_cover_weight(F, d, q):
    """Smallest sum of q^|G| over subset families covering F (Bernoulli codes 1/2).

    x is covered by G when every i in G has x(i) == 2. Searches all 2^(2^d - 1)
    families of nonempty subsets; the empty set would cover everything at weight 1.
    Returns (weight, family).
    """
    subsets = [frozenset(c) for r in range(0, d + 1)
               for c in combinations(range(1, d + 1), r)]
    best = None
    for mask in range(1 << len(subsets)):
        fam = [subsets[k] for k in range(len(subsets)) if mask >> k & 1]
        if all(any(all(x[i - 1] == 2 for i in G) for G in fam) for x in F):
            w = sum(q ** len(G) for G in fam)
            if best is None or w < best[0]:
                best = (w, fam)
    return best


# -- witness machinery on raw replica matrices ----------------------------------------
# Uses the graded form W(j) = U_{l>=j} (J=(l) minus S_y(l)) and the level form of
# admissibility, i.e. the other side of each equivalence the package relies on.

def weights(x, f, T):
    t = T[argmax_first(x, f, T)[0]]
    return [t[i] * f[x[i] - 1] for i in range(len(x))]


def balance(a, S, eps):
    return (sum(min(ai, eps) for i, ai in enumerate(a) if i in S)
            - sum(min(ai, eps) for ai in a) / 2)


def eps_brute(a, S):
    """Largest candidate point (breakpoint or segment root) where the balance is >= 0."""
    pts = sorted({Fr(0), *a})
    cands = list(pts)
    for lo, hi in zip(pts, pts[1:]):
        v0, v1 = balance(a, S, lo), balance(a, S, hi)
        if v0 != v1:
            c = lo + v0 * (hi - lo) / (v0 - v1)
            if lo <= c <= hi:
                cands.append(c)
    return max(c for c in cands if balance(a, S, c) >= 0)


def sets_for(x, y, f, T, n):
    """(eps, J, W, W(j) for j=1..n) with 0-based coordinates."""
    d = len(x)
    top = [max(row[i] for row in y) for i in range(d)]
    a = weights(x, f, T)
    S = {i for i in range(d) if top[i] >= x[i]}
    eps = eps_brute(a, S)
    J = {i for i in range(d) if a[i] > eps}
    W = J - S
    Wj = {}
    for j in range(1, n + 1):
        Wj[j] = {i for l in range(j, n + 1) for i in J
                 if x[i] == l and not top[i] >= l}
    return eps, J, W, Wj


def witness_brute(x, y, F, f, T, n):
    best = None
    for xp in F:
        eps, J, W, Wj = sets_for(xp, y, f, T, n)
        if all(f[j - 1] <= f[x[i] - 1] for j in range(1, n + 1) for i in Wj[j]):
            key = (len(J), len(W), xp)
            if best is None or key < best[0]:
                best = (key, xp, frozenset(i + 1 for i in W))
    return best[1], best[2]


def cover_brute(y, F, f, T, n):
    """G(y) as a set of events {(i, x*(i)) : i in W}."""
    events = set()
    for x in F:
        xs, W = witness_brute(x, y, F, f, T, n)
        events.add(tuple((i, xs[i - 1]) for i in sorted(W)))
    return events


def tail_weight(events, p):
    total = Fr(0)
    for ev in events:
        w = Fr(1)
        for _, k in ev:
            w *= sum(p[k - 1:])
        total += w
    return total
