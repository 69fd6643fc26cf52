from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import raw, small_instances
from smallcover import (CoverEntry, build_cover_for_y, class_partition, cover_weight_delta,
                        cover_weight_weak, epsilon, is_bad, select_witness, threshold_family,
                        verify_cover)
from smallcover.errors import PreconditionError
from smallcover.model import DiscreteLaw, IndexSet, Instance, ValueMap
from smallcover.witness import (epsilon_certificate, epsilon_from_weights, index_families,
                                is_admissible, witness_trace)

ONES = ((1, 1), (1, 1))


def test_badness_i1(i1):
    assert is_bad(ONES, i1)
    assert not is_bad(((3, 1), (1, 1)), i1)
    F = threshold_family(i1)
    bad = oracles.bad_matrices(*raw(i1), F, 2, i1.threshold)
    assert [y for y, _ in bad] == [ONES]
    assert sum(pr for _, pr in bad) == Fr(1, 16)


def test_admissibility_i1(i1):
    assert is_admissible((3, 1), (3, 1), ONES, i1, cross_check=True)
    assert not is_admissible((1, 3), (3, 1), ONES, i1, cross_check=True)
    assert is_admissible((1, 3), (3, 3), ONES, i1, cross_check=True)


@pytest.mark.parametrize("x, star, W", [
    ((3, 2), (3, 1), {1}),
    ((1, 3), (1, 3), {2}),
    ((3, 3), (1, 3), {2}),
])
def test_witness_examples(i1, x, star, W):
    assert select_witness(x, ONES, i1) == (star, frozenset(W))


def test_cover_i1(i1):
    G = build_cover_for_y(ONES, i1)
    assert {e.event() for e in G} == {((1, 3),), ((2, 3),)}
    assert cover_weight_delta(G, i1.law) == Fr(1, 2)
    assert verify_cover(threshold_family(i1), G).covered


def test_cover_requires_bad_y(i1):
    with pytest.raises(PreconditionError):
        build_cover_for_y(((3, 1), (1, 1)), i1)


def test_selector_cover(selector_inst):
    G = build_cover_for_y(((1, 1),), selector_inst)
    assert {e.event() for e in G} == {((1, 2),), ((2, 2),)}
    assert cover_weight_weak(G, selector_inst.law) == Fr(1, 2)


def test_epsilon_examples():
    # weights (1, 1), nothing covered: balance is -min(1,e), zero only at 0
    assert epsilon_from_weights([Fr(1), Fr(1)], []) == 0
    # (2, 1) with coordinate 2 covered: min(1,e) - (min(2,e)+min(1,e))/2 -> root at e = 1
    assert epsilon_from_weights([Fr(2), Fr(1)], [2]) == 1
    with pytest.raises(PreconditionError):
        epsilon_from_weights([Fr(1), Fr(1)], [1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.fractions(min_value=0, max_value=10, max_denominator=7), min_size=1, max_size=6),
       st.data())
def test_epsilon_against_brute_force(a, data):
    S = data.draw(st.sets(st.integers(0, len(a) - 1)))
    if 2 * sum(a[i] for i in S) >= sum(a):
        return
    eps = epsilon_from_weights(a, {i + 1 for i in S})
    assert eps == oracles.eps_brute(a, S)
    assert epsilon_certificate(a, {i + 1 for i in S}).ok


def test_trace_i1(i1):
    tr = witness_trace((3, 2), ONES, i1)
    assert tr["in_family"] and tr["bad"]
    assert tr["witness"] == {"x_star": [3, 1], "W": [1], "J_size": 1}
    assert tr["families"]["J_xy"] == [1]


def test_class_partition_i1(i1):
    part = class_partition(i1)
    assert part.reconstruction_ok
    assert all(k.j == 1 and k.t == 1 for k in part.classes)
    assert all(len(v) <= 1 for v in part.classes.values())


def test_witness_needs_zero_base():
    inst = Instance(DiscreteLaw((Fr(1, 2), Fr(1, 2))), ValueMap((1, 2)), IndexSet(((1,),)), L=1)
    with pytest.raises(PreconditionError):
        epsilon((2,), ((1,),), inst)


@pytest.mark.parametrize("inst", small_instances(40, seed=5), ids=lambda _: "")
def test_raw_matrix_oracle(inst):
    """Epsilon, witnesses and G(y) on every bad raw matrix agree with the brute force."""
    p, f, T = raw(inst)
    F = threshold_family(inst)
    if not F:
        return
    for y, _ in oracles.bad_matrices(p, f, T, F, inst.K, inst.threshold):
        assert is_bad(y, inst)
        for x in F:
            eps, J, W, _ = oracles.sets_for(x, y, f, T, inst.n)
            assert epsilon(x, y, inst) == eps
            fam = index_families(x, y, inst)
            assert fam.J_xy == {i + 1 for i in J} and fam.W_xy == {i + 1 for i in W}
            assert select_witness(x, y, inst) == oracles.witness_brute(x, y, F, f, T, inst.n)
        G = build_cover_for_y(y, inst)
        assert {e.event() for e in G} == oracles.cover_brute(y, F, f, T, inst.n)
        assert len(G) == len({e.event() for e in G})
        assert cover_weight_delta(G, inst.law) == oracles.tail_weight(oracles.cover_brute(y, F, f, T, inst.n), p)


def test_cover_entry_contains_and_range():
    e = CoverEntry((3, 1), {1})
    assert e.contains((3, 1)) and not e.contains((2, 3))
    with pytest.raises(Exception):
        CoverEntry((3, 1), {3})
