from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import raw, small_instances
from smallcover import (DiscreteLaw, IndexSet, Instance, ValueMap, expected_replica_supremum,
                        expected_supremum_exact, expected_supremum_mc, maximizer,
                        threshold_family)
from smallcover.errors import BudgetExceeded, ConfigError, EmptyFamilyError
from smallcover.model import (column_states, jensen_bound, largest_tail_constant,
                              replica_profiles, tail_condition_check_discrete)


def test_i1_supremum_and_family(i1):
    assert expected_supremum_exact(i1) == Fr(19, 16)
    assert threshold_family(i1) == [(1, 3), (2, 3), (3, 1), (3, 2), (3, 3)]


def test_maximizer_breaks_ties_by_first_index(i1):
    # (3,3): all three directions give 2, the first one wins
    assert maximizer((3, 3), i1) == (0, Fr(2))
    assert maximizer((1, 3), i1) == (1, Fr(2))


def test_replica_supremum_i1(i1):
    F = threshold_family(i1)
    assert expected_replica_supremum(i1, F) == Fr(275, 128)
    assert expected_replica_supremum(i1, F) == oracles.expected_replica_sup(*raw(i1), F, 2)


def test_replica_supremum_empty_family(i1):
    with pytest.raises(EmptyFamilyError):
        expected_replica_supremum(i1, [])


@pytest.mark.parametrize("inst", small_instances(25, seed=11), ids=lambda _: "")
def test_matches_oracle(inst):
    p, f, T = raw(inst)
    assert expected_supremum_exact(inst) == oracles.expected_sup(p, f, T)
    F = threshold_family(inst)
    assert F == oracles.family(p, f, T, inst.threshold)
    if F:
        assert expected_replica_supremum(inst, F) == oracles.expected_replica_sup(p, f, T, F, inst.K)


def test_profiles_sum_to_one(i1):
    profs = list(replica_profiles(i1))
    assert sum(pr.prob for pr in profs) == 1
    assert len({(pr.totals, pr.tops) for pr in profs}) == len(profs)


def test_column_states_law():
    law, f = DiscreteLaw((Fr(1, 2), Fr(1, 4), Fr(1, 4))), ValueMap((0, 1, 2))
    cols = column_states(law, f, 2)
    assert sum(c.prob for c in cols) == 1
    assert {(c.total, c.top) for c in cols} == {(0, 1), (1, 2), (2, 2), (2, 3), (3, 3), (4, 3)}


def test_mc_close_to_exact(i1):
    est, se = expected_supremum_mc(i1, 20000, seed=3)
    assert abs(est - float(Fr(19, 16))) < 4 * se + 1e-9


def test_mc_deterministic_across_workers(i1):
    assert expected_supremum_mc(i1, 30000, 5, workers=1) == expected_supremum_mc(i1, 30000, 5, workers=3)


def test_kprime_threshold(i1):
    inst = Instance(i1.law, i1.f, i1.T, 2, L=None, Kprime=2)
    assert inst.threshold == Fr(19, 8)


def test_jensen_below_supremum(i1):
    assert jensen_bound(i1) <= expected_supremum_exact(i1)


@pytest.mark.parametrize("kwargs, field", [
    (dict(p=(Fr(1, 2), Fr(1, 3))), "p"),
    (dict(p=(Fr(3, 2), Fr(-1, 2))), "p"),
])
def test_bad_law(kwargs, field):
    with pytest.raises(ConfigError) as err:
        DiscreteLaw(kwargs["p"])
    assert err.value.field == field


def test_bad_values_and_instance(i1):
    with pytest.raises(ConfigError):
        ValueMap((0, 1, 1))
    with pytest.raises(ConfigError):
        IndexSet(((1, 0), (1,)))
    with pytest.raises(ConfigError) as err:
        Instance(i1.law, ValueMap((0, 1)), i1.T, L=1)
    assert err.value.field == "f"
    with pytest.raises(ConfigError):
        Instance(i1.law, i1.f, i1.T, L=1, Kprime=1)
    with pytest.raises(ConfigError):
        Instance(i1.law, i1.f, i1.T, K=0, L=1)


def test_budget_guard(i1):
    with pytest.raises(BudgetExceeded):
        expected_supremum_exact(i1, budget=5)


def test_tail_condition():
    law, f = DiscreteLaw((Fr(1, 2), Fr(1, 4), Fr(1, 4))), ValueMap((0, 1, 2))
    assert tail_condition_check_discrete(law, f, 2).holds
    rep = tail_condition_check_discrete(law, f, 3)
    assert not rep.holds and rep.first_violation == 1
    assert largest_tail_constant(law) == 2


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=2, max_size=5))
def test_largest_tail_constant_is_tight(ws):
    law = DiscreteLaw(tuple(Fr(w, sum(ws)) for w in ws))
    f = ValueMap(tuple(range(len(ws))))
    C = largest_tail_constant(law)
    if C is None or C == float("inf"):
        return
    assert tail_condition_check_discrete(law, f, C).holds
    assert not tail_condition_check_discrete(law, f, C + Fr(1, 1000)).holds
