from fractions import Fraction as Fr

import pytest

from smallcover import DiscreteLaw, IndexSet, Instance, ValueMap
from smallcover import verify
from smallcover.serialize import jsonable


def test_i1_all_checks_pass(i1):
    reports = verify.run_suite([i1])
    for name, rep in reports.items():
        assert rep.passed, (name, rep.violations)
    assert reports["heavy_half"].pairs_checked == 5
    assert reports["heavy_half"].stats["strict"] == 5
    assert reports["class_bound"].passed


def test_i1_bad_probability_exact(i1):
    rep = verify.check_bad_probability(i1, mode="exact")
    assert rep.passed
    assert rep.stats["p_bad"] == Fr(1, 16)
    assert rep.stats["weighted_weight"] == Fr(1, 32)
    assert rep.stats["min_bad_weight"] == Fr(1, 2)


def test_i1_replica_mean(i1):
    rep = verify.check_replica_mean(i1)
    assert rep.passed
    assert rep.stats["mean"] == Fr(275, 128)
    assert rep.stats["mean"] >= i1.threshold / 4
    assert rep.stats["conclusion"].startswith("satisfied")


def test_random_batch_clean():
    insts = verify.random_batch(40, seed=3)
    reports = verify.run_suite(insts)
    for name, rep in reports.items():
        assert rep.passed, (name, rep.violations[:1])
        assert rep.instances_checked == 40
    assert reports["epsilon_monotone"].pairs_checked > 0


def test_suite_independent_of_workers():
    insts = verify.random_batch(12, seed=8)
    one = {k: v.as_dict() for k, v in verify.run_suite(insts, workers=1).items()}
    four = {k: v.as_dict() for k, v in verify.run_suite(insts, workers=4).items()}
    assert one == four


def test_injected_violation_is_reported_and_replayed(i1, monkeypatch):
    monkeypatch.setattr(verify, "_heavy_half_ok", lambda fam: False)
    rep = verify.check_heavy_half(i1)
    assert len(rep.violations) == 5
    payload = rep.violations[0]
    assert "instance" in payload and "y" in payload and "x" in payload
    assert verify.replay("heavy_half", payload)
    monkeypatch.undo()
    assert not verify.replay("heavy_half", payload)


def test_fail_fast_stops_deterministically(monkeypatch):
    monkeypatch.setattr(verify, "_heavy_half_ok", lambda fam: False)
    insts = verify.random_batch(6, seed=2)
    for workers in (1, 3):
        rep = verify.run_suite(insts, ["heavy_half"], workers=workers, fail_fast=True)["heavy_half"]
        assert rep.stats["stopped_at_instance"] == 0
        assert rep.instances_checked == 1


def test_unknown_check():
    with pytest.raises(KeyError):
        verify.run_suite([], ["nope"])


def test_hypotheses_at_true_constants():
    K = 131
    inst = Instance(DiscreteLaw((1 - Fr(1, K), Fr(1, K))), ValueMap((0, 1)),
                    IndexSet(((1, 1, 1),)), K=K, delta=Fr(1, 2), L=1)
    hyp = verify.bound_hypotheses(inst, C=2)
    assert hyp["holds"] and hyp["K_required"] == 131
    small = Instance(inst.law, inst.f, inst.T, K=130, L=1)
    assert not verify.bound_hypotheses(small, C=2)["K_ok"]


def test_mc_audit_small_instance(i1):
    rep = verify.check_bad_probability(i1, mode="mc", samples=2000, seed=4)
    assert rep.passed
    assert abs(rep.stats["p_bad_estimate"] - 1 / 16) < 4 * rep.stats["p_bad_stderr"] + 1e-9


def test_report_serializes(i1):
    d = verify.check_class_bound(i1).as_dict()
    assert d == jsonable(d)
    assert d["passed"] and not d["inconclusive"]


def test_degenerate_point_mass_law():
    inst = Instance(DiscreteLaw((Fr(1), Fr(0))), ValueMap((0, 1)), IndexSet(((1, 1),)), L=1)
    bad = verify.check_bad_probability(inst)
    assert bad.stats["p_bad"] == 1 and "degenerate" in bad.stats
    assert bad.stats["min_bad_weight"] == 0 and bad.passed
    mean = verify.check_replica_mean(inst)
    assert mean.passed and "degenerate" in mean.stats
    assert mean.stats["mean"] == 0 and mean.stats["certificate_weight"] == 0


def test_tiny_p_selector_certificate():
    K = 131
    p = Fr(1, 10**4)
    inst = Instance(DiscreteLaw((1 - p, p)), ValueMap((0, 1)), IndexSet(((1, 0), (0, 1))),
                    K=K, L=Fr(1, 2))
    rep = verify.check_replica_mean(inst)
    assert rep.passed
    assert rep.stats["below_quarter"]
    assert rep.stats["certificate_covers"] and rep.stats["certificate_small"]
    assert rep.stats["certificate_weight"] == Fr(1, 5000)
