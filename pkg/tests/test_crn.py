"""Collaborative sensing: aggregation, trust windows, feedback, attacks."""

import random

import pytest

from trustsim.crn import (
    ABSTAIN,
    BUSY,
    IDLE,
    CrnConfig,
    CrnScenario,
    SensingReport,
    SuTrustRecord,
    aggregate_and_decide,
    apply_feedback,
    attack_report,
    context_trust,
    run_crn,
    total_utility_loss,
)

CFG = CrnConfig()


def test_aggregate_worked_example():
    cfg = CrnConfig(subs_weight_scale=1.0, trust_floor=0.0)
    subs = SensingReport(-1, BUSY, 0.5)
    sus = [SensingReport(0, BUSY, 1.0), SensingReport(1, IDLE, 1.0)]
    r, d = aggregate_and_decide(subs, sus, {0: 1.0, 1: 1.0}, cfg)
    assert r == pytest.approx(0.5)
    assert d == BUSY


def test_aggregate_all_abstain():
    cfg = CrnConfig(subs_weight_scale=1.0, trust_floor=0.0)
    subs = SensingReport(-1, ABSTAIN, 0.5)
    sus = [SensingReport(0, ABSTAIN, 0.1)]
    r, d = aggregate_and_decide(subs, sus, {0: 1.0}, cfg)
    assert r == 0.0 and d == ABSTAIN


def test_aggregate_single_idle_voice():
    cfg = CrnConfig(subs_weight_scale=1.0, trust_floor=0.0)
    subs = SensingReport(-1, BUSY, 0.0)   # zero weight on the base station
    sus = [SensingReport(0, IDLE, 1.0)]
    r, d = aggregate_and_decide(subs, sus, {0: 1.0}, cfg)
    assert r == pytest.approx(-1.0) and d == IDLE


def test_aggregate_filters_low_trust():
    cfg = CrnConfig(subs_weight_scale=1.0)
    subs = SensingReport(-1, ABSTAIN, 0.5)
    sus = [SensingReport(0, IDLE, 1.0), SensingReport(1, BUSY, 1.0)]
    trusts = {0: 0.2, 1: 0.9}
    r, d = aggregate_and_decide(subs, sus, trusts, cfg)
    assert d == BUSY


def test_aggregate_sign_symmetry():
    rng = random.Random(0)
    cfg = CrnConfig(trust_floor=0.0)
    for _ in range(50):
        sus = [SensingReport(i, rng.choice([IDLE, ABSTAIN, BUSY]), 1.0) for i in range(8)]
        trusts = {i: rng.random() + 0.01 for i in range(8)}
        subs = SensingReport(-1, rng.choice([IDLE, ABSTAIN, BUSY]), rng.random())
        r1, _ = aggregate_and_decide(subs, sus, trusts, cfg)
        flipped = [SensingReport(s.su_id, -s.verdict, s.confidence) for s in sus]
        subs_f = SensingReport(-1, -subs.verdict, subs.confidence)
        r2, _ = aggregate_and_decide(subs_f, flipped, trusts, cfg)
        assert r2 == pytest.approx(-r1)


def test_context_trust_all_positive():
    rec = SuTrustRecord(window=20, rho=0.7)
    for _ in range(5):
        rec.append(1.0, 0.0)
    assert context_trust(rec) == pytest.approx(1.0)


def test_context_trust_all_negative():
    rec = SuTrustRecord(window=20, rho=0.7)
    for _ in range(5):
        rec.append(0.0, 1.0)
    assert context_trust(rec) == pytest.approx(0.0)


def test_context_trust_balanced_no_forgetting():
    rec = SuTrustRecord(window=20, rho=1.0)
    rec.append(1.0, 0.0)
    rec.append(0.0, 1.0)
    assert context_trust(rec) == pytest.approx(0.5)


def test_context_trust_empty_prior():
    assert context_trust(SuTrustRecord(window=20)) == 0.5


def test_context_trust_monotone_in_positives():
    rec = SuTrustRecord(window=20, rho=0.9)
    rec.append(1.0, 1.0)
    before = context_trust(rec)
    rec.append(1.0, 0.0)
    assert context_trust(rec) >= before


def test_complaint_drops_trust_below_floor():
    cfg = CrnConfig()
    rec = SuTrustRecord(window=cfg.window, rho=1.0)
    for _ in range(cfg.window):
        rec.append(1.0, 0.0)
    records = {7: rec}
    reports = [SensingReport(7, IDLE, 0.9)]
    apply_feedback(records, reports, decision=IDLE, pu_complaint=True, cfg=cfg)
    assert context_trust(rec) < cfg.trust_floor
    assert rec.rho == cfg.rho_slow


def test_busy_decision_rewards_agreement():
    cfg = CrnConfig()
    records = {i: SuTrustRecord(cfg.window) for i in range(3)}
    reports = [
        SensingReport(0, BUSY, 0.9),
        SensingReport(1, IDLE, 0.9),
        SensingReport(2, ABSTAIN, 0.1),
    ]
    apply_feedback(records, reports, decision=BUSY, pu_complaint=False, cfg=cfg)
    assert records[0].pairs[-1] == (1.0, 0.0)
    assert records[1].pairs[-1] == (0.0, 1.0)
    assert records[2].pairs[-1] == (1.0, 1.0)


def test_undecided_round_leaves_records():
    cfg = CrnConfig()
    records = {0: SuTrustRecord(cfg.window)}
    apply_feedback(records, [SensingReport(0, BUSY, 0.9)], decision=ABSTAIN,
                   pu_complaint=False, cfg=cfg)
    assert len(records[0].pairs) == 0


def test_trusted_users_get_fast_forgetting():
    cfg = CrnConfig()
    rec = SuTrustRecord(cfg.window, rho=cfg.rho_slow)
    records = {0: rec}
    for _ in range(5):
        apply_feedback(records, [SensingReport(0, BUSY, 0.9)], decision=BUSY,
                       pu_complaint=False, cfg=cfg)
    assert context_trust(rec) >= cfg.trust_floor
    assert rec.rho == cfg.rho_fast


def test_tul_weighted_sum():
    assert total_utility_loss(0.0, 0.0, CFG) == 0.0
    assert total_utility_loss(0.1, 0.0, CFG) == pytest.approx(0.1)
    assert total_utility_loss(0.0, 0.1, CFG) == pytest.approx(0.5)


def test_attack_fabrication_inverts():
    rng = random.Random(0)
    assert attack_report(True, BUSY, "fabrication", 0.5, rng) == IDLE
    assert attack_report(False, IDLE, "fabrication", 0.5, rng) == BUSY


def test_attack_resource_hungry_always_idle():
    rng = random.Random(0)
    for truth in (True, False):
        assert attack_report(truth, BUSY, "resource_hungry", 0.5, rng) == IDLE


def test_attack_dos_claims_busy_when_idle():
    rng = random.Random(0)
    assert attack_report(False, IDLE, "dos", 0.5, rng) == BUSY
    assert attack_report(True, BUSY, "dos", 0.5, rng) == BUSY


def test_attack_on_off_zero_rate_is_honest():
    rng = random.Random(0)
    assert all(attack_report(True, BUSY, "on_off", 0.0, rng) == BUSY for _ in range(20))


def test_attack_on_off_full_rate_always_lies():
    rng = random.Random(0)
    assert all(attack_report(True, BUSY, "on_off", 1.0, rng) == IDLE for _ in range(20))


def test_run_crn_small_smoke_deterministic():
    cfg = CrnConfig(bands=1, iterations=200, su_count=20)
    scenario = CrnScenario(attack="fabrication", attacker_fraction=0.5,
                           usage_rate=0.45, trust_enabled=True)
    a = run_crn(cfg, scenario, seed=5)
    b = run_crn(cfg, scenario, seed=5)
    assert a.false_alarm_rate == b.false_alarm_rate
    assert a.misdetection_rate == b.misdetection_rate
    assert a.rows == b.rows
