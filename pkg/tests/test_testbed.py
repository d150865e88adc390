"""Simulation worlds: determinism, conservation, behaviors."""

import random

import pytest

from trustsim.testbed.base import (
    BADMOUTH,
    BALLOT_STUFF,
    HONEST,
    HUT,
    MUT,
    CompetitionLearner,
    TrusteeBehavior,
    WitnessBehavior,
    competition_update,
    derive_rng,
    distort_testimony,
    drift_provider,
    hon_x_split,
)
from trustsim.testbed.accept import AcceptConfig, AcceptWorld
from trustsim.testbed.ch3 import Ch3Config, Ch3World, parse_witness_mix
from trustsim.testbed.crowd import CrowdConfig, CrowdWorld
from trustsim.testbed.presets import build_world, list_presets
from trustsim.errors import ConfigError


# -- rng derivation ------------------------------------------------------------

def test_derive_rng_reproducible_and_independent():
    a1 = derive_rng(1, "agent", 3).random()
    a2 = derive_rng(1, "agent", 3).random()
    b = derive_rng(1, "agent", 4).random()
    assert a1 == a2
    assert a1 != b


# -- behaviors -------------------------------------------------------------------

def test_distort_honest_identity():
    rng = random.Random(0)
    assert distort_testimony(0.37, WitnessBehavior(HONEST), "x", rng) == 0.37


def test_distort_ballot_stuff_clamps_to_one():
    rng = random.Random(0)
    b = WitnessBehavior(BALLOT_STUFF, HUT)
    assert distort_testimony(0.4, b, "x", rng) == 1.0


def test_distort_badmouth_clamps_to_zero():
    rng = random.Random(0)
    b = WitnessBehavior(BADMOUTH, HUT)
    assert distort_testimony(0.4, b, "x", rng) == 0.0


def test_distort_offset_ranges():
    rng = random.Random(1)
    mut = WitnessBehavior(BALLOT_STUFF, MUT)
    for _ in range(50):
        v = distort_testimony(0.2, mut, "x", rng)
        assert 0.3 <= v <= 0.6 or v == 1.0


def test_distort_collusive_spares_outsiders():
    rng = random.Random(2)
    b = WitnessBehavior(BALLOT_STUFF, HUT, ring=frozenset({"ring"}))
    assert distort_testimony(0.6, b, "outsider", rng) == 0.6
    assert distort_testimony(0.6, b, "ring", rng) == 1.0


def test_drift_stays_in_bounds():
    rng = random.Random(3)
    b = TrusteeBehavior(1.0, capacity=5, drifts=True)
    for _ in range(1000):
        drift_provider(b, rng)
        assert 0.0 <= b.success_prob <= 1.0


def test_drift_flat_profile_without_flag():
    b = TrusteeBehavior(0.5, capacity=5, drifts=False)
    drift_provider(b, random.Random(0))
    assert b.success_prob == 0.5


def test_hon_x_split_sums():
    for x in (0, 10, 50, 90, 100):
        parts = hon_x_split(x, 200)
        assert sum(parts) == 200
    assert hon_x_split(50, 200) == (50, 50, 50, 50)


def test_witness_mix_parsing():
    assert parse_witness_mix("hon") == (HONEST, 0)
    assert parse_witness_mix("bm40") == (BADMOUTH, 40)
    assert parse_witness_mix("bs80") == (BALLOT_STUFF, 80)
    with pytest.raises(ConfigError):
        parse_witness_mix("xx10")


# -- competition learner ------------------------------------------------------------

def test_competition_softmax_uniform_at_start():
    learner = CompetitionLearner()
    assert learner.pi == pytest.approx([0.2] * 5)


def test_competition_rewarded_system_gains_preference():
    learner = CompetitionLearner()
    for _ in range(60):
        competition_update(learner, 2, True)
        for other in (0, 1, 3, 4):
            competition_update(learner, other, False)
    assert max(range(5), key=lambda i: learner.pi[i]) == 2
    assert learner.pi[2] > 0.5
    assert sum(learner.pi) == pytest.approx(1.0, abs=1e-9)


def test_competition_update_preserves_simplex():
    rng = random.Random(4)
    learner = CompetitionLearner()
    for _ in range(200):
        competition_update(learner, rng.randrange(5), rng.random() < 0.5)
        assert sum(learner.pi) == pytest.approx(1.0, abs=1e-9)


# -- worlds ---------------------------------------------------------------------------

def test_ch3_world_deterministic():
    cfg = Ch3Config(policy="act", providers=20, witnesses=20, consumers=3, problems=30)
    a = Ch3World(cfg, 9).run()
    b = Ch3World(cfg, 9).run()
    assert a == b


def test_ch3_world_collusive_reports_power():
    cfg = Ch3Config(policy="nocred", providers=20, witnesses=20, consumers=3,
                    problems=30, witness_mix="bs80", collusive=True)
    out = Ch3World(cfg, 1).run()
    assert 0.0 <= out["collusion_power"] <= 1.0


def test_crowd_world_deterministic():
    cfg = CrowdConfig(policy="sword", workers=40, requesters=3, steps=40,
                      witnesses=5, warmup_steps=20)
    a = CrowdWorld(cfg, 3).run()
    b = CrowdWorld(cfg, 3).run()
    assert a == b


def test_crowd_world_capacity_respected():
    cfg = CrowdConfig(policy="sword", workers=30, requesters=3, steps=60,
                      witnesses=5, warmup_steps=20)
    world = CrowdWorld(cfg, 7)
    world.warm_up()
    for _ in range(cfg.steps):
        world.step()
        for w, count in enumerate(world.step_completions_by_worker):
            assert count <= world.worker_capacity[w]


def test_crowd_world_task_conservation():
    cfg = CrowdConfig(policy="amt", workers=30, requesters=3, steps=80,
                      witnesses=5, warmup_steps=10)
    world = CrowdWorld(cfg, 11)
    out = world.run()
    # Every resolved batch either completed fully or expired; both paths are
    # mutually exclusive outcomes of the same lifecycle.
    assert out["groups_resolved"] >= 1
    times = out["group_times"]
    assert all(t is None or t >= 1 for t in times)


def test_accept_world_deterministic():
    cfg = AcceptConfig(policy="draft", trustees=20, trusters=40, steps=40)
    a = AcceptWorld(cfg, 13).run()
    b = AcceptWorld(cfg, 13).run()
    assert a == b


def test_accept_world_budget_respected():
    cfg = AcceptConfig(policy="draft", trustees=10, trusters=50, steps=50)
    world = AcceptWorld(cfg, 17)
    for _ in range(cfg.steps):
        counts_before = list(world.accepted_effort)
        world.step()
        for n in range(cfg.trustees):
            assert world.accepted_effort[n] - counts_before[n] <= world.budget[n]


def test_preset_registry():
    names = list_presets()
    assert names == sorted(names)
    for name in ("ch3-noncollusive", "ch3-collusive", "ch4-rdp", "ch6-comparison",
                 "ch6-competition", "ch7-draft", "crn"):
        assert name in names


def test_preset_unknown_scenario():
    with pytest.raises(ConfigError):
        build_world("nope", None, 0)


def test_preset_unknown_policy():
    with pytest.raises(ConfigError):
        build_world("ch6-comparison", "draft", 0)


def test_preset_unknown_override_key():
    with pytest.raises(ConfigError):
        build_world("ch4-rdp", None, 0, overrides={"bogus": 1})


def test_preset_rows_and_summary_shape():
    result = build_world("ch4-rdp", None, seed=0, horizon=30,
                         overrides={"trustees": 10, "trusters": 20})
    assert len(result["rows"]) == 30
    assert "mean_hon_reputation" in result["summary"]


def test_preset_deterministic_stream():
    kwargs = dict(scenario="crn", policy="act", seed=4, horizon=50)
    a = build_world(overrides={"bands": 1, "su_count": 10}, **kwargs)
    b = build_world(overrides={"bands": 1, "su_count": 10}, **kwargs)
    assert a == b


def test_competition_preset_smoke():
    result = build_world("ch6-competition", None, seed=1, horizon=25,
                         overrides={"workers": 30, "requesters": 3,
                                    "witnesses": 4, "warmup": 10})
    prefs = [row["requester_preference"] for row in result["rows"]]
    assert sum(prefs) == pytest.approx(1.0, abs=1e-6)


def test_allocation_trace_layout():
    result = build_world("ch6-comparison", "sword", seed=1, horizon=10,
                         overrides={"workers": 10, "requesters": 2, "witnesses": 3,
                                    "warmup": 5, "trace": 1})
    trace = result["trace"]
    assert trace[0] == "t,worker_id,D,theta,Q_before,A,served,Q_after"
    assert all(len(line.split(",")) == 8 for line in trace[1:])


def test_acceptance_trace_layout():
    result = build_world("ch7-draft", "draft", seed=1, horizon=10,
                         overrides={"trustees": 5, "trusters": 10, "trace": 1})
    trace = result["trace"]
    assert trace[0] == "t,trustee_id,context_id,a,a_over_e,lambda,accepted,rejected,budget_left"
    assert all(len(line.split(",")) == 9 for line in trace[1:])


def test_empty_world_step_only_advances_clock():
    cfg = CrowdConfig(policy="amt", workers=5, requesters=0, steps=5,
                      witnesses=2, warmup_steps=2)
    world = CrowdWorld(cfg, 1)
    world.warm_up()
    t0 = world.t
    welfare_len = len(world.welfare_stream)
    world.step()
    assert world.t == t0 + 1
    assert world.welfare_stream[welfare_len:] == [0.0]
    assert all(len(q) == 0 for q in world.queues)
    assert world.group_times == []


def test_single_honest_worker_single_request_yields_positive_rating():
    cfg = CrowdConfig(policy="amt", workers=1, requesters=1, group_size=1,
                      steps=3, witnesses=0, warmup_steps=0, hon_x=100)
    # hon_x=100 -> behavior split (hon, mh, mm, mal) puts the single worker
    # in a high-quality group (success prob 0.9).
    world = CrowdWorld(cfg, 2)
    world.run()
    pooled = world.ledger.pooled_evidence(0, 0)
    assert pooled.positives >= 1
    assert pooled.negatives == 0


def test_clean_sweep_drops_expired_and_rates_negative():
    cfg = CrowdConfig(policy="amt", workers=2, requesters=1, steps=2,
                      witnesses=0, warmup_steps=0)
    world = CrowdWorld(cfg, 3)
    from trustsim.testbed.crowd import HitGroup
    group = HitGroup(requester=0, size=4, proposed_at=0, deadline=4)
    world.open_group[0] = group
    world.queues[1].append((group, 0))
    world.t = 5  # past the deadline
    before = world.ledger.pooled_evidence(1, 0).negatives
    world._sweep()
    assert len(world.queues[1]) == 0
    assert world.ledger.pooled_evidence(1, 0).negatives == before + 1
    assert group.resolved and group.completion_time is None


def test_clean_sweep_spares_live_tasks():
    cfg = CrowdConfig(policy="amt", workers=1, requesters=1, steps=2,
                      witnesses=0, warmup_steps=0)
    world = CrowdWorld(cfg, 4)
    from trustsim.testbed.crowd import HitGroup
    group = HitGroup(requester=0, size=1, proposed_at=0, deadline=10)
    world.open_group[0] = group
    world.queues[0].append((group, 0))
    world.t = 5
    world._sweep()
    assert len(world.queues[0]) == 1


def test_allocated_task_conservation():
    cfg = CrowdConfig(policy="brs2002e", workers=30, requesters=3, steps=100,
                      witnesses=5, warmup_steps=10)
    world = CrowdWorld(cfg, 21)
    world.run()
    allocated = sum(world.allocated_counts)
    queued = sum(len(q) for q in world.queues)
    assert allocated == world.completion_events + world.swept_events + queued


def test_expired_task_never_rates_positive():
    cfg = CrowdConfig(policy="amt", workers=1, requesters=1, steps=2,
                      witnesses=0, warmup_steps=0, hon_x=100)
    world = CrowdWorld(cfg, 5)
    from trustsim.testbed.crowd import HitGroup
    group = HitGroup(requester=0, size=1, proposed_at=0, deadline=2)
    world.open_group[0] = group
    world.queues[0].append((group, 0))
    world.t = 6  # serve far past the deadline; quality may still be good
    world._serve()
    pooled = world.ledger.pooled_evidence(0, 0)
    assert pooled.positives == 0
    assert pooled.negatives == 1
