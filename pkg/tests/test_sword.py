"""Central allocator: targets, desirability, plans, queue dynamics."""

import random

import pytest

from trustsim.errors import ContractViolationError
from trustsim.sword import (
    AllocationPlan,
    SwordConfig,
    WorkerState,
    allocate,
    desirability,
    queue_bound,
    queue_bound_ok,
    step_queue,
    step_welfare,
    target_queue,
)


def _worker(wid=0, rep=0.6, peak=None, cap=5, backlog=0):
    return WorkerState(worker_id=wid, reputation=rep,
                       reputation_peak=peak if peak is not None else max(rep, rep),
                       capacity=cap, backlog=backlog)


def test_config_defaults():
    cfg = SwordConfig()
    assert (cfg.max_gain, cfg.task_cost, cfg.n_weight, cfg.v) == (1.0, 0.2, 1.0, 2.0)
    assert (cfg.rep_floor, cfg.explore_prob) == (0.6, 0.1)


def test_target_queue_formula():
    cfg = SwordConfig(n_weight=1, v=2, max_gain=1)
    w = _worker(rep=1.0, peak=1.0, cap=5)
    assert target_queue(w, cfg) == pytest.approx(7.0)


def test_target_queue_no_reward_term():
    w = _worker(rep=1.0, peak=1.0, cap=5)
    assert target_queue(w, SwordConfig(v=0.0)) == pytest.approx(5.0)
    w0 = _worker(rep=0.0, peak=0.0, cap=5)
    assert target_queue(w0, SwordConfig(v=2.0)) == pytest.approx(5.0)


def test_desirability_worked_example():
    cfg = SwordConfig(v=2, max_gain=1, task_cost=0.2, n_weight=1)
    w = _worker(rep=0.6, peak=1.0, cap=5, backlog=0)
    assert desirability(w, cfg) == pytest.approx(5.8)


def test_desirability_negative_when_overfull():
    cfg = SwordConfig()
    w = _worker(rep=0.8, peak=0.8, cap=5, backlog=40)
    assert desirability(w, cfg) < 0


def test_desirability_perfect_worker():
    cfg = SwordConfig(task_cost=0.0)
    w = _worker(rep=1.0, peak=1.0, cap=5, backlog=0)
    assert desirability(w, cfg) == pytest.approx(target_queue(w, cfg))


def test_desirability_strictly_decreasing_in_backlog():
    cfg = SwordConfig()
    base = _worker(rep=0.8, peak=0.8, cap=5, backlog=3)
    deeper = _worker(rep=0.8, peak=0.8, cap=5, backlog=4)
    assert desirability(deeper, cfg) < desirability(base, cfg)


def _no_explore(cfg=None):
    cfg = cfg or SwordConfig()
    cfg.explore_prob = 0.0
    return cfg


def test_allocate_zero_requests():
    plan = allocate([_worker()], 0, _no_explore(), random.Random(0))
    assert plan.counts == {} and plan.leftover == 0


def test_allocate_single_worker_within_capacity():
    w = _worker(rep=0.9, peak=0.9, cap=5)
    plan = allocate([w], 3, _no_explore(), random.Random(0))
    assert plan.count(w.worker_id) == 3 and plan.leftover == 0


def test_allocate_skips_worker_over_target():
    cfg = _no_explore()
    w = _worker(rep=0.9, peak=0.9, cap=5, backlog=50)  # far beyond target
    plan = allocate([w], 3, cfg, random.Random(0))
    assert plan.count(w.worker_id) == 0 and plan.leftover == 3


def test_allocate_conservation_and_caps():
    rng = random.Random(1)
    workers = [
        WorkerState(i, rep, max(rep, 0.7), cap, backlog)
        for i, (rep, cap, backlog) in enumerate(
            [(0.9, 5, 2), (0.7, 10, 0), (0.3, 20, 0), (0.65, 4, 1)]
        )
    ]
    for incoming in (0, 3, 17, 100):
        plan = allocate(workers, incoming, _no_explore(), rng)
        assert plan.total_assigned + plan.leftover == incoming
        for w in workers:
            assert plan.count(w.worker_id) <= w.capacity


def test_allocate_eligibility_floor():
    rng = random.Random(2)
    workers = [
        WorkerState(0, 0.59, 0.59, 10, 0),
        WorkerState(1, 0.61, 0.61, 10, 0),
    ]
    plan = allocate(workers, 5, _no_explore(), rng)
    assert plan.count(0) == 0
    assert plan.count(1) == 5


def test_allocate_exploration_respects_caps():
    cfg = SwordConfig(explore_prob=1.0)
    rng = random.Random(3)
    workers = [WorkerState(i, 0.1, 0.1, 2, 0) for i in range(4)]
    plan = allocate(workers, 100, cfg, rng)
    assert plan.explored
    assert plan.total_assigned == 8
    assert plan.leftover == 92
    assert all(c <= 2 for c in plan.counts.values())


def test_allocate_deterministic_given_seed():
    workers = [WorkerState(i, 0.6 + 0.01 * i, 0.9, 5, i % 3) for i in range(20)]
    cfg = SwordConfig()
    p1 = allocate(workers, 30, cfg, random.Random(42))
    p2 = allocate(workers, 30, cfg, random.Random(42))
    assert p1.counts == p2.counts and p1.leftover == p2.leftover


def test_step_queue_examples():
    assert step_queue(3, min(5, 3), 2) == 2
    assert step_queue(0, 0, 0) == 0
    assert step_queue(10, 5, 5) == 10


def test_step_queue_contract():
    with pytest.raises(ContractViolationError):
        step_queue(3, 5, 0)


def test_step_welfare_examples():
    cfg = SwordConfig(max_gain=1.0, task_cost=0.2)
    assert step_welfare([], 0, cfg) == 0.0
    completions = [(True, True)] * 5
    assert step_welfare(completions, 5, cfg) == pytest.approx(4.0)
    late = [(False, True)] * 4
    assert step_welfare(late, 10, cfg) == pytest.approx(-2.0)


def test_queue_bound_respected_under_simulation():
    # Random small simulation: allocation capped by capacity keeps every
    # backlog within target + capacity, from empty queues, any seed.
    for seed in range(5):
        rng = random.Random(seed)
        cfg = SwordConfig()
        caps = [rng.randrange(1, 8) for _ in range(6)]
        backlogs = [0] * 6
        peaks = [0.5] * 6
        for t in range(200):
            reps = [min(1.0, max(0.0, rng.gauss(0.6, 0.2))) for _ in range(6)]
            peaks = [max(p, r) for p, r in zip(peaks, reps)]
            workers = [
                WorkerState(i, reps[i], peaks[i], caps[i], backlogs[i]) for i in range(6)
            ]
            plan = allocate(workers, rng.randrange(0, 30), cfg, rng)
            for i in range(6):
                served = min(backlogs[i], caps[i])
                backlogs[i] = step_queue(backlogs[i], served, plan.count(i))
            for i in range(6):
                w = WorkerState(i, reps[i], peaks[i], caps[i], backlogs[i])
                assert queue_bound_ok(w, cfg), (seed, t, i, backlogs[i], queue_bound(w, cfg))
