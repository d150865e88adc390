"""Distributed admission: availability scores, plans, FIFO service."""

import random

import pytest

from trustsim.draft import (
    DEFAULT_CONTEXTS,
    AcceptPlan,
    ContextSpec,
    TrusteeState,
    accept_plan,
    availability_score,
    serve_fifo,
)


def test_default_context_table():
    table = [(s.context_id, s.max_gain, s.effort, s.deadline) for s in DEFAULT_CONTEXTS]
    assert table == [
        (1, 5.0, 5, 1), (2, 4.0, 4, 2), (3, 3.0, 3, 2), (4, 2.0, 2, 3), (5, 1.0, 1, 3),
    ]
    # Effort tracks gain at a fixed ratio across the table.
    ratios = {s.effort / s.max_gain for s in DEFAULT_CONTEXTS}
    assert ratios == {1.0}


def test_availability_score_worked_example():
    assert availability_score(10, 0.9, 5.0, 100.0) == pytest.approx(440.0)


def test_availability_score_break_even_and_negative():
    assert availability_score(int(100 * 0.5 * 2.0), 0.5, 2.0, 100.0) == pytest.approx(0.0)
    assert availability_score(3, 0.0, 5.0, 100.0) == pytest.approx(-3.0)


def _state(budget=25):
    return TrusteeState("n", budget, DEFAULT_CONTEXTS)


def test_accept_plan_zero_demand():
    plan = accept_plan(_state(), {}, DEFAULT_CONTEXTS, v=100.0)
    assert plan.accepted == {} and plan.rejected == {}


def test_accept_plan_budget_floor_division():
    state = TrusteeState("n", 7, DEFAULT_CONTEXTS[:1])
    state.reputation[1] = 0.9
    plan = accept_plan(state, {1: 2}, DEFAULT_CONTEXTS[:1], v=100.0)
    assert plan.accepted_count(1) == 1
    assert plan.rejected_count(1) == 1


def test_accept_plan_nonpositive_score_rejects_all():
    state = _state()
    state.backlog[1] = 1000
    plan = accept_plan(state, {1: 4}, DEFAULT_CONTEXTS, v=100.0)
    assert plan.accepted_count(1) == 0
    assert plan.rejected_count(1) == 4


def test_accept_plan_constraints_hold():
    rng = random.Random(9)
    for _ in range(100):
        state = _state(budget=rng.randrange(1, 60))
        for spec in DEFAULT_CONTEXTS:
            state.backlog[spec.context_id] = rng.randrange(0, 30)
            state.reputation[spec.context_id] = rng.random()
        demand = {s.context_id: rng.randrange(0, 20) for s in DEFAULT_CONTEXTS}
        plan = accept_plan(state, demand, DEFAULT_CONTEXTS, v=10.0)
        effort = sum(plan.accepted.get(s.context_id, 0) * s.effort for s in DEFAULT_CONTEXTS)
        assert effort <= state.effort_budget
        for s in DEFAULT_CONTEXTS:
            c = s.context_id
            assert 0 <= plan.accepted.get(c, 0) <= demand.get(c, 0)
            assert plan.accepted.get(c, 0) + plan.rejected.get(c, 0) == demand.get(c, 0)


def test_accept_plan_priority_ordering():
    # Two contexts, same effort: the higher availability-per-effort queue
    # drains the budget before the lower one sees any.
    specs = (ContextSpec(1, 4.0, 2, 2), ContextSpec(2, 4.0, 2, 2))
    state = TrusteeState("n", 8, specs)
    state.reputation[1] = 0.9
    state.reputation[2] = 0.6
    plan = accept_plan(state, {1: 3, 2: 3}, specs, v=10.0)
    assert plan.accepted_count(1) == 3
    assert plan.accepted_count(2) == 1


def test_serve_fifo_empty():
    state = _state()
    assert serve_fifo(state, 25, 0.9, random.Random(0), now=1) == []


def test_serve_fifo_budget_arithmetic():
    state = TrusteeState("n", 25, DEFAULT_CONTEXTS)
    for _ in range(5):
        state.enqueue("t", 1, proposed_at=0, now=0)
    done = serve_fifo(state, 25, 1.0, random.Random(0), now=1)
    assert len(done) == 5
    assert state.backlog[1] == 0


def test_serve_fifo_head_of_line_blocking():
    state = TrusteeState("n", 25, DEFAULT_CONTEXTS)
    state.enqueue("t", 1, proposed_at=0, now=0)  # effort 5 at the head
    state.enqueue("t", 5, proposed_at=0, now=0)  # effort 1 behind it
    done = serve_fifo(state, 4, 1.0, random.Random(0), now=1)
    assert done == []
    assert state.backlog[1] == 1 and state.backlog[5] == 1


def test_serve_fifo_only_before_excludes_fresh_work():
    state = TrusteeState("n", 25, DEFAULT_CONTEXTS)
    state.enqueue("t", 5, proposed_at=0, now=0)
    state.enqueue("t", 5, proposed_at=1, now=1)
    done = serve_fifo(state, 25, 1.0, random.Random(0), now=1, only_before=1)
    assert len(done) == 1
    assert done[0].task.accepted_at == 0


def test_serve_fifo_order_is_acceptance_order():
    state = TrusteeState("n", 25, DEFAULT_CONTEXTS)
    state.enqueue("a", 5, proposed_at=0, now=0)
    state.enqueue("b", 4, proposed_at=0, now=0)
    state.enqueue("c", 5, proposed_at=0, now=0)
    done = serve_fifo(state, 25, 1.0, random.Random(0), now=1)
    assert [d.task.truster_id for d in done] == ["a", "b", "c"]
