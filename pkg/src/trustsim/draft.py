"""Distributed request admission for trustees (DRAFT).

Each trustee ranks its per-context queues by availability score per unit
effort and admits an integer number of new requests under its per-step
effort budget; everything else is rejected back to the requesters.
Accepted work is served strictly first-come-first-served across contexts.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

from .errors import ContractViolationError

AgentId = Hashable


@dataclass(frozen=True)
class ContextSpec:
    context_id: int
    max_gain: float
    effort: int
    deadline: int

    def __post_init__(self) -> None:
        if self.effort <= 0:
            raise ContractViolationError("effort must be positive")
        if self.deadline <= 0:
            raise ContractViolationError("deadline must be positive")


#: Default task-type table: gain and effort fall together, deadlines loosen.
DEFAULT_CONTEXTS: tuple[ContextSpec, ...] = (
    ContextSpec(1, 5.0, 5, 1),
    ContextSpec(2, 4.0, 4, 2),
    ContextSpec(3, 3.0, 3, 2),
    ContextSpec(4, 2.0, 2, 3),
    ContextSpec(5, 1.0, 1, 3),
)


@dataclass(slots=True)
class Task:
    """A request sitting in (or headed for) a trustee queue."""

    truster_id: AgentId
    context_id: int
    proposed_at: int
    accepted_at: int
    seq: int = 0


@dataclass
class AcceptPlan:
    accepted: dict
    rejected: dict

    def accepted_count(self, context_id: int) -> int:
        return self.accepted.get(context_id, 0)

    def rejected_count(self, context_id: int) -> int:
        return self.rejected.get(context_id, 0)


@dataclass(slots=True)
class Completion:
    task: Task
    completed_at: int
    quality_ok: bool


class TrusteeState:
    """Work queues, effort budget and per-context self-reputation of one trustee."""

    def __init__(self, trustee_id: AgentId, effort_budget: int,
                 specs: Sequence[ContextSpec] = DEFAULT_CONTEXTS):
        self.trustee_id = trustee_id
        self.effort_budget = effort_budget
        self.specs = {s.context_id: s for s in specs}
        self.backlog = {s.context_id: 0 for s in specs}
        self.reputation = {s.context_id: 0.5 for s in specs}
        self.fifo: deque[Task] = deque()
        self._seq = 0

    def enqueue(self, truster_id: AgentId, context_id: int, proposed_at: int, now: int) -> Task:
        task = Task(truster_id, context_id, proposed_at, accepted_at=now, seq=self._seq)
        self._seq += 1
        self.fifo.append(task)
        self.backlog[context_id] += 1
        return task

    def queued_effort(self) -> int:
        return sum(self.backlog[c] * self.specs[c].effort for c in self.backlog)


def availability_score(backlog: int, reputation: float, max_gain: float, v: float) -> float:
    """How much room a context queue has, valued by reputation-weighted gain."""
    if v <= 0:
        raise ContractViolationError("v must be positive")
    return v * reputation * max_gain - backlog


def accept_plan(
    state: TrusteeState,
    incoming: dict,
    specs: Sequence[ContextSpec],
    v: float,
) -> AcceptPlan:
    """Decide how many of this step's requests to admit per context.

    Contexts are visited in descending availability-per-effort order (ties:
    higher gain, then lower context id); a context with non-positive score
    admits nothing.  Every request not admitted is rejected.
    """
    budget = state.effort_budget
    ranked = []
    for spec in specs:
        lam = incoming.get(spec.context_id, 0)
        score = availability_score(state.backlog[spec.context_id],
                                   state.reputation[spec.context_id],
                                   spec.max_gain, v)
        ranked.append((score / spec.effort, spec, lam))
    ranked.sort(key=lambda item: (-item[0], -item[1].max_gain, item[1].context_id))
    accepted: dict = {}
    rejected: dict = {}
    for per_effort, spec, lam in ranked:
        if lam <= 0:
            continue
        if per_effort > 0.0:
            grant = min(lam, budget // spec.effort)
        else:
            grant = 0
        if grant > 0:
            accepted[spec.context_id] = grant
            budget -= grant * spec.effort
        if lam - grant > 0:
            rejected[spec.context_id] = lam - grant
    return AcceptPlan(accepted=accepted, rejected=rejected)


ACCEPTANCE_TRACE_HEADER = "t,trustee_id,context_id,a,a_over_e,lambda,accepted,rejected,budget_left"


def acceptance_trace_rows(
    t: int,
    state: TrusteeState,
    incoming: dict,
    plan: AcceptPlan,
    specs: Sequence[ContextSpec],
    v: float,
) -> list[str]:
    """Per-context trace lines for one trustee-step (see ACCEPTANCE_TRACE_HEADER)."""
    budget_left = state.effort_budget - sum(
        plan.accepted.get(s.context_id, 0) * s.effort for s in specs
    )
    rows = []
    for spec in specs:
        c = spec.context_id
        lam = incoming.get(c, 0)
        score = availability_score(state.backlog[c], state.reputation[c], spec.max_gain, v)
        rows.append(
            f"{t},{state.trustee_id},{c},{score:.6f},{score / spec.effort:.6f},"
            f"{lam},{plan.accepted.get(c, 0)},{plan.rejected.get(c, 0)},{budget_left}"
        )
    return rows


def serve_fifo(
    state: TrusteeState,
    effort_budget: int,
    success_prob: float,
    rng: random.Random,
    now: int,
    only_before: Optional[int] = None,
) -> list[Completion]:
    """Serve queued tasks in acceptance order while their effort fits.

    The head task blocks the line when it does not fit the remaining budget
    (no skip-ahead).  ``only_before`` stops service at tasks accepted at or
    after that step, so freshly admitted work can be made to wait a step.
    Each completion's quality is drawn from the trustee's success rate.
    """
    completions: list[Completion] = []
    remaining = effort_budget
    fifo = state.fifo
    while fifo:
        head = fifo[0]
        if only_before is not None and head.accepted_at >= only_before:
            break
        effort = state.specs[head.context_id].effort
        if effort > remaining:
            break
        fifo.popleft()
        state.backlog[head.context_id] -= 1
        remaining -= effort
        completions.append(Completion(task=head, completed_at=now,
                                      quality_ok=rng.random() < success_prob))
    return completions
