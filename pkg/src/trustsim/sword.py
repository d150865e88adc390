"""Centralized queue-aware task allocation (SWORD).

The broker scores each worker by how far its backlog sits below a
reputation-scaled target queue length, ranks workers by that desirability,
and hands out integer batches of requests capped by per-step capacity.  A
fixed fraction of steps is spent on random exploration instead.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .errors import ContractViolationError

WorkerId = Hashable


@dataclass
class SwordConfig:
    v: float = 2.0            # emphasis on reward vs. backlog drift
    n_weight: float = 1.0     # capacity multiple in the target queue
    max_gain: float = 1.0
    task_cost: float = 0.2
    rep_floor: float = 0.6    # minimum reputation for exploitation
    explore_prob: float = 0.1


@dataclass
class WorkerState:
    worker_id: WorkerId
    reputation: float
    reputation_peak: float
    capacity: int
    backlog: int

    def __post_init__(self) -> None:
        if self.backlog < 0:
            raise ContractViolationError("backlog must be non-negative")
        if self.reputation_peak < self.reputation:
            raise ContractViolationError("reputation_peak below current reputation")


@dataclass
class AllocationPlan:
    counts: dict
    leftover: int
    explored: bool = False

    def count(self, worker_id: WorkerId) -> int:
        return self.counts.get(worker_id, 0)

    @property
    def total_assigned(self) -> int:
        return sum(self.counts.values())


def target_queue(w: WorkerState, cfg: SwordConfig) -> float:
    """Backlog level the broker is willing to fill this worker up to."""
    return cfg.n_weight * w.capacity + cfg.v * cfg.max_gain * w.reputation_peak


def desirability(w: WorkerState, cfg: SwordConfig) -> float:
    """Allocation priority: headroom below target minus the risk-adjusted cost."""
    penalty = (1.0 - w.reputation) * cfg.max_gain + cfg.task_cost
    return target_queue(w, cfg) - w.backlog - cfg.v * penalty


def allocate(
    workers: Sequence[WorkerState],
    incoming: int,
    cfg: SwordConfig,
    rng: random.Random,
) -> AllocationPlan:
    """Distribute ``incoming`` requests for one step.

    Exploitation ranks eligible workers (reputation at or above the floor,
    positive desirability) by desirability and fills greedily up to each
    worker's capacity.  With probability ``explore_prob`` the whole step is
    an exploration batch assigned uniformly at random instead, still
    respecting capacity caps.  Whatever cannot be placed is returned as
    leftover.
    """
    if incoming < 0:
        raise ContractViolationError("incoming request count must be non-negative")
    counts: dict = {}
    remaining = incoming
    explored = rng.random() < cfg.explore_prob
    if explored:
        open_workers = [w for w in workers if w.capacity > 0]
        slack = {w.worker_id: w.capacity for w in open_workers}
        while remaining > 0 and open_workers:
            idx = rng.randrange(len(open_workers))
            w = open_workers[idx]
            counts[w.worker_id] = counts.get(w.worker_id, 0) + 1
            slack[w.worker_id] -= 1
            remaining -= 1
            if slack[w.worker_id] == 0:
                open_workers[idx] = open_workers[-1]
                open_workers.pop()
        return AllocationPlan(counts=counts, leftover=remaining, explored=True)

    scored = []
    for w in workers:
        if w.reputation < cfg.rep_floor:
            continue
        d = desirability(w, cfg)
        if d > 0.0:
            scored.append((d, w))
    scored.sort(key=lambda item: (-item[0], -item[1].reputation, item[1].backlog, str(item[1].worker_id)))
    for d, w in scored:
        if remaining == 0:
            break
        grant = min(remaining, w.capacity)
        if grant > 0:
            counts[w.worker_id] = grant
            remaining -= grant
    return AllocationPlan(counts=counts, leftover=remaining, explored=False)


def step_queue(backlog: int, served: int, arrived: int) -> int:
    """One step of the queue recursion."""
    if served > backlog:
        raise ContractViolationError(f"served={served} exceeds backlog={backlog}")
    if arrived < 0:
        raise ContractViolationError("arrivals must be non-negative")
    return max(backlog - served, 0) + arrived


def step_welfare(
    completions: Iterable[tuple[bool, bool]],
    allocated: int,
    cfg: SwordConfig,
) -> float:
    """Per-step social welfare: on-time quality gains minus allocation cost.

    ``completions`` yields (on_time, quality_ok) pairs for every task
    finished this step.
    """
    gain = sum(cfg.max_gain for on_time, ok in completions if on_time and ok)
    return gain - cfg.task_cost * allocated


def queue_bound(w: WorkerState, cfg: SwordConfig) -> float:
    """Runtime ceiling the backlog must never exceed (checked every step)."""
    return target_queue(w, cfg) + w.capacity


def queue_bound_ok(w: WorkerState, cfg: SwordConfig) -> bool:
    return w.backlog <= queue_bound(w, cfg) + 1e-9


ALLOCATION_TRACE_HEADER = "t,worker_id,D,theta,Q_before,A,served,Q_after"


def allocation_trace_row(t: int, w: WorkerState, cfg: SwordConfig,
                         assigned: int, served: int, backlog_after: int) -> str:
    """One per-step trace line for a worker (see ALLOCATION_TRACE_HEADER)."""
    return (f"{t},{w.worker_id},{desirability(w, cfg):.6f},{target_queue(w, cfg):.6f},"
            f"{w.backlog},{assigned},{served},{backlog_after}")
