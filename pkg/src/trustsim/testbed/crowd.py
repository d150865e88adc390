"""Crowdsourcing world: requesters publish task batches, workers serve queues.

One world runs one allocation policy (central queue-aware broker, greedy
reputation ranking, two dynamic explorers, or first-come-first-served) so
policies can be compared across identically seeded worlds.  A competition
variant runs all five side by side and lets agents learn which system to
patronize.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..baselines import (
    KnowledgeRecord,
    LongShortTrust,
    amt_fcfs_match,
    greedy_hit_allocate,
    h2010e_allocate,
    m2009e_allocate,
)
from ..errors import ConfigError, InvariantViolationError
from ..metrics import fairness_index
from ..reputation import POOLED, BetaEvidence, ReputationLedger, brs_score
from ..sword import (
    ALLOCATION_TRACE_HEADER,
    AllocationPlan,
    SwordConfig,
    WorkerState,
    allocate,
    allocation_trace_row,
    queue_bound,
)
from .base import derive_rng, hon_x_split

CROWD_POLICIES = ("sword", "brs2002e", "m2009e", "h2010e", "amt")

CONTEXT = 0

#: (success probability, per-step capacity) per behavior group.
WORKER_GROUPS = (
    ("hon", 0.9, 5),
    ("mh", 0.7, 10),
    ("mm", 0.3, 10),
    ("mal", 0.1, 20),
)


@dataclass
class CrowdConfig:
    policy: str = "sword"
    workers: int = 1000
    requesters: int = 50
    hon_x: int = 50
    group_size: int = 40        # tasks per published batch
    deadline_steps: int = 14
    steps: int = 1000
    witnesses: int = 50
    warmup_steps: int = 200
    sword: SwordConfig = field(default_factory=SwordConfig)
    explore_rate: float = 0.1   # greedy/explorer policies' random-allocation share
    knowledge_saturation: int = 20
    min_observations: int = 20  # direct ratings needed before greedy exploitation trusts a worker
    trace: bool = False         # collect the per-step allocation trace

    def __post_init__(self) -> None:
        if self.policy not in CROWD_POLICIES:
            raise ConfigError(f"policy {self.policy!r} not usable in this scenario")


class HitGroup:
    __slots__ = ("requester", "size", "proposed_at", "deadline", "completed",
                 "resolved", "completion_time")

    def __init__(self, requester: int, size: int, proposed_at: int, deadline: int):
        self.requester = requester
        self.size = size
        self.proposed_at = proposed_at
        self.deadline = deadline
        self.completed = 0
        self.resolved = False          # all done or expired
        self.completion_time: Optional[int] = None


class CrowdWorld:
    def __init__(self, cfg: CrowdConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.t = 0
        counts = hon_x_split(cfg.hon_x, cfg.workers)
        self.worker_success: list[float] = []
        self.worker_capacity: list[int] = []
        self.hon_ids: list[int] = []
        wid = 0
        for (name, prob, cap), n in zip(WORKER_GROUPS, counts):
            for _ in range(n):
                self.worker_success.append(prob)
                self.worker_capacity.append(cap)
                if name == "hon":
                    self.hon_ids.append(wid)
                wid += 1
        self.queues: list[deque] = [deque() for _ in range(cfg.workers)]  # (group, allocated_at)
        self.ledger = ReputationLedger(aggregation=POOLED)
        self.rep_peak = [0.5] * cfg.workers
        self.open_group: list[Optional[HitGroup]] = [None] * cfg.requesters
        self.broker_pool: deque = deque()      # central queue of unassigned tasks
        self.board: deque = deque()            # open tasks for the pull policy
        self.allocated_counts = [0] * cfg.workers
        self.group_times: list[Optional[int]] = []
        self.welfare_stream: list[float] = []
        self.quality_events = 0
        self.completion_events = 0
        self.swept_events = 0
        self.rng_policy = derive_rng(seed, "policy")
        self.serve_rngs = [derive_rng(seed, "serve", w) for w in range(cfg.workers)]
        # Requester-local state for the decentralized policies.
        self.req_evidence: list[dict[int, BetaEvidence]] = [dict() for _ in range(cfg.requesters)]
        self.req_rngs = [derive_rng(seed, "requester", r) for r in range(cfg.requesters)]
        self.knowledge: list[dict[int, KnowledgeRecord]] = [dict() for _ in range(cfg.requesters)]
        self.lst: list[LongShortTrust] = [LongShortTrust() for _ in range(cfg.requesters)]
        self.testimony_mean: dict[int, float] = {}
        self.lemma_violations = 0
        # Optional per-step participation masks (competition mode).
        self.worker_active: Optional[list[bool]] = None
        self.requester_active: Optional[list[bool]] = None
        self.step_completions_by_worker = [0] * cfg.workers
        self.step_ontime_by_requester = [0] * cfg.requesters
        self.step_resolved: list[tuple[int, bool]] = []
        self.trace_rows: list[str] = [ALLOCATION_TRACE_HEADER] if cfg.trace else []
        self._step_states: list[WorkerState] = []
        self._step_plan: Optional[AllocationPlan] = None

    # -- warm-up ---------------------------------------------------------------

    def warm_up(self) -> None:
        """Common witnesses probe random workers to seed shared evidence."""
        cfg = self.cfg
        witness_evidence: list[dict[int, BetaEvidence]] = [dict() for _ in range(cfg.witnesses)]
        witness_rngs = [derive_rng(self.seed, "witness", wit) for wit in range(cfg.witnesses)]
        for _ in range(cfg.warmup_steps):
            for wit in range(cfg.witnesses):
                rng = witness_rngs[wit]
                worker = rng.randrange(cfg.workers)
                ok = rng.random() < self.worker_success[worker]
                ev = witness_evidence[wit].setdefault(worker, BetaEvidence())
                if ok:
                    ev.positives += 1
                else:
                    ev.negatives += 1
                self.ledger.record_outcome_flag(worker, CONTEXT, ("witness", wit), ok)
        sums: dict[int, float] = {}
        counts: dict[int, int] = {}
        observations: dict[int, int] = {}
        for per_witness in witness_evidence:
            for worker, ev in per_witness.items():
                sums[worker] = sums.get(worker, 0.0) + brs_score(ev)
                counts[worker] = counts.get(worker, 0) + 1
                observations[worker] = observations.get(worker, 0) + ev.positives + ev.negatives
        self.testimony_mean = {w: sums[w] / counts[w] for w in sums}
        for rec_map in self.knowledge:
            for worker, seen in observations.items():
                rec_map.setdefault(worker, KnowledgeRecord()).add_witness_observations(
                    seen, self.cfg.knowledge_saturation
                )

    # -- reputation views --------------------------------------------------------

    def _pooled_rep(self, worker: int) -> float:
        return self.ledger.reputation(worker, CONTEXT)

    def _requester_view(self, requester: int, worker: int) -> float:
        ev = self.req_evidence[requester].get(worker)
        direct = brs_score(ev) if ev is not None else 0.5
        if self.cfg.policy == "brs2002e":
            return direct
        mean = self.testimony_mean.get(worker)
        if mean is None:
            return direct
        return 0.5 * direct + 0.5 * mean

    def _known_workers(self, requester: int) -> list[tuple[int, float]]:
        if self.cfg.policy == "brs2002e":
            known = self.req_evidence[requester].keys()
        else:
            known = set(self.req_evidence[requester]) | set(self.testimony_mean)
        return [(w, self._requester_view(requester, w)) for w in sorted(known)]

    # -- per-step phases ---------------------------------------------------------

    def _propose(self) -> list[HitGroup]:
        new_groups = []
        for requester in range(self.cfg.requesters):
            if self.requester_active is not None and not self.requester_active[requester]:
                continue
            if self.open_group[requester] is None:
                group = HitGroup(requester, self.cfg.group_size, self.t,
                                 self.t + self.cfg.deadline_steps)
                self.open_group[requester] = group
                new_groups.append(group)
        return new_groups

    def _assign(self, worker: int, group: HitGroup, n: int = 1) -> None:
        for _ in range(n):
            self.queues[worker].append((group, self.t))
        self.allocated_counts[worker] += n

    def _allocate_sword(self, new_groups: list[HitGroup]) -> int:
        cfg = self.cfg
        for group in new_groups:
            for _ in range(group.size):
                self.broker_pool.append(group)
        states = []
        for w in range(cfg.workers):
            rep = self._pooled_rep(w)
            if rep > self.rep_peak[w]:
                self.rep_peak[w] = rep
            states.append(WorkerState(
                worker_id=w, reputation=rep, reputation_peak=self.rep_peak[w],
                capacity=self.worker_capacity[w], backlog=len(self.queues[w]),
            ))
        incoming = len(self.broker_pool)
        plan: AllocationPlan = allocate(states, incoming, cfg.sword, self.rng_policy)
        allocated = 0
        for worker, count in plan.counts.items():
            for _ in range(count):
                group = self.broker_pool.popleft()
                self._assign(worker, group)
                allocated += 1
        if cfg.trace:
            self._step_states = states
            self._step_plan = plan
        return allocated

    def _allocate_requester_batch(self, group: HitGroup) -> int:
        """Greedy/explorer policies place a whole batch at proposal time."""
        cfg = self.cfg
        requester = group.requester
        rng = self.req_rngs[requester]
        known = self._known_workers(requester)
        counts: dict[int, int] = {}
        if cfg.policy == "brs2002e":
            if rng.random() >= cfg.explore_rate:
                evidence = self.req_evidence[requester]
                observed = [
                    (w, v) for w, v in known
                    if w in evidence
                    and evidence[w].positives + evidence[w].negatives >= cfg.min_observations
                ]
                counts = greedy_hit_allocate(observed, group.size, cfg.sword.rep_floor)
            if not counts:
                counts = self._explore_counts(requester, group.size, rng)
        elif cfg.policy == "m2009e":
            counts, _ = m2009e_allocate(self.knowledge[requester], known, group.size,
                                        cfg.sword.rep_floor, rng)
            if not counts:
                counts = self._random_counts(group.size, rng)
        elif cfg.policy == "h2010e":
            lst = self.lst[requester]
            candidates = [(w, v) for w, v in known if w in lst.lt]
            if not candidates:
                counts = self._random_counts(group.size, rng)
            else:
                counts = h2010e_allocate(lst, candidates, group.size, cfg.sword.rep_floor, rng)
                if not counts:
                    counts = self._random_counts(group.size, rng)
        else:
            raise ConfigError(f"batch allocation does not apply to {cfg.policy!r}")
        total = 0
        for worker, n in counts.items():
            self._assign(worker, group, n)
            total += n
        return total

    def _random_counts(self, n_hits: int, rng: random.Random) -> dict[int, int]:
        counts: dict[int, int] = {}
        for _ in range(n_hits):
            w = rng.randrange(self.cfg.workers)
            counts[w] = counts.get(w, 0) + 1
        return counts

    def _explore_counts(self, requester: int, n_hits: int, rng: random.Random) -> dict[int, int]:
        """Random allocation biased to workers this requester barely knows."""
        evidence = self.req_evidence[requester]
        sparse = [w for w in range(self.cfg.workers)
                  if w not in evidence
                  or (evidence[w].positives + evidence[w].negatives) < 5]
        if not sparse:
            return self._random_counts(n_hits, rng)
        counts: dict[int, int] = {}
        for _ in range(n_hits):
            w = sparse[rng.randrange(len(sparse))]
            counts[w] = counts.get(w, 0) + 1
        return counts

    def _allocate_amt(self, new_groups: list[HitGroup]) -> int:
        for group in new_groups:
            for _ in range(group.size):
                self.board.append(group)
        order = [w for w in range(self.cfg.workers)
                 if self.worker_active is None or self.worker_active[w]]
        self.rng_policy.shuffle(order)
        pulls = [(w, self.worker_capacity[w]) for w in order]
        counts = amt_fcfs_match(len(self.board), pulls)
        allocated = 0
        for worker, n in counts.items():
            for _ in range(n):
                group = self.board.popleft()
                self._assign(worker, group)
                allocated += 1
        return allocated

    def _serve(self) -> float:
        """Workers complete queued tasks; returns this step's utility gain."""
        gain = 0.0
        t = self.t
        cfg = self.cfg
        for worker in range(cfg.workers):
            if self.worker_active is not None and not self.worker_active[worker]:
                continue
            queue = self.queues[worker]
            rng = self.serve_rngs[worker]
            served = 0
            cap = self.worker_capacity[worker]
            while queue and served < cap and queue[0][1] < t:
                group, _ = queue.popleft()
                served += 1
                quality = rng.random() < self.worker_success[worker]
                on_time = t <= group.deadline
                positive = quality and on_time
                self.completion_events += 1
                self.step_completions_by_worker[worker] += 1
                if positive:
                    gain += cfg.sword.max_gain
                    self.quality_events += 1
                    self.step_ontime_by_requester[group.requester] += 1
                self._record_rating(group.requester, worker, positive)
                if not group.resolved:
                    group.completed += 1
                    if group.completed >= group.size:
                        group.resolved = True
                        group.completion_time = t - group.proposed_at + 1
                        self._close_group(group, completed=True)
        return gain

    def _record_rating(self, requester: int, worker: int, positive: bool) -> None:
        self.ledger.record_outcome_flag(worker, CONTEXT, ("req", requester), positive)
        ev = self.req_evidence[requester].setdefault(worker, BetaEvidence())
        if positive:
            ev.positives += 1
        else:
            ev.negatives += 1
        if self.cfg.policy == "m2009e":
            self.knowledge[requester].setdefault(worker, KnowledgeRecord()).record_interaction(
                self.cfg.knowledge_saturation
            )
        elif self.cfg.policy == "h2010e":
            self.lst[requester].update(worker, positive)

    def _close_group(self, group: HitGroup, completed: bool) -> None:
        self.group_times.append(group.completion_time)
        self.open_group[group.requester] = None
        self.step_resolved.append((group.requester, completed))

    def _sweep(self) -> None:
        """Drop expired queued tasks (negative rating) and expired groups."""
        t = self.t
        for worker in range(self.cfg.workers):
            queue = self.queues[worker]
            if not queue:
                continue
            if all(item[0].deadline >= t for item in queue):
                continue
            keep = deque()
            for group, allocated_at in queue:
                if group.deadline < t:
                    self.swept_events += 1
                    self._record_rating(group.requester, worker, False)
                else:
                    keep.append((group, allocated_at))
            self.queues[worker] = keep
        for pool in (self.broker_pool, self.board):
            while pool and pool[0].deadline < t:
                pool.popleft()
        for requester in range(self.cfg.requesters):
            group = self.open_group[requester]
            if group is not None and t > group.deadline and not group.resolved:
                group.resolved = True
                self._close_group(group, completed=False)

    def _check_queue_bound(self) -> None:
        cfg = self.cfg
        for w in range(cfg.workers):
            rep = self._pooled_rep(w)
            if rep > self.rep_peak[w]:
                self.rep_peak[w] = rep
            state = WorkerState(
                worker_id=w, reputation=rep,
                reputation_peak=self.rep_peak[w],
                capacity=self.worker_capacity[w], backlog=len(self.queues[w]),
            )
            if state.backlog > queue_bound(state, cfg.sword) + 1e-9:
                self.lemma_violations += 1
                raise InvariantViolationError(
                    f"queue bound breached at t={self.t} for worker {w}: "
                    f"backlog={state.backlog} bound={queue_bound(state, cfg.sword)}"
                )

    def step(self) -> None:
        cfg = self.cfg
        self.step_completions_by_worker = [0] * cfg.workers
        self.step_ontime_by_requester = [0] * cfg.requesters
        self.step_resolved = []
        new_groups = self._propose()
        if cfg.policy == "sword":
            allocated = self._allocate_sword(new_groups)
        elif cfg.policy == "amt":
            allocated = self._allocate_amt(new_groups)
        else:
            allocated = 0
            for group in new_groups:
                allocated += self._allocate_requester_batch(group)
        gain = self._serve()
        self._sweep()
        if cfg.policy == "sword":
            self._check_queue_bound()
            if cfg.trace and self._step_plan is not None:
                for state in self._step_states:
                    w = state.worker_id
                    self.trace_rows.append(allocation_trace_row(
                        self.t, state, cfg.sword, self._step_plan.count(w),
                        self.step_completions_by_worker[w], len(self.queues[w]),
                    ))
        self.welfare_stream.append(gain - cfg.sword.task_cost * allocated)
        self.t += 1

    def run(self) -> dict:
        self.warm_up()
        for _ in range(self.cfg.steps):
            self.step()
        hon_counts = [self.allocated_counts[w] for w in self.hon_ids]
        fairness = fairness_index(hon_counts) if any(hon_counts) else 0.0
        times = self.group_times
        within2 = (
            sum(1 for x in times if x is not None and x <= 2) / len(times) if times else 0.0
        )
        return {
            "policy": self.cfg.policy,
            "hon_x": self.cfg.hon_x,
            "time_avg_welfare": sum(self.welfare_stream) / len(self.welfare_stream),
            "fairness_hon": fairness,
            "groups_resolved": len(times),
            "groups_within_2": within2,
            "mean_quality": (self.quality_events / self.completion_events
                             if self.completion_events else 0.0),
            "group_times": times,
            "lemma_violations": self.lemma_violations,
            "hon_counts": hon_counts,
        }
