"""Request-admission world: trustees decide how much incoming work to take.

Trusters flood the system with typed task requests each step; a trustee
either admits selectively under its effort budget (draft) or takes
everything (trd).  Work admitted in a step enters service the following
step, so standing queues are what the admission rule sees.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from ..draft import (
    ACCEPTANCE_TRACE_HEADER,
    DEFAULT_CONTEXTS,
    ContextSpec,
    TrusteeState,
    accept_plan,
    acceptance_trace_rows,
    serve_fifo,
)
from ..errors import ConfigError
from ..metrics import fairness_index
from ..reputation import POOLED, ReputationLedger
from .base import derive_rng, hon_x_split

ACCEPT_POLICIES = ("draft", "trd")

#: (success probability, per-step effort budget) per behavior group.
TRUSTEE_GROUPS = (
    ("hon", 0.9, 25),
    ("mh", 0.7, 30),
    ("mm", 0.3, 35),
    ("mal", 0.1, 40),
)


@dataclass
class AcceptConfig:
    policy: str = "draft"
    trustees: int = 100
    trusters: int = 1000
    hon_x: int = 50
    steps: int = 1000
    v: float = 100.0
    explore_rate: float = 0.15
    rep_floor: float = 2.0 / 3.0
    cost_share: float = 0.2      # cost per admitted task as a share of its gain
    contexts: Sequence[ContextSpec] = DEFAULT_CONTEXTS
    trace: bool = False          # collect the per-step acceptance trace

    def __post_init__(self) -> None:
        if self.policy not in ACCEPT_POLICIES:
            raise ConfigError(f"policy {self.policy!r} not usable in this scenario")


class AcceptWorld:
    def __init__(self, cfg: AcceptConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.t = 0
        counts = hon_x_split(cfg.hon_x, cfg.trustees)
        self.success: list[float] = []
        self.budget: list[int] = []
        self.hon_ids: list[int] = []
        nid = 0
        for (name, prob, budget), n in zip(TRUSTEE_GROUPS, counts):
            for _ in range(n):
                self.success.append(prob)
                self.budget.append(budget)
                if name == "hon":
                    self.hon_ids.append(nid)
                nid += 1
        self.states = [
            TrusteeState(n, self.budget[n], cfg.contexts) for n in range(cfg.trustees)
        ]
        # Ratings pool in the shared platform store; the pooled view doubles
        # as the trustee's self-estimate since all feedback is echoed to it.
        self.ledger = ReputationLedger(aggregation=POOLED)
        self.route_rng = derive_rng(seed, "route")
        self.serve_rngs = [derive_rng(seed, "serve", n) for n in range(cfg.trustees)]
        self.accepted_counts = [0] * cfg.trustees
        # Work-unit totals: with unequal task sizes, equity is over effort.
        self.accepted_effort = [0] * cfg.trustees
        self.welfare_stream: list[float] = []
        self.backlog_stream: list[float] = []
        self.completions = 0
        self.ontime_completions = 0
        self.specs = {s.context_id: s for s in cfg.contexts}
        self.trace_rows: list[str] = [ACCEPTANCE_TRACE_HEADER] if cfg.trace else []

    # -- per-step phases ------------------------------------------------------

    def _route(self, reputations: list[list[float]]) -> list[dict]:
        """Every truster sends one request per context; returns per-trustee senders."""
        cfg = self.cfg
        incoming: list[dict] = [dict() for _ in range(cfg.trustees)]
        random01 = self.route_rng.random
        n_trustees = cfg.trustees
        explore = cfg.explore_rate
        floor = cfg.rep_floor
        for ci, spec in enumerate(cfg.contexts):
            c = spec.context_id
            candidates = [n for n in range(n_trustees) if reputations[n][ci] > floor]
            n_cand = len(candidates)
            for truster in range(cfg.trusters):
                if n_cand and random01() >= explore:
                    target = candidates[int(random01() * n_cand)]
                else:
                    target = int(random01() * n_trustees)
                bucket = incoming[target].get(c)
                if bucket is None:
                    incoming[target][c] = [truster]
                else:
                    bucket.append(truster)
        return incoming

    def step(self) -> None:
        cfg = self.cfg
        t = self.t
        reputation = self.ledger.reputation
        reputations = [
            [reputation(n, s.context_id) for s in cfg.contexts]
            for n in range(cfg.trustees)
        ]
        incoming = self._route(reputations)
        cost = 0.0
        for n in range(cfg.trustees):
            state = self.states[n]
            senders = incoming[n]
            if not senders:
                continue
            demand = {c: len(ids) for c, ids in senders.items()}
            if cfg.policy == "draft":
                for ci, spec in enumerate(cfg.contexts):
                    state.reputation[spec.context_id] = reputations[n][ci]
                plan = accept_plan(state, demand, cfg.contexts, cfg.v)
                admitted = plan.accepted
                if cfg.trace:
                    self.trace_rows.extend(
                        acceptance_trace_rows(t, state, demand, plan, cfg.contexts, cfg.v)
                    )
            else:
                admitted = demand
            for c, k in admitted.items():
                for truster in senders[c][:k]:
                    state.enqueue(truster, c, proposed_at=t, now=t)
                self.accepted_counts[n] += k
                self.accepted_effort[n] += k * self.specs[c].effort
                cost += k * cfg.cost_share * self.specs[c].max_gain
        gain = 0.0
        for n in range(cfg.trustees):
            state = self.states[n]
            if not state.fifo:
                continue
            rng = self.serve_rngs[n]
            for done in serve_fifo(state, self.budget[n], self.success[n], rng, now=t,
                                   only_before=t):
                spec = self.specs[done.task.context_id]
                elapsed = done.completed_at - done.task.accepted_at
                on_time = elapsed <= spec.deadline
                self.completions += 1
                if on_time:
                    self.ontime_completions += 1
                if on_time and done.quality_ok:
                    gain += spec.max_gain
                # Pooled aggregation ignores the rater identity, so a constant
                # key keeps the per-truster maps from ballooning.
                self.ledger.record_outcome_flag(n, done.task.context_id, 0,
                                                on_time and done.quality_ok)
        self.welfare_stream.append(gain - cost)
        self.backlog_stream.append(
            sum(state.queued_effort() for state in self.states) / cfg.trustees
        )
        self.t += 1

    def run(self) -> dict:
        for _ in range(self.cfg.steps):
            self.step()
        hon_counts = [self.accepted_effort[n] for n in self.hon_ids]
        fairness = fairness_index(hon_counts) if any(hon_counts) else 0.0
        return {
            "policy": self.cfg.policy,
            "hon_x": self.cfg.hon_x,
            "v": self.cfg.v,
            "time_avg_welfare": sum(self.welfare_stream) / len(self.welfare_stream),
            "fairness_hon": fairness,
            "mean_backlog": sum(self.backlog_stream) / len(self.backlog_stream),
            "completions": self.completions,
            "ontime_fraction": (self.ontime_completions / self.completions
                                if self.completions else 0.0),
            "hon_counts": hon_counts,
        }
