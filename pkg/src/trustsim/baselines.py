"""Comparison policies: static and learned evidence mixers plus simple allocators.

These are the strategies the main policies are measured against: fixed
direct/indirect weights, a Chernoff-bound weight schedule, a tabular
Q-learner over a small weight set, a greedy reputation-ranked batch
allocator with two dynamic-exploration variants, first-come-first-served
matching, and credulous testimony aggregation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

from .errors import ContractViolationError

AgentId = Hashable

POLICY_IDS = (
    "static0", "static05", "static1", "m2002", "fb2007",
    "brs2002e", "m2009e", "h2010e", "amt", "nocred",
    "act", "sword", "draft",
)


# -- direct/indirect weight policies -----------------------------------------

def gamma_m2002(direct_observations: int, eps: float = 0.1, confidence: float = 0.95) -> float:
    """Weight on direct evidence from the Chernoff-bound sample requirement."""
    if not 0.0 < eps < 1.0:
        raise ContractViolationError("eps must be in (0, 1)")
    if not 0.0 < confidence < 1.0:
        raise ContractViolationError("confidence must be in (0, 1)")
    n_min = -1.0 / (2.0 * eps * eps) * math.log((1.0 - confidence) / 2.0)
    return min(direct_observations / n_min, 1.0)


class Fb2007Gamma:
    """Epsilon-greedy tabular Q-learner over a fixed set of candidate weights."""

    def __init__(self, candidates: Sequence[float] = (0.0, 0.5, 1.0),
                 learn_rate: float = 0.1, epsilon: float = 0.1):
        if not candidates:
            raise ContractViolationError("candidate set must be non-empty")
        self.candidates = tuple(candidates)
        self.learn_rate = learn_rate
        self.epsilon = epsilon
        self.q = {g: 0.0 for g in self.candidates}

    def select(self, rng: random.Random) -> float:
        if len(self.candidates) == 1:
            return self.candidates[0]
        if rng.random() < self.epsilon:
            return rng.choice(self.candidates)
        best = max(self.q.values())
        top = [g for g in self.candidates if self.q[g] == best]
        return rng.choice(top)

    def update(self, gamma: float, reward: float) -> None:
        self.q[gamma] += self.learn_rate * (reward - self.q[gamma])


@dataclass
class GammaPolicy:
    """Uniform front door for the weight policies used by the test-beds."""

    kind: str
    static_value: float = 0.5
    eps: float = 0.1
    confidence: float = 0.95
    learner: Optional[Fb2007Gamma] = None

    @classmethod
    def static(cls, value: float) -> "GammaPolicy":
        return cls(kind="static", static_value=value)

    @classmethod
    def m2002(cls, eps: float = 0.1, confidence: float = 0.95) -> "GammaPolicy":
        return cls(kind="m2002", eps=eps, confidence=confidence)

    @classmethod
    def fb2007(cls) -> "GammaPolicy":
        return cls(kind="fb2007", learner=Fb2007Gamma())

    def gamma(self, direct_observations: int, rng: random.Random) -> float:
        if self.kind == "static":
            return self.static_value
        if self.kind == "m2002":
            return gamma_m2002(direct_observations, self.eps, self.confidence)
        if self.kind == "fb2007":
            return self.learner.select(rng)
        raise ContractViolationError(f"unknown gamma policy kind {self.kind!r}")


# -- greedy batch allocation (extended reputation ranking) --------------------

def _largest_remainder_split(weights: Sequence[float], total: int) -> list[int]:
    weight_sum = sum(weights)
    if weight_sum <= 0:
        return [0] * len(weights)
    quotas = [w / weight_sum * total for w in weights]
    counts = [int(q) for q in quotas]
    shortfall = total - sum(counts)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:shortfall]:
        counts[i] += 1
    return counts


def greedy_hit_allocate(
    workers: Sequence[tuple],
    n_hits: int,
    threshold: float,
) -> dict:
    """Reputation-ranked batch assignment.

    ``workers`` is a sequence of (worker_id, reputation) pairs the requester
    knows about.  With at least ``n_hits`` workers above the threshold, the
    top ones get one task each; otherwise tasks are split among the
    trustworthy workers proportionally to reputation (largest remainder).
    Returns {} when nobody qualifies: the caller falls back to exploration.
    """
    trustworthy = sorted(
        (w for w in workers if w[1] >= threshold),
        key=lambda w: (-w[1], str(w[0])),
    )
    if not trustworthy:
        return {}
    if len(trustworthy) >= n_hits:
        return {wid: 1 for wid, _ in trustworthy[:n_hits]}
    counts = _largest_remainder_split([rep for _, rep in trustworthy], n_hits)
    return {wid: c for (wid, _), c in zip(trustworthy, counts) if c > 0}


# -- knowledge-degree allocator ------------------------------------------------

GROUP_TK = "TK"
GROUP_PK = "PK"
GROUP_AU = "AU"
GROUP_TU = "TU"


@dataclass
class KnowledgeRecord:
    """How well a truster knows one trustee.

    Knowledge accrues from the truster's own interactions and from
    third-party observations it has access to.
    """

    degree: float = 0.0
    heard_of: bool = False
    interactions: int = 0
    witness_observations: int = 0

    @property
    def group(self) -> str:
        if not self.heard_of:
            return GROUP_TU
        if self.degree >= 1.0:
            return GROUP_TK
        if self.degree > 0.0:
            return GROUP_PK
        return GROUP_AU

    def _refresh(self, saturation: int) -> None:
        self.degree = min((self.interactions + self.witness_observations) / saturation, 1.0)

    def record_interaction(self, saturation: int = 20) -> None:
        self.heard_of = True
        self.interactions += 1
        self._refresh(saturation)

    def add_witness_observations(self, count: int, saturation: int = 20) -> None:
        if count > 0:
            self.heard_of = True
            self.witness_observations += count
            self._refresh(saturation)

    def mark_heard_of(self) -> None:
        self.heard_of = True


def m2009e_allocate(
    records: dict,
    workers: Sequence[tuple],
    n_hits: int,
    threshold: float,
    rng: random.Random,
) -> tuple[dict, bool]:
    """Knowledge-gated ranking: exploit fully-known workers or explore.

    Returns (counts, explored).  When the fully-known group holds enough
    trustworthy workers, the greedy ranking runs restricted to that group;
    otherwise the batch is spent raising the knowledge degrees of the
    workers closest to promotion.
    """
    tk = [w for w in workers
          if records.get(w[0], KnowledgeRecord()).group == GROUP_TK and w[1] >= threshold]
    if len(tk) >= n_hits:
        return greedy_hit_allocate(tk, n_hits, threshold), False
    unknown = [w for w in workers if records.get(w[0], KnowledgeRecord()).group != GROUP_TK]
    if not unknown:
        plan = greedy_hit_allocate(tk, n_hits, threshold)
        return plan, False
    # Promotion-focused exploration: concentrate on the best-known frontier
    # so some workers actually reach full knowledge.
    frontier = sorted(
        unknown,
        key=lambda w: (-records.get(w[0], KnowledgeRecord()).degree, str(w[0])),
    )[:n_hits]
    counts: dict = {}
    for i in range(n_hits):
        wid = frontier[i % len(frontier)][0]
        counts[wid] = counts.get(wid, 0) + 1
    return counts, True


# -- long/short-term trust allocator -------------------------------------------

@dataclass
class LongShortTrust:
    """Slow and fast trust tracks per trustee, driving exploration extent."""

    long_rate: float = 0.01
    short_rate: float = 0.3
    lt: dict = field(default_factory=dict)
    st: dict = field(default_factory=dict)

    def update(self, worker_id: AgentId, outcome: bool) -> None:
        o = 1.0 if outcome else 0.0
        self.lt[worker_id] = self.lt.get(worker_id, 0.5) + self.long_rate * (o - self.lt.get(worker_id, 0.5))
        self.st[worker_id] = self.st.get(worker_id, 0.5) + self.short_rate * (o - self.st.get(worker_id, 0.5))

    def change_estimate(self) -> float:
        if not self.lt:
            return 0.0
        return sum(abs(self.lt[w] - self.st[w]) for w in self.lt) / len(self.lt)

    def explore_extent(self) -> float:
        return min(self.change_estimate() * 5.0, 1.0)

    def selection_weights(self, worker_ids: Sequence[AgentId]) -> list[float]:
        e = self.explore_extent()
        n = len(worker_ids)
        uniform = 1.0 / n if n else 0.0
        raw = [(1.0 - e) * self.lt.get(w, 0.5) + e * uniform for w in worker_ids]
        total = sum(raw)
        if total <= 0:
            return [uniform] * n
        return [r / total for r in raw]


def h2010e_allocate(
    lst: LongShortTrust,
    workers: Sequence[tuple],
    n_hits: int,
    threshold: float,
    rng: random.Random,
) -> dict:
    """Change-aware allocation: greedy when behavior is stable, sampled otherwise."""
    if not workers:
        return {}
    if lst.change_estimate() == 0.0:
        ranked = [(wid, lst.lt.get(wid, 0.5)) for wid, _ in workers]
        return greedy_hit_allocate(ranked, n_hits, threshold)
    ids = [wid for wid, _ in workers]
    weights = lst.selection_weights(ids)
    counts: dict = {}
    cumulative = []
    acc = 0.0
    for w in weights:
        acc += w
        cumulative.append(acc)
    for _ in range(n_hits):
        r = rng.random() * acc
        lo, hi = 0, len(cumulative) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if cumulative[mid] < r:
                lo = mid + 1
            else:
                hi = mid
        counts[ids[lo]] = counts.get(ids[lo], 0) + 1
    return counts


# -- reputation-blind policies ---------------------------------------------------

def amt_fcfs_match(open_hits: int, pulls: Sequence[tuple]) -> dict:
    """First-come-first-served matching; no reputation is consulted.

    ``pulls`` lists (worker_id, capacity) in arrival order.
    """
    counts: dict = {}
    remaining = open_hits
    for worker_id, capacity in pulls:
        if remaining == 0:
            break
        grant = min(capacity, remaining)
        if grant > 0:
            counts[worker_id] = counts.get(worker_id, 0) + grant
            remaining -= grant
    return counts


def nocred_fuse(testimonies: Iterable[float], direct: float) -> float:
    """Credulous aggregation: unweighted testimony mean, half-and-half with direct."""
    values = list(testimonies)
    if not values:
        return direct
    indirect = sum(values) / len(values)
    return 0.5 * direct + 0.5 * indirect
