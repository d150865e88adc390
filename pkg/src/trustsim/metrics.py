"""Evaluation statistics for simulation runs.

Each metric has a batch function and, where a run accumulates it
incrementally, a streaming accumulator that must agree exactly with the
batch recomputation.  Undefined metrics raise instead of returning 0; a
silent zero would corrupt parameter sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import ContractViolationError, UndefinedMetricError


# -- normalized average utility loss -------------------------------------------

def naul(outcomes: Iterable[bool], gain: float, cost: float) -> float:
    """1 minus the normalized mean per-interaction gain.

    Success earns ``gain - cost``, failure loses ``cost``; the mean is
    normalized by that range, so all-success gives 0 loss and all-failure 1.
    """
    total = 0
    successes = 0
    for ok in outcomes:
        total += 1
        if ok:
            successes += 1
    if total == 0:
        raise UndefinedMetricError("NAUL undefined on an empty outcome stream")
    g_max = gain - cost
    g_min = -cost
    mean_gain = (successes * g_max + (total - successes) * g_min) / total
    sigma = (mean_gain - g_min) / (g_max - g_min)
    return 1.0 - sigma


class NaulAccumulator:
    """Streaming NAUL; idle rounds (no interaction attempted) score zero gain."""

    def __init__(self, gain: float, cost: float):
        self.gain = gain
        self.cost = cost
        self.total = 0
        self.successes = 0
        self.idle = 0

    def add(self, success: bool) -> None:
        self.total += 1
        if success:
            self.successes += 1

    def add_idle(self) -> None:
        self.idle += 1

    def value(self) -> float:
        rounds = self.total + self.idle
        if rounds == 0:
            raise UndefinedMetricError("NAUL undefined on an empty outcome stream")
        g_max = self.gain - self.cost
        g_min = -self.cost
        mean_gain = (self.successes * g_max + (self.total - self.successes) * g_min) / rounds
        sigma = (mean_gain - g_min) / (g_max - g_min)
        return 1.0 - sigma


# -- collusion power -------------------------------------------------------------

def collusion_power(
    delegations_to_colluders: Sequence[int],
    interactions_each: int,
) -> float:
    """Fraction of non-colluders' delegations captured by the collusion ring.

    ``delegations_to_colluders`` holds, per non-colluding consumer, how many
    of its delegations went to any ring member; every consumer performed
    ``interactions_each`` delegations in total.
    """
    if not delegations_to_colluders:
        raise UndefinedMetricError("collusion power undefined without consumers")
    if interactions_each <= 0:
        raise ContractViolationError("interactions_each must be positive")
    return sum(delegations_to_colluders) / (len(delegations_to_colluders) * interactions_each)


# -- fairness ---------------------------------------------------------------------

def fairness_index(counts: Sequence[float]) -> float:
    """Jain's index over per-worker task counts: 1 is perfectly even."""
    if not counts:
        raise UndefinedMetricError("fairness undefined without workers")
    if any(c < 0 for c in counts):
        raise ContractViolationError("counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise UndefinedMetricError("fairness undefined on all-zero counts")
    square_sum = sum(c * c for c in counts)
    return (total * total) / (len(counts) * square_sum)


# -- time-averaged social welfare ----------------------------------------------

def time_avg_welfare(welfare_stream: Sequence[float]) -> float:
    if len(welfare_stream) == 0:
        raise UndefinedMetricError("time average undefined on an empty stream")
    return sum(welfare_stream) / len(welfare_stream)


class WelfareAccumulator:
    def __init__(self) -> None:
        self.total = 0.0
        self.steps = 0

    def add(self, value: float) -> None:
        self.total += value
        self.steps += 1

    def value(self) -> float:
        if self.steps == 0:
            raise UndefinedMetricError("time average undefined on an empty stream")
        return self.total / self.steps


# -- delegation-game cost ---------------------------------------------------------

@dataclass
class DelegationFlow:
    """Flows over truster->trustee connections with per-trustee latency."""

    connections: Sequence[tuple]          # (trustee_id, flow)
    latency: dict                         # trustee_id -> callable load -> delay
    reputations: dict                     # trustee_id -> reputation in (0, 1]


def mtg_cost(flow: DelegationFlow) -> float:
    """Total reputation-discounted congestion cost of a delegation flow."""
    loads: dict = {}
    for trustee, f in flow.connections:
        if f < 0:
            raise ContractViolationError("flows must be non-negative")
        loads[trustee] = loads.get(trustee, 0.0) + f
    cost = 0.0
    for trustee, x in loads.items():
        if x == 0.0:
            continue
        tau = flow.reputations.get(trustee, 0.0)
        if tau <= 0.0:
            raise UndefinedMetricError(f"trustee {trustee!r} carries flow with zero reputation")
        cost += x * flow.latency[trustee](x) / tau
    return cost


# -- completion-time distribution ---------------------------------------------

def completion_cdf(times: Sequence[Optional[int]], horizon: int) -> tuple[list[float], float]:
    """Cumulative completion fractions for x = 1..horizon plus dropped mass.

    ``times`` holds per-group completion durations in steps, with None for
    groups that never completed.  Completions beyond the horizon count into
    the dropped mass together with the never-completed ones.
    """
    if horizon < 1:
        raise ContractViolationError("horizon must be at least 1")
    n = len(times)
    if n == 0:
        return [], 0.0
    cdf = []
    for x in range(1, horizon + 1):
        done = sum(1 for t in times if t is not None and t <= x)
        cdf.append(done / n)
    dropped = sum(1 for t in times if t is None or t > horizon) / n
    return cdf, dropped


# -- report container -------------------------------------------------------------

@dataclass
class MetricsReport:
    """Bundle of end-of-run statistics a scenario hands to the CLI."""

    naul_per_group: dict = field(default_factory=dict)
    collusion_power_per_group: dict = field(default_factory=dict)
    fairness_hon: Optional[float] = None
    time_avg_welfare: Optional[float] = None
    completion_cdf_points: list = field(default_factory=list)
    hit_shares: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
