"""Beta-reputation evidence ledger with timeliness discounting.

Every other component reads reputations from here.  Outcomes are recorded
as positive/negative counts per (trustee, context, truster); a completion
that arrives after its deadline is indistinguishable, ledger-wise, from a
quality failure that arrived on time.
"""

from __future__ import annotations

import io
import csv
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Optional

from .errors import ContractViolationError, DuplicateEventError, InvalidDeadlineError

AgentId = Hashable

HARD = "hard"
LINEAR = "linear"

MEAN_OF_LOCALS = "mean-of-locals"
POOLED = "pooled"

PRIOR_SCORE = 0.5


@dataclass(frozen=True)
class RatingEvent:
    """One truster->trustee interaction outcome with its timing.

    ``completed_at`` is None for work that never completed (swept or still
    pending at judgement time).
    """

    truster_id: AgentId
    trustee_id: AgentId
    context_id: int
    issued_at: int
    started_at: int
    completed_at: Optional[int]
    deadline: int
    quality_ok: bool
    event_id: Optional[int] = None

    def __post_init__(self) -> None:
        if self.started_at < self.issued_at:
            raise ContractViolationError(
                f"started_at={self.started_at} precedes issued_at={self.issued_at}"
            )
        if self.completed_at is not None and self.completed_at < self.started_at:
            raise ContractViolationError(
                f"completed_at={self.completed_at} precedes started_at={self.started_at}"
            )
        if self.deadline < self.started_at:
            raise ContractViolationError(
                f"deadline={self.deadline} precedes started_at={self.started_at}"
            )


@dataclass
class BetaEvidence:
    """Positive/negative outcome counts; the score prior is Beta(1, 1)."""

    positives: int = 0
    negatives: int = 0

    def copy(self) -> "BetaEvidence":
        return BetaEvidence(self.positives, self.negatives)


@dataclass(frozen=True)
class TimelinessPolicy:
    """How completion time maps to a discount in [0, 1]."""

    mode: str = HARD

    def __post_init__(self) -> None:
        if self.mode not in (HARD, LINEAR):
            raise ContractViolationError(f"unknown timeliness mode {self.mode!r}")


def brs_score(ev: BetaEvidence) -> float:
    """Expected success probability under a Beta(Np+1, Nn+1) posterior."""
    return (ev.positives + 1) / (ev.positives + ev.negatives + 2)


def timeliness_discount(start: int, end: int, deadline: int, policy: TimelinessPolicy) -> float:
    """Discount for a completion at ``end`` of work started at ``start``.

    Hard mode is the binary on-time test; linear mode decays from 1 at the
    start to 0 at the deadline, clamped to [0, 1].
    """
    if deadline <= start:
        raise InvalidDeadlineError(f"deadline={deadline} must exceed start={start}")
    if end < start:
        raise ContractViolationError(f"end={end} precedes start={start}")
    if policy.mode == HARD:
        return 1.0 if end <= deadline else 0.0
    value = 1.0 - (end - start) / (deadline - start)
    return min(1.0, max(0.0, value))


def event_discount(event: RatingEvent, policy: TimelinessPolicy) -> float:
    """Discount for a rating event; never-completed work discounts to 0."""
    if event.completed_at is None:
        return 0.0
    if event.deadline <= event.started_at:
        # Zero-length window: the work cannot have been timely.
        return 0.0
    return timeliness_discount(event.started_at, event.completed_at, event.deadline, policy)


class ReputationLedger:
    """Evidence store keyed by (trustee, context) with per-truster records.

    ``aggregation`` picks the default reading of ``reputation_of``:
    mean-of-locals averages each truster's own score, pooled scores the
    summed counts.  An optional fixed-size sliding ``window`` keeps only the
    most recent outcomes per truster record (off by default).
    """

    def __init__(self, aggregation: str = MEAN_OF_LOCALS, window: Optional[int] = None):
        if aggregation not in (MEAN_OF_LOCALS, POOLED):
            raise ContractViolationError(f"unknown aggregation {aggregation!r}")
        if window is not None and window <= 0:
            raise ContractViolationError("window must be positive when set")
        self.aggregation = aggregation
        self.window = window
        self._evidence: dict[tuple[AgentId, int], dict[AgentId, BetaEvidence]] = {}
        self._history: dict[tuple[AgentId, int, AgentId], deque] = {}
        self._seen_ids: set = set()
        # Incremental aggregates so reputation_of stays O(1).
        self._score_sum: dict[tuple[AgentId, int], float] = {}
        self._pooled: dict[tuple[AgentId, int], BetaEvidence] = {}

    # -- recording ---------------------------------------------------------

    def record(self, event: RatingEvent, policy: TimelinessPolicy) -> None:
        if event.event_id is not None:
            if event.event_id in self._seen_ids:
                raise DuplicateEventError(f"event id {event.event_id} already recorded")
            self._seen_ids.add(event.event_id)
        positive = bool(event.quality_ok) and event_discount(event, policy) > 0.0
        self.record_outcome_flag(event.trustee_id, event.context_id, event.truster_id, positive)

    def record_outcome_flag(
        self, trustee: AgentId, context: int, truster: AgentId, positive: bool
    ) -> None:
        """Low-level single-count update used by both events and simulations."""
        key = (trustee, context)
        per_truster = self._evidence.setdefault(key, {})
        ev = per_truster.get(truster)
        if ev is None:
            ev = BetaEvidence()
            per_truster[truster] = ev
            self._score_sum[key] = self._score_sum.get(key, 0.0) + PRIOR_SCORE
            self._pooled.setdefault(key, BetaEvidence())
        old_score = brs_score(ev)
        pooled = self._pooled[key]
        if positive:
            ev.positives += 1
            pooled.positives += 1
        else:
            ev.negatives += 1
            pooled.negatives += 1
        if self.window is not None:
            hist = self._history.setdefault((trustee, context, truster), deque())
            hist.append(positive)
            if len(hist) > self.window:
                evicted = hist.popleft()
                if evicted:
                    ev.positives -= 1
                    pooled.positives -= 1
                else:
                    ev.negatives -= 1
                    pooled.negatives -= 1
        self._score_sum[key] += brs_score(ev) - old_score

    # -- reading -----------------------------------------------------------

    def evidence(self, trustee: AgentId, context: int, truster: AgentId) -> BetaEvidence:
        return self._evidence.get((trustee, context), {}).get(truster, BetaEvidence())

    def local_score(self, trustee: AgentId, context: int, truster: AgentId) -> float:
        return brs_score(self.evidence(trustee, context, truster))

    def has_local_evidence(self, trustee: AgentId, context: int, truster: AgentId) -> bool:
        ev = self._evidence.get((trustee, context), {}).get(truster)
        return ev is not None and (ev.positives + ev.negatives) > 0

    def pooled_evidence(self, trustee: AgentId, context: int) -> BetaEvidence:
        return self._pooled.get((trustee, context), BetaEvidence()).copy()

    def reputation(self, trustee: AgentId, context: int, aggregation: Optional[str] = None) -> float:
        mode = aggregation or self.aggregation
        key = (trustee, context)
        per_truster = self._evidence.get(key)
        if not per_truster:
            return PRIOR_SCORE
        if mode == POOLED:
            return brs_score(self._pooled[key])
        return self._score_sum[key] / len(per_truster)

    def trusters_of(self, trustee: AgentId, context: int) -> list:
        return list(self._evidence.get((trustee, context), {}).keys())

    # -- export ------------------------------------------------------------

    def to_csv(self) -> str:
        """Snapshot as CSV: trustee, context, truster, counts and score."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["trustee_id", "context_id", "truster_id", "positives", "negatives", "score"])
        for (trustee, context), per_truster in self._evidence.items():
            for truster, ev in per_truster.items():
                writer.writerow([trustee, context, truster, ev.positives, ev.negatives, f"{brs_score(ev):.6f}"])
        return buf.getvalue()


# Operation-style aliases matching the rest of the package's vocabulary.

def record_outcome(ledger: ReputationLedger, event: RatingEvent, policy: TimelinessPolicy) -> ReputationLedger:
    ledger.record(event, policy)
    return ledger


def reputation_of(ledger: ReputationLedger, trustee: AgentId, context: int,
                  aggregation: Optional[str] = None) -> float:
    return ledger.reputation(trustee, context, aggregation)
