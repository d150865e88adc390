"""Shared building blocks for the simulation worlds.

Every world derives one random stream per agent (and per purpose) from the
master seed, so adding an observer or reordering metric probes never
perturbs trajectories.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import Hashable, Optional

from ..errors import ContractViolationError

HONEST = "honest"
BADMOUTH = "badmouth"
BALLOT_STUFF = "ballot_stuff"

MUT = "mut"   # moderate distortion offsets
HUT = "hut"   # heavy distortion offsets

_OFFSET_RANGES = {MUT: (0.1, 0.4), HUT: (0.8, 1.0)}


def derive_rng(master_seed: int, *labels) -> random.Random:
    """Independent, reproducible stream for one (agent, purpose) pair."""
    key = repr((master_seed,) + labels).encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


@dataclass
class TrusteeBehavior:
    """Ground-truth service behavior of a trustee agent."""

    success_prob: float
    capacity: int            # tasks (or effort units) servable per step
    drifts: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.success_prob <= 1.0:
            raise ContractViolationError("success_prob must lie in [0, 1]")


def drift_provider(behavior: TrusteeBehavior, rng: random.Random) -> None:
    """Random-walk step on the success probability: up, down or flat, equally likely."""
    if not behavior.drifts:
        return
    profile = rng.randrange(3)
    if profile == 2:
        return
    magnitude = rng.uniform(0.0, 0.01)
    if profile == 0:
        behavior.success_prob = min(1.0, behavior.success_prob + magnitude)
    else:
        behavior.success_prob = max(0.0, behavior.success_prob - magnitude)


@dataclass
class WitnessBehavior:
    """How a witness reports its experience to others."""

    kind: str = HONEST
    severity: str = MUT
    ring: Optional[frozenset] = None   # trustees this witness promotes

    def __post_init__(self) -> None:
        if self.kind not in (HONEST, BADMOUTH, BALLOT_STUFF):
            raise ContractViolationError(f"unknown witness kind {self.kind!r}")
        if self.severity not in _OFFSET_RANGES:
            raise ContractViolationError(f"unknown severity {self.severity!r}")


def distort_testimony(
    true_value: float,
    behavior: WitnessBehavior,
    target_trustee: Hashable,
    rng: random.Random,
) -> float:
    """Apply the witness's lying strategy to its honest opinion.

    Collusive witnesses only inflate ring members and stay accurate about
    everyone else; distorted values are hard-limited to [0, 1].
    """
    if behavior.kind == HONEST:
        return true_value
    if behavior.ring is not None:
        if target_trustee not in behavior.ring:
            return true_value
        low, high = _OFFSET_RANGES[behavior.severity]
        return min(1.0, true_value + rng.uniform(low, high))
    low, high = _OFFSET_RANGES[behavior.severity]
    offset = rng.uniform(low, high)
    if behavior.kind == BALLOT_STUFF:
        return min(1.0, true_value + offset)
    return max(0.0, true_value - offset)


def hon_x_split(x: int, total: int) -> tuple[int, int, int, int]:
    """Population counts (hon, mh, mm, mal) for the HonX scheme.

    X/2 percent each of honest and moderately honest; the remainder is
    split evenly between moderately malicious and malicious.  Largest
    remainder rounding keeps the total exact.
    """
    if not 0 <= x <= 100:
        raise ContractViolationError("X must be a percentage")
    fractions = (x / 200, x / 200, (100 - x) / 200, (100 - x) / 200)
    quotas = [f * total for f in fractions]
    counts = [int(q) for q in quotas]
    order = sorted(range(4), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return tuple(counts)


# -- competition over systems -------------------------------------------------

@dataclass
class CompetitionLearner:
    """Learned preference of one agent over the competing systems."""

    systems: int = 5
    reward: float = 1.0
    penalty: float = -1.0
    learn_rate: float = 0.4
    baseline_mix: float = 0.6
    p: list = field(default_factory=list)
    baselines: list = field(default_factory=list)
    pi: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.p:
            self.p = [0.0] * self.systems
        if not self.baselines:
            self.baselines = [0.0] * self.systems
        if not self.pi:
            self.pi = [1.0 / self.systems] * self.systems

    def choose(self, rng: random.Random) -> int:
        r = rng.random()
        acc = 0.0
        for i, weight in enumerate(self.pi):
            acc += weight
            if r < acc:
                return i
        return self.systems - 1


def competition_update(learner: CompetitionLearner, system_index: int, success: bool) -> None:
    """Reward-or-penalty update for the system the agent acted in this step."""
    r = learner.reward if success else learner.penalty
    pi_prev = learner.pi[system_index]
    learner.p[system_index] += learner.learn_rate * (r - learner.baselines[system_index]) * (1.0 - pi_prev)
    learner.baselines[system_index] = (
        learner.baseline_mix * learner.baselines[system_index] + (1.0 - learner.baseline_mix) * r
    )
    top = max(learner.p)
    exps = [math.exp(p - top) for p in learner.p]
    total = sum(exps)
    learner.pi = [e / total for e in exps]
