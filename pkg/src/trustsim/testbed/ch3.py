"""Service-consumer world: one-to-one delegations guided by testimonies.

Consumers pick one provider per step by fused reputation; witnesses hold
their own evidence and may distort what they report.  Providers succeed
with a (possibly drifting) ground-truth probability.  One world runs one
consumer policy so that policies can be compared across identically seeded
worlds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from ..act import ActConfig, ActLearner, Testimony, fuse_reputation
from ..baselines import GammaPolicy, nocred_fuse
from ..errors import ConfigError
from ..metrics import NaulAccumulator, collusion_power
from ..reputation import BetaEvidence, brs_score
from .base import (
    BADMOUTH,
    BALLOT_STUFF,
    HONEST,
    HUT,
    MUT,
    TrusteeBehavior,
    WitnessBehavior,
    derive_rng,
    distort_testimony,
    drift_provider,
)

GAMMA_POLICIES = {
    "static0": 0.0,
    "static05": 0.5,
    "static1": 1.0,
}

CH3_POLICIES = ("static0", "static05", "static1", "m2002", "fb2007", "nocred", "act")

#: Provider population shares: (success probability, fraction, drifts).
PROVIDER_MIX = (
    (0.9, 0.10, False),  # honest
    (0.6, 0.10, True),   # mildly unreliable
    (0.4, 0.40, True),   # unreliable
    (0.2, 0.40, True),   # heavily unreliable; collusion rings recruit here
)


@dataclass
class Ch3Config:
    policy: str = "act"
    providers: int = 100
    witnesses: int = 100
    consumers: int = 10
    problems: int = 200          # interactions per consumer (= steps)
    warmup_steps: int = 0        # witnesses start cold and learn during the run
    witness_mix: str = "hon"     # "hon" | "bm<percent>" | "bs<percent>"
    collusive: bool = False
    gain: float = 5.0
    cost: float = 1.0
    interact_threshold: float = 0.5  # below this the consumer sits the step out
    evidence_decay: float = 0.95     # classic beta-reputation forgetting, per step

    def __post_init__(self) -> None:
        if self.policy not in CH3_POLICIES:
            raise ConfigError(f"policy {self.policy!r} not usable in this scenario")


def parse_witness_mix(mix: str) -> tuple[str, int]:
    mix = mix.lower()
    if mix == "hon":
        return HONEST, 0
    for prefix, kind in (("bm", BADMOUTH), ("bs", BALLOT_STUFF)):
        if mix.startswith(prefix):
            try:
                percent = int(mix[len(prefix):])
            except ValueError as exc:
                raise ConfigError(f"bad witness mix {mix!r}") from exc
            if not 0 <= percent <= 100:
                raise ConfigError(f"bad witness mix percentage in {mix!r}")
            return kind, percent
    raise ConfigError(f"bad witness mix {mix!r}")


class _Witness:
    def __init__(self, witness_id: int, behavior: WitnessBehavior, rng: random.Random):
        self.witness_id = witness_id
        self.behavior = behavior
        self.rng = rng
        self.evidence: dict[int, BetaEvidence] = {}

    def observe(self, provider_id: int, success: bool) -> None:
        ev = self.evidence.setdefault(provider_id, BetaEvidence())
        if success:
            ev.positives += 1
        else:
            ev.negatives += 1

    def testimony(self, provider_id: int) -> Optional[float]:
        ev = self.evidence.get(provider_id)
        if ev is None or (ev.positives + ev.negatives) == 0:
            return None
        return distort_testimony(brs_score(ev), self.behavior, provider_id, self.rng)


class _Consumer:
    """One service consumer running the configured evidence policy."""

    def __init__(self, consumer_id: int, cfg: Ch3Config, rng: random.Random):
        self.consumer_id = consumer_id
        self.cfg = cfg
        self.rng = rng
        self.direct: dict[int, BetaEvidence] = {}
        self.policy = cfg.policy
        self.act: Optional[ActLearner] = None
        self.gamma_policy: Optional[GammaPolicy] = None
        # The actor-critic model keeps its full interaction history (its update
        # rules are cumulative); the fading counts belong to the classic
        # reputation system the baseline policies embody.
        act_cfg = ActConfig(gain=cfg.gain, cost=cfg.cost)
        if self.policy == "act":
            self.act = ActLearner(consumer_id, act_cfg, rng)
        elif self.policy == "m2002":
            self.gamma_policy = GammaPolicy.m2002()
        elif self.policy == "fb2007":
            self.gamma_policy = GammaPolicy.fb2007()

    def direct_evidence(self, provider_id: int) -> BetaEvidence:
        return self.direct.setdefault(provider_id, BetaEvidence())


class Ch3World:
    def __init__(self, cfg: Ch3Config, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.t = 0
        self.providers = self._build_providers()
        self.ring = frozenset(
            pid for pid, (behavior, group) in enumerate(self.providers) if group == 3
        )
        self.witnesses = self._build_witnesses()
        self.consumers = [
            _Consumer(i, cfg, derive_rng(seed, "consumer", i)) for i in range(cfg.consumers)
        ]
        self.provider_rngs = [derive_rng(seed, "provider", i) for i in range(cfg.providers)]
        self.naul = NaulAccumulator(cfg.gain, cfg.cost)
        self.ring_delegations = [0] * cfg.consumers
        self.interactions = [0] * cfg.consumers
        self._testimony_cache: dict[tuple[int, int], Optional[float]] = {}
        self._plain_cache: dict[int, Optional[float]] = {}

    # -- construction -------------------------------------------------------

    def _build_providers(self) -> list[tuple[TrusteeBehavior, int]]:
        counts = []
        remaining = self.cfg.providers
        for idx, (_, fraction, _) in enumerate(PROVIDER_MIX):
            n = round(self.cfg.providers * fraction)
            if idx == len(PROVIDER_MIX) - 1:
                n = remaining
            counts.append(n)
            remaining -= n
        providers = []
        for group, ((prob, _, drifts), n) in enumerate(zip(PROVIDER_MIX, counts)):
            for _ in range(n):
                providers.append((TrusteeBehavior(prob, capacity=1, drifts=drifts), group))
        return providers

    def _build_witnesses(self) -> list[_Witness]:
        kind, percent = parse_witness_mix(self.cfg.witness_mix)
        n = self.cfg.witnesses
        n_dishonest = round(n * percent / 100)
        witnesses = []
        ring = self.ring if self.cfg.collusive else None
        for wid in range(n):
            if kind != HONEST and wid < n_dishonest:
                severity = MUT if wid < n_dishonest / 2 else HUT
                behavior = WitnessBehavior(kind=kind, severity=severity, ring=ring)
            else:
                behavior = WitnessBehavior(kind=HONEST)
            witnesses.append(_Witness(wid, behavior, derive_rng(self.seed, "witness", wid)))
        return witnesses

    # -- dynamics -----------------------------------------------------------

    def _interact(self, provider_id: int, rng: random.Random) -> bool:
        behavior = self.providers[provider_id][0]
        success = rng.random() < behavior.success_prob
        drift_provider(behavior, self.provider_rngs[provider_id])
        return success

    def _witness_rounds(self) -> None:
        for witness in self.witnesses:
            pid = witness.rng.randrange(self.cfg.providers)
            witness.observe(pid, self._interact(pid, witness.rng))

    def warm_up(self) -> None:
        for _ in range(self.cfg.warmup_steps):
            self._witness_rounds()

    def _testimony(self, witness_id: int, provider_id: int) -> Optional[float]:
        key = (witness_id, provider_id)
        if key not in self._testimony_cache:
            self._testimony_cache[key] = self.witnesses[witness_id].testimony(provider_id)
        return self._testimony_cache[key]

    def _plain_indirect(self, provider_id: int) -> Optional[float]:
        """Unweighted mean testimony over every witness willing to answer."""
        if provider_id in self._plain_cache:
            return self._plain_cache[provider_id]
        values = []
        for witness in self.witnesses:
            v = self._testimony(witness.witness_id, provider_id)
            if v is not None:
                values.append(v)
        mean = sum(values) / len(values) if values else None
        self._plain_cache[provider_id] = mean
        return mean

    def _score_simple(self, consumer: _Consumer, provider_id: int, gamma: float) -> float:
        direct = brs_score(consumer.direct_evidence(provider_id))
        indirect = self._plain_indirect(provider_id)
        if indirect is None:
            return direct
        return fuse_reputation(direct, indirect, gamma)

    @staticmethod
    def _argmax(scores: list, rng: random.Random) -> int:
        """Index of the best score; exact ties are broken uniformly at random."""
        best = max(scores)
        ties = [i for i, s in enumerate(scores) if s == best]
        if len(ties) == 1:
            return ties[0]
        return ties[rng.randrange(len(ties))]

    def _choose_provider(self, consumer: _Consumer) -> tuple[int, float, object]:
        """Return (provider_id, its score, context needed by the observe step)."""
        policy = consumer.policy
        n = self.cfg.providers
        if policy == "act":
            evaluations = []
            for pid in range(n):
                plan = consumer.act.witness_plan(pid)
                responders: dict[int, float] = {}
                for wid in plan.witness_ids:
                    v = self._testimony(wid, pid)
                    if v is not None:
                        responders[wid] = v
                if plan.broadcast:
                    known = consumer.act.profiles_for(pid)
                    for witness in self.witnesses:
                        if witness.witness_id in known or witness.witness_id in responders:
                            continue
                        v = self._testimony(witness.witness_id, pid)
                        if v is not None:
                            responders[witness.witness_id] = v
                testimonies = [
                    Testimony(wid, pid, value, self.t) for wid, value in responders.items()
                ]
                evaluations.append(consumer.act.evaluate(pid, testimonies))
            pid = self._argmax([e.reputation for e in evaluations], consumer.rng)
            return pid, evaluations[pid].reputation, evaluations[pid]
        if policy == "nocred":
            scores = []
            for pid in range(n):
                direct = brs_score(consumer.direct_evidence(pid))
                indirect = self._plain_indirect(pid)
                scores.append(direct if indirect is None else nocred_fuse([indirect], direct))
            pid = self._argmax(scores, consumer.rng)
            return pid, scores[pid], None
        if policy in GAMMA_POLICIES:
            gamma = GAMMA_POLICIES[policy]
            scores = [self._score_simple(consumer, pid, gamma) for pid in range(n)]
            pid = self._argmax(scores, consumer.rng)
            return pid, scores[pid], None
        if policy == "m2002":
            scores = []
            for pid in range(n):
                ev = consumer.direct_evidence(pid)
                gamma = consumer.gamma_policy.gamma(ev.positives + ev.negatives, consumer.rng)
                scores.append(self._score_simple(consumer, pid, gamma))
            pid = self._argmax(scores, consumer.rng)
            return pid, scores[pid], None
        if policy == "fb2007":
            gamma = consumer.gamma_policy.gamma(0, consumer.rng)
            scores = [self._score_simple(consumer, pid, gamma) for pid in range(n)]
            pid = self._argmax(scores, consumer.rng)
            return pid, scores[pid], gamma
        raise ConfigError(f"unhandled policy {policy!r}")

    def _decay_evidence(self) -> None:
        fade = self.cfg.evidence_decay
        if fade >= 1.0:
            return
        for witness in self.witnesses:
            for ev in witness.evidence.values():
                ev.positives *= fade
                ev.negatives *= fade
        for consumer in self.consumers:
            if consumer.policy != "act":
                for ev in consumer.direct.values():
                    ev.positives *= fade
                    ev.negatives *= fade

    def step(self) -> None:
        self._testimony_cache.clear()
        self._plain_cache.clear()
        self._decay_evidence()
        self._witness_rounds()
        for consumer in self.consumers:
            pid, score, context = self._choose_provider(consumer)
            if score < self.cfg.interact_threshold:
                # Nobody looks trustworthy enough; sit this problem out.
                self.naul.add_idle()
                if consumer.policy == "act":
                    consumer.act.end_step()
                continue
            success = self._interact(pid, consumer.rng)
            self.naul.add(success)
            self.interactions[consumer.consumer_id] += 1
            if pid in self.ring:
                self.ring_delegations[consumer.consumer_id] += 1
            if consumer.policy == "act":
                consumer.act.observe(context, success)
                consumer.act.end_step()
            else:
                ev = consumer.direct_evidence(pid)
                if success:
                    ev.positives += 1
                else:
                    ev.negatives += 1
                if consumer.policy == "fb2007":
                    reward = (self.cfg.gain - self.cfg.cost) if success else -self.cfg.cost
                    consumer.gamma_policy.learner.update(context, reward)
        self.t += 1

    def run(self) -> dict:
        self.warm_up()
        for _ in range(self.cfg.problems):
            self.step()
        result = {
            "policy": self.cfg.policy,
            "witness_mix": self.cfg.witness_mix,
            "collusive": self.cfg.collusive,
            "naul": self.naul.value(),
            "interactions": sum(self.interactions),
        }
        if self.cfg.collusive:
            result["collusion_power"] = collusion_power(
                self.ring_delegations, self.cfg.problems
            )
        return result
