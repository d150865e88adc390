"""Actor-critic testimony weighting (ACT).

A truster keeps, per trustee, a ranked set of witnesses and a learned
preference between its own experience and third-party testimony.  After
every interaction the realized outcome drives three updates: witness
credibilities (with an extra penalty for witnesses that endorsed a trustee
that then failed), the direct/indirect source preference, and the truster's
own evidence counts.
"""

from __future__ import annotations

import io
import csv
import math
import random
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

from .errors import ContractViolationError
from .reputation import BetaEvidence, brs_score

AgentId = Hashable


@dataclass
class ActConfig:
    threshold: float = 0.5        # testimony / trust value counted as "interact"
    learn_rate: float = 0.4
    collusion_bias: float = 0.05  # weight of the misleading-endorsement penalty
    baseline_mix: float = 0.6     # smoothing kept on the old reward baseline
    top_m: int = 10
    gain: float = 5.0
    cost: float = 1.0
    reward: float = 1.0
    penalty: float = -10.0
    explore_floor: float = 0.1
    explore_decay: float = 0.995  # multiplicative, applied once per step
    evidence_decay: float = 1.0   # per-step fade of own interaction counts (1 = keep forever)


@dataclass
class WitnessProfile:
    witness_id: AgentId
    learn_param: float = 0.0
    credibility: Optional[float] = None  # set by the first softmax pass
    uses: int = 0
    misleading_sum: float = 0.0


@dataclass
class SourceWeights:
    p_direct: float = 0.0
    p_indirect: float = 0.0
    pi_direct: float = 0.5
    pi_indirect: float = 0.5
    baseline_direct: float = 0.0
    baseline_indirect: float = 0.0
    baseline_interaction: float = 0.0

    @property
    def gamma(self) -> float:
        return self.pi_direct


@dataclass(frozen=True)
class Testimony:
    witness_id: AgentId
    trustee_id: AgentId
    value: float
    at: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ContractViolationError(f"testimony value {self.value} outside [0, 1]")


@dataclass(frozen=True)
class WitnessSelection:
    witness_ids: tuple
    broadcast: bool


def interaction_reward(success: bool, cfg: ActConfig) -> float:
    """Net utility of one interaction: gain minus cost on success, cost only otherwise."""
    return (cfg.gain - cfg.cost) if success else -cfg.cost


def _softmax(values: Sequence[float]) -> list[float]:
    top = max(values)
    exps = [math.exp(v - top) for v in values]
    total = sum(exps)
    return [e / total for e in exps]


def update_witness_credibilities(
    profiles: Sequence[WitnessProfile],
    reward: float,
    outcome: bool,
    testimonies: dict,
    weights: SourceWeights,
    cfg: ActConfig,
) -> None:
    """Critic pass over the witnesses whose testimonies were just used.

    ``testimonies`` maps witness id to the value it reported this round.
    Mutates the profiles (learn params, credibilities) and the per-trustee
    reward baseline in ``weights``.
    """
    if not profiles:
        return
    n = len(profiles)
    o = 1.0 if outcome else 0.0
    for prof in profiles:
        value = testimonies[prof.witness_id]
        endorsed = 1.0 if value >= cfg.threshold else 0.0
        prof.uses += 1
        prof.misleading_sum += endorsed * (1.0 - o)
        theta = prof.misleading_sum / prof.uses
        pi_prev = prof.credibility if prof.credibility is not None else 1.0 / n
        prof.learn_param += (
            cfg.learn_rate
            * (reward - weights.baseline_interaction - cfg.collusion_bias * theta)
            * (1.0 - pi_prev)
        )
    for prof, pi in zip(profiles, _softmax([p.learn_param for p in profiles])):
        prof.credibility = pi
    weights.baseline_interaction = (
        cfg.baseline_mix * weights.baseline_interaction + (1.0 - cfg.baseline_mix) * reward
    )


def indirect_trust(
    testimonies: Sequence[Testimony],
    profiles: dict,
) -> Optional[float]:
    """Credibility-weighted mean of testimony values.

    Witnesses without a usable profile are given the minimum credibility
    among the known ones (or equal weight if nobody is known yet).  Returns
    None when there are no testimonies; the caller then falls back to
    direct evidence alone.
    """
    if not testimonies:
        return None
    known: list[float] = []
    for t in testimonies:
        prof = profiles.get(t.witness_id)
        if prof is not None and prof.credibility is not None:
            known.append(prof.credibility)
    floor = min(known) if known else 1.0
    num = 0.0
    den = 0.0
    for t in testimonies:
        prof = profiles.get(t.witness_id)
        pi = prof.credibility if prof is not None and prof.credibility is not None else floor
        num += pi * t.value
        den += pi
    if den <= 0.0:
        return sum(t.value for t in testimonies) / len(testimonies)
    return num / den


def update_source_preference(
    weights: SourceWeights,
    direct_decision: Optional[bool],
    indirect_decision: Optional[bool],
    outcome: bool,
    cfg: ActConfig,
) -> None:
    """Reward whichever evidence source agreed with the realized outcome.

    A source passed as None expressed no decision this round (no evidence to
    decide from) and is left untouched.
    """
    for decision, p_attr, base_attr, pi_prev in (
        (direct_decision, "p_direct", "baseline_direct", weights.pi_direct),
        (indirect_decision, "p_indirect", "baseline_indirect", weights.pi_indirect),
    ):
        if decision is None:
            continue
        agreed = 1.0 if decision == outcome else 0.0
        r = agreed * cfg.reward + (1.0 - agreed) * cfg.penalty
        baseline = getattr(weights, base_attr)
        setattr(
            weights,
            p_attr,
            getattr(weights, p_attr) + cfg.learn_rate * (r - baseline) * (1.0 - pi_prev),
        )
        setattr(weights, base_attr, cfg.baseline_mix * baseline + (1.0 - cfg.baseline_mix) * r)
    pi_d, pi_ind = _softmax([weights.p_direct, weights.p_indirect])
    weights.pi_direct = pi_d
    weights.pi_indirect = pi_ind


def fuse_reputation(direct: float, indirect: float, gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise ContractViolationError(f"gamma {gamma} outside [0, 1]")
    return gamma * direct + (1.0 - gamma) * indirect


def select_witnesses(
    profiles: dict,
    explore_prob: float,
    cfg: ActConfig,
    rng: random.Random,
) -> WitnessSelection:
    """Pick the top-M most credible known witnesses; maybe also broadcast.

    With probability ``explore_prob`` the truster additionally broadcasts
    its testimony request to witnesses it has never used for this trustee.
    """
    ranked = sorted(
        profiles.values(),
        key=lambda p: (-(p.credibility if p.credibility is not None else 0.0), str(p.witness_id)),
    )
    ids = tuple(p.witness_id for p in ranked[: cfg.top_m])
    broadcast = rng.random() < explore_prob
    return WitnessSelection(witness_ids=ids, broadcast=broadcast)


def decay_exploration(explore_prob: float, cfg: ActConfig) -> float:
    return max(cfg.explore_floor, explore_prob * cfg.explore_decay)


@dataclass
class Evaluation:
    """One trustee's reputation estimate and the inputs that produced it."""

    trustee_id: AgentId
    direct: float
    indirect: Optional[float]
    gamma_used: float
    reputation: float
    used_testimonies: tuple = ()
    has_direct: bool = False


class ActLearner:
    """Per-truster ACT state across all trustees it knows."""

    def __init__(self, truster_id: AgentId, cfg: Optional[ActConfig] = None,
                 rng: Optional[random.Random] = None):
        self.truster_id = truster_id
        self.cfg = cfg or ActConfig()
        self.rng = rng or random.Random()
        self.explore_prob = 1.0
        self._direct: dict[AgentId, BetaEvidence] = {}
        self._weights: dict[AgentId, SourceWeights] = {}
        self._witnesses: dict[AgentId, dict[AgentId, WitnessProfile]] = {}

    # -- evidence access ----------------------------------------------------

    def direct_evidence(self, trustee: AgentId) -> BetaEvidence:
        return self._direct.setdefault(trustee, BetaEvidence())

    def weights_for(self, trustee: AgentId) -> SourceWeights:
        return self._weights.setdefault(trustee, SourceWeights())

    def profiles_for(self, trustee: AgentId) -> dict:
        return self._witnesses.setdefault(trustee, {})

    # -- the per-interaction cycle -------------------------------------------

    def witness_plan(self, trustee: AgentId) -> WitnessSelection:
        return select_witnesses(self.profiles_for(trustee), self.explore_prob, self.cfg, self.rng)

    def evaluate(self, trustee: AgentId, testimonies: Sequence[Testimony]) -> Evaluation:
        ev = self.direct_evidence(trustee)
        direct = brs_score(ev)
        weights = self.weights_for(trustee)
        ind = indirect_trust(testimonies, self.profiles_for(trustee))
        if ind is None:
            gamma = 1.0
            rep = direct
        else:
            gamma = weights.gamma
            rep = fuse_reputation(direct, ind, gamma)
        return Evaluation(
            trustee_id=trustee,
            direct=direct,
            indirect=ind,
            gamma_used=gamma,
            reputation=rep,
            used_testimonies=tuple(testimonies),
            has_direct=(ev.positives + ev.negatives) > 0,
        )

    def observe(self, evaluation: Evaluation, success: bool) -> None:
        trustee = evaluation.trustee_id
        cfg = self.cfg
        reward = interaction_reward(success, cfg)
        weights = self.weights_for(trustee)
        if evaluation.indirect is not None:
            profiles = self.profiles_for(trustee)
            used = []
            values = {}
            for t in evaluation.used_testimonies:
                prof = profiles.get(t.witness_id)
                if prof is None:
                    prof = WitnessProfile(witness_id=t.witness_id)
                    profiles[t.witness_id] = prof
                used.append(prof)
                values[t.witness_id] = t.value
            update_witness_credibilities(used, reward, success, values, weights, cfg)
            update_source_preference(
                weights,
                (evaluation.direct >= cfg.threshold) if evaluation.has_direct else None,
                evaluation.indirect >= cfg.threshold,
                success,
                cfg,
            )
        ev = self.direct_evidence(trustee)
        if success:
            ev.positives += 1
        else:
            ev.negatives += 1

    def end_step(self) -> None:
        self.explore_prob = decay_exploration(self.explore_prob, self.cfg)
        if self.cfg.evidence_decay < 1.0:
            fade = self.cfg.evidence_decay
            for ev in self._direct.values():
                ev.positives *= fade
                ev.negatives *= fade

    # -- export ---------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["trustee_id", "gamma", "direct_score", "witness_id", "p", "pi", "uses"])
        for trustee in self._weights:
            weights = self._weights[trustee]
            direct = brs_score(self.direct_evidence(trustee))
            profiles = self._witnesses.get(trustee, {})
            if not profiles:
                writer.writerow([trustee, f"{weights.gamma:.6f}", f"{direct:.6f}", "", "", "", ""])
                continue
            for wid, prof in profiles.items():
                pi = "" if prof.credibility is None else f"{prof.credibility:.6f}"
                writer.writerow(
                    [trustee, f"{weights.gamma:.6f}", f"{direct:.6f}", wid,
                     f"{prof.learn_param:.6f}", pi, prof.uses]
                )
        return buf.getvalue()
