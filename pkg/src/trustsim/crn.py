"""Trust-aware collaborative spectrum sensing.

A base station aggregates ternary band-occupancy reports from secondary
users, weighting each by a per-band windowed trust score with adaptive
forgetting.  Misdetections (deciding a busy band is free) are punished far
harder than false alarms, both in the trust update and in the utility-loss
metric.  Four report-falsification attacks are provided for evaluation.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import ContractViolationError

BUSY = 1
ABSTAIN = 0
IDLE = -1

ATTACKS = ("fabrication", "on_off", "dos", "resource_hungry")


@dataclass(frozen=True)
class SensingReport:
    su_id: int
    verdict: int          # -1 idle, 0 abstain, +1 busy
    confidence: float

    def __post_init__(self) -> None:
        if self.verdict not in (IDLE, ABSTAIN, BUSY):
            raise ContractViolationError(f"verdict must be -1, 0 or +1, got {self.verdict}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ContractViolationError("confidence must lie in [0, 1]")


@dataclass
class CrnConfig:
    trust_floor: float = 0.65       # minimum trust to enter the aggregate
    confidence_floor: float = 0.25  # below this an honest user abstains
    window: int = 20                # behavior records kept per (user, band)
    rho_slow: float = 1.0           # forgetting after contributing to a misdetection
    rho_fast: float = 0.9           # forgetting while trusted
    w_false_alarm: float = 1.0
    w_misdetection: float = 5.0
    bands: int = 8
    su_count: int = 100
    iterations: int = 10000
    # The base station is one sensor among the crowd; its verdict is scaled
    # down so the trust-weighted vote can overrule it.
    subs_weight_scale: float = 0.1


class SuTrustRecord:
    """Windowed (positive, negative) behavior pairs for one user in one band."""

    def __init__(self, window: int, rho: float = 1.0):
        self.window = window
        self.rho = rho
        self.pairs: deque = deque()

    def append(self, positive: float, negative: float) -> None:
        self.pairs.append((positive, negative))
        if len(self.pairs) > self.window:
            self.pairs.popleft()


def context_trust(record: SuTrustRecord) -> float:
    """Forgetting-weighted ratio of positive behavior; oldest entries fade most."""
    if not record.pairs:
        return 0.5
    num = 0.0
    den = 0.0
    n = len(record.pairs)
    for j, (a, b) in enumerate(record.pairs):
        weight = record.rho ** (n - 1 - j)
        num += weight * a
        den += weight * (a + b)
    if den == 0.0:
        return 0.5
    return num / den


def aggregate_and_decide(
    subs_report: SensingReport,
    su_reports: Sequence[SensingReport],
    trusts: dict,
    cfg: CrnConfig,
) -> tuple[float, int]:
    """Fuse the base-station verdict with trust-filtered user reports.

    Users below the trust floor are excluded.  The base station's weight is
    its own confidence for the round.  Returns (aggregate value, decision),
    with decision the sign of the aggregate.
    """
    theta = min(max(subs_report.confidence, 0.0), 1.0) * cfg.subs_weight_scale
    num = 0.0
    den = 0.0
    for report in su_reports:
        tau = trusts.get(report.su_id, 0.5)
        if tau >= cfg.trust_floor:
            num += tau * report.verdict
            den += tau
    if den > 0.0:
        aggregate = theta * subs_report.verdict + (1.0 - theta) * (num / den)
    else:
        aggregate = theta * subs_report.verdict
    if aggregate > 0:
        return aggregate, BUSY
    if aggregate < 0:
        return aggregate, IDLE
    return aggregate, ABSTAIN


def apply_feedback(
    records: dict,
    reports: Sequence[SensingReport],
    decision: int,
    pu_complaint: bool,
    cfg: CrnConfig,
) -> None:
    """Update per-user behavior windows after a round.

    A complaint from the licensed user (a misdetection happened) stamps a
    heavy negative on everyone who reported idle and freezes their
    forgetting.  Otherwise a busy decision rewards agreement and punishes
    disagreement; abstainers always get the neutral pair; an undecided round
    leaves the records alone.  Users currently above the trust floor get the
    faster forgetting factor.
    """
    if pu_complaint:
        for report in reports:
            rec = records[report.su_id]
            if report.verdict == IDLE:
                rec.append(0.0, float(cfg.window))
                rec.rho = cfg.rho_slow
            elif report.verdict == ABSTAIN:
                rec.append(1.0, 1.0)
    elif decision == BUSY:
        for report in reports:
            rec = records[report.su_id]
            if report.verdict == ABSTAIN:
                rec.append(1.0, 1.0)
            elif report.verdict == decision:
                rec.append(1.0, 0.0)
            else:
                rec.append(0.0, 1.0)
    elif decision == IDLE:
        for report in reports:
            if report.verdict == ABSTAIN:
                records[report.su_id].append(1.0, 1.0)
    for report in reports:
        rec = records[report.su_id]
        if context_trust(rec) >= cfg.trust_floor:
            rec.rho = cfg.rho_fast


def total_utility_loss(false_alarm_rate: float, misdetection_rate: float, cfg: CrnConfig) -> float:
    if not (0.0 <= false_alarm_rate <= 1.0 and 0.0 <= misdetection_rate <= 1.0):
        raise ContractViolationError("error rates must lie in [0, 1]")
    return cfg.w_false_alarm * false_alarm_rate + cfg.w_misdetection * misdetection_rate


def attack_report(
    band_busy: bool,
    honest_verdict: int,
    attack: Optional[str],
    sigma: float,
    rng: random.Random,
) -> int:
    """Transform an honest verdict according to an attack strategy.

    fabrication inverts the verdict outright; on_off inverts with
    probability ``sigma``; dos claims the band is busy when it is idle;
    resource_hungry always claims the band is idle.
    """
    if attack is None:
        return honest_verdict
    if attack == "fabrication":
        return -honest_verdict
    if attack == "on_off":
        return -honest_verdict if rng.random() < sigma else honest_verdict
    if attack == "dos":
        return BUSY if not band_busy else honest_verdict
    if attack == "resource_hungry":
        return IDLE
    raise ContractViolationError(f"unknown attack {attack!r}")


# -- scenario driver ---------------------------------------------------------

@dataclass
class CrnScenario:
    attack: Optional[str] = "fabrication"
    attacker_fraction: float = 0.5
    sigma: float = 0.5              # per-round lying probability (on_off)
    usage_rate: float = 0.45        # licensed-user band occupancy
    trust_enabled: bool = True


@dataclass
class CrnRoundStats:
    iteration: int
    band: int
    false_alarms: int
    misdetections: int
    decided_rounds: int


@dataclass
class CrnResult:
    false_alarm_rate: float
    misdetection_rate: float
    tul: float
    rows: list = field(default_factory=list)


def _truncated_gauss(rng: random.Random, mean: float = 0.5, sd: float = 0.15) -> float:
    value = rng.gauss(mean, sd)
    return min(1.0, max(0.0, value))


def _honest_sense(band_busy: bool, rng: random.Random, cfg: CrnConfig) -> tuple[int, float]:
    """Draw a confidence and a verdict whose accuracy grows with confidence."""
    confidence = _truncated_gauss(rng)
    truth = BUSY if band_busy else IDLE
    correct = rng.random() < 0.7 + 0.3 * confidence
    verdict = truth if correct else -truth
    if confidence < cfg.confidence_floor:
        verdict = ABSTAIN
    return verdict, confidence


def run_crn(cfg: CrnConfig, scenario: CrnScenario, seed: int,
            record_every: int = 100) -> CrnResult:
    """Run the sensing rounds for every band and accumulate error rates.

    Attackers sense the true band state (a deliberate misreporter knows what
    it is lying about) and never abstain; honest users abstain below the
    confidence floor.
    """
    rng = random.Random(seed)
    n_attackers = int(round(cfg.su_count * scenario.attacker_fraction))
    attackers = set(range(n_attackers))
    false_alarms = 0
    misdetections = 0
    rounds = 0
    rows: list = []
    if scenario.trust_enabled:
        effective = cfg
    else:
        effective = CrnConfig(**{**cfg.__dict__, "trust_floor": 0.0})
    blind_trusts = {su: 1.0 for su in range(cfg.su_count)}
    for band in range(cfg.bands):
        records = {su: SuTrustRecord(cfg.window, cfg.rho_slow) for su in range(cfg.su_count)}
        for iteration in range(cfg.iterations):
            band_busy = rng.random() < scenario.usage_rate
            truth = BUSY if band_busy else IDLE
            reports = []
            for su in range(cfg.su_count):
                if su in attackers and scenario.attack is not None:
                    verdict = attack_report(band_busy, truth, scenario.attack, scenario.sigma, rng)
                    confidence = 1.0
                else:
                    verdict, confidence = _honest_sense(band_busy, rng, cfg)
                reports.append(SensingReport(su, verdict, confidence))
            subs_verdict, subs_conf = _honest_sense(band_busy, rng, cfg)
            subs = SensingReport(-1, subs_verdict, subs_conf)
            if scenario.trust_enabled:
                trusts = {su: context_trust(records[su]) for su in range(cfg.su_count)}
            else:
                trusts = blind_trusts
            _, decision = aggregate_and_decide(subs, reports, trusts, effective)
            rounds += 1
            complaint = False
            if band_busy and decision == IDLE:
                misdetections += 1
                complaint = True
            elif not band_busy and decision != IDLE:
                false_alarms += 1
            if scenario.trust_enabled:
                apply_feedback(records, reports, decision, complaint, cfg)
            if (iteration + 1) % record_every == 0:
                rows.append({
                    "iteration": iteration + 1,
                    "band": band,
                    "attack": scenario.attack or "none",
                    "sigma": scenario.sigma,
                    "usage_rate": scenario.usage_rate,
                    "eps1_cum": false_alarms / rounds,
                    "eps2_cum": misdetections / rounds,
                    "TUL": total_utility_loss(false_alarms / rounds, misdetections / rounds, cfg),
                    "trust_enabled": int(scenario.trust_enabled),
                })
    eps1 = false_alarms / rounds
    eps2 = misdetections / rounds
    return CrnResult(false_alarm_rate=eps1, misdetection_rate=eps2,
                     tul=total_utility_loss(eps1, eps2, cfg), rows=rows)
