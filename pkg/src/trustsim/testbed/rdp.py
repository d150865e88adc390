"""Greedy-delegation world with capacity-limited trustees.

Every truster issues one task per step to the top-reputation trustee on the
shared ratings board (with a fixed exploration rate); trustees serve a
bounded number of queued tasks per step, so the popular trustee congests,
misses deadlines, and its reputation collapses and rebuilds in cycles.
Evidence in the shared view decays over time, which is what lets a damaged
reputation recover once the crowd moves on.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .base import derive_rng


@dataclass
class RdpConfig:
    trustees: int = 200
    trusters: int = 1000
    steps: int = 500
    capacity: int = 10
    deadline_steps: int = 3
    explore_rate: float = 0.15
    hon_success: float = 0.9
    mal_success: float = 0.1
    clean_sweep: bool = True
    evidence_decay: float = 0.92   # per-step fade of past rating mass


class _DecayingEvidence:
    """Per-(truster, trustee) rating counts that fade toward the prior."""

    __slots__ = ("pos", "neg", "last_t")

    def __init__(self) -> None:
        self.pos = 0.0
        self.neg = 0.0
        self.last_t = 0

    def bump(self, positive: bool, t: int, decay_pow: list[float]) -> None:
        fade = decay_pow[t - self.last_t]
        self.pos *= fade
        self.neg *= fade
        if positive:
            self.pos += 1.0
        else:
            self.neg += 1.0
        self.last_t = t

    def score(self, t: int, decay_pow: list[float]) -> float:
        fade = decay_pow[t - self.last_t]
        p = self.pos * fade
        n = self.neg * fade
        return (p + 1.0) / (p + n + 2.0)


class RdpWorld:
    def __init__(self, cfg: RdpConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.t = 0
        half = cfg.trustees // 2
        self.success = [cfg.hon_success] * half + [cfg.mal_success] * (cfg.trustees - half)
        self.hon_ids = list(range(half))
        self.queues = [deque() for _ in range(cfg.trustees)]  # (truster, issued_at, deadline)
        self.evidence: list[dict[int, _DecayingEvidence]] = [dict() for _ in range(cfg.trustees)]
        self.decay_pow = [cfg.evidence_decay ** k for k in range(cfg.steps + 2)]
        self.truster_rngs = [derive_rng(seed, "truster", i) for i in range(cfg.trusters)]
        self.serve_rngs = [derive_rng(seed, "serve", w) for w in range(cfg.trustees)]
        self.reputation_series: list[list[float]] = [[] for _ in range(cfg.trustees)]
        self._current_rep = [0.5] * cfg.trustees

    def _rate(self, truster: int, trustee: int, positive: bool) -> None:
        per_truster = self.evidence[trustee]
        ev = per_truster.get(truster)
        if ev is None:
            ev = _DecayingEvidence()
            per_truster[truster] = ev
        ev.bump(positive, self.t, self.decay_pow)

    def _refresh_reputations(self) -> None:
        t = self.t
        decay_pow = self.decay_pow
        for trustee in range(self.cfg.trustees):
            raters = self.evidence[trustee]
            if raters:
                total = 0.0
                for ev in raters.values():
                    total += ev.score(t, decay_pow)
                self._current_rep[trustee] = total / len(raters)
            self.reputation_series[trustee].append(self._current_rep[trustee])

    def step(self) -> None:
        t = self.t
        cfg = self.cfg
        # Issue one task per truster: greedy on the shared reputation view.
        rated = [w for w in range(cfg.trustees) if self.evidence[w]]
        best = max(rated, key=lambda w: (self._current_rep[w], -w)) if rated else None
        for truster in range(cfg.trusters):
            rng = self.truster_rngs[truster]
            if best is None or rng.random() < cfg.explore_rate:
                trustee = rng.randrange(cfg.trustees)
            else:
                trustee = best
            self.queues[trustee].append((truster, t, t + cfg.deadline_steps))
        # Serve queued tasks issued before this step.
        for trustee in range(cfg.trustees):
            queue = self.queues[trustee]
            rng = self.serve_rngs[trustee]
            served = 0
            while queue and served < cfg.capacity and queue[0][1] < t:
                truster, issued_at, deadline = queue.popleft()
                served += 1
                quality = rng.random() < self.success[trustee]
                self._rate(truster, trustee, quality and t <= deadline)
        # Clean sweep: expired pending work becomes an immediate negative.
        if cfg.clean_sweep:
            for trustee in range(cfg.trustees):
                queue = self.queues[trustee]
                if not queue or queue[0][2] >= t:
                    continue
                keep = deque()
                for item in queue:
                    if item[2] < t:
                        self._rate(item[0], trustee, False)
                    else:
                        keep.append(item)
                self.queues[trustee] = keep
        self._refresh_reputations()
        self.t += 1

    def run(self) -> dict:
        for _ in range(self.cfg.steps):
            self.step()
        hon_series = [self.reputation_series[w] for w in self.hon_ids]
        mean_rep = sum(sum(s) for s in hon_series) / (len(hon_series) * self.cfg.steps)
        crossings = [count_mean_crossings(s) for s in hon_series]
        return {
            "mean_hon_reputation": mean_rep,
            "crossings_per_hon_trustee": crossings,
            "min_crossings": min(crossings),
            "hon_series": hon_series,
        }


def count_mean_crossings(series: list[float]) -> int:
    """Sign changes of the series around its own mean (zeros are skipped)."""
    if not series:
        return 0
    mean = sum(series) / len(series)
    crossings = 0
    last_sign = 0
    for value in series:
        diff = value - mean
        if diff == 0:
            continue
        sign = 1 if diff > 0 else -1
        if last_sign != 0 and sign != last_sign:
            crossings += 1
        last_sign = sign
    return crossings
