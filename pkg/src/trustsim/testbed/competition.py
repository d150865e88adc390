"""Competition mode: five allocation systems compete for the same agents.

Workers and requesters are registered in every system but spend each step
in exactly one, chosen by a learned preference that is rewarded when the
step in that system paid off.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .base import CompetitionLearner, competition_update, derive_rng
from .crowd import CROWD_POLICIES, CrowdConfig, CrowdWorld


@dataclass
class CompetitionConfig:
    base: CrowdConfig = field(default_factory=CrowdConfig)
    steps: int = 1000


class CompetitionWorld:
    def __init__(self, cfg: CompetitionConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.policies = list(CROWD_POLICIES)
        self.worlds = []
        for i, policy in enumerate(self.policies):
            world_cfg = replace(cfg.base, policy=policy)
            world = CrowdWorld(world_cfg, derive_rng(seed, "system", i).randrange(2 ** 31))
            self.worlds.append(world)
        n_workers = cfg.base.workers
        n_requesters = cfg.base.requesters
        systems = len(self.policies)
        self.worker_learners = [CompetitionLearner(systems=systems) for _ in range(n_workers)]
        self.requester_learners = [CompetitionLearner(systems=systems) for _ in range(n_requesters)]
        self.worker_rngs = [derive_rng(seed, "wchoice", w) for w in range(n_workers)]
        self.requester_rngs = [derive_rng(seed, "rchoice", r) for r in range(n_requesters)]

    def run(self) -> dict:
        for world in self.worlds:
            world.warm_up()
        n_workers = self.cfg.base.workers
        n_requesters = self.cfg.base.requesters
        systems = len(self.policies)
        for _ in range(self.cfg.steps):
            worker_choice = [
                self.worker_learners[w].choose(self.worker_rngs[w]) for w in range(n_workers)
            ]
            requester_choice = [
                self.requester_learners[r].choose(self.requester_rngs[r])
                for r in range(n_requesters)
            ]
            for i, world in enumerate(self.worlds):
                world.worker_active = [worker_choice[w] == i for w in range(n_workers)]
                world.requester_active = [requester_choice[r] == i for r in range(n_requesters)]
                world.step()
            for w in range(n_workers):
                i = worker_choice[w]
                paid = self.worlds[i].step_completions_by_worker[w] > 0
                competition_update(self.worker_learners[w], i, paid)
            for r in range(n_requesters):
                i = requester_choice[r]
                served = self.worlds[i].step_ontime_by_requester[r] > 0
                competition_update(self.requester_learners[r], i, served)
        requester_share = [0.0] * systems
        for learner in self.requester_learners:
            for i in range(systems):
                requester_share[i] += learner.pi[i] / n_requesters
        worker_share = [0.0] * systems
        for learner in self.worker_learners:
            for i in range(systems):
                worker_share[i] += learner.pi[i] / n_workers
        welfare = {
            policy: sum(world.welfare_stream) / len(world.welfare_stream)
            for policy, world in zip(self.policies, self.worlds)
        }
        hon_share = [0.0] * systems
        for i, world in enumerate(self.worlds):
            for w in world.hon_ids:
                hon_share[i] += self.worker_learners[w].pi[i]
            hon_share[i] /= len(world.hon_ids)
        return {
            "policies": self.policies,
            "requester_preference": dict(zip(self.policies, requester_share)),
            "worker_preference": dict(zip(self.policies, worker_share)),
            "hon_worker_preference": dict(zip(self.policies, hon_share)),
            "time_avg_welfare": welfare,
        }
