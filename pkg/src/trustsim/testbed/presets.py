"""Named scenario presets and the override plumbing the CLI drives.

Preset defaults mirror the source experiments at full scale; callers pass
overrides (validated against each preset's known keys) to run desk-scale
variants.  Every runner returns per-step rows plus a summary dict, both
pure functions of (scenario, policy, overrides, seed).
"""

from __future__ import annotations

from typing import Optional

from ..crn import CrnConfig, CrnScenario, run_crn
from ..errors import ConfigError
from ..sword import SwordConfig
from .accept import ACCEPT_POLICIES, AcceptConfig, AcceptWorld
from .ch3 import CH3_POLICIES, Ch3Config, Ch3World
from .competition import CompetitionConfig, CompetitionWorld
from .crowd import CROWD_POLICIES, CrowdConfig, CrowdWorld
from .rdp import RdpConfig, RdpWorld


def _require_keys(overrides: dict, allowed: dict) -> dict:
    unknown = sorted(set(overrides) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown override keys: {', '.join(unknown)}")
    coerced = {}
    for key, value in overrides.items():
        kind = allowed[key]
        try:
            coerced[key] = kind(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"override {key}={value!r} is not a valid {kind.__name__}") from exc
    return coerced


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return bool(value)
    text = str(value).lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(value)


# -- runners ---------------------------------------------------------------

def _run_ch3(policy: str, seed: int, horizon: Optional[int],
             overrides: dict, collusive: bool) -> dict:
    keys = {
        "providers": int, "witnesses": int, "consumers": int, "problems": int,
        "warmup": int, "witness_mix": str, "gain": float, "cost": float,
    }
    ov = _require_keys(overrides, keys)
    cfg = Ch3Config(
        policy=policy,
        providers=ov.get("providers", 100),
        witnesses=ov.get("witnesses", 100),
        consumers=ov.get("consumers", 10),
        problems=horizon or ov.get("problems", 200),
        warmup_steps=ov.get("warmup", 0),
        witness_mix=ov.get("witness_mix", "bs80" if collusive else "hon"),
        collusive=collusive,
        gain=ov.get("gain", 5.0),
        cost=ov.get("cost", 1.0),
    )
    summary = Ch3World(cfg, seed).run()
    rows = [summary.copy()]
    return {"rows": rows, "summary": summary}


def _run_rdp(policy: str, seed: int, horizon: Optional[int], overrides: dict) -> dict:
    keys = {
        "trustees": int, "trusters": int, "steps": int, "capacity": int,
        "deadline": int, "explore": float, "sweep": _bool,
        "hon_success": float, "mal_success": float,
    }
    ov = _require_keys(overrides, keys)
    cfg = RdpConfig(
        trustees=ov.get("trustees", 200),
        trusters=ov.get("trusters", 1000),
        steps=horizon or ov.get("steps", 500),
        capacity=ov.get("capacity", 10),
        deadline_steps=ov.get("deadline", 3),
        explore_rate=ov.get("explore", 0.15),
        hon_success=ov.get("hon_success", 0.9),
        mal_success=ov.get("mal_success", 0.1),
        clean_sweep=ov.get("sweep", True),
    )
    result = RdpWorld(cfg, seed).run()
    hon_series = result.pop("hon_series")
    steps = len(hon_series[0]) if hon_series else 0
    rows = []
    for t in range(steps):
        rows.append({
            "t": t,
            "mean_hon_reputation": sum(s[t] for s in hon_series) / len(hon_series),
        })
    summary = dict(result)
    summary["crossings_per_hon_trustee"] = " ".join(
        str(c) for c in summary.pop("crossings_per_hon_trustee")
    )
    return {"rows": rows, "summary": summary}


def _crowd_config(policy: str, horizon: Optional[int], overrides: dict) -> CrowdConfig:
    keys = {
        "workers": int, "requesters": int, "hon_x": int, "group_size": int,
        "deadline": int, "steps": int, "witnesses": int, "warmup": int,
        "v": float, "n_weight": float, "th_r": float, "explore": float,
        "g_max": float, "cost": float, "min_observations": int, "trace": _bool,
    }
    ov = _require_keys(overrides, keys)
    sword = SwordConfig(
        v=ov.get("v", 2.0),
        n_weight=ov.get("n_weight", 1.0),
        max_gain=ov.get("g_max", 1.0),
        task_cost=ov.get("cost", 0.2),
        rep_floor=ov.get("th_r", 0.6),
        explore_prob=ov.get("explore", 0.1),
    )
    return CrowdConfig(
        policy=policy,
        workers=ov.get("workers", 1000),
        requesters=ov.get("requesters", 50),
        hon_x=ov.get("hon_x", 50),
        group_size=ov.get("group_size", 40),
        deadline_steps=ov.get("deadline", 14),
        steps=horizon or ov.get("steps", 1000),
        witnesses=ov.get("witnesses", 50),
        warmup_steps=ov.get("warmup", 200),
        sword=sword,
        min_observations=ov.get("min_observations", 20),
        trace=ov.get("trace", False),
    )


def _run_crowd(policy: str, seed: int, horizon: Optional[int], overrides: dict) -> dict:
    cfg = _crowd_config(policy, horizon, overrides)
    world = CrowdWorld(cfg, seed)
    summary = world.run()
    rows = [
        {"t": t, "welfare": welfare} for t, welfare in enumerate(world.welfare_stream)
    ]
    times = summary.pop("group_times")
    summary.pop("hon_counts")
    summary["completion_times"] = " ".join("-" if x is None else str(x) for x in times)
    result = {"rows": rows, "summary": summary}
    if world.trace_rows:
        result["trace"] = world.trace_rows
    return result


def _run_competition(policy: str, seed: int, horizon: Optional[int], overrides: dict) -> dict:
    base = _crowd_config("sword", horizon, overrides)
    cfg = CompetitionConfig(base=base, steps=base.steps)
    summary = CompetitionWorld(cfg, seed).run()
    rows = []
    for name in summary["policies"]:
        rows.append({
            "system": name,
            "requester_preference": summary["requester_preference"][name],
            "worker_preference": summary["worker_preference"][name],
            "hon_worker_preference": summary["hon_worker_preference"][name],
            "time_avg_welfare": summary["time_avg_welfare"][name],
        })
    flat = {"policies": " ".join(summary["policies"])}
    for name in summary["policies"]:
        flat[f"req_pref_{name}"] = summary["requester_preference"][name]
        flat[f"welfare_{name}"] = summary["time_avg_welfare"][name]
    return {"rows": rows, "summary": flat}


def _run_accept(policy: str, seed: int, horizon: Optional[int], overrides: dict) -> dict:
    keys = {
        "trustees": int, "trusters": int, "hon_x": int, "steps": int, "v": float,
        "explore": float, "rep_floor": float, "cost_share": float, "trace": _bool,
    }
    ov = _require_keys(overrides, keys)
    cfg = AcceptConfig(
        policy=policy,
        trustees=ov.get("trustees", 100),
        trusters=ov.get("trusters", 1000),
        hon_x=ov.get("hon_x", 50),
        steps=horizon or ov.get("steps", 1000),
        v=ov.get("v", 100.0),
        explore_rate=ov.get("explore", 0.15),
        rep_floor=ov.get("rep_floor", 2.0 / 3.0),
        cost_share=ov.get("cost_share", 0.2),
        trace=ov.get("trace", False),
    )
    world = AcceptWorld(cfg, seed)
    summary = world.run()
    rows = [
        {"t": t, "welfare": w, "backlog": b}
        for t, (w, b) in enumerate(zip(world.welfare_stream, world.backlog_stream))
    ]
    summary.pop("hon_counts")
    result = {"rows": rows, "summary": summary}
    if world.trace_rows:
        result["trace"] = world.trace_rows
    return result


def _run_crn(policy: str, seed: int, horizon: Optional[int], overrides: dict) -> dict:
    keys = {
        "attack": str, "attacker_fraction": float, "sigma": float, "usage": float,
        "iterations": int, "su_count": int, "bands": int, "trust": _bool,
    }
    ov = _require_keys(overrides, keys)
    attack = ov.get("attack", "fabrication")
    if attack == "none":
        attack = None
    cfg = CrnConfig(
        su_count=ov.get("su_count", 100),
        bands=ov.get("bands", 8),
        iterations=horizon or ov.get("iterations", 10000),
    )
    scenario = CrnScenario(
        attack=attack,
        attacker_fraction=ov.get("attacker_fraction", 0.5),
        sigma=ov.get("sigma", 0.5),
        usage_rate=ov.get("usage", 0.45),
        trust_enabled=ov.get("trust", policy != "nocred"),
    )
    result = run_crn(cfg, scenario, seed)
    summary = {
        "policy": policy,
        "attack": attack or "none",
        "trust_enabled": scenario.trust_enabled,
        "false_alarm_rate": result.false_alarm_rate,
        "misdetection_rate": result.misdetection_rate,
        "tul": result.tul,
    }
    return {"rows": result.rows, "summary": summary}


PRESETS: dict[str, dict] = {
    "ch3-noncollusive": {
        "policies": CH3_POLICIES,
        "default_policy": "act",
        "run": lambda policy, seed, horizon, overrides: _run_ch3(policy, seed, horizon, overrides, False),
    },
    "ch3-collusive": {
        "policies": CH3_POLICIES,
        "default_policy": "act",
        "run": lambda policy, seed, horizon, overrides: _run_ch3(policy, seed, horizon, overrides, True),
    },
    "ch4-rdp": {
        "policies": ("static1",),
        "default_policy": "static1",
        "run": lambda policy, seed, horizon, overrides: _run_rdp(policy, seed, horizon, overrides),
    },
    "ch6-comparison": {
        "policies": CROWD_POLICIES,
        "default_policy": "sword",
        "run": lambda policy, seed, horizon, overrides: _run_crowd(policy, seed, horizon, overrides),
    },
    "ch6-competition": {
        "policies": ("all",),
        "default_policy": "all",
        "run": lambda policy, seed, horizon, overrides: _run_competition(policy, seed, horizon, overrides),
    },
    "ch7-draft": {
        "policies": ACCEPT_POLICIES,
        "default_policy": "draft",
        "run": lambda policy, seed, horizon, overrides: _run_accept(policy, seed, horizon, overrides),
    },
    "crn": {
        "policies": ("act", "nocred"),
        "default_policy": "act",
        "run": lambda policy, seed, horizon, overrides: _run_crn(policy, seed, horizon, overrides),
    },
}


def list_presets() -> list[str]:
    return sorted(PRESETS)


def build_world(scenario: str, policy: Optional[str], seed: int,
                horizon: Optional[int] = None, overrides: Optional[dict] = None) -> dict:
    """Run one seeded scenario; returns {"rows": [...], "summary": {...}}."""
    if scenario not in PRESETS:
        raise ConfigError(f"unknown scenario {scenario!r} (have: {', '.join(list_presets())})")
    preset = PRESETS[scenario]
    chosen = policy or preset["default_policy"]
    if chosen not in preset["policies"]:
        raise ConfigError(
            f"policy {chosen!r} not valid for {scenario} (have: {', '.join(preset['policies'])})"
        )
    return preset["run"](chosen, seed, horizon, dict(overrides or {}))
