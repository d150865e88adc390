"""Experiment runner: seeded scenario runs, parameter sweeps, plot-ready series.

Exit codes: 0 on success, 2 for configuration/usage problems, 3 when a
runtime invariant of a simulation is breached.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional

from .errors import ConfigError, InvariantViolationError
from .testbed.presets import build_world, list_presets

KNOWN_CONFIG_KEYS = {"scenario", "policy", "seeds", "horizon", "overrides", "out"}


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    for cast in (int, float):
        try:
            return key, cast(raw)
        except ValueError:
            continue
    return key, raw


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = sorted(set(data) - KNOWN_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def _resolve(args, config: dict) -> dict:
    scenario = args.scenario or config.get("scenario")
    if not scenario:
        raise ConfigError("a scenario is required (positional argument or config file)")
    seeds = config.get("seeds", [0])
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    if args.seed is not None:
        seeds = [args.seed]
    if not seeds:
        raise ConfigError("at least one seed is required")
    overrides = dict(config.get("overrides", {}))
    for item in args.override or []:
        key, value = _parse_override(item)
        overrides[key] = value
    return {
        "scenario": scenario,
        "policy": args.policy or config.get("policy"),
        "seeds": list(seeds),
        "horizon": args.horizon or config.get("horizon"),
        "overrides": overrides,
        "out": args.out or config.get("out", "runs"),
    }


def _config_hash(resolved: dict) -> str:
    canonical = json.dumps(
        {k: resolved[k] for k in ("scenario", "policy", "seeds", "horizon", "overrides")},
        sort_keys=True,
    )
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_rows(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        if not rows:
            fh.write("")
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _numeric_items(summary: dict) -> dict:
    return {k: v for k, v in summary.items() if isinstance(v, (int, float)) and not isinstance(v, bool)}


def _run_one_seed(task: tuple) -> tuple:
    scenario, policy, seed, horizon, overrides = task
    return seed, build_world(scenario, policy, seed, horizon, overrides)


def cmd_run(args) -> int:
    resolved = _resolve(args, _load_config(args.config))
    out = Path(resolved["out"])
    out.mkdir(parents=True, exist_ok=True)
    scenario = resolved["scenario"]
    policy = resolved["policy"]
    tasks = [
        (scenario, policy, seed, resolved["horizon"], resolved["overrides"])
        for seed in resolved["seeds"]
    ]
    jobs = max(1, args.jobs or 1)
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one_seed, tasks))
    else:
        results = [_run_one_seed(task) for task in tasks]
    summaries = []
    outputs = []
    for seed, result in results:
        name = f"metrics_{scenario}_{policy or 'default'}_seed{seed}.csv"
        _write_rows(out / name, result["rows"])
        outputs.append(name)
        if "trace" in result:
            trace_name = f"trace_{scenario}_{policy or 'default'}_seed{seed}.csv"
            (out / trace_name).write_text("\n".join(result["trace"]) + "\n")
            outputs.append(trace_name)
        summaries.append((seed, result["summary"]))
    agg_rows = []
    numeric_keys = sorted({k for _, s in summaries for k in _numeric_items(s)})
    for key in numeric_keys:
        values = [s[key] for _, s in summaries if key in s]
        agg_rows.append({
            "scenario": scenario,
            "policy": policy or "default",
            "metric": key,
            "mean": sum(values) / len(values),
            "min": min(values),
            "max": max(values),
        })
    _write_rows(out / "summary.csv", agg_rows)
    per_seed_path = out / "per_seed.jsonl"
    with per_seed_path.open("w") as fh:
        for seed, summary in summaries:
            fh.write(json.dumps({"seed": seed, **summary}, sort_keys=True) + "\n")
    manifest = {
        "scenario": scenario,
        "policy": policy,
        "seeds": resolved["seeds"],
        "horizon": resolved["horizon"],
        "overrides": resolved["overrides"],
        "config_hash": _config_hash(resolved),
        "outputs": outputs + ["summary.csv", "per_seed.jsonl"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"wrote {len(resolved['seeds'])} per-seed metrics files + summary to {out}")
    return 0


def cmd_sweep(args) -> int:
    resolved = _resolve(args, _load_config(args.config))
    if not args.values:
        raise ConfigError("sweep needs a non-empty --values list")
    values = []
    for raw in args.values.split(","):
        if raw == "":
            raise ConfigError("empty value in --values list")
        try:
            values.append(float(raw))
        except ValueError as exc:
            raise ConfigError(f"sweep value {raw!r} is not numeric") from exc
    out = Path(resolved["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        overrides = dict(resolved["overrides"])
        overrides[args.param] = value
        per_seed = []
        for seed in resolved["seeds"]:
            result = build_world(resolved["scenario"], resolved["policy"], seed,
                                 resolved["horizon"], overrides)
            per_seed.append(result["summary"])
        row = {"param": args.param, "value": value}
        numeric_keys = sorted({k for s in per_seed for k in _numeric_items(s)})
        for key in numeric_keys:
            vals = [s[key] for s in per_seed if key in s]
            row[f"mean_{key}"] = sum(vals) / len(vals)
        rows.append(row)
    _write_rows(out / f"sweep_{args.param}.csv", rows)
    print(f"wrote {len(rows)} sweep rows to {out / f'sweep_{args.param}.csv'}")
    return 0


# -- plot data ----------------------------------------------------------------

def _read_per_seed(run_dir: Path) -> list[dict]:
    path = run_dir / "per_seed.jsonl"
    if not path.exists():
        raise ConfigError(f"missing run output: {path}")
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def _figure_cdf(run_dirs: list[Path], out: Path) -> list[str]:
    series = []
    for run_dir in run_dirs:
        manifest = json.loads((run_dir / "manifest.json").read_text())
        per_seed = _read_per_seed(run_dir)
        times: list[Optional[int]] = []
        horizon = 0
        for record in per_seed:
            for token in str(record.get("completion_times", "")).split():
                if token == "-":
                    times.append(None)
                else:
                    value = int(token)
                    times.append(value)
                    horizon = max(horizon, value)
        if not times:
            raise ConfigError(f"run {run_dir} holds no completion times")
        name = f"cdf__{manifest['policy'] or 'default'}"
        rows = []
        for x in range(1, horizon + 1):
            frac = sum(1 for t in times if t is not None and t <= x) / len(times)
            rows.append({"x": x, "y": frac})
        _write_rows(out / f"{name}.csv", rows)
        series.append(name)
    return series


def _figure_metric_by_key(run_dirs: list[Path], out: Path, x_key: str, y_key: str,
                          prefix: str) -> list[str]:
    series = []
    for run_dir in run_dirs:
        manifest = json.loads((run_dir / "manifest.json").read_text())
        per_seed = _read_per_seed(run_dir)
        groups: dict[float, list[float]] = {}
        for record in per_seed:
            if x_key not in record or y_key not in record:
                raise ConfigError(f"run {run_dir} lacks fields {x_key}/{y_key}")
            groups.setdefault(record[x_key], []).append(record[y_key])
        name = f"{prefix}__{manifest['policy'] or 'default'}"
        rows = [
            {"x": x, "y": sum(ys) / len(ys)} for x, ys in sorted(groups.items())
        ]
        _write_rows(out / f"{name}.csv", rows)
        series.append(name)
    return series


FIGURES = {
    "f33-cdf": (_figure_cdf, "cumulative fraction of task batches done within x steps"),
    "f31-welfare": (lambda dirs, out: _figure_metric_by_key(dirs, out, "hon_x", "time_avg_welfare", "welfare"),
                    "time-averaged welfare vs population honesty"),
    "f35-fairness": (lambda dirs, out: _figure_metric_by_key(dirs, out, "hon_x", "fairness_hon", "fairness"),
                     "fairness index vs population honesty"),
    "f57-vsweep": (lambda dirs, out: _figure_metric_by_key(dirs, out, "v", "time_avg_welfare", "vsweep"),
                   "welfare vs the control parameter V"),
    "f18-crn": (lambda dirs, out: _figure_metric_by_key(dirs, out, "trust_enabled", "misdetection_rate", "crn"),
                "misdetection rate with and without trust"),
}


def cmd_plot_data(args) -> int:
    if args.figure not in FIGURES:
        raise ConfigError(f"unknown figure id {args.figure!r} (have: {', '.join(sorted(FIGURES))})")
    run_dirs = [Path(p) for p in args.runs]
    missing = [str(p) for p in run_dirs if not (p / "manifest.json").exists()]
    if missing:
        raise ConfigError(f"missing run directories: {', '.join(missing)}")
    out = Path(args.out or "plots")
    out.mkdir(parents=True, exist_ok=True)
    builder, description = FIGURES[args.figure]
    series = builder(run_dirs, out)
    legend = {"figure": args.figure, "description": description, "series": series}
    (out / f"{args.figure}_legend.json").write_text(json.dumps(legend, indent=2, sort_keys=True))
    print(f"wrote {len(series)} series for {args.figure} to {out}")
    return 0


def cmd_list_presets(_args) -> int:
    for name in list_presets():
        print(name)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trustsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario over one or more seeds")
    run.add_argument("scenario", nargs="?", help="preset name (see list-presets)")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--policy")
    run.add_argument("--seed", type=int)
    run.add_argument("--seeds", help="comma-separated seed list")
    run.add_argument("--horizon", type=int)
    run.add_argument("--out")
    run.add_argument("--override", action="append", metavar="KEY=VALUE")
    run.add_argument("--jobs", type=int, default=1, help="seed worker pool size")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="sweep one numeric parameter")
    sweep.add_argument("scenario", nargs="?")
    sweep.add_argument("--config", help="JSON config file")
    sweep.add_argument("--policy")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--seeds")
    sweep.add_argument("--horizon", type=int)
    sweep.add_argument("--out")
    sweep.add_argument("--override", action="append", metavar="KEY=VALUE")
    sweep.add_argument("--param", required=True)
    sweep.add_argument("--values", required=True, help="comma-separated numeric values")
    sweep.set_defaults(func=cmd_sweep)

    plot = sub.add_parser("plot-data", help="emit plot-ready series from finished runs")
    plot.add_argument("--figure", required=True)
    plot.add_argument("--runs", nargs="+", required=True, help="run output directories")
    plot.add_argument("--out")
    plot.set_defaults(func=cmd_plot_data)

    lp = sub.add_parser("list-presets", help="list scenario presets")
    lp.set_defaults(func=cmd_list_presets)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
