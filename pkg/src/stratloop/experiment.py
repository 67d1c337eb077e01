"""Experiment orchestration: seeded trials, trace emission, summaries.

Per-trial seeds come from the documented splitting rule (SHA-256 based
``hash64(master_seed, trial_index)``), so traces are independent of worker
scheduling and reruns are byte-identical.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytics import aggregate, trace_rows, write_aggregate_csv, write_trial_csv
from .configs import ExperimentConfig, resolve_groups
from .errors import ConfigError
from .fairness import early_stop_scan
from .loop import RoundRecord, run_trial, run_two_group_trial, trial_seed
from .population import Group, qualification_rate

ENV_THREADS = "STRATLOOP_THREADS"


@dataclass
class ExperimentResult:
    out_dir: Path
    per_trial_csv: Path | None
    aggregate_csv: Path | None
    summary_json: Path | None
    summary: dict


def _worker_count(requested: int | None, trials: int) -> int:
    cap = os.environ.get(ENV_THREADS)
    cap = int(cap) if cap else (os.cpu_count() or 1)
    wanted = requested if requested is not None else cap
    return max(1, min(wanted, cap, trials))


def _single_trial(args) -> tuple[int, dict[str, list[RoundRecord]], list[float] | None]:
    groups, cfg, fairness_mode, eps_par, k = args
    seed = trial_seed(cfg.seed, k)
    if len(groups) == 1:
        g = groups[0]
        records = run_trial(g, cfg, np.random.default_rng(seed))
        return k, {g.group_id: records}, None
    rounds = run_two_group_trial(
        tuple(groups), cfg, fairness_mode, eps_par, rng_seed=seed
    )
    per_group = {
        gid: [r.per_group[gid].record for r in rounds] for gid in rounds[0].per_group
    }
    unfairness = [r.unfairness for r in rounds]
    return k, per_group, unfairness


def run_experiment(
    config: ExperimentConfig,
    out_dir,
    workers: int | None = None,
) -> ExperimentResult:
    """Run all trials for every group, then write traces and the summary."""
    started = time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc

    groups = resolve_groups(config)
    if len(groups) not in (1, 2):
        raise ConfigError(f"experiments support 1 or 2 groups, got {len(groups)}")
    cfg = config.retrain

    jobs = [(groups, cfg, config.fairness_mode, config.eps_par, k) for k in range(cfg.trials)]
    n_workers = _worker_count(workers, cfg.trials)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_single_trial, jobs))
    else:
        results = [_single_trial(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    traces: dict[str, list[list[RoundRecord]]] = {g.group_id: [] for g in groups}
    unfairness: list[list[float]] | None = [] if len(groups) == 2 else None
    for _, per_group, unf in results:
        for gid, records in per_group.items():
            traces[gid].append(records)
        if unfairness is not None:
            unfairness.append(unf)

    flags = cfg.mode_flags(config.fairness_mode)
    rows = trace_rows(traces, unfairness, flags)
    agg = aggregate(rows)

    per_trial_path = aggregate_path = summary_path = None
    if config.emit_per_trial:
        per_trial_path = out / f"{config.name}_trials.csv"
        write_trial_csv(per_trial_path, rows)
    if config.emit_aggregate:
        aggregate_path = out / f"{config.name}_aggregate.csv"
        write_aggregate_csv(aggregate_path, agg)

    summary = _build_summary(config, groups, traces, unfairness, flags)
    summary["runtime_s"] = round(time.time() - started, 3)
    if config.emit_summary:
        summary_path = out / f"{config.name}_summary.json"
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True))

    return ExperimentResult(out, per_trial_path, aggregate_path, summary_path, summary)


def _build_summary(config, groups, traces, unfairness, flags) -> dict:
    cfg = config.retrain
    summary: dict = {
        "name": config.name,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "horizon": cfg.horizon,
        "mode_flags": flags,
        "groups": {},
    }
    for g in groups:
        gid = g.group_id
        per_round = list(zip(*traces[gid]))  # [round][trial]
        final = per_round[-1]
        summary["groups"][gid] = {
            "q0_estimate": qualification_rate(
                g.population, n=100_000, rng=trial_seed(cfg.seed, 10**6)
            ),
            "annotation_bias": g.annotation_bias,
            "final_a": float(np.mean([r.a for r in final])),
            "final_q": float(np.mean([r.q for r in final])),
            "final_delta": float(np.mean([r.delta for r in final])),
        }
    if unfairness is not None:
        mean_unf = np.asarray(unfairness, dtype=np.float64).mean(axis=0)
        t_star, min_unf = early_stop_scan(mean_unf)
        summary["unfairness"] = {
            "min_round": t_star,
            "min_value": float(min_unf),
            "final": float(mean_unf[-1]),
        }
    return summary
