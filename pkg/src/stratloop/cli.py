"""Command-line experiment runner.

Exit codes: 0 success, 1 runtime failure, 2 configuration problems.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace

import click

from .configs import (
    BUILTIN_CONFIGS,
    config_to_json,
    list_builtin_configs,
    load_config,
    validate_config,
)
from .errors import ConfigError, IngestError, StratloopError
from .experiment import run_experiment
from .ingest import write_stand_in_credit_approval, write_stand_in_german

MODE_MAP = {
    "original": {"annotation": "hard", "memory": "cumulative"},
    "refined": {"annotation": "probabilistic", "memory": "cumulative"},
    "memoryless": {"annotation": "hard", "memory": "recent_only"},
}

FAIRNESS_MAP = {
    "none": "none",
    "dp": "dp_every_round",
    "dp-early-stop": "early_stop",
    "disparate": "disparate_strategies",
}


@click.group()
def main():
    """Closed-loop retraining experiments with strategic agents."""


@main.command("list-configs")
def list_configs_cmd():
    """List builtin experiment configurations."""
    for name in list_builtin_configs():
        click.echo(name)


@main.command("validate-config")
@click.argument("config")
def validate_config_cmd(config):
    """Validate a builtin name or a config JSON file."""
    problems = validate_config(config)
    if problems:
        for p in problems:
            click.echo(f"error: {p}", err=True)
        sys.exit(2)
    click.echo(f"{config}: ok")


@main.command("show-config")
@click.argument("config")
def show_config_cmd(config):
    """Print the resolved JSON document of a config."""
    try:
        cfg = load_config(config)
    except (ConfigError, IngestError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(json.dumps(config_to_json(cfg), indent=2, sort_keys=True))


@main.command("run")
@click.option("--config", "config_name", required=True, help="Builtin name or JSON path.")
@click.option("--trials", type=int, default=None, help="Override trial count.")
@click.option("--seed", type=int, default=None, help="Override master seed.")
@click.option("--out", "out_dir", default="results", show_default=True)
@click.option("--mode", type=click.Choice(sorted(MODE_MAP)), default=None,
              help="Retraining variant override.")
@click.option("--fairness", type=click.Choice(sorted(FAIRNESS_MAP)), default=None,
              help="Fairness intervention override.")
@click.option("--noise-sigma", type=float, default=None, help="Best-response noise override.")
@click.option("--r", "ratio", type=float, default=None,
              help="Override K/N by adjusting the human batch size.")
@click.option("--workers", type=int, default=None,
              help="Worker processes (capped by STRATLOOP_THREADS).")
def run_cmd(config_name, trials, seed, out_dir, mode, fairness, noise_sigma, ratio, workers):
    """Run an experiment and write trace CSVs plus a JSON summary."""
    try:
        config = load_config(config_name)
        retrain = config.retrain
        if trials is not None:
            retrain = replace(retrain, trials=trials)
        if seed is not None:
            retrain = replace(retrain, seed=seed)
        if noise_sigma is not None:
            retrain = replace(retrain, noise_sigma=noise_sigma)
        if mode is not None:
            retrain = replace(retrain, **MODE_MAP[mode])
        if ratio is not None:
            retrain = replace(retrain, n_human=round(ratio * retrain.n_model))
        config.retrain = retrain
        if fairness is not None:
            config.fairness_mode = FAIRNESS_MAP[fairness]
    except (ConfigError, IngestError, FileNotFoundError, json.JSONDecodeError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)

    try:
        result = run_experiment(config, out_dir, workers=workers)
    except (ConfigError, IngestError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except StratloopError as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(1)
    for path in (result.per_trial_csv, result.aggregate_csv, result.summary_json):
        if path is not None:
            click.echo(str(path))


@main.command("make-data")
@click.argument("dataset", type=click.Choice(["german", "credit-approval"]))
@click.option("--out", "out_path", required=True)
@click.option("--rows", type=int, default=None)
@click.option("--seed", type=int, default=0)
def make_data_cmd(dataset, out_path, rows, seed):
    """Write a synthetic, schema-compatible stand-in dataset for CI use."""
    if dataset == "german":
        write_stand_in_german(out_path, rows or 1000, seed)
    else:
        write_stand_in_credit_approval(out_path, rows or 600, seed)
    click.echo(out_path)


if __name__ == "__main__":
    main()
