"""Experiment configurations: JSON schema, validation, and builtins.

A config either embeds its groups directly (synthetic populations, or
Beta-conditional ones whose parameters are known) or carries a data section
describing how to fit group populations from a CSV at run time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import BetaDist, GaussianDist, LinearLabelFn, LogisticLabelFn, UniformDist
from .errors import ConfigError, IngestError
from .ingest import ColumnSchema, fit_beta_conditionals, fit_kde_logistic, ingest_csv
from .learner import TrainSettings
from .loop import FAIRNESS_MODES, RetrainConfig
from .population import (
    ConditionalPopulation,
    Group,
    Population,
    group_from_json,
    group_to_json,
)

CONFIG_VERSION = 1


@dataclass(frozen=True)
class DataSpec:
    """How to build group populations from a CSV at run time."""

    path: str
    features: tuple[str, ...]
    label: str
    group_column: str
    fit: str  # "kde_logistic" or "beta_conditionals"
    group_bias: dict[str, float]
    classifier_features: tuple[int, ...] | None = None
    cost_scale: float = 5.0

    def __post_init__(self):
        if self.fit not in ("kde_logistic", "beta_conditionals"):
            raise ConfigError(f"unknown data fit kind {self.fit!r}")


@dataclass
class ExperimentConfig:
    name: str
    retrain: RetrainConfig
    groups: list[Group] = field(default_factory=list)
    data: DataSpec | None = None
    fairness_mode: str = "none"
    eps_par: float = 0.01
    emit_per_trial: bool = True
    emit_aggregate: bool = True
    emit_summary: bool = True

    def __post_init__(self):
        if self.fairness_mode not in FAIRNESS_MODES:
            raise ConfigError(f"fairness mode must be one of {FAIRNESS_MODES}")
        if not self.groups and self.data is None:
            raise ConfigError("config needs explicit groups or a data section")
        ids = [g.group_id for g in self.groups]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate group ids: {ids}")


def resolve_groups(config: ExperimentConfig) -> list[Group]:
    """Materialize the config's groups, fitting from data when required."""
    if config.groups:
        return list(config.groups)
    ds = config.data
    schema = ColumnSchema(features=ds.features, label=ds.label, group=ds.group_column)
    try:
        profile = ingest_csv(ds.path, schema)
    except FileNotFoundError:
        raise IngestError(
            f"dataset file {ds.path!r} not found; generate a stand-in with "
            f"'stratloop make-data'"
        ) from None
    groups = []
    for gid, bias in ds.group_bias.items():
        if ds.fit == "kde_logistic":
            pop = fit_kde_logistic(profile, gid, feature_subset=ds.classifier_features)
        else:
            pop = fit_beta_conditionals(profile, gid)
        groups.append(
            Group(
                group_id=gid,
                population=pop,
                annotation_bias=bias,
                cost_matrix=ds.cost_scale * np.eye(pop.dims),
            )
        )
    return groups


# -- JSON round trip ----------------------------------------------------------


def _train_to_json(t: TrainSettings) -> dict:
    return {
        "epochs": t.epochs,
        "learning_rate": t.learning_rate,
        "batch_size": t.batch_size,
        "l2": t.l2,
        "seed": t.seed,
    }


def _retrain_to_json(r: RetrainConfig) -> dict:
    return {
        "n_model": r.n_model,
        "n_human": r.n_human,
        "r": r.ratio,
        "horizon": r.horizon,
        "trials": r.trials,
        "seed": r.seed,
        "annotation": r.annotation,
        "annotation_timing": r.annotation_timing,
        "memory": r.memory,
        "human_source": r.human_source,
        "noise_sigma": r.noise_sigma,
        "learner": r.learner,
        "strategic": r.strategic,
        "eval_n": r.eval_n,
        "train": _train_to_json(r.train),
    }


def config_to_json(config: ExperimentConfig) -> dict:
    doc = {
        "spec_version": CONFIG_VERSION,
        "name": config.name,
        "retrain": _retrain_to_json(config.retrain),
        "fairness": {"mode": config.fairness_mode, "eps_par": config.eps_par},
        "output": {
            "per_trial_csv": config.emit_per_trial,
            "aggregate_csv": config.emit_aggregate,
            "summary_json": config.emit_summary,
        },
    }
    if config.groups:
        doc["groups"] = [group_to_json(g) for g in config.groups]
    if config.data is not None:
        ds = config.data
        doc["data"] = {
            "path": ds.path,
            "features": list(ds.features),
            "label": ds.label,
            "group_column": ds.group_column,
            "fit": ds.fit,
            "group_bias": dict(ds.group_bias),
            "classifier_features": (
                list(ds.classifier_features) if ds.classifier_features else None
            ),
            "cost_scale": ds.cost_scale,
        }
    return doc


def _retrain_from_json(doc: dict) -> RetrainConfig:
    train_doc = doc.get("train", {})
    train = TrainSettings(
        epochs=int(train_doc.get("epochs", 50)),
        learning_rate=float(train_doc.get("learning_rate", 0.05)),
        batch_size=int(train_doc.get("batch_size", 32)),
        l2=float(train_doc.get("l2", 1e-4)),
        seed=int(train_doc.get("seed", 0)),
    )
    cfg = RetrainConfig(
        n_model=int(doc["n_model"]),
        n_human=int(doc.get("n_human", 0)),
        horizon=int(doc["horizon"]),
        trials=int(doc.get("trials", 1)),
        seed=int(doc.get("seed", 42)),
        annotation=doc.get("annotation", "hard"),
        annotation_timing=doc.get("annotation_timing", "current"),
        memory=doc.get("memory", "cumulative"),
        human_source=doc.get("human_source", "prior"),
        noise_sigma=float(doc.get("noise_sigma", 0.0)),
        learner=doc.get("learner", "sgd"),
        train=train,
        strategic=bool(doc.get("strategic", True)),
        eval_n=doc.get("eval_n"),
    )
    if "r" in doc and abs(cfg.ratio - float(doc["r"])) > 1e-12:
        raise ConfigError(
            f"retrain.r = {doc['r']} contradicts n_human/n_model = {cfg.ratio}"
        )
    return cfg


def config_from_json(doc: dict) -> ExperimentConfig:
    if doc.get("spec_version") != CONFIG_VERSION:
        raise ConfigError(f"unsupported config spec_version {doc.get('spec_version')!r}")
    for key in ("name", "retrain"):
        if key not in doc:
            raise ConfigError(f"config is missing required key {key!r}")
    fairness = doc.get("fairness", {})
    data = None
    if "data" in doc:
        d = doc["data"]
        cf = d.get("classifier_features")
        data = DataSpec(
            path=str(d["path"]),
            features=tuple(d["features"]),
            label=str(d["label"]),
            group_column=str(d["group_column"]),
            fit=str(d["fit"]),
            group_bias={str(k): float(v) for k, v in d["group_bias"].items()},
            classifier_features=tuple(int(i) for i in cf) if cf else None,
            cost_scale=float(d.get("cost_scale", 5.0)),
        )
    output = doc.get("output", {})
    return ExperimentConfig(
        name=str(doc["name"]),
        retrain=_retrain_from_json(doc["retrain"]),
        groups=[group_from_json(g) for g in doc.get("groups", [])],
        data=data,
        fairness_mode=fairness.get("mode", "none"),
        eps_par=float(fairness.get("eps_par", 0.01)),
        emit_per_trial=bool(output.get("per_trial_csv", True)),
        emit_aggregate=bool(output.get("aggregate_csv", True)),
        emit_summary=bool(output.get("summary_json", True)),
    )


def load_config(path_or_name: str) -> ExperimentConfig:
    """A builtin name, or a path to a config JSON document."""
    if path_or_name in BUILTIN_CONFIGS:
        return BUILTIN_CONFIGS[path_or_name]()
    with open(path_or_name, encoding="utf-8") as fh:
        return config_from_json(json.load(fh))


def validate_config(path_or_name: str) -> list[str]:
    """Structural validation; returns a list of problems (empty when clean)."""
    problems: list[str] = []
    if path_or_name in BUILTIN_CONFIGS:
        try:
            BUILTIN_CONFIGS[path_or_name]()
        except (ConfigError, IngestError) as exc:
            problems.append(str(exc))
        return problems
    try:
        with open(path_or_name, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        return [f"no such config file or builtin: {path_or_name!r}"]
    except json.JSONDecodeError as exc:
        return [f"invalid JSON: {exc}"]
    try:
        config_from_json(doc)
    except (ConfigError, IngestError, KeyError, TypeError, ValueError) as exc:
        problems.append(f"{type(exc).__name__}: {exc}")
    return problems


# -- builtin experiment families ----------------------------------------------


def _uniform_population() -> Population:
    return Population(
        marginals=(UniformDist(0.0, 1.0), UniformDist(0.0, 1.0)),
        label_fn=LinearLabelFn(coeffs=(0.5, 0.5), intercept=0.0),
    )


def _gaussian_population() -> Population:
    return Population(
        marginals=(GaussianDist(0.0, 0.5), GaussianDist(0.0, 0.5)),
        label_fn=LogisticLabelFn(coeffs=(1.0, 1.0), intercept=0.0),
    )


def _two_groups(pop_factory, cost: np.ndarray, bias: float = 0.1) -> list[Group]:
    return [
        Group("i", pop_factory(), annotation_bias=+bias, cost_matrix=cost),
        Group("j", pop_factory(), annotation_bias=-bias, cost_matrix=cost),
    ]


_BASE_RETRAIN = RetrainConfig(
    n_model=2000, n_human=100, horizon=15, trials=100, seed=42
)


def _synthetic(name: str, pop_factory, **overrides) -> ExperimentConfig:
    cost = overrides.pop("cost", 5.0 * np.eye(2))
    bias = overrides.pop("bias", 0.1)
    retrain = replace(_BASE_RETRAIN, **overrides)
    return ExperimentConfig(
        name=name, retrain=retrain, groups=_two_groups(pop_factory, cost, bias)
    )


def _credit_approval() -> ExperimentConfig:
    # Per-label Beta conditionals taken as direct inputs. The published base
    # rate for group j is unusable, so the stand-in value is recomputed from
    # data when a CSV is supplied; 0.45 is the default placeholder.
    pop_i = ConditionalPopulation(
        positive=(BetaDist(1.37, 3.23), BetaDist(0.83, 2.83)),
        negative=(BetaDist(1.50, 4.94), BetaDist(0.84, 5.56)),
        q0=0.473,
    )
    pop_j = ConditionalPopulation(
        positive=(BetaDist(1.73, 3.84), BetaDist(0.66, 2.50)),
        negative=(BetaDist(1.59, 4.67), BetaDist(0.69, 3.86)),
        q0=0.45,
    )
    cost = 5.0 * np.eye(2)
    return ExperimentConfig(
        name="credit_approval",
        retrain=replace(_BASE_RETRAIN, trials=50),
        groups=[
            Group("i", pop_i, annotation_bias=+0.1, cost_matrix=cost),
            Group("j", pop_j, annotation_bias=-0.1, cost_matrix=cost),
        ],
    )


def _german_credit() -> ExperimentConfig:
    return ExperimentConfig(
        name="german_credit",
        retrain=_BASE_RETRAIN,
        data=DataSpec(
            path="data/german_stand_in.csv",
            features=tuple(f"f{k}" for k in range(19)),
            label="label",
            group_column="sex",
            fit="kde_logistic",
            group_bias={"male": +0.06, "female": -0.06},
            classifier_features=tuple(range(10)),
            cost_scale=5.0,
        ),
    )


BUILTIN_CONFIGS = {
    "uniform_linear_r005": lambda: _synthetic("uniform_linear_r005", _uniform_population),
    "uniform_linear_r0": lambda: _synthetic(
        "uniform_linear_r0", _uniform_population, n_human=0
    ),
    "uniform_linear_r01": lambda: _synthetic(
        "uniform_linear_r01", _uniform_population, n_human=200
    ),
    "uniform_linear_r03": lambda: _synthetic(
        "uniform_linear_r03", _uniform_population, n_human=600
    ),
    "gaussian_logistic_r005": lambda: _synthetic(
        "gaussian_logistic_r005", _gaussian_population
    ),
    "gaussian_logistic_r0": lambda: _synthetic(
        "gaussian_logistic_r0", _gaussian_population, n_human=0
    ),
    "gaussian_logistic_r01": lambda: _synthetic(
        "gaussian_logistic_r01", _gaussian_population, n_human=200
    ),
    "gaussian_logistic_r03": lambda: _synthetic(
        "gaussian_logistic_r03", _gaussian_population, n_human=600
    ),
    "uniform_linear_cost36": lambda: _synthetic(
        "uniform_linear_cost36", _uniform_population, cost=np.diag([3.0, 6.0])
    ),
    "gaussian_logistic_cost36": lambda: _synthetic(
        "gaussian_logistic_cost36", _gaussian_population, cost=np.diag([3.0, 6.0])
    ),
    "uniform_linear_noisy": lambda: _synthetic(
        "uniform_linear_noisy", _uniform_population, noise_sigma=0.1
    ),
    "gaussian_logistic_noisy": lambda: _synthetic(
        "gaussian_logistic_noisy", _gaussian_population, noise_sigma=0.1
    ),
    "uniform_linear_refined": lambda: _synthetic(
        "uniform_linear_refined", _uniform_population, annotation="probabilistic"
    ),
    "gaussian_logistic_refined": lambda: _synthetic(
        "gaussian_logistic_refined", _gaussian_population, annotation="probabilistic"
    ),
    "uniform_linear_memoryless": lambda: _synthetic(
        "uniform_linear_memoryless", _uniform_population, memory="recent_only"
    ),
    "gaussian_logistic_memoryless": lambda: _synthetic(
        "gaussian_logistic_memoryless", _gaussian_population, memory="recent_only"
    ),
    "uniform_linear_nonstrategic": lambda: _synthetic(
        "uniform_linear_nonstrategic", _uniform_population, strategic=False
    ),
    "gaussian_logistic_nonstrategic": lambda: _synthetic(
        "gaussian_logistic_nonstrategic", _gaussian_population, strategic=False
    ),
    "credit_approval": _credit_approval,
    "german_credit": _german_credit,
}


def list_builtin_configs() -> list[str]:
    return sorted(BUILTIN_CONFIGS)
