"""The closed retraining loop.

Round 0 trains the first model on human-annotated samples only. Each later
round t:

1. draws a fresh cohort that best-responds to the previous model,
2. model-annotates post-response features with that previous model (hard
   decisions, or probabilistic draws from its scorer in the refined
   variant),
3. adds a small batch of human-annotated samples (drawn from the prior
   feature distribution, or from post-response features in the
   post_response variant),
4. grows or replaces the training set, refits, and deploys the new model
   on the cohort.

Two annotation timings exist. The default ("current") annotates the
incoming cohort itself, so agents who move land on the boundary of the
model that labels them and always enter the pool as positives; this is the
self-reinforcing feedback that drives acceptance rates upward. The
"recycled" timing instead recycles the previous round's cohort with the
decisions of the model that actually classified it, which makes the
training-pool positive rate follow the mixing recursion driven by the
measured acceptance rate exactly, at the cost of a one-round lag in when
strategic gains reach the pool.

The per-round metrics are estimated on the incoming cohort: acceptance
rate a (new model on post-response features), qualification rate q (their
true labels), classifier bias delta = |a - q|, and the training-set
positive rate qbar.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_rng, hash64
from .errors import ConfigError
from .learner import (
    GroundTruthModel,
    LogisticModel,
    ScoreModel,
    TrainSettings,
    fit_logistic,
    ground_truth_scorer,
)
from .population import Group, human_annotate, sample_agents
from .response import QuadraticCost, respond_cohort

PROV_HUMAN = 0
PROV_MODEL = 1

ANNOTATION_MODES = ("hard", "probabilistic")
ANNOTATION_TIMINGS = ("current", "recycled")
MEMORY_MODES = ("cumulative", "recent_only")
HUMAN_SOURCES = ("prior", "post_response")
LEARNER_MODES = ("sgd", "ground_truth")
FAIRNESS_MODES = ("none", "dp_every_round", "disparate_strategies", "early_stop")


@dataclass(frozen=True)
class TrainingSet:
    """Labeled samples with provenance (human/model) and round of arrival."""

    X: np.ndarray
    y: np.ndarray
    provenance: np.ndarray
    round_added: np.ndarray

    @classmethod
    def empty(cls, dims: int) -> "TrainingSet":
        return cls(
            X=np.empty((0, dims)),
            y=np.empty(0, dtype=np.int8),
            provenance=np.empty(0, dtype=np.uint8),
            round_added=np.empty(0, dtype=np.int32),
        )

    def extended(self, X, y, provenance: int, round_no: int) -> "TrainingSet":
        n = X.shape[0]
        return TrainingSet(
            X=np.vstack([self.X, X]),
            y=np.concatenate([self.y, np.asarray(y, dtype=np.int8)]),
            provenance=np.concatenate(
                [self.provenance, np.full(n, provenance, dtype=np.uint8)]
            ),
            round_added=np.concatenate(
                [self.round_added, np.full(n, round_no, dtype=np.int32)]
            ),
        )

    @property
    def size(self) -> int:
        return self.X.shape[0]

    def label_mean(self) -> float:
        return float(self.y.mean()) if self.size else float("nan")


@dataclass(frozen=True)
class RetrainConfig:
    """Knobs of the retraining loop; n_model is both the number of
    model-annotated samples per round and the incoming cohort size."""

    n_model: int = 2000
    n_human: int = 100
    horizon: int = 15
    trials: int = 1
    seed: int = 42
    annotation: str = "hard"
    annotation_timing: str = "current"
    memory: str = "cumulative"
    human_source: str = "prior"
    noise_sigma: float = 0.0
    learner: str = "sgd"
    train: TrainSettings = field(default_factory=TrainSettings)
    strategic: bool = True
    eval_n: int | None = None

    def __post_init__(self):
        if self.n_model < 1:
            raise ConfigError(f"n_model must be >= 1, got {self.n_model}")
        if self.n_human < 0:
            raise ConfigError(f"n_human must be >= 0, got {self.n_human}")
        if self.horizon < 0:
            raise ConfigError(f"horizon must be >= 0, got {self.horizon}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be nonnegative")
        for name, value, allowed in (
            ("annotation", self.annotation, ANNOTATION_MODES),
            ("annotation_timing", self.annotation_timing, ANNOTATION_TIMINGS),
            ("memory", self.memory, MEMORY_MODES),
            ("human_source", self.human_source, HUMAN_SOURCES),
            ("learner", self.learner, LEARNER_MODES),
        ):
            if value not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {value!r}")

    @property
    def ratio(self) -> float:
        """r = K / N, the human-to-model annotation budget ratio."""
        return self.n_human / self.n_model

    def mode_flags(self, fairness: str = "none") -> str:
        parts = [
            self.annotation,
            self.memory,
            self.human_source,
            self.learner,
            f"sigma={self.noise_sigma:g}",
            f"fair={fairness}",
        ]
        if self.annotation_timing != "current":
            parts.append(f"timing={self.annotation_timing}")
        if not self.strategic:
            parts.append("nonstrategic")
        return "|".join(parts)


@dataclass
class RoundRecord:
    t: int
    a: float
    q: float
    delta: float
    qbar: float
    theta: float
    a_soft: float
    moved_frac: float
    human_rate: float | None
    n_train: int
    weights: tuple[float, ...]
    bias: float
    constant_prob: float | None = None


@dataclass
class TrialState:
    t: int
    training: TrainingSet
    model: ScoreModel
    held_X: np.ndarray
    record: RoundRecord


def _model_snapshot(model: ScoreModel) -> tuple[tuple[float, ...], float, float | None]:
    if isinstance(model, LogisticModel):
        return tuple(model.weights), model.bias, model.constant_prob
    return tuple(model.label_fn.coeffs), model.label_fn.intercept, None


def _fit(group: Group, training: TrainingSet, cfg: RetrainConfig, rng) -> ScoreModel:
    if cfg.learner == "ground_truth":
        return ground_truth_scorer(group)
    fit_seed = int(rng.integers(0, 2**63 - 1))
    return fit_logistic(
        training.X,
        training.y,
        cfg.train,
        seed=fit_seed,
        feature_indices=group.population.classifier_features,
    )


def _metrics_sample(group: Group, cfg: RetrainConfig, prev_model: ScoreModel | None, rng):
    """Post-response features and labels used for the a/q estimates."""
    n = cfg.eval_n or cfg.n_model
    X, y = sample_agents(group.population, n, rng)
    if prev_model is None or not cfg.strategic:
        return X, y, np.zeros(n, bool)
    cost = QuadraticCost(group.cost_matrix)
    Z, y2, moved, _, _ = respond_cohort(
        X, y, prev_model, cost, cfg.noise_sigma, group.population, rng
    )
    return Z, y2, moved


def _make_record(
    t: int,
    model: ScoreModel,
    training: TrainingSet,
    Xp: np.ndarray,
    yp: np.ndarray,
    moved: np.ndarray,
    human_rate: float | None,
) -> RoundRecord:
    a = float(model.predict(Xp).mean())
    q = float(np.asarray(yp, dtype=np.float64).mean())
    weights, bias, const = _model_snapshot(model)
    return RoundRecord(
        t=t,
        a=a,
        q=q,
        delta=abs(a - q),
        qbar=training.label_mean(),
        theta=model.threshold,
        a_soft=float(model.prob(Xp).mean()),
        moved_frac=float(moved.mean()),
        human_rate=human_rate,
        n_train=training.size,
        weights=weights,
        bias=bias,
        constant_prob=const,
    )


def init_round_zero(group: Group, cfg: RetrainConfig, rng) -> TrialState:
    """Round 0: train on human annotations alone and deploy on a fresh cohort.

    The initial training set holds n_model human-annotated samples; the
    deployed-on cohort has not yet had a model to respond to, so its
    features follow the prior distribution. That cohort is held for model
    annotation at round 1.
    """
    rng = check_rng(rng)
    pop = group.population
    F = pop.sample_features(cfg.n_model, rng)
    labels = human_annotate(group, F, rng)
    training = TrainingSet.empty(pop.dims).extended(F, labels, PROV_HUMAN, 0)
    model = _fit(group, training, cfg, rng)

    X, y = sample_agents(pop, cfg.n_model, rng)
    if cfg.eval_n:
        Xp, yp = sample_agents(pop, cfg.eval_n, rng)
    else:
        Xp, yp = X, y
    record = _make_record(
        0, model, training, Xp, yp, np.zeros(Xp.shape[0], bool), training.label_mean()
    )
    return TrialState(t=0, training=training, model=model, held_X=X, record=record)


def _annotate_with_model(model: ScoreModel, X: np.ndarray, mode: str, rng) -> np.ndarray:
    if mode == "hard":
        return model.predict(X)
    p = model.prob(X)
    return (rng.random(X.shape[0]) < p).astype(np.int8)


def step(
    state: TrialState,
    group: Group,
    cfg: RetrainConfig,
    rng,
    annotation: str | None = None,
) -> TrialState:
    """Advance the loop one round; ``annotation`` overrides cfg per group."""
    rng = check_rng(rng)
    t = state.t + 1
    if t > cfg.horizon:
        raise ConfigError(f"round {t} exceeds configured horizon {cfg.horizon}")
    pop = group.population
    mode = annotation or cfg.annotation

    def draw_cohort():
        X, y = sample_agents(pop, cfg.n_model, rng)
        if cfg.strategic:
            cost = QuadraticCost(group.cost_matrix)
            Z, y2, moved, _, _ = respond_cohort(
                X, y, state.model, cost, cfg.noise_sigma, pop, rng
            )
            return Z, y2, moved
        return X, y, np.zeros(cfg.n_model, bool)

    if cfg.annotation_timing == "current":
        # annotate the incoming cohort with the model it responded to
        Z, y2, moved = draw_cohort()
        batch_X = Z
    else:
        # recycle the previous cohort with the decisions of the model that
        # classified it (the deployed model's actual annotations)
        batch_X = state.held_X
    model_labels = _annotate_with_model(state.model, batch_X, mode, rng)

    human_rate = None
    if cfg.n_human > 0:
        if cfg.human_source == "post_response":
            source = batch_X
            replace_draw = cfg.n_human > source.shape[0]
            idx = rng.choice(source.shape[0], size=cfg.n_human, replace=replace_draw)
            F = source[idx]
        else:
            F = pop.sample_features(cfg.n_human, rng)
        h_labels = human_annotate(group, F, rng)
        human_rate = float(h_labels.mean())

    if cfg.memory == "cumulative":
        training = state.training.extended(batch_X, model_labels, PROV_MODEL, t)
    else:
        training = TrainingSet.empty(pop.dims).extended(batch_X, model_labels, PROV_MODEL, t)
    if cfg.n_human > 0:
        training = training.extended(F, h_labels, PROV_HUMAN, t)

    model = _fit(group, training, cfg, rng)

    if cfg.annotation_timing != "current":
        Z, y2, moved = draw_cohort()

    if cfg.eval_n:
        Xp, yp, moved_p = _metrics_sample(group, cfg, state.model, rng)
    else:
        Xp, yp, moved_p = Z, y2, moved
    record = _make_record(t, model, training, Xp, yp, moved_p, human_rate)
    return TrialState(t=t, training=training, model=model, held_X=Z, record=record)


def run_trial(group: Group, cfg: RetrainConfig, rng) -> list[RoundRecord]:
    """One seeded trajectory; returns horizon + 1 round records."""
    rng = check_rng(rng)
    state = init_round_zero(group, cfg, rng)
    records = [state.record]
    for _ in range(cfg.horizon):
        state = step(state, group, cfg, rng)
        records.append(state.record)
    return records


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Documented seed-splitting rule for independent trials."""
    return hash64(master_seed, trial_index)


def run_trials(group: Group, cfg: RetrainConfig) -> list[list[RoundRecord]]:
    """cfg.trials independent trajectories with derived per-trial seeds."""
    out = []
    for k in range(cfg.trials):
        rng = np.random.default_rng(trial_seed(cfg.seed, k))
        out.append(run_trial(group, cfg, rng))
    return out


# -- two-group runs with optional fairness intervention ----------------------


@dataclass
class GroupRoundInfo:
    record: RoundRecord
    theta_opt: float
    theta_deployed: float
    a_unconstrained: float


@dataclass
class TwoGroupRound:
    t: int
    per_group: dict[str, GroupRoundInfo]
    unfairness: float
    unfairness_unconstrained: float


def _group_annotations(fairness_mode: str, cfg: RetrainConfig) -> tuple[str, str]:
    if fairness_mode in ("disparate_strategies", "early_stop"):
        # refined retraining for the first-listed group, original for the second
        return "probabilistic", "hard"
    return cfg.annotation, cfg.annotation


def run_two_group_trial(
    groups: tuple[Group, Group],
    cfg: RetrainConfig,
    fairness_mode: str = "none",
    eps_par: float = 0.01,
    rng_seed: int | None = None,
) -> list[TwoGroupRound]:
    """Lockstep trajectories for two groups sharing one random stream seed.

    Both groups consume identically seeded (but independent) streams, so
    groups with no innate difference trace identical trajectories. Under
    ``dp_every_round`` the freshly fitted scorers get threshold pairs tuned
    for demographic parity on the in-sample score distributions.
    """
    from .fairness import dp_tune, optimal_threshold

    if fairness_mode not in FAIRNESS_MODES:
        raise ConfigError(f"fairness mode must be one of {FAIRNESS_MODES}")
    gi, gj = groups
    if gi.group_id == gj.group_id:
        raise ConfigError("groups must have distinct ids")
    seed = cfg.seed if rng_seed is None else rng_seed
    rngs = {g.group_id: np.random.default_rng(hash64(seed, 1)) for g in groups}
    ann = dict(zip((gi.group_id, gj.group_id), _group_annotations(fairness_mode, cfg)))

    states: dict[str, TrialState] = {}
    rounds: list[TwoGroupRound] = []

    def tune_and_record(t: int) -> None:
        infos: dict[str, GroupRoundInfo] = {}
        models = {gid: states[gid].model for gid in states}
        thetas_opt = {}
        for g in groups:
            st = states[g.group_id]
            scores = st.model.prob(st.training.X)
            thetas_opt[g.group_id] = optimal_threshold(scores, st.training.y).threshold
        if fairness_mode == "dp_every_round":
            sti, stj = states[gi.group_id], states[gj.group_id]
            tuned = dp_tune(
                sti.model.prob(sti.training.X),
                sti.training.y,
                stj.model.prob(stj.training.X),
                stj.training.y,
                eps_par=eps_par,
            )
            models[gi.group_id] = sti.model.with_threshold(tuned.theta_i)
            models[gj.group_id] = stj.model.with_threshold(tuned.theta_j)
        accs = {}
        accs_unc = {}
        for g in groups:
            gid = g.group_id
            st = states[gid]
            deployed = models[gid]
            # the held cohort is the post-response sample the record was built on
            Xp = st.held_X
            a_dep = float(deployed.predict(Xp).mean())
            a_unc = float(st.model.with_threshold(thetas_opt[gid]).predict(Xp).mean())
            rec = replace(st.record, a=a_dep, delta=abs(a_dep - st.record.q),
                          theta=deployed.threshold)
            states[gid] = TrialState(st.t, st.training, deployed, st.held_X, rec)
            accs[gid] = a_dep
            accs_unc[gid] = a_unc
            infos[gid] = GroupRoundInfo(
                record=rec,
                theta_opt=thetas_opt[gid],
                theta_deployed=deployed.threshold,
                a_unconstrained=a_unc,
            )
        rounds.append(
            TwoGroupRound(
                t=t,
                per_group=infos,
                unfairness=abs(accs[gi.group_id] - accs[gj.group_id]),
                unfairness_unconstrained=abs(
                    accs_unc[gi.group_id] - accs_unc[gj.group_id]
                ),
            )
        )

    for g in groups:
        states[g.group_id] = init_round_zero(g, cfg, rngs[g.group_id])
    tune_and_record(0)
    for t in range(1, cfg.horizon + 1):
        for g in groups:
            states[g.group_id] = step(
                states[g.group_id], g, cfg, rngs[g.group_id], annotation=ann[g.group_id]
            )
        tune_and_record(t)
    return rounds
