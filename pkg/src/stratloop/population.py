"""Agent populations: the fixed prior-response joint distribution of
features and labels, plus the decision-maker's biased human annotation.

Two flavors exist. ``Population`` is the marginal form (independent
per-dimension feature marginals with an explicit labeling function).
``ConditionalPopulation`` is the per-label form used for Beta-fit datasets:
class-conditional feature marginals plus a base positive rate, with the
labeling function recovered through Bayes' rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_features, check_rng, check_spd, check_unit_interval
from .distributions import (
    LabelFn,
    Marginal,
    label_fn_from_json,
    label_fn_to_json,
    marginal_from_json,
    marginal_to_json,
)
from .errors import ConfigError

SPEC_VERSION = 1


@dataclass(frozen=True)
class Population:
    """Marginal-mode population: independent marginals + labeling function."""

    marginals: tuple[Marginal, ...]
    label_fn: LabelFn
    classifier_features: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.marginals:
            raise ConfigError("population needs at least one feature marginal")
        if len(self.label_fn.coeffs) != len(self.marginals):
            raise ConfigError(
                f"label function has {len(self.label_fn.coeffs)} coefficients "
                f"for {len(self.marginals)} feature dimensions"
            )
        if self.classifier_features is not None:
            bad = [i for i in self.classifier_features if not 0 <= i < self.dims]
            if bad:
                raise ConfigError(f"classifier feature indices out of range: {bad}")

    @property
    def dims(self) -> int:
        return len(self.marginals)

    def sample_features(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cols = [m.sample(n, rng) for m in self.marginals]
        return np.column_stack(cols)

    def label_prob(self, X: np.ndarray) -> np.ndarray:
        return self.label_fn.prob(check_features(X, self.dims))


@dataclass(frozen=True)
class ConditionalPopulation:
    """Per-label population: class-conditional marginals and base rate q0."""

    positive: tuple[Marginal, ...]
    negative: tuple[Marginal, ...]
    q0: float
    classifier_features: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(self.positive) != len(self.negative) or not self.positive:
            raise ConfigError("conditional population needs matching nonempty marginal lists")
        check_unit_interval(self.q0, "q0", open_ends=True)

    @property
    def dims(self) -> int:
        return len(self.positive)

    def sample_features(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # Marginal P_X of the mixture; the paired sample() keeps X and Y coupled.
        y = rng.random(n) < self.q0
        return self._features_given_labels(y, rng)

    def _features_given_labels(self, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = y.size
        X = np.empty((n, self.dims), dtype=np.float64)
        n_pos = int(y.sum())
        for d in range(self.dims):
            col = np.empty(n, dtype=np.float64)
            col[y] = self.positive[d].sample(n_pos, rng)
            col[~y] = self.negative[d].sample(n - n_pos, rng)
            X[:, d] = col
        return X

    def label_prob(self, X: np.ndarray) -> np.ndarray:
        """Bayes inversion: q0 p1(x) / (q0 p1(x) + (1-q0) p0(x))."""
        X = check_features(X, self.dims)
        log_p1 = np.zeros(X.shape[0])
        log_p0 = np.zeros(X.shape[0])
        tiny = 1e-300
        for d in range(self.dims):
            log_p1 += np.log(self.positive[d].pdf(X[:, d]) + tiny)
            log_p0 += np.log(self.negative[d].pdf(X[:, d]) + tiny)
        # log-odds form avoids under/overflow for products of many densities
        log_odds = np.log(self.q0 / (1.0 - self.q0)) + log_p1 - log_p0
        from .distributions import sigmoid

        return sigmoid(log_odds)


PopulationLike = Population | ConditionalPopulation


@dataclass(frozen=True)
class Group:
    """A social group: population, annotation bias, and feature-change costs.

    ``annotation_bias`` is the fixed offset added to P(Y=1|x) when humans
    annotate; positive values overestimate qualification, negative values
    underestimate it. The cost matrix must be symmetric positive definite.
    """

    group_id: str
    population: PopulationLike
    annotation_bias: float = 0.0
    cost_matrix: np.ndarray | None = None

    def __post_init__(self):
        if not -1.0 < self.annotation_bias < 1.0:
            raise ConfigError(
                f"annotation bias must lie in (-1, 1), got {self.annotation_bias}"
            )
        B = self.cost_matrix
        if B is None:
            B = np.eye(self.population.dims)
        B = check_spd(B)
        if B.shape[0] != self.population.dims:
            raise ConfigError(
                f"cost matrix is {B.shape[0]}x{B.shape[0]} but population has "
                f"{self.population.dims} dimensions"
            )
        object.__setattr__(self, "cost_matrix", B)

    def human_label_prob(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.population.label_prob(X) + self.annotation_bias, 0.0, 1.0)


def sample_agents(
    pop: PopulationLike, n: int, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n agents (features, true labels) i.i.d. from the population.

    Labels are Bernoulli draws against P(Y=1|x); one uniform variate is
    consumed per agent after the feature draws, so equal seeds give equal
    samples.
    """
    if n < 1:
        raise ConfigError(f"need n >= 1 agents, got {n}")
    rng = check_rng(rng)
    if isinstance(pop, ConditionalPopulation):
        y = rng.random(n) < pop.q0
        X = pop._features_given_labels(y, rng)
        return X, y.astype(np.int8)
    X = pop.sample_features(n, rng)
    y = rng.random(n) < pop.label_prob(X)
    return X, y.astype(np.int8)


def human_annotate(group: Group, X: np.ndarray, rng) -> np.ndarray:
    """Label features the way the (possibly biased) human annotators would.

    Each label is Bernoulli(clip(P(Y=1|x) + bias, 0, 1)). With zero bias and
    the same random stream this reproduces ground-truth labeling exactly.
    """
    rng = check_rng(rng)
    X = check_features(X, group.population.dims)
    p = group.human_label_prob(X)
    return (rng.random(X.shape[0]) < p).astype(np.int8)


def qualification_rate(pop: PopulationLike, n: int = 200_000, rng=0) -> float:
    """Monte Carlo estimate of q0 = E[P(Y=1|x)] under the feature marginal."""
    rng = check_rng(rng)
    if isinstance(pop, ConditionalPopulation):
        return pop.q0
    X = pop.sample_features(n, rng)
    return float(pop.label_prob(X).mean())


@dataclass
class MonotoneReport:
    passed: bool
    violating_dims: list[int]
    detail: str = ""
    analytic: bool = False


def validate_monotone_likelihood(
    pop: PopulationLike,
    grid_points: int = 101,
    anchors: tuple[float, ...] = (0.25, 0.5, 0.75),
    tol: float = 1e-9,
) -> MonotoneReport:
    """Check that P(Y=1|x) is nondecreasing in every coordinate.

    Linear/logistic label functions are checked analytically through their
    coefficient signs. Otherwise each axis is probed on a 101-point grid over
    its central 99.9% mass interval, holding the remaining coordinates at a
    few anchor quantiles.
    """
    if isinstance(pop, Population):
        if pop.label_fn.monotone_signs_ok():
            return MonotoneReport(True, [], "all label coefficients >= 0", analytic=True)
        bad = [i for i, c in enumerate(pop.label_fn.coeffs) if c < 0]
        return MonotoneReport(
            False, bad, f"negative label coefficients on dims {bad}", analytic=True
        )

    dims = pop.dims
    intervals = []
    for d in range(dims):
        lo1, hi1 = pop.positive[d].mass_interval(0.999)
        lo0, hi0 = pop.negative[d].mass_interval(0.999)
        intervals.append((min(lo1, lo0), max(hi1, hi0)))

    violating = []
    notes = []
    for d in range(dims):
        lo, hi = intervals[d]
        axis = np.linspace(lo, hi, grid_points)
        bad = False
        for a in anchors:
            probe = np.empty((grid_points, dims))
            for other in range(dims):
                olo, ohi = intervals[other]
                probe[:, other] = olo + a * (ohi - olo)
            probe[:, d] = axis
            vals = pop.label_prob(probe)
            drops = np.diff(vals)
            if (drops < -tol).any():
                bad = True
                worst = float(drops.min())
                notes.append(f"dim {d} decreases by {-worst:.3g} at anchor {a}")
        if bad:
            violating.append(d)
    return MonotoneReport(not violating, violating, "; ".join(notes))


def population_to_json(pop: PopulationLike) -> dict:
    doc: dict = {"spec_version": SPEC_VERSION}
    if isinstance(pop, Population):
        doc["mode"] = "marginal"
        doc["marginals"] = [marginal_to_json(m) for m in pop.marginals]
        doc["label_fn"] = label_fn_to_json(pop.label_fn)
    else:
        doc["mode"] = "conditional"
        doc["positive"] = [marginal_to_json(m) for m in pop.positive]
        doc["negative"] = [marginal_to_json(m) for m in pop.negative]
        doc["q0"] = pop.q0
    if pop.classifier_features is not None:
        doc["classifier_features"] = list(pop.classifier_features)
    return doc


def population_from_json(doc: dict) -> PopulationLike:
    version = doc.get("spec_version")
    if version != SPEC_VERSION:
        raise ConfigError(f"unsupported population spec_version {version!r}")
    mode = doc.get("mode")
    feats = doc.get("classifier_features")
    feats = tuple(int(i) for i in feats) if feats is not None else None
    if mode == "marginal":
        return Population(
            marginals=tuple(marginal_from_json(m) for m in doc["marginals"]),
            label_fn=label_fn_from_json(doc["label_fn"]),
            classifier_features=feats,
        )
    if mode == "conditional":
        return ConditionalPopulation(
            positive=tuple(marginal_from_json(m) for m in doc["positive"]),
            negative=tuple(marginal_from_json(m) for m in doc["negative"]),
            q0=float(doc["q0"]),
            classifier_features=feats,
        )
    raise ConfigError(f"population mode must be 'marginal' or 'conditional', got {mode!r}")


def group_to_json(group: Group) -> dict:
    return {
        "id": group.group_id,
        "population": population_to_json(group.population),
        "annotation_bias": group.annotation_bias,
        "cost_matrix": np.asarray(group.cost_matrix).tolist(),
    }


def group_from_json(doc: dict) -> Group:
    return Group(
        group_id=str(doc["id"]),
        population=population_from_json(doc["population"]),
        annotation_bias=float(doc.get("annotation_bias", 0.0)),
        cost_matrix=np.asarray(doc["cost_matrix"], dtype=np.float64),
    )
