"""Threshold classifiers and their training.

The deployed decision rule is f(x) = 1[h(x) >= threshold], where h is a
sigmoid score over a linear raw score. Models are immutable once built;
``SGDLogisticClassifier`` wraps the functional trainer in an sklearn-style
estimator so the pieces compose with the wider ecosystem.

A ``GroundTruthModel`` realizes the idealized learner that scores agents
with exactly the (bias-shifted) population conditional; theorem-level test
suites use it to remove learning error from the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, ClassifierMixin

from ._validation import check_features, check_rng, check_unit_interval
from .distributions import (
    LabelFn,
    LinearLabelFn,
    LogisticLabelFn,
    label_fn_from_json,
    label_fn_to_json,
    sigmoid,
)
from .errors import ConfigError, DegenerateModelError
from .population import Group


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


@dataclass(frozen=True)
class TrainSettings:
    """SGD hyperparameters; the learning rate decays as lr / sqrt(epoch)."""

    epochs: int = 50
    learning_rate: float = 0.5
    batch_size: int = 32
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.l2 < 0:
            raise ConfigError("l2 must be nonnegative")


@dataclass(frozen=True)
class LogisticModel:
    """Immutable deployed classifier: h(x) = sigmoid(w . x + b), f = 1[h >= theta].

    ``feature_indices`` restricts the scorer to a subset of the population's
    feature columns (weights then live in the subset space). A single-class
    training set yields a constant scorer, recorded in ``constant_prob``.
    """

    weights: tuple[float, ...]
    bias: float
    threshold: float = 0.5
    feature_indices: tuple[int, ...] | None = None
    constant_prob: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        check_unit_interval(self.threshold, "threshold", open_ends=True)

    def _project(self, X: np.ndarray) -> np.ndarray:
        X = check_features(X)
        if self.feature_indices is None:
            return X
        return X[:, list(self.feature_indices)]

    def raw(self, X: np.ndarray) -> np.ndarray:
        Xs = self._project(X)
        return Xs @ np.asarray(self.weights) + self.bias

    def prob(self, X: np.ndarray) -> np.ndarray:
        X = check_features(X)
        if self.constant_prob is not None:
            return np.full(X.shape[0], self.constant_prob)
        return sigmoid(self.raw(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.prob(X) >= self.threshold).astype(np.int8)

    def raw_boundary(self) -> float | None:
        """Acceptance boundary in raw-score space; None for constant scorers."""
        if self.constant_prob is not None:
            return None
        return logit(self.threshold)

    def full_weights(self, dims: int) -> np.ndarray:
        w = np.zeros(dims)
        if self.constant_prob is not None:
            return w
        if self.feature_indices is None:
            w[:] = self.weights
        else:
            w[list(self.feature_indices)] = self.weights
        return w

    def with_threshold(self, threshold: float) -> "LogisticModel":
        return LogisticModel(
            self.weights, self.bias, threshold, self.feature_indices,
            self.constant_prob, dict(self.meta),
        )


@dataclass(frozen=True)
class GroundTruthModel:
    """Idealized scorer h(x) = clip(P(Y=1|x) + annotation_bias, 0, 1).

    Only marginal-mode populations with linear or logistic label functions
    are supported; both give a linear acceptance boundary in raw-score space
    so agents can still best respond in closed form.
    """

    label_fn: LabelFn
    annotation_bias: float = 0.0
    threshold: float = 0.5

    def __post_init__(self):
        check_unit_interval(self.threshold, "threshold", open_ends=True)
        if not isinstance(self.label_fn, (LinearLabelFn, LogisticLabelFn)):
            raise ConfigError("ground-truth scorer needs a linear or logistic label function")

    def raw(self, X: np.ndarray) -> np.ndarray:
        return self.label_fn.raw(check_features(X))

    def prob(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.label_fn.prob(check_features(X)) + self.annotation_bias, 0.0, 1.0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.prob(X) >= self.threshold).astype(np.int8)

    @property
    def feature_indices(self) -> None:
        return None

    @property
    def constant_prob(self) -> None:
        return None

    def raw_boundary(self) -> float:
        # clip(P + mu) >= theta reduces to P >= theta - mu away from the clamp corners
        target = self.threshold - self.annotation_bias
        if target <= 0.0:
            return -np.inf
        if isinstance(self.label_fn, LogisticLabelFn):
            if target >= 1.0:
                return np.inf
            return logit(target)
        if target > 1.0:
            return np.inf
        return target

    def full_weights(self, dims: int) -> np.ndarray:
        w = np.zeros(dims)
        w[:] = self.label_fn.coeffs
        return w

    def with_threshold(self, threshold: float) -> "GroundTruthModel":
        return GroundTruthModel(self.label_fn, self.annotation_bias, threshold)


ScoreModel = LogisticModel | GroundTruthModel


@njit(cache=True)
def _sgd_kernel(X, y, order, epochs, batch_size, lr0, l2, w, b):  # pragma: no cover
    n, d = X.shape
    gw = np.zeros(d)
    for e in range(epochs):
        lr = lr0 / np.sqrt(e + 1.0)
        start = 0
        while start < n:
            stop = min(start + batch_size, n)
            m = stop - start
            gb = 0.0
            for j in range(d):
                gw[j] = 0.0
            for k in range(start, stop):
                i = order[e, k]
                z = b
                for j in range(d):
                    z += X[i, j] * w[j]
                if z >= 0.0:
                    p = 1.0 / (1.0 + np.exp(-z))
                else:
                    ez = np.exp(z)
                    p = ez / (1.0 + ez)
                diff = p - y[i]
                gb += diff
                for j in range(d):
                    gw[j] += diff * X[i, j]
            inv = 1.0 / m
            for j in range(d):
                w[j] -= lr * (gw[j] * inv + l2 * w[j])
            b -= lr * gb * inv
            start = stop
    return w, b


def log_loss(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float) -> float:
    """Mean logistic loss plus (l2/2)||w||^2, the objective SGD minimizes."""
    z = X @ w + b
    # log(1 + exp(-z*s)) with s in {-1, +1}, computed stably
    s = 2.0 * y - 1.0
    m = -z * s
    loss = np.logaddexp(0.0, m).mean()
    return float(loss + 0.5 * l2 * (w @ w))


def log_loss_grad(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float
) -> tuple[np.ndarray, float]:
    p = sigmoid(X @ w + b)
    diff = p - y
    gw = X.T @ diff / X.shape[0] + l2 * w
    gb = float(diff.mean())
    return gw, gb


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    settings: TrainSettings | None = None,
    seed: int | None = None,
    threshold: float = 0.5,
    feature_indices: tuple[int, ...] | None = None,
) -> LogisticModel:
    """Train a logistic scorer with minibatch SGD.

    Deterministic given the seed: the shuffling schedule is drawn up front
    from a PCG64 stream. Single-class data falls back to a constant scorer
    whose probability is the class value, flagged in ``meta``.
    """
    settings = settings or TrainSettings()
    X = check_features(X)
    if feature_indices is not None:
        X = X[:, list(feature_indices)]
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise ConfigError("cannot fit on an empty training set")
    if y.shape[0] != X.shape[0]:
        raise ConfigError("features and labels disagree on sample count")

    classes = np.unique(y)
    if classes.size == 1:
        return LogisticModel(
            weights=tuple(0.0 for _ in range(X.shape[1])),
            bias=0.0,
            threshold=threshold,
            feature_indices=feature_indices,
            constant_prob=float(classes[0]),
            meta={"single_class": True, "n_samples": int(X.shape[0])},
        )

    rng = check_rng(settings.seed if seed is None else seed)
    n = X.shape[0]
    order = np.empty((settings.epochs, n), dtype=np.int64)
    for e in range(settings.epochs):
        order[e] = rng.permutation(n)

    w = np.zeros(X.shape[1])
    b = 0.0
    w, b = _sgd_kernel(
        np.ascontiguousarray(X),
        np.ascontiguousarray(y),
        order,
        settings.epochs,
        settings.batch_size,
        settings.learning_rate,
        settings.l2,
        w,
        b,
    )
    return LogisticModel(
        weights=tuple(float(v) for v in w),
        bias=float(b),
        threshold=threshold,
        feature_indices=feature_indices,
        meta={"n_samples": int(n), "final_loss": log_loss(X, y, w, b, settings.l2)},
    )


class SGDLogisticClassifier(ClassifierMixin, BaseEstimator):
    """sklearn-style front end over :func:`fit_logistic`."""

    def __init__(self, epochs=50, learning_rate=0.5, batch_size=32, l2=1e-4,
                 seed=0, threshold=0.5):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.l2 = l2
        self.seed = seed
        self.threshold = threshold

    def fit(self, X, y):
        settings = TrainSettings(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            l2=self.l2,
            seed=self.seed,
        )
        self.model_ = fit_logistic(X, y, settings, threshold=self.threshold)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = len(self.model_.weights)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise ConfigError("estimator is not fitted yet")

    def predict_proba(self, X):
        self._check_fitted()
        p = self.model_.prob(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        self._check_fitted()
        return self.model_.predict(X)


def ground_truth_scorer(group: Group, threshold: float = 0.5) -> GroundTruthModel:
    """Scorer that equals clip(P(Y=1|x) + bias, 0, 1), removing learning error."""
    pop = group.population
    if not hasattr(pop, "label_fn"):
        raise ConfigError("ground-truth scorer requires a marginal-mode population")
    return GroundTruthModel(pop.label_fn, group.annotation_bias, threshold)


def model_to_json(model: ScoreModel) -> dict:
    if isinstance(model, LogisticModel):
        return {
            "kind": "logistic",
            "weights": list(model.weights),
            "bias": model.bias,
            "threshold": model.threshold,
            "feature_indices": list(model.feature_indices) if model.feature_indices else None,
            "constant_prob": model.constant_prob,
            "meta": dict(model.meta),
        }
    return {
        "kind": "ground_truth",
        "label_fn": label_fn_to_json(model.label_fn),
        "annotation_bias": model.annotation_bias,
        "threshold": model.threshold,
    }


def model_from_json(doc: dict) -> ScoreModel:
    kind = doc.get("kind")
    if kind == "logistic":
        fi = doc.get("feature_indices")
        return LogisticModel(
            weights=tuple(float(v) for v in doc["weights"]),
            bias=float(doc["bias"]),
            threshold=float(doc.get("threshold", 0.5)),
            feature_indices=tuple(int(i) for i in fi) if fi else None,
            constant_prob=doc.get("constant_prob"),
            meta=dict(doc.get("meta", {})),
        )
    if kind == "ground_truth":
        return GroundTruthModel(
            label_fn=label_fn_from_json(doc["label_fn"]),
            annotation_bias=float(doc.get("annotation_bias", 0.0)),
            threshold=float(doc.get("threshold", 0.5)),
        )
    raise ConfigError(f"unknown model kind {kind!r}")
