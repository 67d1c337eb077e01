"""Building semi-synthetic populations from tabular datasets.

Ingestion min-max normalizes every feature to [0, 1] and validates labels
strictly. Two fitting paths mirror the supported dataset styles: per-label
Beta conditionals for low-dimensional real data, and per-feature kernel
densities with a fitted logistic labeling function for wider tables.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._validation import check_rng
from .distributions import BetaDist, KdeDist, LogisticLabelFn
from .errors import IngestError
from .learner import TrainSettings, fit_logistic
from .population import ConditionalPopulation, Population


@dataclass(frozen=True)
class ColumnSchema:
    features: tuple[str, ...]
    label: str
    group: str | None = None


@dataclass
class DatasetProfile:
    source: str
    schema: ColumnSchema
    X: np.ndarray  # normalized to [0, 1]
    y: np.ndarray
    groups: np.ndarray | None
    bounds: list[tuple[float, float]]  # per-feature (min, max) before scaling

    def rows_for(self, group: str | None) -> tuple[np.ndarray, np.ndarray]:
        if group is None:
            return self.X, self.y
        if self.groups is None:
            raise IngestError("dataset has no group column")
        mask = self.groups == group
        if not mask.any():
            raise IngestError(f"group {group!r} not present in dataset")
        return self.X[mask], self.y[mask]


def ingest_csv(path, schema: ColumnSchema) -> DatasetProfile:
    """Parse, validate, and min-max normalize a labeled CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty file: missing header row") from None
        known = set(header)
        wanted = list(schema.features) + [schema.label]
        if schema.group:
            wanted.append(schema.group)
        missing = [c for c in wanted if c not in known]
        if missing:
            raise IngestError(f"columns missing from header: {missing}")
        col_idx = {c: header.index(c) for c in wanted}

        feats, labels, groups = [], [], []
        bad_rows: list[int] = []
        messages: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                bad_rows.append(lineno)
                messages.append(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
                continue
            try:
                vals = [float(row[col_idx[c]]) for c in schema.features]
            except ValueError:
                bad_rows.append(lineno)
                messages.append(f"row {lineno}: non-numeric or missing feature value")
                continue
            if any(v != v for v in vals):
                bad_rows.append(lineno)
                messages.append(f"row {lineno}: missing value")
                continue
            raw_label = row[col_idx[schema.label]].strip()
            if raw_label not in ("0", "1"):
                bad_rows.append(lineno)
                messages.append(f"row {lineno}: label must be 0 or 1, got {raw_label!r}")
                continue
            feats.append(vals)
            labels.append(int(raw_label))
            if schema.group:
                groups.append(row[col_idx[schema.group]].strip())
        if bad_rows:
            raise IngestError("; ".join(messages[:5]), rows=bad_rows)
        if not feats:
            raise IngestError("no data rows")

    X = np.asarray(feats, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int8)
    bounds = []
    for k, name in enumerate(schema.features):
        lo, hi = float(X[:, k].min()), float(X[:, k].max())
        if hi == lo:
            raise IngestError(f"feature {name!r} is constant; min-max normalization degenerate")
        X[:, k] = (X[:, k] - lo) / (hi - lo)
        bounds.append((lo, hi))
    return DatasetProfile(
        source=str(path),
        schema=schema,
        X=X,
        y=y,
        groups=np.asarray(groups) if schema.group else None,
        bounds=bounds,
    )


def beta_method_of_moments(x: np.ndarray) -> tuple[float, float, bool]:
    """Beta(alpha, beta) from sample moments; falls back to MLE when the
    moments leave the feasible region. Returns (alpha, beta, used_mle)."""
    x = np.asarray(x, dtype=np.float64)
    m = float(x.mean())
    v = float(x.var(ddof=1)) if x.size > 1 else 0.0
    if 0.0 < m < 1.0 and 0.0 < v < m * (1.0 - m):
        common = m * (1.0 - m) / v - 1.0
        return m * common, (1.0 - m) * common, False
    eps = 1e-6
    clipped = np.clip(x, eps, 1 - eps)
    a, b, _, _ = stats.beta.fit(clipped, floc=0.0, fscale=1.0)
    return float(a), float(b), True


def fit_beta_conditionals(
    profile: DatasetProfile, group: str | None, min_cell: int = 10
) -> ConditionalPopulation:
    """Per-label Beta fits for each feature plus the empirical base rate."""
    X, y = profile.rows_for(group)
    pos_mask = y == 1
    n_pos, n_neg = int(pos_mask.sum()), int((~pos_mask).sum())
    if n_pos < min_cell or n_neg < min_cell:
        raise IngestError(
            f"need at least {min_cell} samples per label, got {n_pos} positive / {n_neg} negative"
        )
    positive, negative = [], []
    for k in range(X.shape[1]):
        a1, b1, _ = beta_method_of_moments(X[pos_mask, k])
        a0, b0, _ = beta_method_of_moments(X[~pos_mask, k])
        positive.append(BetaDist(a1, b1))
        negative.append(BetaDist(a0, b0))
    q0 = n_pos / (n_pos + n_neg)
    return ConditionalPopulation(tuple(positive), tuple(negative), q0)


def fit_kde_logistic(
    profile: DatasetProfile,
    group: str | None,
    feature_subset: tuple[int, ...] | None = None,
    train: TrainSettings | None = None,
    min_rows: int = 100,
) -> Population:
    """Per-feature Gaussian KDE marginals plus a fitted logistic labeler.

    The labeler is fit on all features; ``feature_subset`` records which
    columns downstream classifiers are allowed to see.
    """
    X, y = profile.rows_for(group)
    if X.shape[0] < min_rows:
        raise IngestError(f"need at least {min_rows} rows for a KDE fit, got {X.shape[0]}")
    marginals = tuple(KdeDist(tuple(float(v) for v in X[:, k])) for k in range(X.shape[1]))
    model = fit_logistic(X, y, train or TrainSettings())
    label_fn = LogisticLabelFn(coeffs=model.weights, intercept=model.bias)
    return Population(
        marginals=marginals,
        label_fn=label_fn,
        classifier_features=feature_subset,
    )


# -- synthetic stand-ins for CI (raw datasets are inputs, never vendored) ----


def write_stand_in_german(path, rows: int = 1000, seed: int = 0) -> ColumnSchema:
    """Schema-compatible stand-in for a 19-feature credit table with a sex
    attribute: correlated positive-leaning features and a logistic label."""
    rng = check_rng(seed)
    d = 19
    base = rng.beta(2.0, 3.0, size=(rows, 1))
    noise = rng.beta(2.0, 2.0, size=(rows, d))
    X = np.clip(0.55 * base + 0.45 * noise, 0.0, 1.0)
    coef = rng.uniform(0.4, 1.6, size=d)
    z = (X - 0.45) @ coef
    p = 1.0 / (1.0 + np.exp(-2.2 * z))
    y = (rng.random(rows) < p).astype(int)
    sex = np.where(rng.random(rows) < 0.69, "male", "female")
    features = tuple(f"f{k}" for k in range(d))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(features) + ["label", "sex"])
        for r in range(rows):
            writer.writerow([f"{v:.6f}" for v in X[r]] + [y[r], sex[r]])
    return ColumnSchema(features=features, label="label", group="sex")


def write_stand_in_credit_approval(path, rows: int = 600, seed: int = 0) -> ColumnSchema:
    """Stand-in for a two-feature credit approval table with two groups,
    generated from per-label Beta conditionals."""
    rng = check_rng(seed)
    params = {
        "i": {"q0": 0.473,
              "pos": [(1.37, 3.23), (0.83, 2.83)],
              "neg": [(1.50, 4.94), (0.84, 5.56)]},
        "j": {"q0": 0.45,
              "pos": [(1.73, 3.84), (0.66, 2.50)],
              "neg": [(1.59, 4.67), (0.69, 3.86)]},
    }
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "label", "grp"])
        for gid, cfg in params.items():
            y = (rng.random(rows) < cfg["q0"]).astype(int)
            for r in range(rows):
                which = "pos" if y[r] else "neg"
                vals = [rng.beta(a, b) for a, b in cfg[which]]
                writer.writerow([f"{vals[0]:.6f}", f"{vals[1]:.6f}", y[r], gid])
    return ColumnSchema(features=("x1", "x2"), label="label", group="grp")
