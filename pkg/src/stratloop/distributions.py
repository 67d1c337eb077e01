"""One-dimensional feature marginals and labeling functions.

Populations are products of independent per-dimension marginals; each
marginal supports sampling, density evaluation, and a central-mass interval
used by numeric probes (monotonicity checks, quadrature boxes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigError


def _silverman_bandwidth(points: np.ndarray) -> float:
    n = points.size
    sd = points.std(ddof=1) if n > 1 else 0.0
    q75, q25 = np.percentile(points, [75, 25])
    iqr = q75 - q25
    a = min(sd, iqr / 1.34) if iqr > 0 else sd
    if a <= 0:
        a = max(abs(points).max(), 1.0) * 1e-3  # bandwidth floor for degenerate spreads
    return 0.9 * a * n ** (-0.2)


@dataclass(frozen=True)
class UniformDist:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"uniform requires lo < hi, got [{self.lo}, {self.hi}]")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=n)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def mass_interval(self, cover: float = 0.999) -> tuple[float, float]:
        return self.lo, self.hi


@dataclass(frozen=True)
class GaussianDist:
    mean: float
    stddev: float

    def __post_init__(self):
        if not self.stddev > 0:
            raise ConfigError(f"gaussian requires stddev > 0, got {self.stddev}")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.mean, self.stddev, size=n)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return stats.norm.pdf(np.asarray(x, dtype=np.float64), self.mean, self.stddev)

    def mass_interval(self, cover: float = 0.999) -> tuple[float, float]:
        half = stats.norm.ppf(0.5 + cover / 2.0)
        return self.mean - half * self.stddev, self.mean + half * self.stddev


@dataclass(frozen=True)
class BetaDist:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError(
                f"beta requires alpha > 0 and beta > 0, got ({self.alpha}, {self.beta})"
            )

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.beta(self.alpha, self.beta, size=n)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return stats.beta.pdf(np.asarray(x, dtype=np.float64), self.alpha, self.beta)

    def mass_interval(self, cover: float = 0.999) -> tuple[float, float]:
        tail = (1.0 - cover) / 2.0
        return (
            float(stats.beta.ppf(tail, self.alpha, self.beta)),
            float(stats.beta.ppf(1.0 - tail, self.alpha, self.beta)),
        )


@dataclass(frozen=True)
class KdeDist:
    """Gaussian-kernel density over stored support points.

    Sampling picks a support point uniformly and perturbs it by a centered
    Gaussian with the stored bandwidth (Silverman's rule if not given).
    """

    points: tuple[float, ...]
    bandwidth: float | None = None

    def __post_init__(self):
        if len(self.points) < 2:
            raise ConfigError("kde requires at least 2 support points")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError(f"kde bandwidth must be positive, got {self.bandwidth}")

    @property
    def h(self) -> float:
        if self.bandwidth is not None:
            return self.bandwidth
        return _silverman_bandwidth(np.asarray(self.points, dtype=np.float64))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        pts = np.asarray(self.points, dtype=np.float64)
        idx = rng.integers(0, pts.size, size=n)
        return pts[idx] + rng.normal(0.0, self.h, size=n)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        pts = np.asarray(self.points, dtype=np.float64)
        z = (x[:, None] - pts[None, :]) / self.h
        dens = np.exp(-0.5 * z * z).sum(axis=1) / (pts.size * self.h * np.sqrt(2 * np.pi))
        return dens

    def mass_interval(self, cover: float = 0.999) -> tuple[float, float]:
        pts = np.asarray(self.points, dtype=np.float64)
        half = stats.norm.ppf(0.5 + cover / 2.0) * self.h
        return float(pts.min() - half), float(pts.max() + half)


Marginal = UniformDist | GaussianDist | BetaDist | KdeDist

_MARGINAL_KINDS = {
    "uniform": UniformDist,
    "gaussian": GaussianDist,
    "beta": BetaDist,
    "kde": KdeDist,
}


def marginal_to_json(m: Marginal) -> dict:
    if isinstance(m, UniformDist):
        return {"kind": "uniform", "lo": m.lo, "hi": m.hi}
    if isinstance(m, GaussianDist):
        return {"kind": "gaussian", "mean": m.mean, "stddev": m.stddev}
    if isinstance(m, BetaDist):
        return {"kind": "beta", "alpha": m.alpha, "beta": m.beta}
    if isinstance(m, KdeDist):
        return {"kind": "kde", "points": list(m.points), "bandwidth": m.bandwidth}
    raise ConfigError(f"unknown marginal type {type(m).__name__}")


def marginal_from_json(payload: dict) -> Marginal:
    kind = payload.get("kind")
    if kind not in _MARGINAL_KINDS:
        raise ConfigError(f"unknown distribution kind {kind!r}")
    args = {k: v for k, v in payload.items() if k != "kind"}
    if kind == "kde":
        args["points"] = tuple(float(p) for p in args.get("points", ()))
    return _MARGINAL_KINDS[kind](**args)


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class LinearLabelFn:
    """P(Y=1 | x) = clip(coeffs . x + intercept, 0, 1)."""

    coeffs: tuple[float, ...]
    intercept: float = 0.0

    kind = "linear"

    def raw(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ np.asarray(self.coeffs, dtype=np.float64) + self.intercept

    def prob(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.raw(X), 0.0, 1.0)

    def monotone_signs_ok(self) -> bool:
        return all(c >= 0 for c in self.coeffs)


@dataclass(frozen=True)
class LogisticLabelFn:
    """P(Y=1 | x) = sigmoid(coeffs . x + intercept)."""

    coeffs: tuple[float, ...]
    intercept: float = 0.0

    kind = "logistic"

    def raw(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ np.asarray(self.coeffs, dtype=np.float64) + self.intercept

    def prob(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.raw(X))

    def monotone_signs_ok(self) -> bool:
        return all(c >= 0 for c in self.coeffs)


LabelFn = LinearLabelFn | LogisticLabelFn


def label_fn_to_json(fn: LabelFn) -> dict:
    return {"kind": fn.kind, "coeffs": list(fn.coeffs), "intercept": fn.intercept}


def label_fn_from_json(payload: dict) -> LabelFn:
    kind = payload.get("kind")
    coeffs = tuple(float(c) for c in payload.get("coeffs", ()))
    intercept = float(payload.get("intercept", 0.0))
    if kind == "linear":
        return LinearLabelFn(coeffs, intercept)
    if kind == "logistic":
        return LogisticLabelFn(coeffs, intercept)
    raise ConfigError(f"unknown label function kind {kind!r}")
