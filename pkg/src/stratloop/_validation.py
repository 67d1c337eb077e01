"""Input validation helpers, in the spirit of sklearn's check_* utilities."""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ConfigError


def check_rng(seed_or_rng) -> np.random.Generator:
    """Accept a seed or a Generator and return a Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def check_features(X, dims: int | None = None) -> np.ndarray:
    """Coerce to a finite 2-d float array, optionally enforcing width."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ConfigError(f"expected a 2-d feature array, got ndim={X.ndim}")
    if not np.isfinite(X).all():
        raise ConfigError("features must be finite")
    if dims is not None and X.shape[1] != dims:
        raise ConfigError(f"expected {dims} feature columns, got {X.shape[1]}")
    return X


def check_vector(x, dims: int | None = None, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if not np.isfinite(x).all():
        raise ConfigError(f"{name} must be finite")
    if dims is not None and x.size != dims:
        raise ConfigError(f"{name} must have length {dims}, got {x.size}")
    return x


def check_spd(B, name: str = "cost matrix") -> np.ndarray:
    """Validate a symmetric positive-definite matrix via Cholesky."""
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {B.shape}")
    if not np.isfinite(B).all():
        raise ConfigError(f"{name} must be finite")
    if not np.array_equal(B, B.T):
        raise ConfigError(f"{name} must be symmetric as stored")
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise ConfigError(f"{name} must be positive definite") from None
    return B


def check_unit_interval(value: float, name: str, open_ends: bool = False) -> float:
    value = float(value)
    if open_ends:
        if not (0.0 < value < 1.0):
            raise ConfigError(f"{name} must be in (0, 1), got {value}")
    elif not (0.0 <= value <= 1.0):
        raise ConfigError(f"{name} must be in [0, 1], got {value}")
    return value


def hash64(master_seed: int, index: int) -> int:
    """Stable 64-bit per-trial seed derived from (master_seed, trial_index).

    SHA-256 over the two integers, truncated to 64 bits; platform independent.
    """
    payload = f"{int(master_seed)}:{int(index)}".encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")
