import numpy as np
import pytest

from stratloop import RetrainConfig, TrainSettings, load_config


@pytest.fixture(scope="session")
def uniform_groups():
    return load_config("uniform_linear_r005").groups


@pytest.fixture(scope="session")
def gaussian_groups():
    return load_config("gaussian_logistic_r005").groups


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_cfg(**overrides) -> RetrainConfig:
    """Fast loop config for structural tests."""
    base = dict(
        n_model=250,
        n_human=12,
        horizon=3,
        trials=1,
        seed=7,
        train=TrainSettings(epochs=10),
    )
    base.update(overrides)
    return RetrainConfig(**base)
