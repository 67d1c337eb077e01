import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratloop import (
    BetaDist,
    ConfigError,
    GaussianDist,
    KdeDist,
    LinearLabelFn,
    LogisticLabelFn,
    UniformDist,
)
from stratloop.distributions import marginal_from_json, marginal_to_json, sigmoid


def test_uniform_requires_ordered_bounds():
    with pytest.raises(ConfigError):
        UniformDist(1.0, 1.0)
    with pytest.raises(ConfigError):
        UniformDist(2.0, -1.0)


def test_gaussian_requires_positive_stddev():
    with pytest.raises(ConfigError):
        GaussianDist(0.0, 0.0)


def test_beta_requires_positive_shapes():
    with pytest.raises(ConfigError):
        BetaDist(0.0, 1.0)
    with pytest.raises(ConfigError):
        BetaDist(1.0, -2.0)


def test_kde_requires_points_and_bandwidth():
    with pytest.raises(ConfigError):
        KdeDist(points=(0.5,))
    with pytest.raises(ConfigError):
        KdeDist(points=(0.0, 1.0), bandwidth=0.0)


def test_bounded_supports(rng):
    u = UniformDist(-1.0, 2.0)
    x = u.sample(5000, rng)
    assert x.min() >= -1.0 and x.max() <= 2.0
    b = BetaDist(1.37, 3.23)
    x = b.sample(5000, rng)
    assert x.min() >= 0.0 and x.max() <= 1.0


def test_sampling_deterministic():
    d = GaussianDist(0.0, 0.5)
    a = d.sample(10, np.random.default_rng(3))
    b = d.sample(10, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)


def test_pdfs_integrate_to_one():
    for dist in (
        UniformDist(0.0, 1.0),
        GaussianDist(0.3, 0.7),
        BetaDist(2.0, 5.0),
        KdeDist(points=(0.1, 0.4, 0.9), bandwidth=0.2),
    ):
        lo, hi = dist.mass_interval(0.99999)
        xs = np.linspace(lo, hi, 20001)
        total = np.trapezoid(dist.pdf(xs), xs)
        assert total == pytest.approx(1.0, abs=2e-3)


def test_kde_silverman_bandwidth_positive(rng):
    pts = tuple(rng.normal(0, 1, 50))
    assert KdeDist(points=pts).h > 0


def test_marginal_json_round_trip():
    dists = [
        UniformDist(0.0, 1.0),
        GaussianDist(0.1, 0.5),
        BetaDist(1.37, 3.23),
        KdeDist(points=(0.0, 0.5, 1.0), bandwidth=0.1),
    ]
    for d in dists:
        assert marginal_from_json(marginal_to_json(d)) == d
    with pytest.raises(ConfigError):
        marginal_from_json({"kind": "cauchy"})


def test_linear_label_fn_clips_to_unit_interval():
    fn = LinearLabelFn(coeffs=(0.5, 0.5))
    X = np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 3.0], [-2.0, 0.0]])
    p = fn.prob(X)
    assert p.min() >= 0.0 and p.max() <= 1.0
    assert p[1] == pytest.approx(1.0)
    assert p[3] == 0.0


@settings(max_examples=50)
@given(st.floats(-700, 700))
def test_sigmoid_stable_and_bounded(z):
    p = sigmoid(np.array([z]))[0]
    assert 0.0 <= p <= 1.0
    assert np.isfinite(p)


def test_logistic_label_fn_matches_definition(rng):
    fn = LogisticLabelFn(coeffs=(1.0, 1.0))
    X = rng.normal(0, 1, (100, 2))
    expected = 1.0 / (1.0 + np.exp(-(X[:, 0] + X[:, 1])))
    np.testing.assert_allclose(fn.prob(X), expected, rtol=1e-12)


def test_monotone_sign_checks():
    assert LogisticLabelFn(coeffs=(1.0, 2.0)).monotone_signs_ok()
    assert not LinearLabelFn(coeffs=(0.5, -0.1)).monotone_signs_ok()
