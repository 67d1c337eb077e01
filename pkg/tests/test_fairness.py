import numpy as np
import pytest

from conftest import small_cfg
from stratloop import (
    ConfigError,
    Group,
    ParityInfeasibleError,
    dp_tune,
    early_stop_scan,
    intervention_flip_check,
    optimal_threshold,
    run_two_group_trial,
)


def scored_group(rng, n, shift, q=0.5, spread=0.18):
    """Synthetic score/label pair where scores carry real signal."""
    y = (rng.random(n) < q).astype(int)
    scores = np.clip(rng.normal(0.32 + shift + 0.33 * y, spread), 0.0, 1.0)
    return scores, y


from oracles import two_group_tuning_instance


def test_identical_groups_tune_to_unconstrained_optimum(rng):
    s, y = scored_group(rng, 4000, shift=0.05)
    out = dp_tune(s, y, s, y, eps_par=0.01)
    assert out.parity_gap == 0.0
    assert out.theta_i == out.theta_j
    assert out.theta_i == out.unconstrained_i.threshold


def test_vacuous_constraint_reduces_to_per_group_optima(rng):
    s_i, y_i = scored_group(rng, 3000, shift=0.12)
    s_j, y_j = scored_group(rng, 3000, shift=-0.12)
    out = dp_tune(s_i, y_i, s_j, y_j, eps_par=1.0)
    assert out.theta_i == out.unconstrained_i.threshold
    assert out.theta_j == out.unconstrained_j.threshold


def test_parity_gap_honors_tolerance(rng):
    for k in range(5):
        s_i, y_i = scored_group(rng, 2500, shift=0.15)
        s_j, y_j = scored_group(rng, 2000, shift=-0.1)
        out = dp_tune(s_i, y_i, s_j, y_j, eps_par=0.01)
        assert out.parity_gap <= 0.01


def test_threshold_ordering_on_random_instances(rng):
    # the tuned pair moves against the advantaged group and in favor of the
    # disadvantaged one, relative to the unconstrained optima
    checked = 0
    while checked < 25:
        out = two_group_tuning_instance(rng)
        if out is None:
            continue
        unc_i, unc_j = out.unconstrained_i, out.unconstrained_j
        checked += 1
        if unc_i.accept_rate > unc_j.accept_rate:  # i advantaged
            assert out.theta_i >= unc_i.threshold
            assert out.theta_j <= unc_j.threshold
        else:
            assert out.theta_i <= unc_i.threshold
            assert out.theta_j >= unc_j.threshold


def test_dp_tune_validates_inputs(rng):
    s, y = scored_group(rng, 100, 0.0)
    with pytest.raises(ConfigError):
        dp_tune(s, y, s, y, eps_par=0.0)
    with pytest.raises(ConfigError):
        dp_tune(np.array([]), np.array([]), s, y)


def test_parity_infeasible_error_carries_diagnostics():
    err = ParityInfeasibleError("no pair", min_gap=0.2)
    assert err.min_gap == 0.2


def test_optimal_threshold_maximizes_accuracy(rng):
    s, y = scored_group(rng, 3000, shift=0.0)
    choice = optimal_threshold(s, y)
    acc = ((s >= choice.threshold).astype(int) == y).mean()
    assert acc == pytest.approx(choice.accuracy, abs=1e-12)
    for theta in np.quantile(s, [0.1, 0.3, 0.5, 0.7, 0.9]):
        other = ((s >= theta).astype(int) == y).mean()
        assert choice.accuracy >= other - 1e-12


def test_early_stop_scan_cases():
    assert early_stop_scan([0.5, 0.4, 0.3, 0.2]) == (3, 0.2)  # monotone: last round
    assert early_stop_scan([0.5, 0.3, 0.1, 0.3, 0.5]) == (2, 0.1)  # interior minimum
    assert early_stop_scan([0.2, 0.2, 0.2]) == (0, 0.2)  # tie: first index
    with pytest.raises(ConfigError):
        early_stop_scan([])


def test_flip_check_skips_identical_groups(uniform_groups):
    g = uniform_groups[0]
    twin = Group("twin", g.population, g.annotation_bias, g.cost_matrix)
    rounds = run_two_group_trial((g, twin), small_cfg(learner="ground_truth"), "none", rng_seed=3)
    report = intervention_flip_check(rounds, sigma=0.0, with_fairness=False)
    assert report["skipped"]


def test_flip_check_no_flip_with_fairness_zero_noise(uniform_groups):
    gi, gj = uniform_groups
    cfg = small_cfg(n_model=900, n_human=45, horizon=3)
    rounds = run_two_group_trial((gi, gj), cfg, "dp_every_round", eps_par=0.02, rng_seed=4)
    report = intervention_flip_check(rounds, sigma=0.0, with_fairness=True)
    if not report["skipped"]:
        assert report["violations"] == []
        for entry in report["checks"]:
            assert np.isfinite(entry["bound_div"]) or entry["bound_div"] == np.inf


def test_flip_check_detects_flip_without_fairness(uniform_groups):
    # asymmetric costs: the disadvantaged group moves almost freely while
    # the advantaged group cannot move at all, so advantage flips
    base = uniform_groups[0]
    gi = Group("i", base.population, +0.1, 600.0 * np.eye(2))
    gj = Group("j", base.population, -0.1, 0.05 * np.eye(2))
    flips = 0
    for seed in range(5):
        cfg = small_cfg(n_model=1200, n_human=60, horizon=3, seed=seed)
        rounds = run_two_group_trial((gi, gj), cfg, "none", rng_seed=seed)
        report = intervention_flip_check(rounds, sigma=0.0, with_fairness=False)
        if not report["skipped"] and report["flip_round"] is not None:
            flips += 1
    assert flips >= 1


def test_flip_check_requires_two_groups(uniform_groups):
    with pytest.raises(ConfigError):
        intervention_flip_check([], sigma=0.0, with_fairness=False)
