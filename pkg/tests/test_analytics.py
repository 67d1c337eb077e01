import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratloop import (
    ConfigError,
    LinearLabelFn,
    LogisticModel,
    Population,
    QuadraticCost,
    UniformDist,
    aggregate,
    dp_unfairness,
    improvement_integral,
    monte_carlo_improvement,
    qbar_recursion,
    qbar_recursion_postbr,
    trace_rows,
    write_aggregate_csv,
    write_trial_csv,
)
from stratloop.analytics import AGGREGATE_COLUMNS, PER_TRIAL_COLUMNS, TrialRow

# Frozen oracle for the reference improvement integral (uniform features,
# linear labels, boundary at x1+x2 = 1, cost 5*I): analytic value
# 0.5 * [u^2/2 - u^3/3]_{1-sqrt(0.4)}^{1} cross-checked by Monte Carlo.
IMPROVEMENT_REF = 0.0578363


def test_recursion_fixed_point():
    assert qbar_recursion(0.5, 0.5, 0.5, t=1, n_model=2000, n_human=100) == pytest.approx(0.5)


def test_recursion_hand_computed_example():
    # t=2, N=2000, K=100: (4100*0.5 + 2000*0.6 + 100*0.5) / 6200
    out = qbar_recursion(0.5, 0.6, 0.5, t=2, n_model=2000, n_human=100)
    assert out == pytest.approx(3300 / 6200, abs=1e-12)


def test_recursion_rejects_round_zero():
    with pytest.raises(ConfigError):
        qbar_recursion(0.5, 0.5, 0.5, t=0, n_model=10, n_human=1)


@settings(max_examples=80)
@given(
    st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
    st.integers(1, 40), st.integers(1, 5000), st.integers(0, 500),
)
def test_recursion_is_convex_combination(qp, a, q0, t, N, K):
    out = qbar_recursion(qp, a, q0, t, N, K)
    lo, hi = min(qp, a, q0), max(qp, a, q0)
    assert lo - 1e-12 <= out <= hi + 1e-12


def test_postbr_variant_reduces_and_dominates():
    base = qbar_recursion(0.5, 0.6, 0.5, 2, 2000, 100)
    same = qbar_recursion_postbr(0.5, 0.6, 0.5, 2, 2000, 100)
    assert same == base
    higher = qbar_recursion_postbr(0.5, 0.6, 0.62, 2, 2000, 100)
    assert higher > base


def test_postbr_recursion_tracks_simulation(uniform_groups):
    # feed the recursion with the measured a' and q* series and compare
    from stratloop import RetrainConfig, run_trial, trial_seed

    # the mixing recursions describe the recycled-decision bookkeeping
    g = uniform_groups[1]
    cfg = RetrainConfig(
        n_model=1500,
        n_human=75,
        horizon=6,
        human_source="post_response",
        annotation_timing="recycled",
    )
    qbars = np.zeros(7)
    a_meas = np.zeros(7)
    qstar = np.zeros(7)
    n = 10
    for k in range(n):
        recs = run_trial(g, cfg, np.random.default_rng(trial_seed(77, k)))
        qbars += [r.qbar for r in recs]
        a_meas += [r.a for r in recs]
        qstar += [r.human_rate if r.human_rate is not None else np.nan for r in recs]
    qbars /= n
    a_meas /= n
    qstar /= n
    pred = qbars[0]
    for t in range(1, 7):
        pred = qbar_recursion_postbr(pred, a_meas[t - 1], qstar[t], t, 1500, 75)
        assert pred == pytest.approx(qbars[t], abs=0.02)


def uniform_pop():
    return Population(
        marginals=(UniformDist(0, 1), UniformDist(0, 1)),
        label_fn=LinearLabelFn(coeffs=(0.5, 0.5)),
    )


def boundary_model():
    return LogisticModel(weights=(4.0, 4.0), bias=-4.0, threshold=0.5)  # x1+x2 >= 1


def test_improvement_integral_reference_value():
    val = improvement_integral(uniform_pop(), boundary_model(), QuadraticCost(5 * np.eye(2)))
    assert val == pytest.approx(IMPROVEMENT_REF, abs=5e-4)


def test_improvement_integral_matches_monte_carlo():
    pop, m, c = uniform_pop(), boundary_model(), QuadraticCost(5 * np.eye(2))
    quad = improvement_integral(pop, m, c)
    mc = monte_carlo_improvement(pop, m, c, 200_000, np.random.default_rng(5))
    assert quad == pytest.approx(mc, abs=1.5e-3)


def test_improvement_integral_empty_band_is_zero():
    accept_all = LogisticModel(weights=(1.0, 1.0), bias=50.0, threshold=0.5)
    val = improvement_integral(uniform_pop(), accept_all, QuadraticCost(np.eye(2)))
    assert val == 0.0


def test_improvement_integral_shrinks_with_higher_costs():
    pop, m = uniform_pop(), boundary_model()
    lo = improvement_integral(pop, m, QuadraticCost(5 * np.eye(2)))
    hi = improvement_integral(pop, m, QuadraticCost(20 * np.eye(2)))
    assert 0 < hi < lo


def test_improvement_integral_rejects_high_dims_and_conditional():
    from stratloop import BetaDist, ConditionalPopulation

    pop4 = Population(
        marginals=tuple(UniformDist(0, 1) for _ in range(4)),
        label_fn=LinearLabelFn(coeffs=(0.25,) * 4),
    )
    m = LogisticModel(weights=(1.0,) * 4, bias=-2.0)
    with pytest.raises(ConfigError):
        improvement_integral(pop4, m, QuadraticCost(np.eye(4)))
    cond = ConditionalPopulation(
        positive=(BetaDist(2, 3),), negative=(BetaDist(1, 4),), q0=0.4
    )
    with pytest.raises(ConfigError):
        improvement_integral(cond, LogisticModel(weights=(1.0,), bias=0.0), QuadraticCost(np.eye(1)))


def test_dp_unfairness_symmetric_nonnegative():
    assert dp_unfairness(0.7, 0.4) == pytest.approx(0.3)
    assert dp_unfairness(0.4, 0.7) == pytest.approx(0.3)
    assert dp_unfairness(0.5, 0.5) == 0.0


def _rows():
    rows = []
    for trial in range(3):
        for t in range(2):
            for gid in ("i", "j"):
                rows.append(
                    TrialRow(
                        trial=trial,
                        round=t,
                        group=gid,
                        a=0.5 + 0.01 * trial,
                        q=0.4,
                        delta=0.1 + 0.01 * trial,
                        qbar=0.45,
                        theta=0.5,
                        unfairness=0.2,
                        mode_flags="hard|cumulative",
                    )
                )
    return rows


def test_aggregate_mean_and_stderr():
    agg = aggregate(_rows())
    assert len(agg) == 4  # 2 rounds x 2 groups
    first = agg[0]
    assert first.n_trials == 3
    assert first.a_mean == pytest.approx(0.51)
    manual = np.std([0.5, 0.51, 0.52], ddof=1) / np.sqrt(3)
    assert first.a_stderr == pytest.approx(manual)
    assert first.unfairness_mean == pytest.approx(0.2)


def test_aggregate_single_trial_zero_stderr():
    rows = [r for r in _rows() if r.trial == 0]
    agg = aggregate(rows)
    assert all(r.a_stderr == 0.0 for r in agg)


def test_aggregate_rejects_empty():
    with pytest.raises(ConfigError):
        aggregate([])


def test_csv_schemas_exact(tmp_path):
    rows = _rows()
    trial_path = tmp_path / "trials.csv"
    write_trial_csv(trial_path, rows)
    with open(trial_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        assert header == PER_TRIAL_COLUMNS
        body = list(reader)
    assert len(body) == len(rows)
    assert body[0][0] == "0" and body[0][2] == "i"

    agg_path = tmp_path / "agg.csv"
    write_aggregate_csv(agg_path, aggregate(rows))
    with open(agg_path, newline="") as fh:
        header = next(csv.reader(fh))
    assert header == AGGREGATE_COLUMNS


def test_csv_blank_unfairness_for_single_group(tmp_path):
    rows = [r for r in _rows() if r.group == "i"]
    for r in rows:
        r.unfairness = None
    path = tmp_path / "solo.csv"
    write_trial_csv(path, rows)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        row = next(reader)
    assert row[PER_TRIAL_COLUMNS.index("unfairness")] == ""


def test_trace_rows_shapes(uniform_groups):
    from stratloop import RetrainConfig, run_trials

    g = uniform_groups[0]
    cfg = RetrainConfig(
        n_model=100, n_human=5, horizon=2, trials=2, learner="ground_truth"
    )
    traces = {g.group_id: run_trials(g, cfg)}
    rows = trace_rows(traces, mode_flags=cfg.mode_flags())
    assert len(rows) == 2 * 3
    assert {r.round for r in rows} == {0, 1, 2}
    assert all(r.unfairness is None for r in rows)
