import numpy as np
import pytest

from stratloop import (
    ColumnSchema,
    ConditionalPopulation,
    IngestError,
    fit_beta_conditionals,
    fit_kde_logistic,
    ingest_csv,
)
from stratloop.ingest import (
    beta_method_of_moments,
    write_stand_in_credit_approval,
    write_stand_in_german,
)

SCHEMA = ColumnSchema(features=("x1", "x2"), label="label", group="grp")


def write_csv(path, rows, header="x1,x2,label,grp"):
    path.write_text("\n".join([header] + rows) + "\n")


def test_ingest_toy_csv(tmp_path):
    p = tmp_path / "toy.csv"
    write_csv(p, ["0.0,2.0,1,a", "5.0,4.0,0,b", "10.0,6.0,1,a"])
    prof = ingest_csv(p, SCHEMA)
    assert prof.X.shape == (3, 2)
    assert prof.bounds == [(0.0, 10.0), (2.0, 6.0)]
    np.testing.assert_allclose(prof.X[:, 0], [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(prof.y, [1, 0, 1])
    Xa, ya = prof.rows_for("a")
    assert Xa.shape == (2, 2) and ya.tolist() == [1, 1]


def test_ingest_rejects_constant_column(tmp_path):
    p = tmp_path / "const.csv"
    write_csv(p, ["1.0,2.0,1,a", "1.0,3.0,0,b"])
    with pytest.raises(IngestError, match="x1"):
        ingest_csv(p, SCHEMA)


def test_ingest_rejects_bad_labels_with_row_numbers(tmp_path):
    p = tmp_path / "bad.csv"
    write_csv(p, ["0.1,0.2,1,a", "0.3,0.4,2,a", "0.5,0.6,0,b"])
    with pytest.raises(IngestError) as err:
        ingest_csv(p, SCHEMA)
    assert err.value.rows == [3]
    assert "label" in str(err.value)


def test_ingest_rejects_missing_values_and_short_rows(tmp_path):
    p = tmp_path / "rows.csv"
    write_csv(p, ["0.1,0.2,1,a", "0.3,,0,a", "0.5,0.6,0"])
    with pytest.raises(IngestError) as err:
        ingest_csv(p, SCHEMA)
    assert set(err.value.rows) == {3, 4}


def test_ingest_requires_named_columns(tmp_path):
    p = tmp_path / "cols.csv"
    write_csv(p, ["0.1,1,a"], header="x1,label,grp")
    with pytest.raises(IngestError, match="x2"):
        ingest_csv(p, SCHEMA)


def test_normalization_idempotent(tmp_path):
    rng = np.random.default_rng(0)
    vals = np.concatenate([[0.0, 1.0], rng.random(50)])
    rows = [f"{v:.17g},{1-v:.17g},{int(v > 0.5)},a" for v in vals]
    p = tmp_path / "norm.csv"
    write_csv(p, rows)
    prof1 = ingest_csv(p, SCHEMA)
    rows2 = [
        f"{prof1.X[k,0]:.17g},{prof1.X[k,1]:.17g},{prof1.y[k]},a"
        for k in range(prof1.X.shape[0])
    ]
    p2 = tmp_path / "norm2.csv"
    write_csv(p2, rows2)
    prof2 = ingest_csv(p2, SCHEMA)
    np.testing.assert_allclose(prof2.X, prof1.X, atol=1e-12)


def test_beta_mom_recovers_parameters(rng):
    x = rng.beta(1.37, 3.23, 100_000)
    a, b, used_mle = beta_method_of_moments(x)
    assert not used_mle
    assert a == pytest.approx(1.37, rel=0.05)
    assert b == pytest.approx(3.23, rel=0.05)


def test_beta_mom_uniform_is_flat(rng):
    x = rng.random(100_000)
    a, b, _ = beta_method_of_moments(x)
    assert a == pytest.approx(1.0, rel=0.05)
    assert b == pytest.approx(1.0, rel=0.05)


def test_beta_mom_falls_back_to_mle():
    x = np.array([0.0] * 50 + [1.0] * 50)  # variance at the feasibility edge
    a, b, used_mle = beta_method_of_moments(x)
    assert used_mle
    assert a > 0 and b > 0


def test_fit_beta_conditionals_round_trip(tmp_path, rng):
    pop = ConditionalPopulation(
        positive=(
            __import__("stratloop").BetaDist(1.37, 3.23),
            __import__("stratloop").BetaDist(0.83, 2.83),
        ),
        negative=(
            __import__("stratloop").BetaDist(1.50, 4.94),
            __import__("stratloop").BetaDist(0.84, 5.56),
        ),
        q0=0.473,
    )
    from stratloop import sample_agents
    from stratloop.ingest import DatasetProfile

    X, y = sample_agents(pop, 60_000, rng)
    profile = DatasetProfile(
        source="synthetic", schema=SCHEMA, X=X, y=y, groups=None,
        bounds=[(0, 1), (0, 1)],
    )
    fitted = fit_beta_conditionals(profile, None)
    assert fitted.q0 == pytest.approx(0.473, abs=3 * np.sqrt(0.25 / 60_000))
    assert fitted.positive[0].alpha == pytest.approx(1.37, rel=0.07)
    assert fitted.positive[0].beta == pytest.approx(3.23, rel=0.07)


def test_fit_beta_requires_min_cell(tmp_path):
    p = tmp_path / "small.csv"
    write_csv(p, [f"0.{k+1},0.{k+2},{k % 2},a" for k in range(8)])
    prof = ingest_csv(p, SCHEMA)
    with pytest.raises(IngestError, match="at least"):
        fit_beta_conditionals(prof, None)


def test_fit_kde_logistic_round_trip(rng):
    from stratloop.ingest import DatasetProfile

    n = 10_000
    X = np.clip(rng.normal(0.6, 0.12, (n, 2)), 0, 1)
    z = 6.0 * (X[:, 0] - 0.6) + 4.0 * (X[:, 1] - 0.6)
    y = (rng.random(n) < 1 / (1 + np.exp(-z))).astype(np.int8)
    profile = DatasetProfile(
        source="synthetic", schema=SCHEMA, X=X, y=y, groups=None,
        bounds=[(0, 1), (0, 1)],
    )
    pop = fit_kde_logistic(profile, None)
    draw = pop.sample_features(20_000, rng)
    assert draw[:, 0].mean() == pytest.approx(X[:, 0].mean(), abs=0.02 * X[:, 0].mean() + 0.01)
    # logistic coefficient signs recovered
    assert pop.label_fn.coeffs[0] > 0 and pop.label_fn.coeffs[1] > 0


def test_fit_kde_requires_enough_rows(tmp_path):
    p = tmp_path / "few.csv"
    write_csv(p, [f"0.{k+1},0.{k+3},{k % 2},a" for k in range(7)])
    prof = ingest_csv(p, SCHEMA)
    with pytest.raises(IngestError, match="rows"):
        fit_kde_logistic(prof, None)


def test_stand_in_german_ingests_with_subset(tmp_path):
    p = tmp_path / "german.csv"
    schema = write_stand_in_german(p, rows=400, seed=1)
    prof = ingest_csv(p, schema)
    assert prof.X.shape[1] == 19
    assert set(np.unique(prof.groups)) == {"male", "female"}
    pop = fit_kde_logistic(prof, "male", feature_subset=tuple(range(10)))
    assert pop.dims == 19
    assert pop.classifier_features == tuple(range(10))
    # the loop's fitted classifier sees only the flagged columns
    from stratloop import RetrainConfig, Group, TrainSettings, init_round_zero

    g = Group("male", pop, annotation_bias=0.06, cost_matrix=5.0 * np.eye(19))
    cfg = RetrainConfig(n_model=300, n_human=15, horizon=1,
                        train=TrainSettings(epochs=3))
    state = init_round_zero(g, cfg, np.random.default_rng(0))
    assert len(state.model.weights) == 10


def test_stand_in_credit_approval_round_trip(tmp_path):
    p = tmp_path / "credit.csv"
    schema = write_stand_in_credit_approval(p, rows=2000, seed=2)
    prof = ingest_csv(p, schema)
    pop_i = fit_beta_conditionals(prof, "i")
    assert 0.35 < pop_i.q0 < 0.6
    pop_j = fit_beta_conditionals(prof, "j")
    assert 0.3 < pop_j.q0 < 0.6
