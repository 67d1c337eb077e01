"""Metrics, analytic oracles, aggregation, and the CSV trace schema.

The training-set positive-rate recursion mirrors how the cumulative
training set is assembled each round: the previous pool, N model-annotated
samples whose expected positive rate is the previous acceptance rate, and K
fresh human-annotated samples at the base human rate. The improvement
integral is the expected qualification gain produced by one round of best
responses, computed by quadrature as an independent oracle for simulation
results.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .learner import ScoreModel
from .loop import RoundRecord
from .population import Population
from .response import QuadraticCost, respond_cohort

PER_TRIAL_COLUMNS = [
    "trial",
    "round",
    "group",
    "a",
    "q",
    "delta",
    "qbar",
    "theta",
    "unfairness",
    "mode_flags",
]

AGGREGATE_COLUMNS = [
    "round",
    "group",
    "n_trials",
    "a_mean",
    "a_stderr",
    "q_mean",
    "q_stderr",
    "delta_mean",
    "delta_stderr",
    "qbar_mean",
    "qbar_stderr",
    "theta_mean",
    "theta_stderr",
    "unfairness_mean",
    "unfairness_stderr",
    "mode_flags",
]


def qbar_recursion(
    qbar_prev: float, a_prev: float, qbar0: float, t: int, n_model: int, n_human: int
) -> float:
    """Expected training-set positive rate after the round-t update.

    qbar_t = [ (tN + (t-1)K) qbar_{t-1} + N a_{t-1} + K qbar_0 ]
             / [ (t+1)N + tK ]
    """
    if t < 1:
        raise ConfigError("recursion starts at t = 1")
    N, K = n_model, n_human
    total = (t + 1) * N + t * K
    return ((t * N + (t - 1) * K) * qbar_prev + N * a_prev + K * qbar0) / total


def qbar_recursion_postbr(
    qbar_prev: float, a_prev: float, qstar_prev: float, t: int, n_model: int, n_human: int
) -> float:
    """Variant for human samples drawn from the post-response distribution:
    the human term uses the measured post-response human rate q*."""
    return qbar_recursion(qbar_prev, a_prev, qstar_prev, t, n_model, n_human)


def dp_unfairness(a_i: float, a_j: float) -> float:
    """Demographic-parity gap: absolute acceptance-rate difference."""
    return abs(float(a_i) - float(a_j))


def improvement_integral(
    pop: Population,
    model: ScoreModel,
    cost: QuadraticCost,
    points_per_dim: int | None = None,
    cover: float = 0.9999,
) -> float:
    """Expected qualification gain from one round of best responses.

    Integrates p(x) * [P(1|z*(x)) - P(1|x)] over the move band (rejected
    agents whose cheapest acceptance move costs at most 1) with a midpoint
    product rule over the central-mass box. Only marginal-mode populations
    of up to three dimensions are supported; higher dimensions should use
    the Monte Carlo estimate instead.
    """
    if not isinstance(pop, Population):
        raise ConfigError("improvement integral needs a marginal-mode population")
    d = pop.dims
    if d > 3:
        raise ConfigError(f"quadrature supports at most 3 dimensions, got {d}")
    if points_per_dim is None:
        points_per_dim = {1: 200_001, 2: 2001, 3: 301}[d]

    axes = []
    widths = []
    for m in pop.marginals:
        lo, hi = m.mass_interval(cover)
        edges = np.linspace(lo, hi, points_per_dim + 1)
        axes.append(0.5 * (edges[:-1] + edges[1:]))
        widths.append((hi - lo) / points_per_dim)
    cell = math.prod(widths)

    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])

    dens = np.ones(pts.shape[0])
    for k, m in enumerate(pop.marginals):
        dens *= m.pdf(pts[:, k])

    rejected = model.predict(pts) == 0
    if not rejected.any():
        return 0.0

    w = model.full_weights(d)
    if not np.any(w):
        return 0.0
    from .response import _linear_parts

    parts = _linear_parts(model, d)
    if parts is None or not np.isfinite(parts[2]):
        return 0.0
    w, b, tau = parts
    binv_w = np.linalg.solve(cost.matrix, w)
    wbw = float(w @ binv_w)

    Xr = pts[rejected]
    gap = tau - (Xr @ w + b)
    costs = gap * gap / wbw
    band = costs <= 1.0
    if not band.any():
        return 0.0
    Xb = Xr[band]
    Zb = Xb + np.outer(gap[band] / wbw, binv_w)
    gain = pop.label_prob(Zb) - pop.label_prob(Xb)
    weight = dens[rejected][band]
    return float((weight * gain).sum() * cell)


def monte_carlo_improvement(
    pop: Population, model: ScoreModel, cost: QuadraticCost, n: int, rng
) -> float:
    """Sampling cross-check for the improvement integral: average change in
    P(Y=1|x) across a cohort that best-responds once (noiseless)."""
    from ._validation import check_rng

    rng = check_rng(rng)
    X = pop.sample_features(n, rng)
    y = np.zeros(n, dtype=np.int8)
    Z, _, _, _, _ = respond_cohort(X, y, model, cost, 0.0, pop, rng)
    return float((pop.label_prob(Z) - pop.label_prob(X)).mean())


@dataclass
class AggregateRow:
    round: int
    group: str
    n_trials: int
    a_mean: float
    a_stderr: float
    q_mean: float
    q_stderr: float
    delta_mean: float
    delta_stderr: float
    qbar_mean: float
    qbar_stderr: float
    theta_mean: float
    theta_stderr: float
    unfairness_mean: float | None
    unfairness_stderr: float | None
    mode_flags: str


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(values.size))


@dataclass
class TrialRow:
    """One (trial, round, group) entry of the per-trial trace."""

    trial: int
    round: int
    group: str
    a: float
    q: float
    delta: float
    qbar: float
    theta: float
    unfairness: float | None
    mode_flags: str


def trace_rows(
    traces: dict[str, list[list[RoundRecord]]],
    unfairness: list[list[float]] | None = None,
    mode_flags: str = "",
) -> list[TrialRow]:
    """Flatten per-group, per-trial records into trace rows.

    ``traces`` maps group id to [trial][round] records; ``unfairness`` is
    indexed [trial][round] and repeated on each group's row when present.
    """
    group_ids = list(traces)
    if not group_ids:
        raise ConfigError("no traces to flatten")
    n_trials = len(traces[group_ids[0]])
    rows = []
    for trial in range(n_trials):
        horizon = len(traces[group_ids[0]][trial])
        for t in range(horizon):
            for gid in group_ids:
                rec = traces[gid][trial][t]
                unf = unfairness[trial][t] if unfairness is not None else None
                rows.append(
                    TrialRow(
                        trial=trial,
                        round=rec.t,
                        group=gid,
                        a=rec.a,
                        q=rec.q,
                        delta=rec.delta,
                        qbar=rec.qbar,
                        theta=rec.theta,
                        unfairness=unf,
                        mode_flags=mode_flags,
                    )
                )
    return rows


def aggregate(rows: list[TrialRow]) -> list[AggregateRow]:
    """Mean and standard error per (round, group) across trials."""
    if not rows:
        raise ConfigError("cannot aggregate an empty trace")
    keys = sorted({(r.round, r.group) for r in rows}, key=lambda k: (k[0], k[1]))
    by_key: dict[tuple[int, str], list[TrialRow]] = {k: [] for k in keys}
    for r in rows:
        by_key[(r.round, r.group)].append(r)
    out = []
    for (rnd, gid), members in by_key.items():
        a_m, a_s = _mean_stderr([m.a for m in members])
        q_m, q_s = _mean_stderr([m.q for m in members])
        d_m, d_s = _mean_stderr([m.delta for m in members])
        qb_m, qb_s = _mean_stderr([m.qbar for m in members])
        th_m, th_s = _mean_stderr([m.theta for m in members])
        unf_vals = [m.unfairness for m in members if m.unfairness is not None]
        if unf_vals:
            u_m, u_s = _mean_stderr(unf_vals)
        else:
            u_m, u_s = None, None
        out.append(
            AggregateRow(
                round=rnd,
                group=gid,
                n_trials=len(members),
                a_mean=a_m,
                a_stderr=a_s,
                q_mean=q_m,
                q_stderr=q_s,
                delta_mean=d_m,
                delta_stderr=d_s,
                qbar_mean=qb_m,
                qbar_stderr=qb_s,
                theta_mean=th_m,
                theta_stderr=th_s,
                unfairness_mean=u_m,
                unfairness_stderr=u_s,
                mode_flags=members[0].mode_flags,
            )
        )
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_trial_csv(path, rows: list[TrialRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PER_TRIAL_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.trial,
                    r.round,
                    r.group,
                    _fmt(r.a),
                    _fmt(r.q),
                    _fmt(r.delta),
                    _fmt(r.qbar),
                    _fmt(r.theta),
                    _fmt(r.unfairness),
                    r.mode_flags,
                ]
            )


def write_aggregate_csv(path, rows: list[AggregateRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.round,
                    r.group,
                    r.n_trials,
                    _fmt(r.a_mean),
                    _fmt(r.a_stderr),
                    _fmt(r.q_mean),
                    _fmt(r.q_stderr),
                    _fmt(r.delta_mean),
                    _fmt(r.delta_stderr),
                    _fmt(r.qbar_mean),
                    _fmt(r.qbar_stderr),
                    _fmt(r.theta_mean),
                    _fmt(r.theta_stderr),
                    _fmt(r.unfairness_mean),
                    _fmt(r.unfairness_stderr),
                    r.mode_flags,
                ]
            )
