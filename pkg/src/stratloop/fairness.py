"""Demographic-parity threshold tuning and fairness-dynamics checks.

Thresholds are searched over evenly spaced quantiles of each group's
empirical score distribution, so any parity level attainable in-sample is
on the grid. ``dp_tune`` picks, among pairs within the parity tolerance,
the pair with the highest sample-size-weighted accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParityInfeasibleError

GRID_SIZE = 512


@dataclass(frozen=True)
class ThresholdChoice:
    threshold: float
    accuracy: float
    accept_rate: float


@dataclass(frozen=True)
class FairThresholds:
    theta_i: float
    theta_j: float
    accept_rate_i: float
    accept_rate_j: float
    accuracy: float
    parity_gap: float
    unconstrained_i: ThresholdChoice
    unconstrained_j: ThresholdChoice


def _candidates(scores: np.ndarray, grid: int) -> np.ndarray:
    # snap to observed score values so every candidate is a distinct
    # decision rule (no duplicate thresholds inside one data gap)
    qs = np.linspace(0.0, 1.0, grid)
    return np.unique(np.quantile(scores, qs, method="inverted_cdf"))


def _rates_and_accuracy(
    scores: np.ndarray, labels: np.ndarray, cands: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Acceptance rate and accuracy of 1[s >= theta] for every candidate."""
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.int64)
    n = s.size
    total_pos = int(y.sum())
    # positives at or above each sorted position
    pos_suffix = np.concatenate([np.cumsum(y[::-1])[::-1], [0]])
    idx = np.searchsorted(s, cands, side="left")
    accepted = n - idx
    tp = pos_suffix[idx]
    tn = idx - (total_pos - tp)
    return accepted / n, (tp + tn) / n


def optimal_threshold(
    scores: np.ndarray, labels: np.ndarray, grid: int = GRID_SIZE
) -> ThresholdChoice:
    """Accuracy-maximizing threshold on the quantile grid; ties pick the
    smallest threshold."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.size == 0:
        raise ConfigError("cannot tune a threshold on empty scores")
    cands = _candidates(scores, grid)
    rates, accs = _rates_and_accuracy(scores, labels, cands)
    best = int(np.lexsort((cands, -accs))[0])
    return ThresholdChoice(float(cands[best]), float(accs[best]), float(rates[best]))


def dp_tune(
    scores_i: np.ndarray,
    labels_i: np.ndarray,
    scores_j: np.ndarray,
    labels_j: np.ndarray,
    eps_par: float = 0.01,
    grid: int = GRID_SIZE,
) -> FairThresholds:
    """Fair-optimal threshold pair under a demographic-parity tolerance.

    Among pairs whose in-sample acceptance rates differ by at most eps_par,
    returns the one maximizing sample-size-weighted accuracy; ties break on
    the smaller parity gap, then the smaller theta_i, then theta_j.
    """
    if eps_par <= 0:
        raise ConfigError("eps_par must be positive")
    scores_i = np.asarray(scores_i, dtype=np.float64).ravel()
    scores_j = np.asarray(scores_j, dtype=np.float64).ravel()
    labels_i = np.asarray(labels_i).ravel()
    labels_j = np.asarray(labels_j).ravel()
    if scores_i.size == 0 or scores_j.size == 0:
        raise ConfigError("both groups must be nonempty")

    cands_i = _candidates(scores_i, grid)
    cands_j = _candidates(scores_j, grid)
    rates_i, accs_i = _rates_and_accuracy(scores_i, labels_i, cands_i)
    rates_j, accs_j = _rates_and_accuracy(scores_j, labels_j, cands_j)

    gap = np.abs(rates_i[:, None] - rates_j[None, :])
    feasible = gap <= eps_par
    if not feasible.any():
        raise ParityInfeasibleError(
            f"no threshold pair reaches parity gap <= {eps_par}; "
            f"smallest achievable gap is {gap.min():.4f}",
            min_gap=float(gap.min()),
        )
    n_i, n_j = scores_i.size, scores_j.size
    weighted = (n_i * accs_i[:, None] + n_j * accs_j[None, :]) / (n_i + n_j)
    weighted = np.where(feasible, weighted, -np.inf)

    unc_i = optimal_threshold(scores_i, labels_i, grid)
    unc_j = optimal_threshold(scores_j, labels_j, grid)

    best_acc = weighted.max()
    ties = np.argwhere(weighted == best_acc)
    # among exact accuracy ties prefer the canonical pair that tightens the
    # advantaged group and loosens the disadvantaged one (such a pair exists
    # whenever any optimal pair does), then smallest gap, then thresholds
    if unc_i.accept_rate >= unc_j.accept_rate:
        conforming = (cands_i[ties[:, 0]] >= unc_i.threshold) & (
            cands_j[ties[:, 1]] <= unc_j.threshold
        )
    else:
        conforming = (cands_i[ties[:, 0]] <= unc_i.threshold) & (
            cands_j[ties[:, 1]] >= unc_j.threshold
        )
    key = np.lexsort(
        (
            cands_j[ties[:, 1]],
            cands_i[ties[:, 0]],
            gap[ties[:, 0], ties[:, 1]],
            ~conforming,
        )
    )
    pi, pj = ties[key[0]]

    return FairThresholds(
        theta_i=float(cands_i[pi]),
        theta_j=float(cands_j[pj]),
        accept_rate_i=float(rates_i[pi]),
        accept_rate_j=float(rates_j[pj]),
        accuracy=float(best_acc),
        parity_gap=float(gap[pi, pj]),
        unconstrained_i=unc_i,
        unconstrained_j=unc_j,
    )


def early_stop_scan(unfairness_trace) -> tuple[int, float]:
    """First round attaining the minimum unfairness of the trace."""
    values = np.asarray(list(unfairness_trace), dtype=np.float64)
    if values.size == 0:
        raise ConfigError("unfairness trace is empty")
    t_star = int(np.argmin(values))
    return t_star, float(values[t_star])


def intervention_flip_check(rounds, sigma: float, with_fairness: bool) -> dict:
    """Audit a two-group run against the noise bound for advantage flips.

    ``rounds`` is the output of ``run_two_group_trial``. For every round t
    where the initially disadvantaged group is still disadvantaged (under
    the unconstrained per-group optima), the bound
    (theta_t^j - theta~_t^j) * sqrt(a_0^i - a_t^j) is evaluated (its
    division form is logged alongside). With fairness on and sigma below
    the bound, the group must remain disadvantaged at t + 1; any breach is
    recorded as a violation. Without fairness the check only records
    whether a flip happened.

    Note: the loop's noise perturbs the raw-score boundary while the bound
    is stated on the probability-scale threshold; both quantities are
    reported without unit conversion.
    """
    if not rounds:
        raise ConfigError("empty run")
    gids = list(rounds[0].per_group)
    if len(gids) != 2:
        raise ConfigError("flip check needs exactly two groups")

    def disadvantaged_at(rnd):
        a = {g: rnd.per_group[g].a_unconstrained for g in gids}
        if a[gids[0]] == a[gids[1]]:
            return None
        return min(gids, key=lambda g: a[g])

    j = disadvantaged_at(rounds[0])
    if j is None:
        return {
            "skipped": True,
            "reason": "no disadvantaged group at round 0 (equal acceptance rates)",
        }
    i = next(g for g in gids if g != j)
    a0_i = rounds[0].per_group[i].a_unconstrained

    checks = []
    violations = []
    flip_round = None
    for t in range(len(rounds) - 1):
        if disadvantaged_at(rounds[t]) != j:
            break
        info_j = rounds[t].per_group[j]
        a_t_j = info_j.a_unconstrained
        slack = max(a0_i - a_t_j, 0.0)
        theta_gap = info_j.theta_opt - info_j.theta_deployed
        bound_mult = theta_gap * math.sqrt(slack)
        bound_div = theta_gap / math.sqrt(slack) if slack > 0 else math.inf
        next_dis = disadvantaged_at(rounds[t + 1])
        still = next_dis == j
        if next_dis is not None and not still and flip_round is None:
            flip_round = t + 1
        below = sigma < bound_mult
        entry = {
            "t": t,
            "bound_mult": bound_mult,
            "bound_div": bound_div,
            "sigma_below_bound": below,
            "still_disadvantaged": still,
        }
        checks.append(entry)
        if with_fairness and below and not still:
            violations.append(entry)

    return {
        "skipped": False,
        "disadvantaged": j,
        "advantaged": i,
        "with_fairness": with_fairness,
        "sigma": sigma,
        "checks": checks,
        "flip_round": flip_round,
        "violations": violations,
    }
