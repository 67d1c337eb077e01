"""Agent best response to a deployed threshold classifier.

An agent at x facing decision rule f gains utility f(z) - c(x, z) from
moving to z, with quadratic cost c(x, z) = (z - x)^T B (z - x). Against a
linear boundary the optimum is either to stay or to move to the cheapest
accepted point, which has the closed form

    z* = x + B^{-1} w (tau - w.x - b) / (w^T B^{-1} w)

landing exactly on the boundary {z : w.z + b = tau}. A grid-search oracle
(`brute_force_best_respond`) provides an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_features, check_rng, check_spd, check_vector
from .errors import ConfigError, DegenerateModelError
from .learner import GroundTruthModel, LogisticModel, ScoreModel
from .population import PopulationLike


@dataclass(frozen=True)
class QuadraticCost:
    """Feature-change cost (z - x)^T B (z - x); B symmetric positive definite."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", check_spd(self.matrix))

    @property
    def dims(self) -> int:
        return self.matrix.shape[0]

    def of(self, x: np.ndarray, z: np.ndarray) -> float:
        d = np.asarray(z, dtype=np.float64) - np.asarray(x, dtype=np.float64)
        return float(d @ self.matrix @ d)


@dataclass
class ResponseOutcome:
    moved: bool
    new_feature: np.ndarray
    cost_paid: float
    new_label: int | None = None
    perceived_threshold: float | None = None
    note: str = ""


# boundary landings overshoot by this relative sliver, far below the 1e-9
# landing tolerance, so float rounding cannot flip the acceptance decision
_NUDGE = 1e-10


def _linear_parts(model: ScoreModel, dims: int) -> tuple[np.ndarray, float, float] | None:
    """(w, b, tau) of the acceptance boundary, or None when no boundary exists."""
    if model.constant_prob is not None:
        return None
    w = model.full_weights(dims)
    if not np.any(w):
        return None
    if isinstance(model, LogisticModel):
        b = model.bias
    else:
        b = model.label_fn.intercept
    tau = model.raw_boundary()
    return w, float(b), float(tau)


def min_cost_to_acceptance(
    x: np.ndarray, model: ScoreModel, cost: QuadraticCost
) -> tuple[float, np.ndarray]:
    """Cheapest move to acceptance under the (noiseless) model.

    Returns (0, x) for already-accepted agents, otherwise the closed-form
    minimizer on the boundary. Raises for models without a usable linear
    boundary; an unreachable boundary yields infinite cost.
    """
    x = check_vector(x, name="x")
    parts = _linear_parts(model, x.size)
    if parts is None:
        raise DegenerateModelError("model has no linear acceptance boundary (w = 0)")
    if cost.dims != x.size:
        raise ConfigError(f"cost matrix is {cost.dims}-d but x has {x.size} dims")
    if model.predict(x[None, :])[0] == 1:
        return 0.0, x.copy()
    w, b, tau = parts
    if not np.isfinite(tau):
        return float("inf"), x.copy()
    binv_w = np.linalg.solve(cost.matrix, w)
    wbw = float(w @ binv_w)
    gap = tau - float(w @ x) - b
    # land a sliver inside the accepted side so rounding never rejects z*
    z = x + binv_w * ((gap + _NUDGE * (1.0 + abs(tau))) / wbw)
    return gap * gap / wbw, z


def respond_cohort(
    X: np.ndarray,
    y: np.ndarray,
    model: ScoreModel,
    cost: QuadraticCost,
    noise_sigma: float,
    pop: PopulationLike,
    rng,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized best response of a cohort against a deployed model.

    Each agent perceives the raw-space boundary tau + eps with its own draw
    eps ~ N(0, noise_sigma^2) (exactly tau when sigma is 0), moves iff it is
    rejected under the perceived boundary and the move costs at most 1, and
    lands on the perceived boundary. Movers' labels are redrawn from
    P(Y=1 | z*); stayers keep their labels.

    Returns (features, labels, moved mask, costs paid, perceived taus).
    """
    rng = check_rng(rng)
    X = check_features(X)
    y = np.asarray(y, dtype=np.int8).ravel()
    if noise_sigma < 0:
        raise ConfigError("noise_sigma must be nonnegative")
    n = X.shape[0]
    parts = _linear_parts(model, X.shape[1])
    no_move = (X.copy(), y.copy(), np.zeros(n, bool), np.zeros(n), np.full(n, np.nan))
    if parts is None:
        return no_move  # constant model: staying is the argmax for every agent
    w, b, tau = parts
    if not np.isfinite(tau):
        return no_move
    if cost.dims != X.shape[1]:
        raise ConfigError(f"cost matrix is {cost.dims}-d but features have {X.shape[1]} dims")

    raw = X @ w + b
    if noise_sigma > 0:
        taus = tau + rng.normal(0.0, noise_sigma, size=n)
    else:
        taus = np.full(n, tau)
    gap = taus - raw
    binv_w = np.linalg.solve(cost.matrix, w)
    wbw = float(w @ binv_w)
    move_cost = np.where(gap > 0, gap * gap / wbw, 0.0)
    movers = (gap > 0) & (move_cost <= 1.0)

    Z = X.copy()
    landing_gap = gap[movers] + _NUDGE * (1.0 + np.abs(taus[movers]))
    Z[movers] += np.outer(landing_gap / wbw, binv_w)
    y_new = y.copy()
    if movers.any():
        p = pop.label_prob(Z[movers])
        y_new[movers] = (rng.random(int(movers.sum())) < p).astype(np.int8)
    paid = np.where(movers, move_cost, 0.0)
    return Z, y_new, movers, paid, taus


def best_respond(
    x: np.ndarray,
    y: int,
    model: ScoreModel,
    cost: QuadraticCost,
    noise_sigma: float,
    pop: PopulationLike,
    rng,
) -> ResponseOutcome:
    """Single-agent wrapper over :func:`respond_cohort`."""
    x = check_vector(x, name="x")
    Z, y_new, moved, paid, taus = respond_cohort(
        x[None, :], np.asarray([y]), model, cost, noise_sigma, pop, rng
    )
    return ResponseOutcome(
        moved=bool(moved[0]),
        new_feature=Z[0],
        cost_paid=float(paid[0]),
        new_label=int(y_new[0]),
        perceived_threshold=float(taus[0]) if np.isfinite(taus[0]) else None,
    )


def brute_force_best_respond(
    x: np.ndarray,
    model: ScoreModel,
    cost: QuadraticCost,
    grid_halfwidth: float,
    resolution: float,
    center: np.ndarray | None = None,
) -> ResponseOutcome:
    """Exhaustive grid search of utility f(z) - c(x, z); the test oracle.

    The grid spans center +- grid_halfwidth per axis at the given resolution
    (center defaults to x). Staying put is always a candidate. Ties break
    deterministically: lowest cost, then lexicographically smallest z.
    """
    x = check_vector(x, name="x")
    if resolution <= 0:
        raise ConfigError("resolution must be positive")
    d = x.size
    center = x if center is None else check_vector(center, d, "center")
    parts = _linear_parts(model, d)

    steps = int(np.floor(grid_halfwidth / resolution))
    axes = [c + resolution * np.arange(-steps, steps + 1) for c in center]

    accepted_at_x = int(model.predict(x[None, :])[0]) == 1
    best_u = 1.0 if accepted_at_x else 0.0  # utility of staying
    best_cost = 0.0
    best_z = x.copy()
    found_feasible = accepted_at_x

    B = cost.matrix
    chunk = max(1, int(2_000_000 // max(1, len(axes[0]) ** (d - 1))))
    first = axes[0]
    rest = axes[1:]
    mesh_rest = np.meshgrid(*rest, indexing="ij") if rest else []
    rest_cols = [m.ravel() for m in mesh_rest]
    m_rest = rest_cols[0].size if rest_cols else 1

    for lo in range(0, first.size, chunk):
        f_block = first[lo : lo + chunk]
        Z = np.empty((f_block.size * m_rest, d))
        Z[:, 0] = np.repeat(f_block, m_rest)
        for j, col in enumerate(rest_cols):
            Z[:, j + 1] = np.tile(col, f_block.size)
        diff = Z - x
        costs = np.einsum("ij,jk,ik->i", diff, B, diff)
        acc = model.predict(Z).astype(np.float64)
        util = acc - costs
        if acc.any():
            found_feasible = True
        top = float(util.max())
        if top < best_u or (top == best_u and costs[util == top].min() > best_cost):
            continue
        tie = np.flatnonzero(util == top)
        tie = tie[costs[tie] == costs[tie].min()]
        if tie.size > 1:
            order = np.lexsort(tuple(Z[tie, j] for j in range(d - 1, -1, -1)))
            pick = tie[order[0]]
        else:
            pick = tie[0]
        cand = (top, float(costs[pick]), Z[pick])
        if (cand[0] > best_u) or (
            cand[0] == best_u
            and (cand[1] < best_cost or (cand[1] == best_cost and _lex_less(cand[2], best_z)))
        ):
            best_u, best_cost, best_z = cand

    moved = bool(np.any(best_z != x))
    note = ""
    if not accepted_at_x and not found_feasible:
        note = "no feasible grid point: grid too coarse or boundary out of range"
    return ResponseOutcome(
        moved=moved,
        new_feature=best_z,
        cost_paid=best_cost if moved else 0.0,
        new_label=None,
        perceived_threshold=parts[2] if parts else None,
        note=note,
    )


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    for ai, bi in zip(a, b):
        if ai != bi:
            return ai < bi
    return False
