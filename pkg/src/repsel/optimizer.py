"""Support points by a majorize-minimize (convex-concave) iteration.

The objective is the energy surrogate

    S(x) = 2/(m B) sum_i sum_k ||x_i - y_k|| - 1/m^2 sum_i sum_j ||x_i - x_j||

over m free points x and a batch of B data rows y. The attraction term is
majorized by the quadratic bound ``||u|| <= ||u||^2 / (2 r) + r / 2`` with
``r`` the current distance, the repulsion term (concave after the minus
sign) is replaced by its tangent plane. The resulting surrogate is a
separable quadratic whose minimizer is the closed-form update in
``_update_block``. With m = 1 the update is a Weiszfeld step.

Batch rows closer than ``distance_floor`` to a point are treated as
coincident and handled with the Vardi-Zhang correction instead of a huge
floored weight; otherwise a point started on a data row would never move.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from repsel.energy import as_points, energy_surrogate

logger = logging.getLogger(__name__)

BATCH_CAP = 10_000

# bounds the (block, m, d) difference tensor built per update block
_DIFF_BUDGET = 4_000_000


@dataclass(frozen=True)
class OptimizerConfig:
    n_points: int
    max_iters: int = 500
    tol: float = 1e-6
    batch_size: Union[int, str, None] = None
    resample: Optional[bool] = None
    seed: int = 0
    distance_floor: float = 1e-10

    def __post_init__(self):
        if int(self.n_points) < 1:
            raise ValueError("n_points must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be positive")
        if not self.tol > 0 or not self.distance_floor > 0:
            raise ValueError("tol and distance_floor must be positive")
        if self.batch_size not in (None, "full") and int(self.batch_size) < 1:
            raise ValueError("batch_size must be positive or 'full'")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def batch_for(self, n: int) -> int:
        if self.batch_size is None:
            return n if n <= BATCH_CAP else BATCH_CAP
        if self.batch_size == "full":
            return n
        if int(self.batch_size) > n:
            raise ValueError(f"batch_size {self.batch_size} exceeds data size {n}")
        return int(self.batch_size)

    def resample_for(self, n: int) -> bool:
        if self.resample is None:
            return self.batch_for(n) < n
        return bool(self.resample)

    def with_(self, **changes) -> "OptimizerConfig":
        return replace(self, **changes)


@dataclass
class OptimizerTrace:
    iterations: int = 0
    surrogate_history: list = field(default_factory=list)
    converged: bool = False
    final_max_move: float = float("nan")


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    init_ss, batch_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(init_ss), np.random.default_rng(batch_ss)


def init_points(data, config: OptimizerConfig) -> np.ndarray:
    """Distinct data rows drawn uniformly without replacement."""
    y = as_points(data)
    if config.n_points > len(y):
        raise ValueError(f"n_points {config.n_points} exceeds data size {len(y)}")
    rng, _ = _streams(config.seed)
    return y[rng.choice(len(y), size=config.n_points, replace=False)].copy()


def _update_block(x: np.ndarray, rows: np.ndarray, batch: np.ndarray, delta: float) -> np.ndarray:
    m = len(x)
    xb = x[rows]
    dist_xy = cdist(xb, batch)
    coincident = dist_xy < delta
    w = np.where(coincident, 0.0, 1.0 / np.maximum(dist_xy, delta))
    attract = w @ batch
    if m > 1:
        diff = xb[:, None, :] - x[None, :, :]
        dist = np.maximum(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)), delta)
        # self term has zero difference, so it drops out of the sum
        attract = attract + (len(batch) / m) * np.einsum("ijk,ij->ik", diff, 1.0 / dist)
    weight = w.sum(axis=1)
    out = xb.copy()
    free = weight > 0
    out[free] = attract[free] / weight[free, None]
    # Batch rows sitting on the point make the objective non-smooth there.
    # Minimize quadratic majorizer + eta * ||x - x_t|| exactly: a shrunken
    # step, or no move when the remaining pull cannot overcome eta.
    eta = coincident.sum(axis=1)
    hit = np.flatnonzero((eta > 0) & free)
    if len(hit):
        step = out[hit] - xb[hit]
        r = weight[hit] * np.linalg.norm(step, axis=1)
        shrink = np.where(r > eta[hit], 1.0 - eta[hit] / np.where(r > 0, r, 1.0), 0.0)
        out[hit] = xb[hit] + shrink[:, None] * step
    return out


def _mm_step(x: np.ndarray, batch: np.ndarray, delta: float) -> np.ndarray:
    m, d = x.shape
    step = max(1, _DIFF_BUDGET // max(1, m * d))
    out = np.empty_like(x)
    for start in range(0, m, step):
        rows = np.arange(start, min(m, start + step))
        out[rows] = _update_block(x, rows, batch, delta)
    return out


def mm_update_point(i: int, current, batch, config: OptimizerConfig) -> np.ndarray:
    """Closed-form majorize-minimize update of point ``i`` given the others."""
    x = as_points(current)
    y = np.asarray(batch, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.size == 0:
        raise ValueError("empty batch")
    return _update_block(x, np.array([i]), y, config.distance_floor)[0]


def optimize(data, config: OptimizerConfig, init=None) -> tuple[np.ndarray, OptimizerTrace]:
    """Minimize the energy surrogate over ``config.n_points`` free points.

    All points move simultaneously from the previous iterate. ``init``
    overrides the seeded draw of starting rows.
    """
    y = as_points(data)
    n = len(y)
    if config.n_points > n:
        raise ValueError(f"n_points {config.n_points} exceeds data size {n}")
    b = config.batch_for(n)
    resample = config.resample_for(n)
    _, batch_rng = _streams(config.seed)

    x = init_points(y, config) if init is None else as_points(init).copy()
    if x.shape != (config.n_points, y.shape[1]):
        raise ValueError(f"init must have shape {(config.n_points, y.shape[1])}, got {x.shape}")

    full_batch = b == n and not resample
    batch = y if b == n else y[np.sort(batch_rng.choice(n, size=b, replace=False))]
    trace = OptimizerTrace(surrogate_history=[energy_surrogate(x, y)])
    for it in range(1, config.max_iters + 1):
        if resample:
            batch = y[np.sort(batch_rng.choice(n, size=b, replace=False))]
        x_new = _mm_step(x, batch, config.distance_floor)
        move = float(np.max(np.abs(x_new - x)))
        x = x_new
        trace.iterations = it
        trace.final_max_move = move
        if full_batch or it % 10 == 0:
            trace.surrogate_history.append(energy_surrogate(x, y))
        if move < config.tol:
            trace.converged = True
            break
    logger.debug("optimize: m=%d n=%d batch=%d iters=%d converged=%s", config.n_points, n, b,
                 trace.iterations, trace.converged)
    return x, trace
