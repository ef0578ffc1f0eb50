"""Energy distance between point sets and the support-point surrogate.

All sums are taken row by row (each row reduced with numpy's pairwise
summation), then the row totals are reduced the same way. Row totals do not
depend on the block size, so results are reproducible for a given platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

_BLOCK_ROWS = 1024


@dataclass(frozen=True)
class EnergyValue:
    """Energy distance split into its three mean-distance terms.

    ``value = attraction - repulsion - constant`` where attraction is twice
    the mean candidate-to-data distance, repulsion the mean candidate
    self-distance and constant the mean data self-distance.
    """

    value: float
    attraction: float
    repulsion: float
    constant: float

    def as_dict(self) -> dict:
        return {"value": self.value, "attraction": self.attraction,
                "repulsion": self.repulsion, "constant": self.constant}


def as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError(f"point set must be a non-empty (m, d) array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point set contains non-finite values")
    return x


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")


def distance_row_sums(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``out[i] = sum_k ||a[i] - b[k]||``, computed in row blocks."""
    out = np.empty(a.shape[0])
    for start in range(0, a.shape[0], _BLOCK_ROWS):
        block = a[start:start + _BLOCK_ROWS]
        out[start:start + len(block)] = cdist(block, b).sum(axis=1)
    return out


def mean_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(distance_row_sums(a, b).sum()) / (a.shape[0] * b.shape[0])


def _terms(candidate, data) -> tuple[float, float]:
    x = as_points(candidate)
    y = as_points(data)
    _check_dims(x, y)
    return 2.0 * mean_distance(x, y), mean_distance(x, x)


def energy_surrogate(candidate, data) -> float:
    """Data-constant-free objective minimized by support points."""
    attraction, repulsion = _terms(candidate, data)
    return attraction - repulsion


def energy_distance_full(candidate, data) -> EnergyValue:
    """V-statistic energy distance between two empirical distributions."""
    attraction, repulsion = _terms(candidate, data)
    y = as_points(data)
    constant = mean_distance(y, y)
    value = (attraction - repulsion) - constant
    return EnergyValue(value, attraction, repulsion, constant)
