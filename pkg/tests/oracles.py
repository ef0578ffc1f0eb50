"""Independent reference computations used to freeze expected values.

Plain-Python loops only; nothing here imports the package internals it checks.
"""

import itertools
import math


def naive_energy_terms(candidate, data):
    """(attraction, repulsion, constant) by explicit double loops."""
    cand = [list(map(float, p)) for p in candidate]
    dat = [list(map(float, p)) for p in data]
    m, n = len(cand), len(dat)
    cross = sum(math.dist(a, b) for a in cand for b in dat)
    self_c = sum(math.dist(a, b) for a in cand for b in cand)
    self_d = sum(math.dist(a, b) for a in dat for b in dat)
    return 2.0 * cross / (m * n), self_c / m ** 2, self_d / n ** 2


def naive_surrogate(candidate, data):
    a, r, _ = naive_energy_terms(candidate, data)
    return a - r


def grid_min_two_points(data_1d, resolution=200):
    """Minimum surrogate over all two-point configurations on a uniform grid."""
    lo, hi = min(data_1d), max(data_1d)
    grid = [lo + (hi - lo) * k / (resolution - 1) for k in range(resolution)]
    n = len(data_1d)
    # attraction sum for one point, precomputed per grid node
    pull = [sum(abs(g - y) for y in data_1d) for g in grid]
    best = math.inf
    for i, j in itertools.product(range(resolution), repeat=2):
        val = (pull[i] + pull[j]) / n - 2.0 * abs(grid[i] - grid[j]) / 4.0
        best = min(best, val)
    return best


def greedy_snap(support, rows, row_ids):
    """Greedy unique nearest-row assignment from a full distance table."""
    table = [[math.dist(s, r) for r in rows] for s in support]
    taken = set()
    out = []
    for dists in table:
        cands = [(d, rid, k) for k, (d, rid) in enumerate(zip(dists, row_ids)) if k not in taken]
        d, rid, k = min(cands)
        taken.add(k)
        out.append(rid)
    return out


def penalized_nll(w, b, xs, ys, lam):
    total = 0.0
    for x, y in zip(xs, ys):
        z = w * x + b
        total += math.log1p(math.exp(-abs(z))) + max(z, 0.0) - y * z
    return total + 0.5 * lam * w * w


def grid_logistic_1d(xs, ys, lam, center=(0.0, 0.0), half=8.0, points=81, levels=12):
    """Zooming grid search for the 1-feature ridge logistic optimum."""
    cw, cb = center
    for _ in range(levels):
        step = 2 * half / (points - 1)
        best = None
        for i in range(points):
            for j in range(points):
                w = cw - half + i * step
                b = cb - half + j * step
                v = penalized_nll(w, b, xs, ys, lam)
                if best is None or v < best[0]:
                    best = (v, w, b)
        _, cw, cb = best
        half = 4 * step
    return cw, cb
