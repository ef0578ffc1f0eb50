"""Evaluation protocol for validation splits.

A ridge-penalized logistic classifier is scored three ways: leave-one-out on
the full data (the reference), hold-out on a selected validation subset, and
leave-one-out on the matching learning subset. Random stratified splits give
percentile confidence intervals to compare against.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from repsel.dataset import DataError, Dataset, fit_standardizer
from repsel.optimizer import OptimizerConfig
from repsel.spnn import resolve_nv, select_random, select_spnn

DEFAULT_RIDGE = 1e-3
DEFAULT_RATIOS = (0.1, 0.15, 0.2, 0.25, 0.35, 0.5, 0.66)
MIN_REPLICATES = 20

GRAD_TOL = 1e-8
MAX_NEWTON_ITERS = 200

TABLE_COLUMNS = (
    "ratio", "nv", "eps_ref", "tau_ref", "eps_spnn_val", "tau_spnn_val",
    "eps_spnn_lootrain", "tau_spnn_lootrain", "eps_rand_lo", "eps_rand_hi",
    "tau_rand_lo", "tau_rand_hi", "eps_randloo_lo", "eps_randloo_hi",
    "tau_randloo_lo", "tau_randloo_hi",
)


def n_workers() -> int:
    """Worker cap from ``REPSEL_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("REPSEL_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise DataError(f"REPSEL_THREADS must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


def _pmap(fn, items) -> list:
    items = list(items)
    workers = min(n_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def positive_class(labels, positive=None):
    """Resolve the positive label: explicit, else ``1`` if present, else the last class."""
    classes = sorted(np.unique(labels).tolist())
    if positive is not None:
        matches = [c for c in classes if c == positive or str(c) == str(positive)]
        if not matches:
            raise DataError(f"positive label {positive!r} not among classes {classes}")
        return matches[0]
    if 1 in classes:
        return 1
    return classes[-1]


def binary_targets(labels, positive) -> np.ndarray:
    return (np.asarray(labels) == positive).astype(float)


@dataclass(frozen=True)
class LogisticModel:
    coefficients: np.ndarray
    intercept: float
    ridge_lambda: float
    threshold: float = 0.5
    positive: object = 1
    iterations: int = 0
    converged: bool = True

    def decision_function(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.coefficients + self.intercept

    def predict_proba(self, x) -> np.ndarray:
        z = self.decision_function(x)
        return np.exp(-np.logaddexp(0.0, -z))

    def predict(self, x) -> np.ndarray:
        """1 for the positive class; a probability equal to the threshold is negative."""
        return (self.predict_proba(x) > self.threshold).astype(np.int64)


def _objective(beta, xt, y, lam) -> float:
    z = xt @ beta
    return float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * lam * beta[:-1] @ beta[:-1])


def fit_logistic(train: Dataset, ridge_lambda: float = DEFAULT_RIDGE, positive=None,
                 threshold: float = 0.5, init: Optional[np.ndarray] = None) -> LogisticModel:
    """Ridge-penalized maximum likelihood by damped Newton iterations.

    Minimizes ``sum_i NLL_i + lambda/2 ||w||^2`` with the intercept left
    unpenalized. Stops once the gradient max-norm drops below 1e-8 or after
    200 iterations. ``init`` is a warm start ``(w..., b)``.
    """
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be nonnegative")
    if len(np.unique(train.labels)) < 2:
        raise DataError("logistic fit needs both classes in the training data")
    positive = positive_class(train.labels, positive)
    y = binary_targets(train.labels, positive)
    xt = np.hstack([train.features, np.ones((len(train), 1))])
    p = xt.shape[1]
    penalty = np.full(p, float(ridge_lambda))
    penalty[-1] = 0.0

    beta = np.zeros(p) if init is None else np.array(init, dtype=float)
    if init is None:
        frac = y.mean()
        beta[-1] = math.log(frac / (1.0 - frac))
    f = _objective(beta, xt, y, ridge_lambda)
    converged = False
    steps = 0
    while steps < MAX_NEWTON_ITERS:
        prob = np.exp(-np.logaddexp(0.0, -(xt @ beta)))
        grad = xt.T @ (prob - y) + penalty * beta
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        hess = (xt * (prob * (1.0 - prob))[:, None]).T @ xt + np.diag(penalty)
        try:
            direction = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            direction = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        slope = float(grad @ direction)
        if not slope < 0:
            direction, slope = -grad, -float(grad @ grad)
        step = 1.0
        f_new = _objective(beta + direction, xt, y, ridge_lambda)
        if -slope > 1e-12 * max(1.0, abs(f)):
            # Armijo backtracking; below that predicted decrease the change
            # is not resolvable in f and the plain Newton step is taken
            for _ in range(60):
                if f_new <= f + 1e-4 * step * slope:
                    break
                step *= 0.5
                f_new = _objective(beta + step * direction, xt, y, ridge_lambda)
            else:
                break
        beta = beta + step * direction
        f = f_new
        steps += 1
    return LogisticModel(beta[:-1].copy(), float(beta[-1]), float(ridge_lambda), threshold,
                         positive, steps, converged)


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fn: int
    fp: int
    tn: int
    source: str

    @classmethod
    def from_predictions(cls, truth, predicted, source: str) -> "MetricsReport":
        truth = np.asarray(truth).astype(bool)
        predicted = np.asarray(predicted).astype(bool)
        return cls(int(np.sum(truth & predicted)), int(np.sum(truth & ~predicted)),
                   int(np.sum(~truth & predicted)), int(np.sum(~truth & ~predicted)), source)

    @property
    def n_evaluated(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def error_fraction(self) -> Fraction:
        return Fraction(self.fp + self.fn, self.n_evaluated)

    @property
    def sensitivity_defined(self) -> bool:
        return self.tp + self.fn > 0

    @property
    def sensitivity_fraction(self) -> Optional[Fraction]:
        if not self.sensitivity_defined:
            return None
        return Fraction(self.tp, self.tp + self.fn)

    @property
    def error_rate(self) -> float:
        return float(self.error_fraction)

    @property
    def sensitivity(self) -> Optional[float]:
        """``None`` when there are no positives to score."""
        s = self.sensitivity_fraction
        return None if s is None else float(s)

    def as_dict(self) -> dict:
        return {"eps": self.error_rate, "tau": self.sensitivity,
                "tau_defined": self.sensitivity_defined, "n_evaluated": self.n_evaluated,
                "tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn, "source": self.source}


def loo_metrics(data: Dataset, ridge_lambda: float = DEFAULT_RIDGE, positive=None,
                source: str = "loo-full") -> MetricsReport:
    """Leave-one-out predictions aggregated into one confusion table."""
    counts = data.class_counts()
    if len(data) < 3 or len(counts) != 2 or min(counts.values()) < 2:
        raise DataError(f"leave-one-out needs N >= 3 and >= 2 rows in each of two classes, got {counts}")
    positive = positive_class(data.labels, positive)
    full = fit_logistic(data, ridge_lambda, positive)
    warm = np.append(full.coefficients, full.intercept)
    n = len(data)

    def fold(i):
        keep = np.r_[0:i, i + 1:n]
        model = fit_logistic(data.take(keep), ridge_lambda, positive, init=warm)
        return int(model.predict(data.features[i:i + 1])[0])

    predicted = _pmap(fold, range(n))
    truth = binary_targets(data.labels, positive)
    return MetricsReport.from_predictions(truth, predicted, source)


def holdout_metrics(train: Dataset, validation: Dataset, ridge_lambda: float = DEFAULT_RIDGE,
                    positive=None, source: str = "validation") -> MetricsReport:
    if len(validation) == 0:
        raise DataError("validation set is empty")
    positive = positive_class(np.concatenate([train.labels, validation.labels]), positive)
    model = fit_logistic(train, ridge_lambda, positive)
    truth = binary_targets(validation.labels, positive)
    return MetricsReport.from_predictions(truth, model.predict(validation.features), source)


@dataclass(frozen=True)
class BaselineCI:
    metric: str
    lower: float
    upper: float
    replicates: int
    point_estimates: tuple

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def percentile_ci(metric: str, values: Sequence[float], replicates: int) -> BaselineCI:
    values = tuple(float(v) for v in values)
    if not values:
        return BaselineCI(metric, math.nan, math.nan, replicates, values)
    lo, hi = np.percentile(np.array(values), [2.5, 97.5], method="linear")
    return BaselineCI(metric, float(lo), float(hi), replicates, values)


@dataclass(frozen=True)
class BaselineResult:
    """Random-split CIs for the validation sample and the LOO-learning sample."""

    validation: tuple
    loo_train: Optional[tuple]


def _replicate_seeds(seed: int, replicates: int) -> list[int]:
    children = np.random.SeedSequence(int(seed)).spawn(replicates)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def split(data: Dataset, validation_ids) -> tuple[Dataset, Dataset]:
    """(learning, validation) datasets for a set of validation row ids."""
    return data.drop_ids(validation_ids), data.select_ids(validation_ids)


def baseline_ci(data: Dataset, ratio, replicates: int = 200, seed: int = 0,
                ridge_lambda: float = DEFAULT_RIDGE, positive=None,
                include_loo: bool = True) -> BaselineResult:
    """Percentile 95% CIs of error rate and sensitivity over random stratified splits.

    Replicates with no positive in the scored sample are left out of the
    sensitivity CI.
    """
    if replicates < MIN_REPLICATES:
        raise ValueError(f"replicates must be >= {MIN_REPLICATES}, got {replicates}")
    positive = positive_class(data.labels, positive)

    def replicate(rep_seed):
        sel = select_random(data, ratio, rep_seed, with_energy=False)
        train, val = split(data, sel.validation_ids)
        out = [holdout_metrics(train, val, ridge_lambda, positive)]
        if include_loo:
            out.append(loo_metrics(train, ridge_lambda, positive, source="loo-train"))
        return out

    results = _pmap(replicate, _replicate_seeds(seed, replicates))

    def pair(k):
        reports = [r[k] for r in results]
        eps = percentile_ci("eps", [m.error_rate for m in reports], replicates)
        tau = percentile_ci("tau", [m.sensitivity for m in reports if m.sensitivity_defined], replicates)
        return eps, tau

    return BaselineResult(pair(0), pair(1) if include_loo else None)


def ratio_sweep(data: Dataset, ratios: Sequence[float] = DEFAULT_RATIOS,
                config: Optional[OptimizerConfig] = None, replicates: int = 200, seed: int = 0,
                ridge_lambda: float = DEFAULT_RIDGE, positive=None) -> list[dict]:
    """One comparison-table row per ratio: reference, SPNN and random-baseline metrics."""
    if replicates < MIN_REPLICATES:
        raise ValueError(f"replicates must be >= {MIN_REPLICATES}, got {replicates}")
    config = (config or OptimizerConfig(n_points=1)).with_(seed=int(seed))
    positive = positive_class(data.labels, positive)
    standardizer = fit_standardizer(data)
    ref = loo_metrics(data, ridge_lambda, positive)

    rows = []
    for ratio in ratios:
        nv = resolve_nv(len(data), float(ratio))
        sel = select_spnn(data, float(ratio), config, standardizer)
        train, val = split(data, sel.validation_ids)
        spnn_val = holdout_metrics(train, val, ridge_lambda, positive)
        spnn_loo = loo_metrics(train, ridge_lambda, positive, source="loo-train")
        base = baseline_ci(data, float(ratio), replicates, seed, ridge_lambda, positive)
        (e_r, t_r), (e_rl, t_rl) = base.validation, base.loo_train
        rows.append({
            "ratio": float(ratio), "nv": nv,
            "eps_ref": ref.error_rate, "tau_ref": ref.sensitivity,
            "eps_spnn_val": spnn_val.error_rate, "tau_spnn_val": spnn_val.sensitivity,
            "eps_spnn_lootrain": spnn_loo.error_rate, "tau_spnn_lootrain": spnn_loo.sensitivity,
            "eps_rand_lo": e_r.lower, "eps_rand_hi": e_r.upper,
            "tau_rand_lo": t_r.lower, "tau_rand_hi": t_r.upper,
            "eps_randloo_lo": e_rl.lower, "eps_randloo_hi": e_rl.upper,
            "tau_randloo_lo": t_rl.lower, "tau_randloo_hi": t_rl.upper,
        })
    return rows


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def write_table(rows: Sequence[dict], path) -> None:
    """Comparison table as CSV; undefined values are empty cells."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in TABLE_COLUMNS])


def read_table(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append({k: (int(v) if k == "nv" else (float(v) if v != "" else None)) for k, v in row.items()})
    return out


def toy_label(x1, x2):
    return (np.asarray(x1) ** 2 - np.asarray(x1) * np.asarray(x2) - np.asarray(x1) - 3 > 0).astype(np.int64)


def generate_toy(n: int = 100, seed: int = 0) -> Dataset:
    """Two uniform features on [-10, 10]; y = 1 iff x1^2 - x1 x2 - x1 - 3 > 0."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(int(seed))
    x = rng.uniform(-10.0, 10.0, size=(n, 2))
    return Dataset.from_arrays(x, toy_label(x[:, 0], x[:, 1]), ("x1", "x2"))


def generate_surrogate(n: int = 90, d: int = 25, n_positive: int = 44, seed: int = 0,
                       signal: float = 2.5, informative: int = 5) -> Dataset:
    """Synthetic stand-in for a small, wide, balanced binary problem.

    Correlated Gaussian covariates; the ``n_positive`` rows with the highest
    noisy linear score (from the first ``informative`` features) are
    positive, so the classes overlap.
    """
    if not 0 < n_positive < n:
        raise ValueError("n_positive must lie strictly between 0 and n")
    rng = np.random.default_rng(int(seed))
    mixing = np.eye(d) + 0.3 * rng.normal(size=(d, d)) / math.sqrt(d)
    x = rng.normal(size=(n, d)) @ mixing
    beta = np.zeros(d)
    beta[:informative] = signal * rng.choice([-1.0, 1.0], size=informative)
    score = x @ beta + rng.normal(size=n) * math.sqrt(informative)
    labels = np.zeros(n, dtype=np.int64)
    labels[np.argsort(-score, kind="stable")[:n_positive]] = 1
    return Dataset.from_arrays(x, labels, tuple(f"c{j + 1:02d}" for j in range(d)))
