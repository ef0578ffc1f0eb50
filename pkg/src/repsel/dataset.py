"""Tabular dataset ingestion, z-score standardization and class partitioning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised when input data violates the dataset contract."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled feature matrix.

    ``row_ids`` are stable identifiers into the original file and survive
    subsetting, so sub-datasets can always be mapped back to source rows.
    """

    features: np.ndarray
    labels: np.ndarray
    column_names: tuple[str, ...]
    row_ids: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {features.shape}")
        n, d = features.shape
        if d < 1:
            raise DataError("dataset needs at least one feature column")
        labels = np.asarray(self.labels)
        row_ids = np.asarray(self.row_ids, dtype=np.int64)
        if labels.shape != (n,) or row_ids.shape != (n,):
            raise DataError("labels and row_ids must be aligned with feature rows")
        if len(self.column_names) != d:
            raise DataError(f"expected {d} column names, got {len(self.column_names)}")
        if not np.all(np.isfinite(features)):
            raise DataError("features contain non-finite values")
        if len(np.unique(row_ids)) != n:
            raise DataError("row_ids must be unique")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "row_ids", _frozen(row_ids))
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @classmethod
    def from_arrays(cls, features, labels, column_names=None) -> "Dataset":
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        if column_names is None:
            column_names = [f"x{j + 1}" for j in range(features.shape[1])]
        return cls(features, np.asarray(labels), tuple(column_names), np.arange(len(features)))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def classes(self) -> list:
        return sorted(np.unique(self.labels).tolist())

    def class_counts(self) -> dict:
        values, counts = np.unique(self.labels, return_counts=True)
        return {v: int(c) for v, c in zip(values.tolist(), counts.tolist())}

    def take(self, positions) -> "Dataset":
        """Sub-dataset from positional indices; row_ids are preserved."""
        positions = np.asarray(positions, dtype=np.int64)
        return Dataset(self.features[positions], self.labels[positions], self.column_names,
                       self.row_ids[positions])

    def positions_of(self, row_ids) -> np.ndarray:
        lookup = {int(r): i for i, r in enumerate(self.row_ids)}
        try:
            return np.array([lookup[int(r)] for r in row_ids], dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"unknown row_id {exc.args[0]}") from None

    def select_ids(self, row_ids) -> "Dataset":
        return self.take(self.positions_of(row_ids))

    def drop_ids(self, row_ids) -> "Dataset":
        mask = np.ones(len(self), dtype=bool)
        mask[self.positions_of(row_ids)] = False
        return self.take(np.flatnonzero(mask))

    def to_csv(self, path, label_column: str = "y") -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([*self.column_names, label_column])
            for row, label in zip(self.features, self.labels):
                writer.writerow([repr(float(v)) for v in row] + [label])


@dataclass(frozen=True, eq=False)
class Standardizer:
    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(np.asarray(self.means, dtype=float)))
        object.__setattr__(self, "stddevs", _frozen(np.asarray(self.stddevs, dtype=float)))
        if np.any(self.stddevs <= 0):
            raise DataError("standardizer stddevs must be positive")

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.means) / self.stddevs

    def inverse_transform(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.stddevs + self.means


def _parse_label(values: Sequence[str]) -> np.ndarray:
    try:
        as_int = [int(v) for v in values]
    except ValueError:
        return np.array(values, dtype=object)
    return np.array(as_int, dtype=np.int64)


def load_csv(path, label_column: str) -> Dataset:
    """Read a headed CSV; every column but ``label_column`` must be numeric.

    Integer-valued labels are parsed as ints, anything else stays text.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or all(not h.strip() for h in header):
            raise DataError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        dupes = sorted({h for h in header if header.count(h) > 1})
        if dupes:
            raise DataError(f"{path}: duplicate header column(s) {dupes}")
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        feature_idx = [j for j in range(len(header)) if j != label_idx]
        if not feature_idx:
            raise DataError(f"{path}: no feature columns")

        rows, labels = [], []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise DataError(f"{path}: line {lineno} has {len(cells)} cells, expected {len(header)}")
            row = []
            for j in feature_idx:
                try:
                    v = float(cells[j])
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: row {lineno - 1} (line {lineno}), column {header[j]!r}: "
                        f"non-numeric or non-finite value {cells[j]!r}")
                row.append(v)
            rows.append(row)
            labels.append(cells[label_idx].strip())

    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    return Dataset(np.array(rows, dtype=float), _parse_label(labels),
                   tuple(header[j] for j in feature_idx), np.arange(len(rows)))


def fit_standardizer(data: Dataset) -> Standardizer:
    if len(data) < 2:
        raise DataError("standardizer needs at least 2 rows")
    means = data.features.mean(axis=0)
    stddevs = data.features.std(axis=0, ddof=1)
    # constant columns are centered only
    stddevs = np.where(stddevs > 0, stddevs, 1.0)
    return Standardizer(means, stddevs)


def split_by_class(data: Dataset) -> dict:
    return {c: data.take(np.flatnonzero(data.labels == c)) for c in data.classes}
