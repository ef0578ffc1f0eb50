"""Stratified validation-subset selection: support points snapped to data rows."""

from __future__ import annotations

import csv
import json
import math
import numbers
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from repsel.dataset import DataError, Dataset, Standardizer, fit_standardizer, split_by_class
from repsel.energy import EnergyValue, as_points, energy_distance_full
from repsel.optimizer import OptimizerConfig, optimize


@dataclass
class SelectionResult:
    validation_ids: tuple
    per_class_allocation: dict
    per_class_energy: dict
    method: str
    seed: int
    per_class_iterations: dict = field(default_factory=dict)
    per_class_converged: dict = field(default_factory=dict)

    @property
    def nv(self) -> int:
        return len(self.validation_ids)

    @property
    def iterations(self) -> Optional[int]:
        if not self.per_class_iterations:
            return None
        return int(sum(self.per_class_iterations.values()))

    @property
    def converged(self) -> Optional[bool]:
        if not self.per_class_converged:
            return None
        return all(self.per_class_converged.values())

    def report(self) -> dict:
        per_class = {}
        for c, count in self.per_class_allocation.items():
            entry = {"count": count}
            if c in self.per_class_energy:
                entry["energy"] = self.per_class_energy[c].as_dict()
            if c in self.per_class_iterations:
                entry["iterations"] = self.per_class_iterations[c]
                entry["converged"] = self.per_class_converged[c]
            per_class[str(c)] = entry
        return {"method": self.method, "seed": self.seed, "nv": self.nv, "per_class": per_class,
                "iterations": self.iterations, "converged": self.converged}

    def write_ids(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("row_id\n")
            for r in self.validation_ids:
                fh.write(f"{r}\n")

    def write_report(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.report(), fh, indent=2, sort_keys=False)
            fh.write("\n")


def read_ids(path) -> list[int]:
    """Parse a ``row_id`` CSV; rejects duplicates and non-integer entries."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read ids file {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "row_id":
            raise DataError(f"{path}: expected header 'row_id'")
        ids = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or not cells[0].strip():
                continue
            try:
                ids.append(int(cells[0]))
            except ValueError:
                raise DataError(f"{path}: line {lineno}: not an integer row id: {cells[0]!r}") from None
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise DataError(f"{path}: duplicate row ids {dupes}")
    return ids


def resolve_nv(n: int, ratio_or_nv) -> int:
    """Integers are counts; floats are fractions of ``n`` rounded half up."""
    if isinstance(ratio_or_nv, numbers.Integral) and not isinstance(ratio_or_nv, bool):
        nv = int(ratio_or_nv)
    else:
        ratio = float(ratio_or_nv)
        if not 0 < ratio <= 1:
            raise DataError(f"ratio must lie in (0, 1], got {ratio}")
        # decimal value of the ratio, so 0.35 * 90 is 31.5 and not 31.4999...
        nv = math.floor(Fraction(repr(ratio)) * n + Fraction(1, 2))
    if nv < 1:
        raise DataError(f"resolved validation size is {nv}; need at least 1")
    if nv > n:
        raise DataError(f"validation size {nv} exceeds dataset size {n}")
    return nv


def allocate_stratified(total_nv: int, class_counts: dict) -> dict:
    """Largest-remainder apportionment of ``total_nv`` across classes.

    Exact integer arithmetic. Leftover units go to the largest fractional
    quotas, ties broken by larger class then class order. When some class
    ends at zero it takes one unit from the class with the largest surplus
    over its quota.
    """
    if not class_counts:
        raise DataError("no classes to allocate over")
    if any(c < 1 for c in class_counts.values()):
        raise DataError("every class needs at least one row")
    classes = sorted(class_counts)
    n = sum(class_counts.values())
    if total_nv > n:
        raise DataError(f"validation size {total_nv} exceeds dataset size {n}")
    if total_nv < len(classes):
        raise DataError(f"validation size {total_nv} is smaller than the number of classes {len(classes)}")

    alloc = {c: total_nv * class_counts[c] // n for c in classes}
    rem = {c: total_nv * class_counts[c] % n for c in classes}
    order = sorted(classes, key=lambda c: (-rem[c], -class_counts[c], classes.index(c)))
    for c in order[:total_nv - sum(alloc.values())]:
        alloc[c] += 1

    for c in classes:
        if alloc[c] == 0:
            # surplus over quota, scaled by n to stay integral
            donor = max((d for d in classes if alloc[d] > 1),
                        key=lambda d: (alloc[d] * n - total_nv * class_counts[d], class_counts[d],
                                       -classes.index(d)))
            alloc[donor] -= 1
            alloc[c] = 1
    return alloc


def snap_to_dataset(support, data: Dataset, standardizer: Standardizer) -> list[int]:
    """Greedy nearest-row matching in support-point order, no row reused.

    Distances are Euclidean in standardized space; ties go to the lowest
    row_id.
    """
    s = as_points(support)
    if len(s) > len(data):
        raise ValueError(f"{len(s)} support points but only {len(data)} rows")
    order = np.argsort(data.row_ids, kind="stable")
    z = standardizer.transform(data.features)[order]
    ids = data.row_ids[order]
    dist = cdist(s, z)
    taken = np.zeros(len(z), dtype=bool)
    out = []
    for i in range(len(s)):
        row = np.where(taken, np.inf, dist[i])
        j = int(np.argmin(row))
        taken[j] = True
        out.append(int(ids[j]))
    return out


def _class_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(k,)).generate_state(1, np.uint64)[0])


def _split_for(data: Dataset, ratio_or_nv):
    groups = split_by_class(data)
    if not 1 <= len(groups) <= 2:
        raise DataError(f"selection supports one or two classes, got {len(groups)}")
    nv = resolve_nv(len(data), ratio_or_nv)
    alloc = allocate_stratified(nv, {c: len(g) for c, g in groups.items()})
    return groups, alloc


def _energy(data: Dataset, ids, standardizer: Standardizer) -> EnergyValue:
    z = standardizer.transform(data.features)
    return energy_distance_full(standardizer.transform(data.select_ids(ids).features), z)


def select_spnn(data: Dataset, ratio_or_nv, config: Optional[OptimizerConfig] = None,
                standardizer: Optional[Standardizer] = None) -> SelectionResult:
    """Per-class support points snapped to the nearest unclaimed rows."""
    config = config or OptimizerConfig(n_points=1)
    standardizer = standardizer or fit_standardizer(data)
    groups, alloc = _split_for(data, ratio_or_nv)
    ids, energy, iters, conv = [], {}, {}, {}
    for k, (c, group) in enumerate(groups.items()):
        m = alloc[c]
        if m == len(group):
            chosen = group.row_ids.tolist()
            iters[c], conv[c] = 0, True
        else:
            z = standardizer.transform(group.features)
            cfg = replace(config, n_points=m, seed=_class_seed(config.seed, k))
            support, trace = optimize(z, cfg)
            chosen = snap_to_dataset(support, group, standardizer)
            iters[c], conv[c] = trace.iterations, trace.converged
        energy[c] = _energy(group, chosen, standardizer)
        ids.extend(chosen)
    return SelectionResult(tuple(sorted(ids)), alloc, energy, "spnn", int(config.seed), iters, conv)


def select_random(data: Dataset, ratio_or_nv, seed: int = 0,
                  standardizer: Optional[Standardizer] = None, with_energy: bool = True) -> SelectionResult:
    """Stratified uniform draw without replacement."""
    groups, alloc = _split_for(data, ratio_or_nv)
    if with_energy:
        standardizer = standardizer or fit_standardizer(data)
    rng = np.random.default_rng(int(seed))
    ids, energy = [], {}
    for c, group in groups.items():
        chosen = np.sort(group.row_ids[rng.choice(len(group), size=alloc[c], replace=False)]).tolist()
        if with_energy:
            energy[c] = _energy(group, chosen, standardizer)
        ids.extend(chosen)
    return SelectionResult(tuple(sorted(ids)), alloc, energy, "random", int(seed))
