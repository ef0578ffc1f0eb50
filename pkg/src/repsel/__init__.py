"""Representative validation-subset selection with support points (SPNN)."""

from repsel.dataset import DataError, Dataset, Standardizer, fit_standardizer, load_csv, split_by_class
from repsel.energy import EnergyValue, energy_distance_full, energy_surrogate
from repsel.optimizer import OptimizerConfig, OptimizerTrace, init_points, mm_update_point, optimize
from repsel.spnn import (
    SelectionResult,
    allocate_stratified,
    resolve_nv,
    select_random,
    select_spnn,
    snap_to_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Dataset",
    "EnergyValue",
    "OptimizerConfig",
    "OptimizerTrace",
    "SelectionResult",
    "Standardizer",
    "allocate_stratified",
    "energy_distance_full",
    "energy_surrogate",
    "fit_standardizer",
    "init_points",
    "load_csv",
    "mm_update_point",
    "optimize",
    "resolve_nv",
    "select_random",
    "select_spnn",
    "snap_to_dataset",
    "split_by_class",
]
