"""Uncertainty and global sensitivity analysis."""

from .batch import BatchResult, apply_sample, run_batch, run_sample, tank_U_for_bor
from .estimators import IndexResult, class_count, delta_indices, s1_indices, sensitivity_indices
from .sampling import Parameter, ParameterSpace, SampleMatrix, lhs_sample
from .stats import KPIS, KpiSummary, histogram, kpi_statistics

__all__ = [
    "BatchResult", "IndexResult", "KPIS", "KpiSummary", "Parameter", "ParameterSpace",
    "SampleMatrix", "apply_sample", "class_count", "delta_indices", "histogram",
    "kpi_statistics", "lhs_sample", "run_batch", "run_sample", "s1_indices",
    "sensitivity_indices", "tank_U_for_bor",
]
