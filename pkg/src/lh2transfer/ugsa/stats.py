"""Histograms and summary statistics of campaign KPIs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import skew

KPIS = ("relative_bog", "relative_power", "mean_bog_flow", "max_bog_flow", "filling_time")


@dataclass(frozen=True)
class KpiSummary:
    name: str
    mean: float
    minimum: float
    maximum: float
    std: float
    skewness: float
    counts: np.ndarray
    edges: np.ndarray
    exceed: dict = field(default_factory=dict)


def histogram(values, bins: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Counts and edges; identical values collapse into a single bin."""
    v = np.asarray(values, dtype=float)
    if np.ptp(v) == 0.0:
        return np.array([v.size]), np.array([v[0], v[0]])
    return np.histogram(v, bins=bins)


def kpi_statistics(records, bins: int = 50, thresholds: dict | None = None) -> dict[str, KpiSummary]:
    """Per-KPI histogram and summary over successful records.

    ``thresholds`` maps a KPI name to a list of levels; the summary counts
    the samples strictly above each level.
    """
    records = [r for r in records if r is not None]
    if not records:
        raise ValueError("no successful records")
    thresholds = thresholds or {"max_bog_flow": [0.5]}
    out = {}
    for name in KPIS:
        v = np.array([getattr(r, name) for r in records], dtype=float)
        counts, edges = histogram(v, bins)
        out[name] = KpiSummary(
            name=name, mean=float(v.mean()), minimum=float(v.min()), maximum=float(v.max()),
            std=float(v.std()), skewness=float(skew(v)) if np.ptp(v) > 0 else 0.0,
            counts=counts, edges=edges,
            exceed={float(t): int(np.sum(v > t)) for t in thresholds.get(name, [])},
        )
    return out
