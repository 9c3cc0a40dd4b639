"""Given-data sensitivity indices: moment-independent delta and first order.

Both estimators share one partition of each input into equal-frequency
classes. Delta compares kernel density estimates of the output with its
class-conditional densities; the first-order index is the between-class
variance of the class means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import gaussian_kde

MAX_CLASSES = 48
MIN_PER_CLASS = 10
GRID_POINTS = 512


def class_count(n: int) -> int:
    """Number of equal-frequency classes for ``n`` samples.

    Heuristic ``ceil(n ** (2 / (7 + tanh((1500 - n) / 500))))``, kept to at
    least ``MIN_PER_CLASS`` samples per class and at most ``MAX_CLASSES``.
    """
    m = math.ceil(n ** (2.0 / (7.0 + math.tanh((1500.0 - n) / 500.0))))
    return int(max(1, min(m, MAX_CLASSES, n // MIN_PER_CLASS)))


def class_edges(x: np.ndarray, m: int) -> np.ndarray:
    """Inner boundaries of ``m`` equal-frequency classes of ``x``."""
    xs = np.sort(x)
    n = xs.size
    cuts = (np.arange(1, m) * n) // m
    return 0.5 * (xs[cuts - 1] + xs[cuts])


def _labels(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    return np.stack([np.searchsorted(e, X[:, i], side="right") for i, e in enumerate(edges)], axis=1)


def _density(data: np.ndarray, grid: np.ndarray, bw: float | None = None) -> np.ndarray:
    if data.size < 2 or np.ptp(data) == 0.0:
        # a point mass: smooth with the unconditional bandwidth
        h = bw if bw else 1.0
        z = (grid[:, None] - data[None, :]) / h
        return np.exp(-0.5 * z * z).sum(axis=1) / (data.size * h * math.sqrt(2.0 * math.pi))
    return gaussian_kde(data, bw_method="scott")(grid)


def _kde_bandwidth(y: np.ndarray) -> float:
    return float(np.std(y, ddof=1) * y.size ** (-0.2))


def _delta_s1(X, y, labels, m):
    """Point estimates of delta and S1 for every column of X."""
    n, d = X.shape
    bw = _kde_bandwidth(y)
    grid = np.linspace(y.min() - 3.0 * bw, y.max() + 3.0 * bw, GRID_POINTS)
    f = _density(y, grid, bw)
    var = np.var(y)
    ybar = y.mean()
    delta = np.zeros(d)
    s1 = np.zeros(d)
    for i in range(d):
        lab = labels[:, i]
        for c in range(m):
            sel = lab == c
            nc = int(sel.sum())
            if nc == 0:
                continue
            yc = y[sel]
            fc = _density(yc, grid, bw)
            delta[i] += nc / n * np.trapezoid(np.abs(f - fc), grid)
            s1[i] += nc / n * (yc.mean() - ybar) ** 2
        delta[i] *= 0.5
        s1[i] /= var
    return delta, s1


@dataclass(frozen=True)
class IndexResult:
    """Per-parameter indices with percentile bootstrap confidence bounds."""

    names: tuple[str, ...]
    delta: np.ndarray
    delta_low: np.ndarray
    delta_high: np.ndarray
    s1: np.ndarray
    s1_low: np.ndarray
    s1_high: np.ndarray
    classes: int
    resamples: int
    degenerate: bool = False

    def rows(self):
        for k, name in enumerate(self.names):
            yield (name, self.delta[k], self.delta_low[k], self.delta_high[k],
                   self.s1[k], self.s1_low[k], self.s1_high[k])

    def rank(self, which: str = "delta") -> list[str]:
        vals = getattr(self, which)
        return [self.names[k] for k in np.argsort(-vals, kind="stable")]


def _canonical(X, y):
    # bootstrap draws are taken on rows in a fixed order so that shuffling
    # the input rows leaves the confidence bounds unchanged
    order = np.lexsort(np.column_stack([X, y]).T[::-1])
    return X[order], y[order]


def sensitivity_indices(X, y, names=None, resamples: int = 100, seed: int = 0,
                        classes: int | None = None, level: float = 0.95) -> IndexResult:
    """Delta and first-order indices of ``y`` with respect to each column of ``X``.

    Class boundaries come from the full sample and stay fixed in the
    bootstrap; each resample draws rows with replacement.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be (n, d) with n matching y")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("X and y must be finite (drop failed samples first)")
    n, d = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(d))
    m = classes or class_count(n)
    if np.ptp(y) == 0.0:
        z = np.zeros(d)
        return IndexResult(names, z, z, z, z, z, z, m, resamples, True)
    X, y = _canonical(X, y)
    edges = [class_edges(X[:, i], m) for i in range(d)]
    labels = _labels(X, edges)
    delta, s1 = _delta_s1(X, y, labels, m)
    rng = np.random.default_rng(seed)
    boot_d = np.empty((resamples, d))
    boot_s = np.empty((resamples, d))
    for b in range(resamples):
        idx = rng.integers(0, n, n)
        yb = y[idx]
        if np.ptp(yb) == 0.0:
            boot_d[b] = 0.0
            boot_s[b] = 0.0
            continue
        boot_d[b], boot_s[b] = _delta_s1(X[idx], yb, labels[idx], m)
    a = 100.0 * (1.0 - level) / 2.0
    dl, dh = np.percentile(boot_d, [a, 100.0 - a], axis=0) if resamples else (delta, delta)
    sl, sh = np.percentile(boot_s, [a, 100.0 - a], axis=0) if resamples else (s1, s1)
    return IndexResult(names, delta, dl, dh, s1, sl, sh, m, resamples)


def delta_indices(X, y, names=None, resamples: int = 100, seed: int = 0):
    """``(delta, low, high)`` per column; see :func:`sensitivity_indices`."""
    r = sensitivity_indices(X, y, names, resamples, seed)
    return r.delta, r.delta_low, r.delta_high


def s1_indices(X, y, names=None, resamples: int = 100, seed: int = 0):
    """``(S1, low, high)`` per column; see :func:`sensitivity_indices`."""
    r = sensitivity_indices(X, y, names, resamples, seed)
    return r.s1, r.s1_low, r.s1_high
