"""Parameter spaces and Latin hypercube designs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc


@dataclass(frozen=True)
class Parameter:
    name: str
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"{self.name}: low must be below high")


@dataclass(frozen=True)
class ParameterSpace:
    """Independent uniform parameters."""

    parameters: tuple[Parameter, ...]

    @classmethod
    def from_config(cls, entries) -> "ParameterSpace":
        return cls(tuple(Parameter(e["name"], float(e["low"]), float(e["high"])) for e in entries))

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([p.low for p in self.parameters]),
                np.array([p.high for p in self.parameters]))

    def __len__(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class SampleMatrix:
    values: np.ndarray  # (n, d), physical units
    names: tuple[str, ...]
    seed: int
    scheme: str = "latin-hypercube"

    def __len__(self) -> int:
        return self.values.shape[0]

    def row(self, i: int) -> dict[str, float]:
        return dict(zip(self.names, map(float, self.values[i])))


def lhs_sample(space: ParameterSpace, n: int, seed: int) -> SampleMatrix:
    """Latin hypercube design with one point per equal-probability stratum.

    Points are placed at random inside their strata and the strata are
    permuted independently per dimension.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    unit = qmc.LatinHypercube(d=len(space), seed=np.random.default_rng(seed)).random(n)
    lo, hi = space.bounds
    return SampleMatrix(qmc.scale(unit, lo, hi), tuple(space.names), int(seed))
