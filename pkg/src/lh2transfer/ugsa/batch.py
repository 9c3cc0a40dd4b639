"""Mapping UGSA samples onto scenarios and running them in batches."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .. import props
from ..config import ScenarioConfig
from ..equipment import overall_U_for_bor
from ..sim.analysis import KpiRecord, kpi_record, simulate


def tank_U_for_bor(config: ScenarioConfig, tank: str, bor: float) -> float:
    """Overall U that gives ``bor`` %/day for the named tank at its pressure."""
    sec = getattr(config, tank)
    pressure = sec.pressure_setpoint if tank == "onshore" else sec.max_working_pressure
    sat = props.sat_point(pressure)
    return overall_U_for_bor(sec.volume, bor, fluid_T=sat.temperature, ambient_T=sec.ambient_T,
                             rho=sat.liquid.density, latent_heat=sat.latent_heat)


def apply_sample(config: ScenarioConfig, names: Iterable[str], values: Iterable[float]) -> ScenarioConfig:
    """Scenario for one sample row, run at the campaign's communication interval.

    ``pipe.roughness`` sets both pipes; ``<tank>.bor`` is converted to the
    tank's overall heat transfer coefficient after all other values are set.
    """
    direct = {"run.comm_interval": config.ugsa.comm_interval}
    bors = {}
    for name, v in zip(names, values):
        v = float(v)
        if name == "pipe.roughness":
            direct["lh2_pipe.roughness"] = v
            direct["vapor_pipe.roughness"] = v
        elif name.endswith(".bor"):
            bors[name.split(".")[0]] = v
        else:
            direct[name] = v
    cfg = config.replace(**direct)
    if bors:
        cfg = cfg.replace(**{f"{tank}.overall_U": tank_U_for_bor(cfg, tank, bor)
                             for tank, bor in bors.items()})
    return cfg


@dataclass(frozen=True)
class BatchResult:
    index: int
    values: tuple[float, ...]
    record: KpiRecord | None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.record is not None


def run_sample(config: ScenarioConfig, names, index: int, values) -> BatchResult:
    values = tuple(float(v) for v in values)
    try:
        rec = kpi_record(simulate(apply_sample(config, names, values)))
        if not rec.completed:
            return BatchResult(index, values, None, "time limit reached before the stop event")
        return BatchResult(index, values, rec)
    except Exception as exc:  # recorded per sample, the batch continues
        return BatchResult(index, values, None, f"{type(exc).__name__}: {exc}")


def _run_packed(args):
    return run_sample(*args)


def run_batch(samples: np.ndarray, names, config: ScenarioConfig, indices=None, workers: int = 1,
              on_result: Callable[[BatchResult], None] | None = None) -> list[BatchResult]:
    """Simulate every sample row; results come back sorted by sample index.

    ``indices`` restricts the run to a subset (used to resume a campaign);
    ``on_result`` is called in the parent process as each sample finishes.
    """
    samples = np.asarray(samples, dtype=float)
    names = tuple(names)
    if indices is None:
        indices = range(samples.shape[0])
    jobs = [(config, names, int(i), samples[i]) for i in indices]
    out = []
    if workers <= 1:
        results = map(_run_packed, jobs)
        for r in results:
            out.append(r)
            if on_result:
                on_result(r)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for r in pool.map(_run_packed, jobs, chunksize=max(1, len(jobs) // (8 * workers))):
                out.append(r)
                if on_result:
                    on_result(r)
    return sorted(out, key=lambda r: r.index)
