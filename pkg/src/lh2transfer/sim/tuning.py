"""Open-loop step tests on the assembled flowsheet and SIMC tuning report."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import ScenarioConfig
from ..control import PlantModel, TuningError, fit_fopdt, simc_tune
from . import kernel as K
from .flowsheet import LOOPS, ManualLoop, SimulationAbort, build_flowsheet, run_kernel

# per loop: measured channel, step size, test horizon [s]
_PV = {"fc": K.A_Q, "pc1": K.A_P_OT, "pc2": K.A_P_ST}
_STEP = {"fc": 0.02, "pc1": 0.05, "pc2": 0.05}
_STEP_FIXED_FC = 0.005
_HORIZON = {"fc": 60.0, "pc1": 600.0, "pc2": 600.0}
STEP_TIME = 10.0


@dataclass(frozen=True)
class TuningRow:
    loop: str
    mode: str
    gain: float
    time_constant: float
    dead_time: float
    controller_gain: float
    integral_time: float
    flagged: bool = False
    note: str = ""


def step_response(config: ScenarioConfig, loop: str, step: float | None = None,
                  horizon: float | None = None):
    """Deviation of the loop's measurement after a step in its output.

    All three loops are held in manual at their initial outputs; the same
    run without the step is subtracted, so drift of the integrating tank
    pressures cancels.
    """
    fs = build_flowsheet(config)
    base = {"fc": ManualLoop(fs.initial_output), "pc1": ManualLoop(0.0), "pc2": ManualLoop(0.0)}
    if step is None:
        step = _STEP_FIXED_FC if (loop == "fc" and fs.fixed_speed) else _STEP[loop]
    horizon = horizon or _HORIZON[loop]
    t_end = STEP_TIME + horizon
    (st0, n0, rec0, *_), _ = run_kernel(fs, base, time_limit=t_end)
    stepped = dict(base)
    stepped[loop] = ManualLoop(base[loop].output, STEP_TIME, step)
    (st1, n1, rec1, *_), _ = run_kernel(fs, stepped, time_limit=t_end)
    for st, rec in ((st0, rec0), (st1, rec1)):
        if st >= K.FAIL_FLASH_OT:
            raise SimulationAbort(st, rec[0, 0], np.zeros(1))
    n = min(n0, n1)
    t = rec0[:n, K.C_TIME]
    dy = rec1[:n, K.C_AUX + _PV[loop]] - rec0[:n, K.C_AUX + _PV[loop]]
    keep = t >= STEP_TIME
    return t[keep] - STEP_TIME, dy[keep], step


def identify(config: ScenarioConfig, loops=LOOPS) -> dict[str, PlantModel]:
    models = {}
    for loop in loops:
        t, dy, step = step_response(config, loop)
        models[loop] = fit_fopdt(t, dy, step)
    return models


def tuning_report(config: ScenarioConfig) -> list[TuningRow]:
    """Identify every loop in both pump modes and compute SIMC settings."""
    rows = []
    dt = config.run.comm_interval
    for mode in ("split-range", "fixed-speed"):
        cfg = config.replace(**{"control.mode": mode})
        loops = LOOPS if mode == "split-range" else ("fc",)
        for loop in loops:
            name = loop if mode == "split-range" else "fc_fixed"
            try:
                t, dy, step = step_response(cfg, loop)
                plant = fit_fopdt(t, dy, step)
            except TuningError as exc:
                rows.append(TuningRow(name, mode, np.nan, np.nan, np.nan, np.nan, np.nan, True, str(exc)))
                continue
            theta = plant.dead_time + 0.5 * dt
            tc = getattr(cfg.control, name).closed_loop_tc or theta
            pid = simc_tune(PlantModel(plant.gain, plant.time_constant, theta), tc)
            rows.append(TuningRow(name, mode, plant.gain, plant.time_constant, plant.dead_time,
                                  pid.gain, pid.integral_time))
    return rows
