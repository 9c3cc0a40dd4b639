"""Trajectories, key performance indicators, entropy bookkeeping and sweeps."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import props
from ..config import ScenarioConfig
from . import kernel as K
from .flowsheet import Flowsheet, SimulationAbort, build_flowsheet, run_kernel

# recorded channel name -> (column, unit); the order is the CSV column order
CHANNELS = {
    "time": (K.C_TIME, "s"),
    "p_onshore": (K.C_AUX + K.A_P_OT, "Pa"),
    "T_onshore": (K.C_AUX + K.A_T_OT, "K"),
    "p_seaborne": (K.C_AUX + K.A_P_ST, "Pa"),
    "T_seaborne": (K.C_AUX + K.A_T_ST, "K"),
    "liquid_volume_onshore": (K.C_AUX + K.A_VL_OT, "m3"),
    "liquid_volume_seaborne": (K.C_AUX + K.A_VL_ST, "m3"),
    "lh2_flow": (K.C_AUX + K.A_MDOT, "kg/s"),
    "lh2_volume_flow": (K.C_AUX + K.A_Q, "m3/h"),
    "bog_flow": (K.C_AUX + K.A_BOG, "kg/s"),
    "vapor_return_flow": (K.C_AUX + K.A_VR, "kg/s"),
    "p2": (K.C_AUX + K.A_P2, "Pa"),
    "h1": (K.C_AUX + K.A_H1, "J/kg"),
    "h2": (K.C_AUX + K.A_H2, "J/kg"),
    "p3": (K.C_AUX + K.A_P3, "Pa"),
    "h3": (K.C_AUX + K.A_H3, "J/kg"),
    "p4": (K.C_AUX + K.A_P4, "Pa"),
    "shaft_power": (K.C_AUX + K.A_POWER, "W"),
    "pump_efficiency": (K.C_AUX + K.A_ETA, "-"),
    "sgen_pump": (K.C_AUX + K.A_S_PUMP, "W/K"),
    "sgen_pipe": (K.C_AUX + K.A_S_PIPE, "W/K"),
    "sgen_valve": (K.C_AUX + K.A_S_VALVE, "W/K"),
    "heat_onshore": (K.C_AUX + K.A_Q_OT, "W"),
    "heat_seaborne": (K.C_AUX + K.A_Q_ST, "W"),
    "starved": (K.C_AUX + K.A_STARVED, "-"),
    "rho_pump_inlet": (K.C_AUX + K.A_RHO1, "kg/m3"),
    "valve_opening": (K.C_VALVE, "-"),
    "pump_speed": (K.C_SPEED, "Hz"),
    "vapor_return_opening": (K.C_VR_OPEN, "-"),
    "bog_opening": (K.C_BOG_OPEN, "-"),
    "fc_output": (K.C_U_FC, "-"),
    "mass_residual": (K.C_MASS, "-"),
    "energy_residual": (K.C_ENERGY_RES, "J"),
    "energy_turnover": (K.C_TURNOVER, "J"),
    "bog_mass": (K.C_ACC_BOG, "kg"),
    "shaft_energy": (K.C_ACC_W, "J"),
}


@dataclass
class Trajectory:
    """Recorded channels of one loading run, one row per communication interval."""

    config: ScenarioConfig
    records: np.ndarray
    status: int
    event_time: float
    final_state: np.ndarray
    flowsheet: Flowsheet | None = field(default=None, repr=False)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.records[:, CHANNELS[name][0]]

    def __len__(self) -> int:
        return self.records.shape[0]

    @property
    def time(self) -> np.ndarray:
        return self.records[:, K.C_TIME]

    @property
    def completed(self) -> bool:
        return self.status == K.RUN_EVENT

    @property
    def filling_time(self) -> float:
        """Time of the stop event, or the last recorded time if it never fired."""
        return self.event_time if self.completed else float(self.time[-1])

    def accumulated(self, offset: int) -> float:
        n = self.flowsheet.n_cells if self.flowsheet is not None else int(self.final_state.size - 4 - K.N_TAIL) // 2
        return float(self.final_state[K.Y_CELLS + 2 * n + offset])

    def table(self) -> tuple[list[str], np.ndarray]:
        """Column names and the matching 2-D array in CSV order."""
        names = list(CHANNELS)
        cols = [CHANNELS[n][0] for n in names]
        return names, self.records[:, cols]


def simulate(config: ScenarioConfig, flowsheet: Flowsheet | None = None) -> Trajectory:
    """Run one loading to the seaborne stop event (or the time limit).

    Raises :class:`SimulationAbort` when the integrator stops on a flash,
    property-range or step-size failure.
    """
    fs = flowsheet if flowsheet is not None else build_flowsheet(config)
    (status, n_rows, rec, y, t_end, event), _ = run_kernel(fs)
    if status >= K.FAIL_FLASH_OT:
        raise SimulationAbort(status, t_end, y)
    return Trajectory(fs.config, rec[:n_rows].copy(), int(status), float(event), y.copy(), fs)


# ---------------------------------------------------------------------------
# key performance indicators
# ---------------------------------------------------------------------------

def kpi_relative_bog(traj: Trajectory) -> float:
    """Liquefier-bound BOG over the run as wt% of the transferred mass."""
    mass = np.trapezoid(traj["bog_flow"], traj.time)
    return 100.0 * mass / (traj.config.kpi.transferred_mass_t * 1e3)


def kpi_relative_power(traj: Trajectory) -> float:
    """Accumulated pump shaft energy per transferred volume, kJ/m3."""
    energy = np.trapezoid(traj["shaft_power"], traj.time)
    return energy / 1e3 / traj.config.kpi.transferred_volume


@dataclass(frozen=True)
class KpiRecord:
    relative_bog: float  # wt%
    relative_power: float  # kJ/m3
    filling_time: float  # h
    mean_bog_flow: float  # kg/s
    max_bog_flow: float  # kg/s
    bog_mass: float  # kg
    shaft_energy: float  # J
    completed: bool
    mass_residual: float
    energy_residual: float  # fraction of turnover

    def to_dict(self) -> dict:
        return asdict(self)


def kpi_record(traj: Trajectory) -> KpiRecord:
    t = traj.time
    bog = traj["bog_flow"]
    bog_mass = float(np.trapezoid(bog, t))
    t_fill = traj.filling_time
    turnover = float(traj["energy_turnover"][-1])
    return KpiRecord(
        relative_bog=float(kpi_relative_bog(traj)),
        relative_power=float(kpi_relative_power(traj)),
        filling_time=t_fill / 3600.0,
        mean_bog_flow=bog_mass / t_fill if t_fill > 0 else 0.0,
        max_bog_flow=float(bog.max()),
        bog_mass=bog_mass,
        shaft_energy=float(np.trapezoid(traj["shaft_power"], t)),
        completed=traj.completed,
        mass_residual=float(np.max(np.abs(traj["mass_residual"]))),
        energy_residual=float(np.max(np.abs(traj["energy_residual"])) / turnover) if turnover > 0 else 0.0,
    )


# ---------------------------------------------------------------------------
# entropy production and state points
# ---------------------------------------------------------------------------

def steady_index(traj: Trajectory, tol: float = 0.05, window: float = 600.0) -> tuple[int, bool]:
    """Row closest to mid-run where the train flow is steady.

    Steady means the volumetric flow moved by less than ``tol`` m3/h over the
    trailing ``window`` seconds. Returns ``(row, steady)``; when no row
    qualifies the mid-run row is returned with ``steady = False``.
    """
    t = traj.time
    q = traj["lh2_volume_flow"]
    lag = np.searchsorted(t, t - window)
    ok = (t - t[0] >= window) & (np.abs(q - q[lag]) < tol)
    mid = int(np.searchsorted(t, 0.5 * traj.filling_time))
    mid = min(mid, len(t) - 1)
    rows = np.nonzero(ok)[0]
    if rows.size == 0:
        return mid, False
    return int(rows[np.argmin(np.abs(rows - mid))]), True


@dataclass(frozen=True)
class EntropyReport:
    """Entropy production per element; rates in W/K, integrals in J/K."""

    pump_rate: float
    pipe_rate: float
    valve_rate: float
    pump_total: float
    pipe_total: float
    valve_total: float
    reference_T: float
    snapshot_time: float
    steady: bool

    @property
    def total_rate(self) -> float:
        return self.pump_rate + self.pipe_rate + self.valve_rate

    @property
    def total(self) -> float:
        return self.pump_total + self.pipe_total + self.valve_total

    def exergy_rate(self, element: str = "total") -> float:
        """Exergy destruction rate ``T0 * dS`` in W."""
        return self.reference_T * getattr(self, f"{element}_rate")

    def exergy(self, element: str = "total") -> float:
        """Destroyed exergy over the run in J."""
        return self.reference_T * (self.total if element == "total" else getattr(self, f"{element}_total"))

    def rows(self) -> list[tuple]:
        """(element, rate W/K, integral J/K, exergy rate W, exergy J) rows."""
        out = []
        for name in ("pump", "pipe", "valve", "total"):
            rate = self.total_rate if name == "total" else getattr(self, f"{name}_rate")
            tot = self.total if name == "total" else getattr(self, f"{name}_total")
            out.append((name, rate, tot, self.reference_T * rate, self.reference_T * tot))
        return out


def entropy_report(traj: Trajectory, row: int | None = None) -> EntropyReport:
    """Steady-snapshot rates plus run-integrated entropy production."""
    steady = True
    if row is None:
        row, steady = steady_index(traj)
    return EntropyReport(
        pump_rate=float(traj["sgen_pump"][row]),
        pipe_rate=float(traj["sgen_pipe"][row]),
        valve_rate=float(traj["sgen_valve"][row]),
        pump_total=traj.accumulated(K.O_ACC_S_PUMP),
        pipe_total=traj.accumulated(K.O_ACC_S_PIPE),
        valve_total=traj.accumulated(K.O_ACC_S_VALVE),
        reference_T=traj.config.exergy.reference_T,
        snapshot_time=float(traj.time[row]),
        steady=steady,
    )


@dataclass(frozen=True)
class StatePoint:
    label: int
    pressure: float
    enthalpy: float
    temperature: float
    entropy: float


def ts_diagram(traj: Trajectory, row: int | None = None) -> tuple[list[StatePoint], bool]:
    """State points 1 (pump inlet) to 4 (valve outlet) at a snapshot row."""
    steady = True
    if row is None:
        row, steady = steady_index(traj)
    r = {name: float(traj[name][row]) for name in ("p_onshore", "h1", "p2", "h2", "p3", "h3", "p4")}
    pts = [(1, r["p_onshore"], r["h1"]), (2, r["p2"], r["h2"]),
           (3, r["p3"], r["h3"]), (4, r["p4"], r["h3"])]
    out = []
    for label, p, h in pts:
        s = props.liquid_state(p, h)
        out.append(StatePoint(label, p, h, s.temperature, s.entropy))
    return out, steady


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_PARAMETERS = ("seaborne.max_working_pressure", "control.flow_setpoint", "control.mode")


@dataclass(frozen=True)
class SweepPoint:
    value: object
    record: KpiRecord | None
    error: str = ""


def _sweep_one(args):
    config, parameter, value = args
    try:
        cfg = config.replace(**{parameter: value})
        return SweepPoint(value, kpi_record(simulate(cfg)))
    except Exception as exc:  # a failed value is reported, the sweep goes on
        return SweepPoint(value, None, f"{type(exc).__name__}: {exc}")


def sweep(parameter: str, values, config: ScenarioConfig, map_fn=map) -> list[SweepPoint]:
    """Independent runs of ``config`` with ``parameter`` set to each value."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {parameter!r}; choose from {', '.join(SWEEP_PARAMETERS)}")
    return list(map_fn(_sweep_one, [(config, parameter, v) for v in values]))


def zero_loss_crossover(pressures, relative_bog, threshold: float = 1e-3) -> float:
    """First pressure at which relative BOG drops to ``threshold`` wt% or below.

    Linear interpolation between the bracketing sweep points; ``nan`` if the
    sweep never reaches the threshold, the first pressure if it starts there.
    """
    p = np.asarray(pressures, dtype=float)
    b = np.asarray(relative_bog, dtype=float)
    below = np.nonzero(b <= threshold)[0]
    if below.size == 0:
        return math.nan
    i = int(below[0])
    if i == 0:
        return float(p[0])
    return float(p[i - 1] + (threshold - b[i - 1]) * (p[i] - p[i - 1]) / (b[i] - b[i - 1]))
