"""Flowsheet assembly, initialization and the Python front of the integrator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import props
from ..config import ScenarioConfig
from ..control import (
    PidParams,
    PidState,
    PlantModel,
    SplitRangeConfig,
    simc_tune,
)
from ..equipment import (
    PipeLine,
    PumpModel,
    TankGeometry,
    TankState,
    ValveModel,
    tank_state_from_fill,
)
from . import kernel as K

LOOPS = ("fc", "pc1", "pc2")


class InitializationError(RuntimeError):
    """Steady initial pipe profile could not be found."""


class SimulationAbort(RuntimeError):
    """Integration stopped by a property-range violation or flash failure."""

    REASONS = {
        K.FAIL_FLASH_OT: "onshore tank flash failed",
        K.FAIL_FLASH_ST: "seaborne tank flash failed",
        K.FAIL_PIPE_STATE: "pipe or valve state outside the property tables",
        K.FAIL_STEP: "step size underflow",
        K.FAIL_NONFINITE: "non-finite error estimate",
    }

    def __init__(self, code: int, time: float, state: np.ndarray):
        self.code = int(code)
        self.time = float(time)
        self.state = np.array(state)
        super().__init__(f"{self.REASONS.get(self.code, 'failure')} at t = {self.time:.1f} s")


@dataclass
class Flowsheet:
    """One loading train: OT -> pump -> 2 pipes -> valve -> ST, vapor return."""

    config: ScenarioConfig
    onshore: TankGeometry
    seaborne: TankGeometry
    pump: PumpModel
    lh2_pipe: PipeLine
    vapor_pipe: PipeLine
    throttle: ValveModel
    vapor_valve: ValveModel
    bog_valve: ValveModel
    liquefier_pressure: float
    split: SplitRangeConfig
    controllers: dict
    reference_T: float
    params: np.ndarray
    onshore_initial: TankState
    seaborne_initial: TankState
    cell_mass: np.ndarray | None = None
    initial_output: float = float("nan")
    initial_opening: float = float("nan")
    initial_speed: float = float("nan")
    initial_mdot: float = float("nan")
    init_iterations: int = 0

    @property
    def n_cells(self) -> int:
        return self.lh2_pipe.n_cells

    @property
    def fixed_speed(self) -> bool:
        return self.split.min_speed == self.split.max_speed


def _valve_kind(name: str) -> float:
    return 0.0 if name == "linear" else 1.0


def controller_params(config: ScenarioConfig, mode: str | None = None) -> dict:
    """SIMC PI settings for the three loops from the stored plant models."""
    mode = mode or config.control.mode
    # a split range with a single speed is the valve-only loop
    fixed = mode == "fixed-speed" or config.pump.min_speed == config.pump.max_speed
    dt = config.run.comm_interval
    out = {}
    for name in LOOPS:
        key = "fc_fixed" if (name == "fc" and fixed) else name
        loop = getattr(config.control, key)
        # sampling adds half an interval of effective delay
        theta = loop.dead_time + 0.5 * dt
        plant = PlantModel(loop.gain, loop.time_constant, theta)
        tc = loop.closed_loop_tc if loop.closed_loop_tc is not None else theta
        out[name] = simc_tune(plant, tc)
    return out


def build_flowsheet(config: ScenarioConfig) -> Flowsheet:
    """Assemble the train from a validated configuration."""
    config.validate()
    c = config
    ot = TankGeometry.sphere(c.onshore.volume, c.onshore.overall_U, c.onshore.ambient_T,
                             c.onshore.pressure_setpoint)
    st = TankGeometry.sphere(c.seaborne.volume, c.seaborne.overall_U, c.seaborne.ambient_T,
                             c.seaborne.max_working_pressure)
    if c.control.mode == "fixed-speed":
        n_min = n_max = c.control.fixed_speed
    else:
        n_min, n_max = c.pump.min_speed, c.pump.max_speed
    pump = PumpModel(c.pump.ref_speed, n_min, n_max, c.pump.best_point_flow, c.pump.best_point_dp,
                     c.pump.shutoff_head_ratio, c.pump.peak_efficiency,
                     c.pump.efficiency_curvature, c.pump.efficiency_floor)
    lp = c.lh2_pipe
    pipe = PipeLine(lp.length, lp.internal_diameter, lp.roughness, lp.heat_ingress_per_m,
                    lp.n_cells, lp.parallel_count, None, lp.wall_conductance_per_m,
                    lp.wall_thickness, lp.wall_density, lp.wall_cp)
    vp = c.vapor_pipe
    vpipe = PipeLine(vp.length, vp.internal_diameter, vp.roughness, vp.heat_ingress_per_m,
                     1, vp.parallel_count)
    sat_sizing = props.sat_point(c.onshore.pressure_setpoint)
    rho_s = sat_sizing.liquid.density
    throttle = ValveModel.sized_for(c.valves.lh2_sizing_flow / 3600.0 * rho_s,
                                    c.valves.lh2_sizing_dp, rho_s,
                                    characteristic=c.valves.lh2_characteristic,
                                    rangeability=c.valves.rangeability)
    vr = ValveModel(c.valves.vapor_return_cv, c.valves.vapor_return_characteristic,
                    c.valves.rangeability)
    bog = ValveModel(c.valves.bog_cv, c.valves.bog_characteristic, c.valves.rangeability)
    split = SplitRangeConfig(c.control.split_point, n_min, n_max)
    ctrls = controller_params(c)

    prm = np.zeros(K.N_PRM)
    prm[K.I_V_OT], prm[K.I_A_OT], prm[K.I_U_OT], prm[K.I_TAMB_OT] = (
        ot.volume, ot.surface_area, ot.overall_U, ot.ambient_T)
    prm[K.I_V_ST], prm[K.I_A_ST], prm[K.I_U_ST], prm[K.I_TAMB_ST] = (
        st.volume, st.surface_area, st.overall_U, st.ambient_T)
    prm[K.I_PUMP:K.I_PUMP + 7] = pump.params()
    prm[K.I_NMIN], prm[K.I_NMAX], prm[K.I_SPLIT] = n_min, n_max, c.control.split_point
    prm[K.I_L], prm[K.I_D], prm[K.I_EPS] = pipe.length, pipe.internal_diameter, pipe.roughness
    prm[K.I_NPAR], prm[K.I_QPIPE] = pipe.parallel_count, pipe.heat_ingress_per_m
    prm[K.I_G], prm[K.I_CW] = pipe.wall_conductance_per_m, pipe.wall_heat_capacity_per_m
    prm[K.I_LV], prm[K.I_DV], prm[K.I_EPSV] = vpipe.length, vpipe.internal_diameter, vpipe.roughness
    prm[K.I_NPARV], prm[K.I_QV] = vpipe.parallel_count, vpipe.heat_ingress_per_m
    prm[K.I_CV], prm[K.I_KIND], prm[K.I_RANGE] = (
        throttle.flow_coefficient, _valve_kind(throttle.characteristic), throttle.rangeability)
    prm[K.I_CV_VR], prm[K.I_KIND_VR] = vr.flow_coefficient, _valve_kind(vr.characteristic)
    prm[K.I_CV_BOG], prm[K.I_KIND_BOG] = bog.flow_coefficient, _valve_kind(bog.characteristic)
    prm[K.I_PLIQ] = c.valves.liquefier_pressure
    prm[K.I_TAU_VALVE], prm[K.I_TAU_SPEED] = c.valves.valve_lag, c.pump.speed_lag
    prm[K.I_FC:K.I_FC + 5] = ctrls["fc"].as_array()
    prm[K.I_SP_FLOW] = c.control.flow_setpoint
    prm[K.I_PC1:K.I_PC1 + 5] = ctrls["pc1"].as_array()
    prm[K.I_SP_OT] = c.onshore.pressure_setpoint
    prm[K.I_PC2:K.I_PC2 + 5] = ctrls["pc2"].as_array()
    prm[K.I_SP_ST] = c.seaborne.max_working_pressure
    prm[K.I_STOP] = c.seaborne.stop_fill
    prm[K.I_T0] = c.exergy.reference_T
    prm[K.I_DT] = c.run.comm_interval
    prm[K.I_RTOL] = c.run.rtol
    prm[K.I_HMAX] = c.run.max_step
    prm[K.I_TLIM] = c.run.time_limit_h * 3600.0
    prm[K.I_NCELL] = pipe.n_cells

    fs = Flowsheet(
        config=c, onshore=ot, seaborne=st, pump=pump, lh2_pipe=pipe, vapor_pipe=vpipe,
        throttle=throttle, vapor_valve=vr, bog_valve=bog,
        liquefier_pressure=c.valves.liquefier_pressure, split=split, controllers=ctrls,
        reference_T=c.exergy.reference_T, params=prm,
        onshore_initial=tank_state_from_fill(ot, c.onshore.pressure_setpoint, c.onshore.initial_fill),
        seaborne_initial=tank_state_from_fill(st, c.seaborne.max_working_pressure,
                                              c.seaborne.initial_fill),
    )
    init_pipe_enthalpy(fs)
    return fs


def init_pipe_enthalpy(fs: Flowsheet, tol: float = 1e-6, max_iter: int = 100) -> np.ndarray:
    """Steady-state cell enthalpies at the nominal flow set-point.

    Also fixes the constant cell holdups and the actuator positions that
    deliver the set-point. Wall temperatures start at the configured value.
    """
    n = fs.n_cells
    cell_mass = np.empty(n)
    h = np.empty(n)
    status, u, opening, speed, mdot, it = K.steady_point_k(
        props.TABLES, fs.params, fs.config.onshore.pressure_setpoint,
        fs.config.seaborne.max_working_pressure, cell_mass, h,
        fs.config.control.flow_setpoint, tol, max_iter)
    if status == 1:
        raise InitializationError(f"pipe enthalpy did not converge in {max_iter} iterations")
    if status == 2:
        raise InitializationError("flow set-point unreachable with the actuators fully open")
    if status == 3:
        raise InitializationError("pipe state outside the property tables")
    fs.cell_mass = cell_mass
    fs.lh2_pipe.cell_enthalpy = h
    fs.lh2_pipe.wall_temperature = np.full(n, fs.config.lh2_pipe.initial_wall_T)
    fs.initial_output = float(u)
    fs.initial_opening = float(opening)
    fs.initial_speed = float(speed)
    fs.initial_mdot = float(mdot)
    fs.init_iterations = int(it)
    return h


@dataclass(frozen=True)
class NetworkFlows:
    lh2: float
    volumetric: float
    pump_dp: float
    pipe_dp: float
    valve_dp: float
    vapor_return: float
    bog: float
    starved: bool


def solve_flow_network(fs: Flowsheet, speed: float, opening: float, vr_opening: float,
                       bog_opening: float, p_onshore: float, p_seaborne: float) -> NetworkFlows:
    """Quasi-steady flows for given actuators and tank pressures.

    Pipe friction uses saturated-liquid properties at the onshore pressure.
    """
    if not fs.pump.min_speed - 1e-9 <= speed <= fs.pump.max_speed + 1e-9:
        from ..equipment import ActuatorError
        raise ActuatorError(f"pump speed {speed} Hz outside [{fs.pump.min_speed}, {fs.pump.max_speed}]")
    for v in (opening, vr_opening, bog_opening):
        if not 0.0 <= v <= 1.0:
            raise ValueError("valve openings must lie in [0, 1]")
    ot = props.sat_point(p_onshore)
    stp = props.sat_point(p_seaborne)
    rho1 = ot.liquid.density
    mu1 = ot.liquid.viscosity
    m, dpu, dpp, dpv, starved = K.solve_lh2_flow(fs.params, rho1, rho1, mu1, opening, speed,
                                                 p_seaborne - p_onshore)
    m_vr = K.solve_vapor_return(fs.params, vr_opening, stp.vapor.density, stp.vapor.viscosity,
                                p_seaborne - p_onshore)
    dp_bog = p_onshore - fs.liquefier_pressure
    m_bog = 0.0
    if dp_bog > 0:
        m_bog = fs.bog_valve.flow_coefficient * bog_opening * math.sqrt(dp_bog * ot.vapor.density) \
            if fs.bog_valve.characteristic == "linear" else \
            fs.bog_valve.flow_coefficient * (fs.bog_valve.rangeability ** bog_opening - 1.0) \
            / (fs.bog_valve.rangeability - 1.0) * math.sqrt(dp_bog * ot.vapor.density)
    return NetworkFlows(float(m), float(m / rho1 * 3600.0), float(dpu), float(dpp), float(dpv),
                        float(m_vr), float(m_bog), bool(starved))


def initial_state(fs: Flowsheet) -> np.ndarray:
    n = fs.n_cells
    y = np.zeros(K.n_state(n))
    y[K.Y_M_OT] = fs.onshore_initial.total_mass
    y[K.Y_E_OT] = fs.onshore_initial.total_internal_energy
    y[K.Y_M_ST] = fs.seaborne_initial.total_mass
    y[K.Y_E_ST] = fs.seaborne_initial.total_internal_energy
    y[K.Y_CELLS:K.Y_CELLS + n] = fs.lh2_pipe.cell_enthalpy
    y[K.Y_CELLS + n:K.Y_CELLS + 2 * n] = fs.lh2_pipe.wall_temperature
    tail = K.Y_CELLS + 2 * n
    y[tail + K.O_VALVE] = fs.initial_opening
    y[tail + K.O_SPEED] = fs.initial_speed
    return y


def _atol_scale(n: int) -> np.ndarray:
    s = np.ones(K.n_state(n))
    s[[K.Y_M_OT, K.Y_M_ST]] = 1e3
    s[[K.Y_E_OT, K.Y_E_ST]] = 1e7
    s[K.Y_CELLS:K.Y_CELLS + n] = 1e3
    s[K.Y_CELLS + n:K.Y_CELLS + 2 * n] = 1.0
    tail = K.Y_CELLS + 2 * n
    s[tail + K.O_SPEED] = 10.0
    s[tail + K.O_ACC_BOG_M] = 1e2
    s[tail + K.O_ACC_BOG_H] = 1e7
    s[tail + K.O_ACC_W] = 1e7
    s[tail + K.O_ACC_Q] = 1e7
    s[tail + K.O_ACC_S_PUMP:tail + K.O_ACC_S_VALVE + 1] = 1e2
    s[tail + K.O_ACC_VR_M] = 1e2
    s[tail + K.O_ACC_LH2_M] = 1e3
    s[tail + K.O_ACC_TURN] = 1e7
    return s


@dataclass
class ManualLoop:
    """Open-loop override of one controller output, optionally stepped."""

    output: float
    step_time: float = math.inf
    step_size: float = 0.0


def controller_setup(fs: Flowsheet, manual: dict | None = None):
    """Control table and PI states for the kernel."""
    manual = manual or {}
    ctl = np.zeros((3, 4))
    cst = np.zeros((3, 3))
    init_out = {"fc": fs.initial_output, "pc1": 0.0, "pc2": 0.0}
    for k, name in enumerate(LOOPS):
        p: PidParams = fs.controllers[name]
        if name in manual:
            m = manual[name]
            ctl[k] = (1.0, m.output, m.step_time, m.step_size)
            cst[k] = (0.0, np.nan, m.output)
        else:
            ctl[k] = (0.0, 0.0, math.inf, 0.0)
            cst[k] = PidState.bumpless(p, init_out[name]).as_array()
    return ctl, cst


def run_kernel(fs: Flowsheet, manual: dict | None = None, time_limit: float | None = None):
    """Run the compiled integrator and return the raw kernel outputs."""
    prm = fs.params.copy()
    if time_limit is not None:
        prm[K.I_TLIM] = time_limit
    n = fs.n_cells
    y0 = initial_state(fs)
    ctl, cst = controller_setup(fs, manual)
    tail = K.Y_CELLS + 2 * n
    if manual and "fc" in manual:
        op, sp = fs_split(fs, manual["fc"].output)
        y0[tail + K.O_VALVE] = op
        y0[tail + K.O_SPEED] = sp
    cmd0 = np.array([y0[tail + K.O_VALVE], y0[tail + K.O_SPEED],
                     cst[2, 2], cst[1, 2]])
    y0[tail + K.O_VR] = cmd0[2]
    y0[tail + K.O_BOG] = cmd0[3]
    max_rows = int(math.ceil(prm[K.I_TLIM] / prm[K.I_DT])) + 2
    return K.integrate_k(props.TABLES, prm, fs.cell_mass, y0, ctl, cst, cmd0,
                         _atol_scale(n), max_rows), y0


def fs_split(fs: Flowsheet, u: float):
    from ..control import split_range_k
    return split_range_k(float(u), fs.split.split_point, fs.split.min_speed, fs.split.max_speed)
