"""Component models: two-phase tanks, VSD centrifugal pump, pipes and valves.

Each model is an immutable dataclass plus a set of scalar ``@njit`` kernels.
The Python-level functions here wrap the kernels for direct use; the
flowsheet integrator calls the kernels with flattened parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import props
from .props import TABLES, FluidState, SaturationPoint

G = 9.80665
SECONDS_PER_DAY = 86400.0

LINEAR = 0
EQUAL_PERCENTAGE = 1
_CHARACTERISTICS = {"linear": LINEAR, "equal-percentage": EQUAL_PERCENTAGE}


class FlashError(RuntimeError):
    """No tank state satisfies the mass, energy and volume constraints."""

    def __init__(self, message: str, residuals: tuple[float, float] | None = None):
        super().__init__(message)
        self.residuals = residuals


class ActuatorError(ValueError):
    """Pump speed outside its allowed range."""


# ---------------------------------------------------------------------------
# tanks
# ---------------------------------------------------------------------------

def sphere_area(volume: float) -> float:
    return (36.0 * math.pi) ** (1.0 / 3.0) * volume ** (2.0 / 3.0)


@dataclass(frozen=True)
class TankGeometry:
    volume: float
    surface_area: float
    overall_U: float
    ambient_T: float = 298.15
    max_working_pressure: float = 1.15e5

    @classmethod
    def sphere(cls, volume: float, overall_U: float, ambient_T: float = 298.15,
               max_working_pressure: float = 1.15e5) -> "TankGeometry":
        return cls(volume, sphere_area(volume), overall_U, ambient_T, max_working_pressure)

    def __post_init__(self):
        if self.volume <= 0:
            raise ValueError("tank volume must be positive")
        if self.surface_area <= 0:
            raise ValueError("tank surface area must be positive")
        if self.overall_U < 0:
            raise ValueError("overall_U must be non-negative")


@dataclass(frozen=True)
class TankState:
    total_mass: float
    total_internal_energy: float


@dataclass(frozen=True)
class TankIntensive:
    pressure: float
    temperature: float
    quality: float
    liquid_volume: float
    liquid_level_fraction: float
    phase: str = "two-phase"


def tank_state_from_fill(geometry: TankGeometry, pressure: float, liquid_fraction: float) -> TankState:
    """Saturated tank at ``pressure`` with ``liquid_fraction`` of its volume liquid."""
    sp = props.sat_point(pressure)
    v_liq = liquid_fraction * geometry.volume
    v_vap = geometry.volume - v_liq
    m_l = sp.liquid.density * v_liq
    m_v = sp.vapor.density * v_vap
    u = m_l * sp.liquid.internal_energy + m_v * sp.vapor.internal_energy
    return TankState(m_l + m_v, u)


def tank_flash(state: TankState, geometry: TankGeometry, T_guess: float = 20.5) -> TankIntensive:
    """Pressure, temperature, quality and liquid volume of a closed tank.

    The two-phase solution is unique along the isochore. When it falls
    outside the dome the tank is single phase; the liquid branch is solved on
    the compressed-liquid table and the vapor branch on the superheated table.
    """
    if state.total_mass <= 0:
        raise FlashError("tank mass must be positive")
    v = geometry.volume / state.total_mass
    u = state.total_internal_energy / state.total_mass
    status, T, P, x = props.two_phase_uv_k(TABLES, v, u, T_guess)
    if status == props.OK:
        rho_l = props.sat_prop(TABLES, props.RHO_L, T)
        v_liq = state.total_mass * (1.0 - x) / rho_l
        return TankIntensive(P, T, x, v_liq, v_liq / geometry.volume)
    if status in (props.SUBCOOLED, props.SUPERHEATED):
        return _single_phase_flash(v, u, geometry, status == props.SUBCOOLED)
    lo = _uv_residual(v, u, props.T_MIN)
    hi = _uv_residual(v, u, props.T_MAX)
    raise FlashError(f"no saturated state for v={v:.6g} m3/kg, u={u:.6g} J/kg", (lo, hi))


def _uv_residual(v: float, u: float, T: float) -> float:
    P = props.sat_prop(TABLES, props.P_SAT, T)
    vl = 1.0 / props.sat_prop(TABLES, props.RHO_L, T)
    vv = 1.0 / props.sat_prop(TABLES, props.RHO_V, T)
    ul = props.sat_prop(TABLES, props.H_L, T) - P * vl
    uv = props.sat_prop(TABLES, props.H_V, T) - P * vv
    x = (v - vl) / (vv - vl)
    return ul + x * (uv - ul) - u


def _single_phase_flash(v, u, geometry, liquid):
    from scipy.optimize import brentq

    # at fixed P the single-phase isobar is monotone in T; solve P by bisection on v
    def t_for_u(P):
        if liquid:
            tsat = props.sat_temperature(P)

            def res(T):
                _, h, rho, _ = props.liquid_pt_k(TABLES, P, T)
                return h - P / rho - u
            return brentq(res, props.T_LIQUID_FLOOR, tsat, xtol=1e-12)
        tsat = props.sat_temperature(P)

        def res(T):
            _, h, rho, _, _ = props.vapor_pt_k(TABLES, P, T)
            return h - P / rho - u
        return brentq(res, tsat, props.T_VAPOR_CEILING, xtol=1e-12)

    def v_res(P):
        T = t_for_u(P)
        if liquid:
            _, _, rho, _ = props.liquid_pt_k(TABLES, P, T)
        else:
            _, _, rho, _, _ = props.vapor_pt_k(TABLES, P, T)
        return 1.0 / rho - v

    try:
        P = brentq(v_res, props.P_MIN * 1.0001, props.P_MAX * 0.9999, xtol=1e-6)
        T = t_for_u(P)
    except ValueError as exc:
        raise FlashError(f"single-phase flash failed for v={v:.6g}, u={u:.6g}") from exc
    if liquid:
        return TankIntensive(P, T, 0.0, geometry.volume, 1.0, "liquid")
    return TankIntensive(P, T, 1.0, 0.0, 0.0, "vapor")


def tank_intensive_to_state(intensive: TankIntensive, geometry: TankGeometry) -> TankState:
    """Rebuild (mass, internal energy) from a two-phase intensive state."""
    sp = props.sat_point(intensive.pressure)
    v_vap = geometry.volume - intensive.liquid_volume
    m_l = sp.liquid.density * intensive.liquid_volume
    m_v = sp.vapor.density * v_vap
    return TankState(m_l + m_v, m_l * sp.liquid.internal_energy + m_v * sp.vapor.internal_energy)


@njit(cache=True)
def tank_derivatives_k(liquid_in, h_liquid_in, liquid_out, h_liquid_out,
                       vapor_in, h_vapor_in, vapor_out, h_vapor_out, heat):
    dm = liquid_in + vapor_in - liquid_out - vapor_out
    du = (liquid_in * h_liquid_in + vapor_in * h_vapor_in
          - liquid_out * h_liquid_out - vapor_out * h_vapor_out + heat)
    return dm, du


def tank_derivatives(state: TankState, geometry: TankGeometry,
                     liquid_in: float = 0.0, h_liquid_in: float = 0.0,
                     liquid_out: float = 0.0,
                     vapor_in: float = 0.0, h_vapor_in: float = 0.0,
                     vapor_out: float = 0.0,
                     heat_ingress: float = 0.0) -> tuple[float, float]:
    """Mass and energy derivatives of a VLE tank.

    Outflows leave at the tank's current saturated liquid / vapor enthalpy.
    """
    flash = tank_flash(state, geometry)
    T = flash.temperature
    h_l = props.sat_prop(TABLES, props.H_L, T)
    h_v = props.sat_prop(TABLES, props.H_V, T)
    dm, du = tank_derivatives_k(liquid_in, h_liquid_in, liquid_out, h_l,
                                vapor_in, h_vapor_in, vapor_out, h_v, heat_ingress)
    return float(dm), float(du)


def tank_heat_ingress(geometry: TankGeometry, fluid_T: float) -> float:
    """Heat flow [W] through the insulation, ``(T_amb - T) * A * U``."""
    return (geometry.ambient_T - fluid_T) * geometry.surface_area * geometry.overall_U


def boil_off_rate(geometry: TankGeometry, Q: float, sat: SaturationPoint, ullage: float = 0.1) -> float:
    """Boil-off rate of a full tank in %/day."""
    if not 0.0 <= ullage < 1.0:
        raise ValueError("ullage must be in [0, 1)")
    liquid_mass = sat.liquid.density * geometry.volume * (1.0 - ullage)
    per_second = Q / (liquid_mass * sat.latent_heat)
    return per_second * SECONDS_PER_DAY * 100.0


def overall_U_for_bor(volume: float, bor_percent_per_day: float, fluid_T: float = 20.55,
                      ambient_T: float = 298.15, rho: float = 70.505,
                      latent_heat: float = 444.7e3, ullage: float = 0.1,
                      surface_area: float | None = None) -> float:
    """Overall heat transfer coefficient giving a target BOR on a spherical tank."""
    area = sphere_area(volume) if surface_area is None else surface_area
    Q = bor_percent_per_day / 100.0 / SECONDS_PER_DAY * rho * volume * (1.0 - ullage) * latent_heat
    return Q / ((ambient_T - fluid_T) * area)


# ---------------------------------------------------------------------------
# pump
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PumpModel:
    """Second-order centrifugal pump with a variable speed drive.

    Head at reference speed: ``dp_bp * (r0 - (r0 - 1) * (Q/Q_bp)**2)`` with
    ``r0`` the shutoff-head ratio; affinity laws scale flow with speed and head
    with speed squared. Efficiency is a parabola in the homologous flow ratio,
    ``peak - curvature * (q - 1)**2``.
    """

    ref_speed: float = 60.0
    min_speed: float = 25.0
    max_speed: float = 60.0
    best_point_flow: float = 3250.0
    best_point_dp: float = 2.0e5
    shutoff_head_ratio: float = 1.25
    peak_efficiency: float = 0.60
    efficiency_curvature: float = 0.393
    efficiency_floor: float = 0.05

    def __post_init__(self):
        if not self.min_speed <= self.max_speed:
            raise ValueError("min_speed must not exceed max_speed")
        if self.shutoff_head_ratio <= 1.0:
            raise ValueError("shutoff_head_ratio must exceed 1 for a falling head curve")
        if not 0.0 < self.peak_efficiency <= 1.0:
            raise ValueError("peak_efficiency must be in (0, 1]")

    def params(self) -> np.ndarray:
        return np.array([self.ref_speed, self.best_point_flow, self.best_point_dp,
                         self.shutoff_head_ratio, self.peak_efficiency,
                         self.efficiency_curvature, self.efficiency_floor])


@njit(cache=True)
def pump_dp_k(pp, flow, speed):
    s = speed / pp[0]
    q = flow / pp[1]
    dp = pp[2] * (pp[3] * s * s - (pp[3] - 1.0) * q * q)
    return dp if dp > 0.0 else 0.0


@njit(cache=True)
def pump_dp_dflow_k(pp, flow, speed):
    s = speed / pp[0]
    dp = pp[2] * (pp[3] * s * s - (pp[3] - 1.0) * (flow / pp[1]) ** 2)
    if dp <= 0.0:
        return 0.0
    return -2.0 * pp[2] * (pp[3] - 1.0) * flow / (pp[1] * pp[1])


@njit(cache=True)
def pump_efficiency_k(pp, flow, speed):
    s = speed / pp[0]
    q = flow / (s * pp[1])
    eta = pp[4] - pp[5] * (q - 1.0) ** 2
    return eta if eta > pp[6] else pp[6]


def _check_speed(model: PumpModel, speed: float) -> None:
    if speed < model.min_speed - 1e-9 or speed > model.max_speed + 1e-9:
        raise ActuatorError(
            f"pump speed {speed} Hz outside [{model.min_speed}, {model.max_speed}] Hz")


def pump_dp(flow: float, speed: float, model: PumpModel) -> float:
    """Pressure rise [Pa] at volumetric ``flow`` [m3/h] and ``speed`` [Hz]."""
    _check_speed(model, speed)
    if flow < 0:
        raise ValueError("flow must be non-negative")
    return float(pump_dp_k(model.params(), flow, speed))


def pump_efficiency(flow: float, speed: float, model: PumpModel) -> float:
    _check_speed(model, speed)
    if flow < 0:
        raise ValueError("flow must be non-negative")
    return float(pump_efficiency_k(model.params(), flow, speed))


@dataclass(frozen=True)
class PumpResult:
    outlet: FluidState
    shaft_power: float
    efficiency: float
    efficiency_floored: bool


def pump_outlet(inlet: FluidState, flow: float, speed: float, model: PumpModel) -> PumpResult:
    """Outlet state and shaft power; all loss heat goes into the liquid."""
    if inlet.phase == "vapor" or (inlet.quality is not None and inlet.quality > 0.0):
        raise props.PhaseError("pump inlet must be liquid")
    dp = pump_dp(flow, speed, model)
    eta = pump_efficiency(flow, speed, model)
    work = dp / (inlet.density * eta)
    outlet = props.liquid_state(inlet.pressure + dp, inlet.enthalpy + work)
    mdot = flow / 3600.0 * inlet.density
    floored = eta <= model.efficiency_floor
    return PumpResult(outlet, mdot * work, eta, floored)


# ---------------------------------------------------------------------------
# pipes
# ---------------------------------------------------------------------------

@njit(cache=True)
def swamee_jain_k(reynolds, relative_roughness):
    arg = relative_roughness / 3.7 + 5.74 / reynolds ** 0.9
    lg = math.log10(arg)
    return 0.25 / (lg * lg)


@njit(cache=True)
def friction_factor_k(reynolds, relative_roughness):
    if reynolds <= 0.0:
        return 0.0
    if reynolds <= 2300.0:
        return 64.0 / reynolds
    if reynolds >= 4000.0:
        return swamee_jain_k(reynolds, relative_roughness)
    w = (reynolds - 2300.0) / 1700.0
    return (1.0 - w) * 64.0 / 2300.0 + w * swamee_jain_k(4000.0, relative_roughness)


def friction_factor(reynolds: float, relative_roughness: float) -> float:
    """Darcy friction factor: Swamee-Jain when turbulent, 64/Re when laminar."""
    return float(friction_factor_k(reynolds, relative_roughness))


@dataclass
class PipeLine:
    """Discretized transfer line; ``parallel_count`` identical pipes share the flow."""

    length: float = 1100.0
    internal_diameter: float = 0.406
    roughness: float = 0.07e-3
    heat_ingress_per_m: float = 8.5
    n_cells: int = 20
    parallel_count: int = 2
    wall_heat_capacity_per_m: float | None = None
    wall_conductance_per_m: float = 100.0
    wall_thickness: float = 6e-3
    wall_density: float = 7900.0
    wall_cp: float = 10.0
    cell_enthalpy: np.ndarray | None = None
    wall_temperature: np.ndarray | None = None

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        if self.length <= 0 or self.internal_diameter <= 0:
            raise ValueError("pipe length and diameter must be positive")
        if self.wall_heat_capacity_per_m is None:
            d_out = self.internal_diameter + 2.0 * self.wall_thickness
            area = math.pi / 4.0 * (d_out ** 2 - self.internal_diameter ** 2)
            self.wall_heat_capacity_per_m = area * self.wall_density * self.wall_cp

    @property
    def flow_area(self) -> float:
        return math.pi / 4.0 * self.internal_diameter ** 2

    @property
    def cell_length(self) -> float:
        return self.length / self.n_cells


@njit(cache=True)
def pipe_dp_k(mdot, rho, mu, diameter, length, roughness):
    if mdot <= 0.0:
        return 0.0
    area = math.pi / 4.0 * diameter * diameter
    vel = mdot / (rho * area)
    re = rho * vel * diameter / mu
    f = friction_factor_k(re, roughness / diameter)
    return f * length / diameter * 0.5 * rho * vel * vel


def pipe_pressure_drop(pipe: PipeLine, mdot_per_pipe: float, state: FluidState) -> float:
    """Darcy-Weisbach pressure drop [Pa] of one horizontal pipe."""
    if mdot_per_pipe < 0:
        raise ValueError("mass flow must be non-negative")
    return float(pipe_dp_k(mdot_per_pipe, state.density, state.viscosity,
                           pipe.internal_diameter, pipe.length, pipe.roughness))


@njit(cache=True)
def pipe_cells_rhs_k(mdot, h_in, h, t_wall, t_fluid, cell_mass, wall_cap, conductance,
                     ingress, dh, dtw):
    """Upwind enthalpy advection plus wall exchange for one pipe.

    ``conductance`` and ``ingress`` are per cell; ambient heat goes into the
    wall node, which exchanges with the fluid.
    """
    n = h.shape[0]
    upstream = h_in
    for c in range(n):
        q_wf = conductance * (t_wall[c] - t_fluid[c])
        dh[c] = (mdot * (upstream - h[c]) + q_wf) / cell_mass
        dtw[c] = (ingress - q_wf) / wall_cap
        upstream = h[c]


def pipe_cell_derivatives(pipe: PipeLine, mdot: float, inlet_enthalpy: float,
                          pressure: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell ``dh/dt`` and ``dT_wall/dt`` for a pipe at ``pressure``.

    ``mdot`` is the flow through this pipe; cell state comes from
    ``pipe.cell_enthalpy`` and ``pipe.wall_temperature``.
    """
    n = pipe.n_cells
    h = np.asarray(pipe.cell_enthalpy, dtype=float)
    tw = np.asarray(pipe.wall_temperature, dtype=float)
    pres = np.broadcast_to(np.asarray(pressure, dtype=float), (n,))
    tf = np.empty(n)
    rho = np.empty(n)
    for c in range(n):
        st = props.liquid_state(float(pres[c]), float(h[c]))
        tf[c] = st.temperature
        rho[c] = st.density
    dx = pipe.cell_length
    cell_mass = float(rho.mean()) * pipe.flow_area * dx
    dh = np.empty(n)
    dtw = np.empty(n)
    pipe_cells_rhs_k(mdot, inlet_enthalpy, h, tw, tf, cell_mass,
                     pipe.wall_heat_capacity_per_m * dx, pipe.wall_conductance_per_m * dx,
                     pipe.heat_ingress_per_m * dx, dh, dtw)
    return dh, dtw


# ---------------------------------------------------------------------------
# valves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValveModel:
    """Throttling valve, ``mdot = Cv * phi(opening) * sqrt(dp * rho_up)``."""

    flow_coefficient: float
    characteristic: str = "linear"
    rangeability: float = 50.0

    def __post_init__(self):
        if self.characteristic not in _CHARACTERISTICS:
            raise ValueError(f"unknown valve characteristic {self.characteristic!r}")
        if self.flow_coefficient <= 0:
            raise ValueError("flow_coefficient must be positive")

    @property
    def kind(self) -> int:
        return _CHARACTERISTICS[self.characteristic]

    @classmethod
    def sized_for(cls, mdot: float, dp: float, rho: float, **kw) -> "ValveModel":
        """Valve passing ``mdot`` at full opening with pressure drop ``dp``."""
        return cls(mdot / math.sqrt(dp * rho), **kw)


@njit(cache=True)
def valve_phi_k(kind, rangeability, opening):
    if opening <= 0.0:
        return 0.0
    if opening >= 1.0:
        return 1.0
    if kind == LINEAR:
        return opening
    return (rangeability ** opening - 1.0) / (rangeability - 1.0)


@njit(cache=True)
def valve_flow_k(cv, kind, rangeability, opening, rho_up, dp):
    phi = valve_phi_k(kind, rangeability, opening)
    if phi <= 0.0 or dp <= 0.0:
        return 0.0
    return cv * phi * math.sqrt(dp * rho_up)


def valve_flow(model: ValveModel, opening: float, upstream: FluidState, p_down: float) -> float:
    """Mass flow [kg/s]; zero for non-positive pressure drop (no reverse flow)."""
    if not 0.0 <= opening <= 1.0:
        raise ValueError("opening must be in [0, 1]")
    return float(valve_flow_k(model.flow_coefficient, model.kind, model.rangeability,
                              opening, upstream.density, upstream.pressure - p_down))


def valve_outlet(upstream: FluidState, p_down: float) -> FluidState:
    """Isenthalpic expansion to ``p_down``."""
    return props.liquid_state(p_down, upstream.enthalpy)
