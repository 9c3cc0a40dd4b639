"""Parahydrogen properties from embedded lookup tables.

The tables were generated offline from a reference equation of state (see
``tools/generate_tables.py``) and cover saturation between 0.1 and 10 bara,
compressed liquid down to 14.2 K and superheated vapor up to 45 K. Values are
interpolated with monotone cubic (PCHIP) Hermite segments.

Datum: saturated liquid at 101325 Pa has zero enthalpy and zero entropy.

Two layers live here:

* ``@njit`` kernels operating on the packed table arrays (``TABLES``); the
  simulator and the equipment kernels call these directly.
* A small Python API returning :class:`FluidState` / :class:`SaturationPoint`
  objects with range and phase checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from numba import njit
from scipy.interpolate import PchipInterpolator

# saturation table property indices
P_SAT = 0
RHO_L = 1
RHO_V = 2
H_L = 3
H_V = 4
S_L = 5
S_V = 6
MU_L = 7
MU_V = 8

# single-phase table indices
LIQUID = 0
VAPOR = 1
D_H = 0
D_RHO = 1
D_S = 2

# status codes shared by the kernels
OK = 0
SUBCOOLED = 1
SUPERHEATED = 2
OUT_OF_RANGE = 3
NO_CONVERGENCE = 4


class PropertyRangeError(ValueError):
    """Raised when a query falls outside the embedded tables."""


class PhaseError(ValueError):
    """Raised when a state is requested in the wrong phase region."""


def _pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return PchipInterpolator(x, y, axis=-1).derivative()(x)


def _load_tables():
    data = resources.files("lh2transfer") / "data"
    with resources.as_file(data / "parahydrogen_saturation.csv") as path:
        sat_raw = np.loadtxt(path, delimiter=",", skiprows=1)
    temps = sat_raw[:, 0]
    values = np.ascontiguousarray(sat_raw[:, 1:].T)
    sat = np.empty((2,) + values.shape)
    sat[0] = values
    sat[1] = _pchip_slopes(temps, values)

    with resources.as_file(data / "parahydrogen_single_phase.npz") as path:
        npz = np.load(path)
        pressures = npz["pressures"]
        theta = npz["theta"]
        liq = npz["liquid"]
        vap = npz["vapor"]
        t_floor = float(npz["t_liquid_floor"])
        t_ceil = float(npz["t_vapor_ceiling"])

    sp = np.empty((2, 2) + liq.shape)
    sp[LIQUID, 0] = liq
    sp[VAPOR, 0] = vap
    sp[LIQUID, 1] = _pchip_slopes(theta, liq)
    sp[VAPOR, 1] = _pchip_slopes(theta, vap)

    meta = np.array([
        temps[0],
        temps[1] - temps[0],
        float(temps.size),
        pressures[0],
        pressures[1] - pressures[0],
        float(pressures.size),
        float(theta.size),
        t_floor,
        t_ceil,
        theta[1] - theta[0],
        values[P_SAT, 0],
        values[P_SAT, -1],
        temps[-1],
        0.0,
        0.0,
        0.0,
    ])
    # log-pressure-uniform inverse of the saturation curve, used only as the
    # starting point of the Newton inversion
    lnp_nodes = np.log(values[P_SAT])
    lnp = np.linspace(lnp_nodes[0], lnp_nodes[-1], 2049)
    inv = PchipInterpolator(lnp_nodes, temps)
    guess = np.empty((2, lnp.size))
    guess[0] = inv(lnp)
    guess[1] = inv.derivative()(lnp)
    meta[_M_LNP0] = lnp[0]
    meta[_M_DLNP] = lnp[1] - lnp[0]
    meta[_M_NLNP] = float(lnp.size)
    return meta, sat, sp, guess


# META layout
_M_T0, _M_DT, _M_NT, _M_P0, _M_DP, _M_NP, _M_NTH = 0, 1, 2, 3, 4, 5, 6
_M_TFLOOR, _M_TCEIL, _M_DTH, _M_PMIN, _M_PMAX, _M_TMAX = 7, 8, 9, 10, 11, 12
_M_LNP0, _M_DLNP, _M_NLNP = 13, 14, 15

META, SAT, SP, TSAT_GUESS = _load_tables()
for _arr in (META, SAT, SP, TSAT_GUESS):
    _arr.setflags(write=False)
TABLES = (META, SAT, SP, TSAT_GUESS)

P_MIN = float(META[_M_PMIN])
P_MAX = float(META[_M_PMAX])
T_MIN = float(META[_M_T0])
T_MAX = float(META[_M_TMAX])
T_LIQUID_FLOOR = float(META[_M_TFLOOR])
T_VAPOR_CEILING = float(META[_M_TCEIL])


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _locate(x0, dx, n, x):
    f = (x - x0) / dx
    i = int(math.floor(f))
    if i < 0:
        i = 0
    elif i > n - 2:
        i = n - 2
    return i, f - i


@njit(cache=True)
def _hermite(y, m, i, t, dx):
    t2 = t * t
    t3 = t2 * t
    return ((2.0 * t3 - 3.0 * t2 + 1.0) * y[i] + (t3 - 2.0 * t2 + t) * dx * m[i]
            + (-2.0 * t3 + 3.0 * t2) * y[i + 1] + (t3 - t2) * dx * m[i + 1])


@njit(cache=True)
def _hermite_d(y, m, i, t, dx):
    t2 = t * t
    t3 = t2 * t
    val = ((2.0 * t3 - 3.0 * t2 + 1.0) * y[i] + (t3 - 2.0 * t2 + t) * dx * m[i]
           + (-2.0 * t3 + 3.0 * t2) * y[i + 1] + (t3 - t2) * dx * m[i + 1])
    der = ((6.0 * t2 - 6.0 * t) * y[i] + (3.0 * t2 - 4.0 * t + 1.0) * dx * m[i]
           + (-6.0 * t2 + 6.0 * t) * y[i + 1] + (3.0 * t2 - 2.0 * t) * dx * m[i + 1]) / dx
    return val, der


@njit(cache=True)
def sat_prop(tab, k, T):
    """Saturation property ``k`` at temperature ``T`` (no range check)."""
    meta, sat = tab[0], tab[1]
    i, t = _locate(meta[0], meta[1], int(meta[2]), T)
    return _hermite(sat[0, k], sat[1, k], i, t, meta[1])


@njit(cache=True)
def sat_prop_d(tab, k, T):
    meta, sat = tab[0], tab[1]
    i, t = _locate(meta[0], meta[1], int(meta[2]), T)
    return _hermite_d(sat[0, k], sat[1, k], i, t, meta[1])


@njit(cache=True)
def sat_temperature_k(tab, P):
    """Invert the saturation curve; ``P`` must lie inside the table."""
    meta, sat = tab[0], tab[1]
    guess = tab[3]
    i, t = _locate(meta[13], meta[14], int(meta[15]), math.log(P))
    T = _hermite(guess[0], guess[1], i, t, meta[14])
    for _ in range(6):
        f, df = sat_prop_d(tab, P_SAT, T)
        step = (f - P) / df
        T -= step
        if abs(step) < 1e-13:
            return T
    n = int(meta[2])
    pcol = sat[0, P_SAT]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pcol[mid] <= P:
            lo = mid
        else:
            hi = mid
    t0 = meta[0] + lo * meta[1]
    frac = (P - pcol[lo]) / (pcol[lo + 1] - pcol[lo])
    T = t0 + frac * meta[1]
    a = t0
    b = t0 + meta[1]
    for _ in range(50):
        f, df = sat_prop_d(tab, P_SAT, T)
        f -= P
        if f > 0.0:
            b = T
        else:
            a = T
        step = f / df
        if abs(step) < 1e-13:
            T -= step
            break
        Tn = T - step
        if Tn <= a or Tn >= b:
            Tn = 0.5 * (a + b)
        T = Tn
    return T


@njit(cache=True)
def _sp_eval(tab, phase, k, P, theta):
    """Single-phase departure ``k`` and its theta-derivative at (P, theta)."""
    meta, sp = tab[0], tab[2]
    r, w = _locate(meta[3], meta[4], int(meta[5]), P)
    j, t = _locate(0.0, meta[9], int(meta[6]), theta)
    v0, d0 = _hermite_d(sp[phase, 0, k, r], sp[phase, 1, k, r], j, t, meta[9])
    v1, d1 = _hermite_d(sp[phase, 0, k, r + 1], sp[phase, 1, k, r + 1], j, t, meta[9])
    return (1.0 - w) * v0 + w * v1, (1.0 - w) * d0 + w * d1


@njit(cache=True)
def state_ph_k(tab, P, h):
    """State at (P, h) for liquid or two-phase enthalpies.

    Returns ``(status, T, rho, s, x, mu)``; ``x`` is -1 for subcooled liquid.
    """
    meta = tab[0]
    if P < meta[10] or P > meta[11]:
        return OUT_OF_RANGE, 0.0, 0.0, 0.0, 0.0, 0.0
    tsat = sat_temperature_k(tab, P)
    hl = sat_prop(tab, H_L, tsat)
    if h >= hl:
        hv = sat_prop(tab, H_V, tsat)
        x = (h - hl) / (hv - hl)
        if x > 1.0:
            return SUPERHEATED, tsat, 0.0, 0.0, x, 0.0
        rl = sat_prop(tab, RHO_L, tsat)
        rv = sat_prop(tab, RHO_V, tsat)
        sl = sat_prop(tab, S_L, tsat)
        sv = sat_prop(tab, S_V, tsat)
        rho = 1.0 / ((1.0 - x) / rl + x / rv)
        mu = sat_prop(tab, MU_L, tsat)
        return OK, tsat, rho, sl + x * (sv - sl), x, mu
    target = h - hl
    g0, _ = _sp_eval(tab, LIQUID, D_H, P, 0.0)
    if target < g0:
        return OUT_OF_RANGE, 0.0, 0.0, 0.0, 0.0, 0.0
    th = 1.0 - target / g0
    a = 0.0
    b = 1.0
    for _ in range(60):
        g, dg = _sp_eval(tab, LIQUID, D_H, P, th)
        f = g - target
        if f > 0.0:
            b = th
        else:
            a = th
        if dg > 0.0 and abs(f / dg) < 1e-14:
            th -= f / dg
            break
        tn = th - f / dg if dg > 0.0 else 0.5 * (a + b)
        if tn <= a or tn >= b:
            tn = 0.5 * (a + b)
        th = tn
    tf = meta[7]
    T = tf + th * (tsat - tf)
    drho, _ = _sp_eval(tab, LIQUID, D_RHO, P, th)
    ds, _ = _sp_eval(tab, LIQUID, D_S, P, th)
    rho = sat_prop(tab, RHO_L, tsat) + drho
    s = sat_prop(tab, S_L, tsat) + ds
    mu = sat_prop(tab, MU_L, max(T, meta[0]))
    return OK, T, rho, s, -1.0, mu


@njit(cache=True)
def liquid_pt_k(tab, P, T):
    """Compressed-liquid (h, rho, s) at (P, T); status SUPERHEATED above T_sat."""
    meta = tab[0]
    if P < meta[10] or P > meta[11] or T < meta[7]:
        return OUT_OF_RANGE, 0.0, 0.0, 0.0
    tsat = sat_temperature_k(tab, P)
    if T > tsat:
        return SUPERHEATED, 0.0, 0.0, 0.0
    tf = meta[7]
    th = (T - tf) / (tsat - tf)
    dh, _ = _sp_eval(tab, LIQUID, D_H, P, th)
    drho, _ = _sp_eval(tab, LIQUID, D_RHO, P, th)
    ds, _ = _sp_eval(tab, LIQUID, D_S, P, th)
    return (OK, sat_prop(tab, H_L, tsat) + dh, sat_prop(tab, RHO_L, tsat) + drho,
            sat_prop(tab, S_L, tsat) + ds)


@njit(cache=True)
def vapor_pt_k(tab, P, T):
    """Superheated-vapor (h, rho, s, mu) at (P, T)."""
    meta = tab[0]
    if P < meta[10] or P > meta[11] or T > meta[8]:
        return OUT_OF_RANGE, 0.0, 0.0, 0.0, 0.0
    tsat = sat_temperature_k(tab, P)
    if T < tsat:
        return SUBCOOLED, 0.0, 0.0, 0.0, 0.0
    th = (T - tsat) / (meta[8] - tsat)
    dh, _ = _sp_eval(tab, VAPOR, D_H, P, th)
    drho, _ = _sp_eval(tab, VAPOR, D_RHO, P, th)
    ds, _ = _sp_eval(tab, VAPOR, D_S, P, th)
    return (OK, sat_prop(tab, H_V, tsat) + dh, sat_prop(tab, RHO_V, tsat) + drho,
            sat_prop(tab, S_V, tsat) + ds, sat_prop(tab, MU_V, tsat))


@njit(cache=True)
def two_phase_uv_k(tab, v, u, T_guess):
    """Saturated state with specific volume ``v`` and internal energy ``u``.

    Solves for the temperature by safeguarded Newton iteration on the energy
    residual along the isochore. Returns ``(status, T, P, x)``; status is
    SUBCOOLED / SUPERHEATED when the solution lies outside the dome.
    """
    meta = tab[0]
    a = meta[0]
    b = meta[12]
    T = min(max(T_guess, a), b)
    conv = False
    for _ in range(80):
        P, dP = sat_prop_d(tab, P_SAT, T)
        rl, drl = sat_prop_d(tab, RHO_L, T)
        rv, drv = sat_prop_d(tab, RHO_V, T)
        hl, dhl = sat_prop_d(tab, H_L, T)
        hv, dhv = sat_prop_d(tab, H_V, T)
        vl = 1.0 / rl
        vv = 1.0 / rv
        dvl = -drl * vl * vl
        dvv = -drv * vv * vv
        ul = hl - P * vl
        uv = hv - P * vv
        dul = dhl - dP * vl - P * dvl
        duv = dhv - dP * vv - P * dvv
        dv = vv - vl
        x = (v - vl) / dv
        dx = (-dvl * dv - (v - vl) * (dvv - dvl)) / (dv * dv)
        r = ul + x * (uv - ul) - u
        dr = dul + dx * (uv - ul) + x * (duv - dul)
        if r > 0.0:
            b = T
        else:
            a = T
        if dr > 0.0 and abs(r / dr) < 1e-11:
            T -= r / dr
            conv = True
            break
        Tn = T - r / dr if dr > 0.0 else 0.5 * (a + b)
        if Tn <= a or Tn >= b:
            Tn = 0.5 * (a + b)
        if b - a < 1e-12:
            T = Tn
            conv = True
            break
        T = Tn
    if not conv:
        return NO_CONVERGENCE, T, 0.0, 0.0
    if T <= meta[0] + 1e-9 or T >= meta[12] - 1e-9:
        return OUT_OF_RANGE, T, 0.0, 0.0
    P = sat_prop(tab, P_SAT, T)
    vl = 1.0 / sat_prop(tab, RHO_L, T)
    vv = 1.0 / sat_prop(tab, RHO_V, T)
    x = (v - vl) / (vv - vl)
    if x < -1e-12:
        return SUBCOOLED, T, P, x
    if x > 1.0 + 1e-12:
        return SUPERHEATED, T, P, x
    return OK, T, P, min(max(x, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Python API
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluidState:
    """Thermodynamic state of parahydrogen.

    ``quality`` is the vapor mass fraction for saturated / two-phase states and
    ``None`` for single-phase states; ``phase`` is one of ``"liquid"``,
    ``"two-phase"`` or ``"vapor"``.
    """

    pressure: float
    temperature: float
    density: float
    enthalpy: float
    entropy: float
    quality: float | None
    phase: str
    viscosity: float = float("nan")

    @property
    def internal_energy(self) -> float:
        return self.enthalpy - self.pressure / self.density


@dataclass(frozen=True)
class SaturationPoint:
    pressure: float
    temperature: float
    liquid: FluidState
    vapor: FluidState

    @property
    def latent_heat(self) -> float:
        return self.vapor.enthalpy - self.liquid.enthalpy


def _check_pressure(pressure: float) -> None:
    if not (pressure >= P_MIN):
        raise PropertyRangeError(
            f"pressure {pressure:.6g} Pa below table minimum {P_MIN:.6g} Pa")
    if not (pressure <= P_MAX):
        raise PropertyRangeError(
            f"pressure {pressure:.6g} Pa above table maximum {P_MAX:.6g} Pa")


def _check_temperature(temperature: float) -> None:
    if not (temperature >= T_MIN):
        raise PropertyRangeError(
            f"temperature {temperature:.6g} K below saturation table minimum {T_MIN:.6g} K")
    if not (temperature <= T_MAX):
        raise PropertyRangeError(
            f"temperature {temperature:.6g} K above saturation table maximum {T_MAX:.6g} K")


def sat_temperature(pressure: float) -> float:
    """Saturation temperature [K] at ``pressure`` [Pa]."""
    _check_pressure(pressure)
    return float(sat_temperature_k(TABLES, float(pressure)))


def sat_pressure(temperature: float) -> float:
    """Saturation pressure [Pa] at ``temperature`` [K]."""
    _check_temperature(temperature)
    return float(sat_prop(TABLES, P_SAT, float(temperature)))


def _saturated(temperature: float, pressure: float, quality: float) -> FluidState:
    k_rho, k_h, k_s, k_mu = (RHO_L, H_L, S_L, MU_L) if quality == 0.0 else (RHO_V, H_V, S_V, MU_V)
    return FluidState(
        pressure=pressure,
        temperature=temperature,
        density=float(sat_prop(TABLES, k_rho, temperature)),
        enthalpy=float(sat_prop(TABLES, k_h, temperature)),
        entropy=float(sat_prop(TABLES, k_s, temperature)),
        quality=quality,
        phase="two-phase",
        viscosity=float(sat_prop(TABLES, k_mu, temperature)),
    )


def sat_point(pressure: float) -> SaturationPoint:
    """Saturated liquid and vapor at ``pressure``."""
    t = sat_temperature(pressure)
    return SaturationPoint(pressure, t, _saturated(t, pressure, 0.0), _saturated(t, pressure, 1.0))


def liquid_state(pressure: float, enthalpy: float) -> FluidState:
    """Subcooled liquid or two-phase state at (pressure, enthalpy).

    Raises :class:`PhaseError` if the enthalpy exceeds the saturated-vapor
    enthalpy at ``pressure``.
    """
    _check_pressure(pressure)
    status, t, rho, s, x, mu = state_ph_k(TABLES, float(pressure), float(enthalpy))
    if status == SUPERHEATED:
        raise PhaseError(
            f"enthalpy {enthalpy:.6g} J/kg above saturated vapor at {pressure:.6g} Pa")
    if status != OK:
        raise PropertyRangeError(
            f"enthalpy {enthalpy:.6g} J/kg below the liquid table floor "
            f"({T_LIQUID_FLOOR} K) at {pressure:.6g} Pa")
    if x < 0.0:
        return FluidState(pressure, t, rho, float(enthalpy), s, None, "liquid", mu)
    return FluidState(pressure, t, rho, float(enthalpy), s, x, "two-phase", mu)


def liquid_state_pt(pressure: float, temperature: float) -> FluidState:
    """Compressed or saturated liquid at (pressure, temperature)."""
    _check_pressure(pressure)
    status, h, rho, s = liquid_pt_k(TABLES, float(pressure), float(temperature))
    if status == SUPERHEATED:
        raise PhaseError(f"{temperature:.6g} K is above saturation at {pressure:.6g} Pa")
    if status != OK:
        raise PropertyRangeError(f"temperature {temperature:.6g} K below liquid table floor")
    mu = float(sat_prop(TABLES, MU_L, max(float(temperature), T_MIN)))
    return FluidState(pressure, float(temperature), rho, h, s, None, "liquid", mu)


def vapor_state(pressure: float, temperature: float) -> FluidState:
    """Saturated or superheated vapor at (pressure, temperature)."""
    _check_pressure(pressure)
    status, h, rho, s, mu = vapor_pt_k(TABLES, float(pressure), float(temperature))
    if status == SUBCOOLED:
        raise PhaseError(
            f"{temperature:.6g} K is below saturation ({sat_temperature(pressure):.6g} K) "
            f"at {pressure:.6g} Pa")
    if status != OK:
        raise PropertyRangeError(
            f"temperature {temperature:.6g} K above vapor table ceiling {T_VAPOR_CEILING} K")
    tsat = sat_temperature(pressure)
    quality = 1.0 if temperature == tsat else None
    phase = "two-phase" if quality is not None else "vapor"
    return FluidState(pressure, float(temperature), rho, h, s, quality, phase, mu)


def saturation_table() -> np.ndarray:
    """Copy of the embedded saturation grid.

    Columns: T, P, rho_l, rho_v, h_l, h_v, s_l, s_v, mu_l, mu_v.
    """
    n = int(META[_M_NT])
    temps = META[_M_T0] + META[_M_DT] * np.arange(n)
    return np.column_stack([temps, SAT[0].T])
