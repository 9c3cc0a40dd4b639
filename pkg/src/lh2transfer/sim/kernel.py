"""Compiled flowsheet kernel: flow network, right-hand side and integrator.

Everything in here works on flat float arrays so one loading run executes
as a single compiled call. The layout constants below are the contract
between this module and :mod:`lh2transfer.sim.flowsheet`.
"""

import math

import numpy as np
from numba import njit

from .. import props
from ..control import pid_step_k, split_range_k
from ..equipment import (
    pipe_dp_k,
    pump_dp_dflow_k,
    pump_dp_k,
    pump_efficiency_k,
    valve_phi_k,
)

# parameter vector layout
I_V_OT, I_A_OT, I_U_OT, I_TAMB_OT = 0, 1, 2, 3
I_V_ST, I_A_ST, I_U_ST, I_TAMB_ST = 4, 5, 6, 7
I_PUMP = 8  # 7 entries, see PumpModel.params
I_NMIN, I_NMAX, I_SPLIT = 15, 16, 17
I_L, I_D, I_EPS, I_NPAR, I_QPIPE, I_G, I_CW = 18, 19, 20, 21, 22, 23, 24
I_LV, I_DV, I_EPSV, I_NPARV, I_QV = 25, 26, 27, 28, 29
I_CV, I_KIND, I_RANGE, I_CV_VR, I_KIND_VR, I_CV_BOG, I_KIND_BOG, I_PLIQ = range(30, 38)
I_TAU_VALVE, I_TAU_SPEED = 38, 39
I_FC, I_SP_FLOW = 40, 45
I_PC1, I_SP_OT = 46, 51
I_PC2, I_SP_ST = 52, 57
I_STOP, I_T0, I_DT, I_RTOL, I_HMAX, I_TLIM, I_NCELL = range(58, 65)
N_PRM = 65

# state vector layout; cell blocks follow the four tank entries
Y_M_OT, Y_E_OT, Y_M_ST, Y_E_ST = 0, 1, 2, 3
Y_CELLS = 4
# offsets after the 2 * n cell entries
O_VALVE, O_SPEED, O_VR, O_BOG = 0, 1, 2, 3
O_ACC_BOG_M, O_ACC_BOG_H, O_ACC_W, O_ACC_Q = 4, 5, 6, 7
O_ACC_S_PUMP, O_ACC_S_PIPE, O_ACC_S_VALVE = 8, 9, 10
O_ACC_VR_M, O_ACC_LH2_M, O_ACC_TURN = 11, 12, 13
N_TAIL = 14

# auxiliary outputs of one right-hand-side evaluation
A_P_OT, A_T_OT, A_P_ST, A_T_ST, A_VL_OT, A_VL_ST = range(6)
A_MDOT, A_Q, A_BOG, A_VR = 6, 7, 8, 9
A_P2, A_H1, A_H2, A_P3, A_H3, A_P4 = range(10, 16)
A_POWER, A_ETA, A_S_PUMP, A_S_PIPE, A_S_VALVE = range(16, 21)
A_Q_OT, A_Q_ST, A_STARVED, A_RHO1 = 21, 22, 23, 24
N_AUX = 25

# recorded channels
C_TIME = 0
C_AUX = 1  # N_AUX auxiliary values follow
C_VALVE = C_AUX + N_AUX
C_SPEED = C_VALVE + 1
C_VR_OPEN = C_VALVE + 2
C_BOG_OPEN = C_VALVE + 3
C_U_FC = C_VALVE + 4
C_MASS = C_VALVE + 5
C_ENERGY_RES = C_VALVE + 6
C_TURNOVER = C_VALVE + 7
C_ACC_BOG = C_VALVE + 8
C_ACC_W = C_VALVE + 9
N_CH = C_VALVE + 10

# run status codes
RUN_EVENT = 0
RUN_TIME_LIMIT = 1
FAIL_FLASH_OT = 10
FAIL_FLASH_ST = 11
FAIL_PIPE_STATE = 12
FAIL_STEP = 13
FAIL_NONFINITE = 14

_CLOSED = 1e-12  # valve flow fraction treated as fully shut
_GL_X = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GL_W = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


@njit(cache=True)
def n_state(n):
    return Y_CELLS + 2 * n + N_TAIL


@njit(cache=True)
def lh2_network_residual(prm, mdot, rho1, rho_p, mu_p, opening, speed, dp_static):
    pp = prm[I_PUMP:I_PUMP + 7]
    q = mdot / rho1 * 3600.0
    dp_pump = pump_dp_k(pp, q, speed)
    dpp = pipe_dp_k(mdot / prm[I_NPAR], rho_p, mu_p, prm[I_D], prm[I_L], prm[I_EPS])
    cvphi = prm[I_CV] * valve_phi_k(int(prm[I_KIND]), prm[I_RANGE], opening)
    dpv = (mdot / cvphi) ** 2 / rho_p
    r = dp_pump - dpp - dpv - dp_static
    dr = pump_dp_dflow_k(pp, q, speed) * 3600.0 / rho1
    if mdot > 0.0:
        dr -= 2.0 * (dpp + dpv) / mdot
    return r, dr, dp_pump, dpp, dpv


@njit(cache=True)
def solve_lh2_flow(prm, rho1, rho_p, mu_p, opening, speed, dp_static):
    """Train mass flow balancing pump head against pipe, valve and static loss.

    Returns ``(mdot, dp_pump, dp_pipe, dp_valve, starved)``.
    """
    if valve_phi_k(int(prm[I_KIND]), prm[I_RANGE], opening) <= _CLOSED:
        return 0.0, pump_dp_k(prm[I_PUMP:I_PUMP + 7], 0.0, speed), 0.0, 0.0, 0.0
    r0, _, dpp0, _, _ = lh2_network_residual(prm, 0.0, rho1, rho_p, mu_p, opening, speed, dp_static)
    if r0 <= 0.0:
        return 0.0, dpp0, 0.0, 0.0, 1.0
    pp = prm[I_PUMP:I_PUMP + 7]
    s = speed / pp[0]
    q_run = pp[1] * s * math.sqrt(pp[3] / (pp[3] - 1.0))
    hi = q_run * rho1 / 3600.0
    for _ in range(60):
        rh, _, _, _, _ = lh2_network_residual(prm, hi, rho1, rho_p, mu_p, opening, speed, dp_static)
        if rh < 0.0:
            break
        hi *= 2.0
    lo = 0.0
    m = 0.5 * hi
    for _ in range(200):
        r, dr, dpu, dpp, dpv = lh2_network_residual(prm, m, rho1, rho_p, mu_p, opening, speed, dp_static)
        if abs(r) < 1e-3:
            break
        if r > 0.0:
            lo = m
        else:
            hi = m
        mn = m - r / dr if dr < 0.0 else 0.5 * (lo + hi)
        if mn <= lo or mn >= hi:
            mn = 0.5 * (lo + hi)
        if hi - lo < 1e-13 * hi:
            m = mn
            break
        m = mn
    r, dr, dpu, dpp, dpv = lh2_network_residual(prm, m, rho1, rho_p, mu_p, opening, speed, dp_static)
    return m, dpu, dpp, dpv, 0.0


@njit(cache=True)
def solve_vapor_return(prm, opening, rho_v, mu_v, dp_avail):
    """Vapor-return mass flow for the available pressure difference."""
    if dp_avail <= 0.0:
        return 0.0
    cvphi = prm[I_CV_VR] * valve_phi_k(int(prm[I_KIND_VR]), prm[I_RANGE], opening)
    # an opening decayed to round-off counts as shut; (m / cvphi)**2 would overflow
    if cvphi <= _CLOSED * prm[I_CV_VR]:
        return 0.0
    hi = cvphi * math.sqrt(dp_avail * rho_v)
    lo = 0.0
    m = hi
    for _ in range(200):
        dpp = pipe_dp_k(m / prm[I_NPARV], rho_v, mu_v, prm[I_DV], prm[I_LV], prm[I_EPSV])
        dpv = (m / cvphi) ** 2 / rho_v
        g = dpp + dpv - dp_avail
        if abs(g) < 1e-9 * dp_avail:
            break
        if g > 0.0:
            hi = m
        else:
            lo = m
        dg = 2.0 * (dpp + dpv) / m if m > 0.0 else 0.0
        mn = m - g / dg if dg > 0.0 else 0.5 * (lo + hi)
        if mn <= lo or mn >= hi:
            mn = 0.5 * (lo + hi)
        if hi - lo < 1e-14 * (hi + 1.0):
            m = mn
            break
        m = mn
    return m


@njit(cache=True)
def flash(tab, prm, M, E, which, T_guess):
    V = prm[I_V_OT] if which == 0 else prm[I_V_ST]
    return props.two_phase_uv_k(tab, V / M, E / M, T_guess)


@njit(cache=True)
def _sat_t_near(tab, P, T0):
    """Saturation temperature by Newton from a nearby starting point."""
    T = T0
    for _ in range(8):
        f, df = props.sat_prop_d(tab, props.P_SAT, T)
        step = (f - P) / df
        T -= step
        if abs(step) < 1e-12:
            return T
    return props.sat_temperature_k(tab, P)


@njit(cache=True)
def _liquid_cell(tab, P, h, tsat, theta0):
    """(ok, T, rho, mu, theta) of compressed liquid; entropy is not needed here."""
    meta = tab[0]
    hl = props.sat_prop(tab, props.H_L, tsat)
    if h >= hl:
        st, T, rho, s, x, mu = props.state_ph_k(tab, P, h)
        return st == props.OK, T, rho, mu, 1.0
    target = h - hl
    a = 0.0
    b = 1.0
    th = theta0 if 0.0 < theta0 < 1.0 else 0.5
    ok = False
    for _ in range(60):
        g, dg = props._sp_eval(tab, props.LIQUID, props.D_H, P, th)
        f = g - target
        if f > 0.0:
            b = th
        else:
            a = th
        if dg > 0.0 and abs(f / dg) < 1e-14:
            th -= f / dg
            ok = True
            break
        tn = th - f / dg if dg > 0.0 else 0.5 * (a + b)
        if tn <= a or tn >= b:
            tn = 0.5 * (a + b)
        th = tn
    if not ok or th < 0.0:
        return False, 0.0, 0.0, 0.0, th
    tf = meta[7]
    T = tf + th * (tsat - tf)
    drho, _ = props._sp_eval(tab, props.LIQUID, props.D_RHO, P, th)
    rho = props.sat_prop(tab, props.RHO_L, tsat) + drho
    mu = props.sat_prop(tab, props.MU_L, max(T, meta[0]))
    return True, T, rho, mu, th


@njit(cache=True)
def cell_states(tab, h, P_in, dp_pipe, T_out, rho_out, mu_out, theta):
    """Fluid T, density and viscosity of each cell on a linear pressure profile.

    ``theta`` carries the normalized-temperature warm start between calls.
    """
    n = h.shape[0]
    tsat = props.sat_temperature_k(tab, P_in - 0.5 / n * dp_pipe)
    for c in range(n):
        P = P_in - (c + 0.5) / n * dp_pipe
        if c > 0:
            tsat = _sat_t_near(tab, P, tsat)
        ok, T, rho, mu, th = _liquid_cell(tab, P, h[c], tsat, theta[c])
        if not ok:
            return False
        theta[c] = th
        T_out[c] = T
        rho_out[c] = rho
        mu_out[c] = mu
    return True


@njit(cache=True)
def valve_entropy_rate(tab, mdot, h, P_hi, P_lo):
    """``mdot * integral of v/T dP`` along the isenthalp (Gauss-Legendre)."""
    if mdot <= 0.0 or P_hi <= P_lo:
        return 0.0
    half = 0.5 * (P_hi - P_lo)
    mid = 0.5 * (P_hi + P_lo)
    acc = 0.0
    for k in range(3):
        st, T, rho, s, x, mu = props.state_ph_k(tab, mid + half * _GL_X[k], h)
        if st != props.OK:
            return -1.0
        acc += _GL_W[k] / (rho * T)
    return mdot * acc * half


@njit(cache=True)
def rhs(tab, prm, cell_mass, t, y, cmd, tg, aux, dydt, Tf, rhof, muf, theta):
    """Evaluate dy/dt. Returns a status code (0 on success)."""
    n = int(prm[I_NCELL])
    tail = Y_CELLS + 2 * n
    h = y[Y_CELLS:Y_CELLS + n]
    tw = y[Y_CELLS + n:tail]

    st, T_ot, P_ot, x_ot = flash(tab, prm, y[Y_M_OT], y[Y_E_OT], 0, tg[0])
    if st != props.OK:
        return FAIL_FLASH_OT
    st, T_st, P_st, x_st = flash(tab, prm, y[Y_M_ST], y[Y_E_ST], 1, tg[1])
    if st != props.OK:
        return FAIL_FLASH_ST
    tg[0] = T_ot
    tg[1] = T_st

    rho1 = props.sat_prop(tab, props.RHO_L, T_ot)
    mu1 = props.sat_prop(tab, props.MU_L, T_ot)
    h1 = props.sat_prop(tab, props.H_L, T_ot)
    hv_ot = props.sat_prop(tab, props.H_V, T_ot)
    rhov_ot = props.sat_prop(tab, props.RHO_V, T_ot)
    hv_st = props.sat_prop(tab, props.H_V, T_st)
    rhov_st = props.sat_prop(tab, props.RHO_V, T_st)
    muv_st = props.sat_prop(tab, props.MU_V, T_st)
    rhol_st = props.sat_prop(tab, props.RHO_L, T_st)
    rhol_ot = rho1

    opening = min(max(y[tail + O_VALVE], 0.0), 1.0)
    speed = y[tail + O_SPEED]
    dp_static = P_st - P_ot

    # first pass with pump-inlet properties fixes the pressure profile for the
    # cell states; the second uses the mean pipe properties for friction
    m, dpu, dpp, dpv, starved = solve_lh2_flow(prm, rho1, rho1, mu1, opening, speed, dp_static)
    if not cell_states(tab, h, P_ot + dpu, dpp, Tf, rhof, muf, theta):
        return FAIL_PIPE_STATE
    rho_p = 0.0
    mu_p = 0.0
    for c in range(n):
        rho_p += rhof[c]
        mu_p += muf[c]
    rho_p /= n
    mu_p /= n
    m, dpu, dpp, dpv, starved = solve_lh2_flow(prm, rho1, rho_p, mu_p, opening, speed, dp_static)

    pp = prm[I_PUMP:I_PUMP + 7]
    q = m / rho1 * 3600.0
    s_ratio = speed / pp[0]
    eta = pump_efficiency_k(pp, q, speed) if s_ratio > 0.0 else pp[6]
    w = dpu / (rho1 * eta)
    h2 = h1 + w
    P2 = P_ot + dpu
    P3 = P2 - dpp
    h3 = h[n - 1]

    # vapor return and BOG flows
    vr_open = min(max(y[tail + O_VR], 0.0), 1.0)
    m_vr = solve_vapor_return(prm, vr_open, rhov_st, muv_st, P_st - P_ot)
    bog_open = min(max(y[tail + O_BOG], 0.0), 1.0)
    dp_bog = P_ot - prm[I_PLIQ]
    m_bog = 0.0
    if dp_bog > 0.0:
        m_bog = prm[I_CV_BOG] * valve_phi_k(int(prm[I_KIND_BOG]), prm[I_RANGE], bog_open) * math.sqrt(dp_bog * rhov_ot)

    q_ot = prm[I_U_OT] * prm[I_A_OT] * (prm[I_TAMB_OT] - T_ot)
    q_st = prm[I_U_ST] * prm[I_A_ST] * (prm[I_TAMB_ST] - T_st)
    q_vline = prm[I_QV] * prm[I_LV] * prm[I_NPARV]
    npar = prm[I_NPAR]
    dx = prm[I_L] / n
    q_cell = prm[I_QPIPE] * dx
    g_cell = prm[I_G] * dx
    c_cell = prm[I_CW] * dx

    dydt[Y_M_OT] = -m + m_vr - m_bog
    dydt[Y_E_OT] = -m * h1 + m_vr * hv_st - m_bog * hv_ot + q_ot + q_vline
    dydt[Y_M_ST] = m - m_vr
    dydt[Y_E_ST] = m * h3 - m_vr * hv_st + q_st

    mp = m / npar
    upstream = h2
    s_pipe = 0.0
    dpc = dpp / n
    for c in range(n):
        q_wf = g_cell * (tw[c] - Tf[c])
        dydt[Y_CELLS + c] = (mp * (upstream - h[c]) + q_wf) / cell_mass[c]
        dydt[Y_CELLS + n + c] = (q_cell - q_wf) / c_cell
        upstream = h[c]
        s_pipe += mp * dpc / (rhof[c] * Tf[c])
        s_pipe += g_cell * (tw[c] - Tf[c]) ** 2 / (Tf[c] * tw[c])
    s_pipe *= npar

    s_pump = m * (w - dpu / rho1) / T_ot
    s_valve = valve_entropy_rate(tab, m, h3, P3, P_st)
    if s_valve < 0.0:
        return FAIL_PIPE_STATE

    _actuator_rates(prm, y, cmd, dydt, tail)
    heat = q_ot + q_st + q_vline + npar * prm[I_QPIPE] * prm[I_L]
    dydt[tail + O_ACC_BOG_M] = m_bog
    dydt[tail + O_ACC_BOG_H] = m_bog * hv_ot
    dydt[tail + O_ACC_W] = m * w
    dydt[tail + O_ACC_Q] = heat
    dydt[tail + O_ACC_S_PUMP] = s_pump
    dydt[tail + O_ACC_S_PIPE] = s_pipe
    dydt[tail + O_ACC_S_VALVE] = s_valve
    dydt[tail + O_ACC_VR_M] = m_vr
    dydt[tail + O_ACC_LH2_M] = m
    dydt[tail + O_ACC_TURN] = (abs(heat) + m * w + abs(m_bog * hv_ot) + abs(m * h1)
                               + abs(m * h3) + abs(m_vr * hv_st))

    aux[A_P_OT] = P_ot
    aux[A_T_OT] = T_ot
    aux[A_P_ST] = P_st
    aux[A_T_ST] = T_st
    aux[A_VL_OT] = y[Y_M_OT] * (1.0 - x_ot) / rhol_ot
    aux[A_VL_ST] = y[Y_M_ST] * (1.0 - x_st) / rhol_st
    aux[A_MDOT] = m
    aux[A_Q] = q
    aux[A_BOG] = m_bog
    aux[A_VR] = m_vr
    aux[A_P2] = P2
    aux[A_H1] = h1
    aux[A_H2] = h2
    aux[A_P3] = P3
    aux[A_H3] = h3
    aux[A_P4] = P_st
    aux[A_POWER] = m * w
    aux[A_ETA] = eta
    aux[A_S_PUMP] = s_pump
    aux[A_S_PIPE] = s_pipe
    aux[A_S_VALVE] = s_valve
    aux[A_Q_OT] = q_ot
    aux[A_Q_ST] = q_st
    aux[A_STARVED] = starved
    aux[A_RHO1] = rho1
    return 0


@njit(cache=True)
def total_energy(prm, cell_mass, y):
    n = int(prm[I_NCELL])
    npar = prm[I_NPAR]
    c_cell = prm[I_CW] * prm[I_L] / n
    e = y[Y_E_OT] + y[Y_E_ST]
    for c in range(n):
        e += npar * (cell_mass[c] * y[Y_CELLS + c] + c_cell * y[Y_CELLS + n + c])
    return e


@njit(cache=True)
def total_mass(prm, cell_mass, y):
    n = int(prm[I_NCELL])
    tail = Y_CELLS + 2 * n
    return y[Y_M_OT] + y[Y_M_ST] + prm[I_NPAR] * cell_mass.sum() + y[tail + O_ACC_BOG_M]


@njit(cache=True)
def _controllers(prm, ctl, cst, aux, u_out, cmd, dt, clock):
    """Sample the three loops and update actuator commands.

    ``ctl`` rows are per loop: [manual flag, manual output, step time, step
    size]; ``cst`` holds the PI states. ``u_out`` keeps the raw outputs.
    """
    pvs = (aux[A_Q], aux[A_P_OT], aux[A_P_ST])
    sps = (prm[I_SP_FLOW], prm[I_SP_OT], prm[I_SP_ST])
    offs = (I_FC, I_PC1, I_PC2)
    for k in range(3):
        if ctl[k, 0] > 0.0:
            u = ctl[k, 1]
            if clock[0] >= ctl[k, 2]:
                u += ctl[k, 3]
            u_out[k] = min(max(u, 0.0), 1.0)
        else:
            u_out[k] = pid_step_k(prm[offs[k]:offs[k] + 5], cst[k], sps[k], pvs[k], dt)
    valve, speed = split_range_k(u_out[0], prm[I_SPLIT], prm[I_NMIN], prm[I_NMAX])
    cmd[0] = valve
    cmd[1] = speed
    cmd[2] = u_out[2]  # PC2 -> vapor return valve
    cmd[3] = u_out[1]  # PC1 -> BOG valve


@njit(cache=True)
def _actuator_rates(prm, y, cmd, dydt, tail):
    dydt[tail + O_VALVE] = (cmd[0] - y[tail + O_VALVE]) / prm[I_TAU_VALVE]
    dydt[tail + O_SPEED] = (cmd[1] - y[tail + O_SPEED]) / prm[I_TAU_SPEED]
    dydt[tail + O_VR] = (cmd[2] - y[tail + O_VR]) / prm[I_TAU_VALVE]
    dydt[tail + O_BOG] = (cmd[3] - y[tail + O_BOG]) / prm[I_TAU_VALVE]


@njit(cache=True)
def integrate_k(tab, prm, cell_mass, y0, ctl, cst, cmd0, atol_scale, max_rows):
    """Integrate one loading run.

    Returns ``(status, n_rows, records, y_final, t_final, event_time)``.
    """
    n = int(prm[I_NCELL])
    ny = y0.shape[0]
    tail = Y_CELLS + 2 * n
    dt_c = prm[I_DT]
    rtol = prm[I_RTOL]
    hmax = min(prm[I_HMAX], dt_c)
    t_lim = prm[I_TLIM]
    v_stop = prm[I_STOP] * prm[I_V_ST]

    rec = np.zeros((max_rows, N_CH))
    y = y0.copy()
    y_new = np.empty(ny)
    ytmp = np.empty(ny)
    k1 = np.empty(ny)
    k2 = np.empty(ny)
    k3 = np.empty(ny)
    k4 = np.empty(ny)
    aux = np.zeros(N_AUX)
    aux_tmp = np.zeros(N_AUX)
    Tf = np.empty(n)
    rhof = np.empty(n)
    muf = np.empty(n)
    theta = np.full(n, 0.5)
    tg = np.array([20.5, 20.6])
    cmd = cmd0.copy()
    u_out = np.zeros(3)
    clock = np.zeros(1)
    atol = rtol * atol_scale

    m0 = total_mass(prm, cell_mass, y)
    e0 = total_energy(prm, cell_mass, y)

    t = 0.0
    row = 0
    h = hmax
    event_time = -1.0
    status = RUN_TIME_LIMIT
    have_k = False
    while True:
        if have_k:
            # first-same-as-last: reuse the end-of-step evaluation
            for i in range(ny):
                k1[i] = k4[i]
            for j in range(N_AUX):
                aux[j] = aux_tmp[j]
        else:
            st = rhs(tab, prm, cell_mass, t, y, cmd, tg, aux, k1, Tf, rhof, muf, theta)
            if st != 0:
                return st, row, rec, y, t, event_time
        if row == 0:
            u_out[0] = cst[0, 2]
            u_out[1] = cst[1, 2]
            u_out[2] = cst[2, 2]
        else:
            clock[0] = t
            _controllers(prm, ctl, cst, aux, u_out, cmd, dt_c, clock)
            _actuator_rates(prm, y, cmd, k1, tail)
        # record the sample
        r = rec[row]
        r[C_TIME] = t
        for j in range(N_AUX):
            r[C_AUX + j] = aux[j]
        r[C_VALVE] = y[tail + O_VALVE]
        r[C_SPEED] = y[tail + O_SPEED]
        r[C_VR_OPEN] = y[tail + O_VR]
        r[C_BOG_OPEN] = y[tail + O_BOG]
        r[C_U_FC] = u_out[0]
        r[C_MASS] = (total_mass(prm, cell_mass, y) - m0) / m0
        r[C_ENERGY_RES] = (total_energy(prm, cell_mass, y) - e0 + y[tail + O_ACC_BOG_H]
                           - y[tail + O_ACC_Q] - y[tail + O_ACC_W])
        r[C_TURNOVER] = y[tail + O_ACC_TURN]
        r[C_ACC_BOG] = y[tail + O_ACC_BOG_M]
        r[C_ACC_W] = y[tail + O_ACC_W]
        row += 1

        if row > 1:
            vprev = rec[row - 2, C_AUX + A_VL_ST]
            vnow = aux[A_VL_ST]
            if vnow >= v_stop:
                frac = (v_stop - vprev) / (vnow - vprev) if vnow > vprev else 1.0
                event_time = t - dt_c + frac * dt_c
                status = RUN_EVENT
                break
        if t >= t_lim - 1e-9 or row >= max_rows:
            status = RUN_TIME_LIMIT
            break

        # one communication interval of adaptive Bogacki-Shampine steps
        t_end = t + dt_c
        first = True
        while t < t_end - 1e-12:
            h = min(h, hmax, t_end - t)
            if not first:
                for i in range(ny):
                    k1[i] = k4[i]
            first = False
            accepted = False
            for _ in range(40):
                for i in range(ny):
                    ytmp[i] = y[i] + 0.5 * h * k1[i]
                st = rhs(tab, prm, cell_mass, t + 0.5 * h, ytmp, cmd, tg, aux_tmp, k2, Tf, rhof, muf, theta)
                if st == 0:
                    for i in range(ny):
                        ytmp[i] = y[i] + 0.75 * h * k2[i]
                    st = rhs(tab, prm, cell_mass, t + 0.75 * h, ytmp, cmd, tg, aux_tmp, k3, Tf, rhof, muf, theta)
                if st == 0:
                    for i in range(ny):
                        y_new[i] = y[i] + h * (2.0 / 9.0 * k1[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i])
                    st = rhs(tab, prm, cell_mass, t + h, y_new, cmd, tg, aux_tmp, k4, Tf, rhof, muf, theta)
                if st != 0:
                    h *= 0.25
                    if h < 1e-6:
                        return st, row, rec, y, t, event_time
                    continue
                err = 0.0
                for i in range(ny):
                    e = h * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 0.125 * k4[i])
                    sc = atol[i] + rtol * max(abs(y[i]), abs(y_new[i]))
                    e = abs(e) / sc
                    if e > err:
                        err = e
                if not math.isfinite(err):
                    return FAIL_NONFINITE, row, rec, y, t, event_time
                if err <= 1.0:
                    accepted = True
                    t += h
                    for i in range(ny):
                        y[i] = y_new[i]
                    fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** (-1.0 / 3.0))
                    h = h * max(fac, 0.2)
                    break
                h *= max(0.2, 0.9 * err ** (-1.0 / 3.0))
                if h < 1e-6:
                    break
            if not accepted:
                return FAIL_STEP, row, rec, y, t, event_time
            have_k = True
            if abs(t - t_end) < 1e-9:
                t = t_end
    return status, row, rec, y, t, event_time


@njit(cache=True)
def steady_point_k(tab, prm, P_ot, P_st, cell_mass_out, h_out, setpoint, tol, max_iter):
    """Steady pipe enthalpy profile and controller output at the flow set-point.

    Successive substitution: cell properties -> network -> actuator for the
    set-point -> pump work -> steady cell enthalpies. Returns
    ``(status, u, opening, speed, mdot, iterations)``; status 0 on success,
    1 on non-convergence, 2 when the set-point is unreachable.
    """
    n = int(prm[I_NCELL])
    Tsat = props.sat_temperature_k(tab, P_ot)
    rho1 = props.sat_prop(tab, props.RHO_L, Tsat)
    mu1 = props.sat_prop(tab, props.MU_L, Tsat)
    h1 = props.sat_prop(tab, props.H_L, Tsat)
    Tf = np.empty(n)
    rhof = np.empty(n)
    muf = np.empty(n)
    theta = np.full(n, 0.5)
    for c in range(n):
        h_out[c] = h1
    rho_p = rho1
    mu_p = mu1
    target = setpoint * rho1 / 3600.0
    dp_static = P_st - P_ot
    u = 0.5
    opening = 1.0
    speed = prm[I_NMAX]
    m = 0.0
    dpu = 0.0
    dpp = 0.0
    for it in range(max_iter):
        # actuator output for the set-point: flow is monotone in u
        lo = 0.0
        hi = 1.0
        op, sp = split_range_k(hi, prm[I_SPLIT], prm[I_NMIN], prm[I_NMAX])
        mh, _, _, _, _ = solve_lh2_flow(prm, rho1, rho_p, mu_p, op, sp, dp_static)
        if mh < target:
            return 2, 1.0, op, sp, mh, it
        for _ in range(200):
            u = 0.5 * (lo + hi)
            op, sp = split_range_k(u, prm[I_SPLIT], prm[I_NMIN], prm[I_NMAX])
            m, dpu, dpp, dpv, stv = solve_lh2_flow(prm, rho1, rho_p, mu_p, op, sp, dp_static)
            if m < target:
                lo = u
            else:
                hi = u
            if hi - lo < 1e-14:
                break
        opening = op
        speed = sp
        q = m / rho1 * 3600.0
        eta = pump_efficiency_k(prm[I_PUMP:I_PUMP + 7], q, speed)
        h2 = h1 + dpu / (rho1 * eta)
        mp = m / prm[I_NPAR]
        dh = prm[I_QPIPE] * prm[I_L] / n / mp
        change = 0.0
        for c in range(n):
            hn = h2 + (c + 1) * dh
            d = abs(hn - h_out[c]) / max(abs(hn), 1.0)
            if d > change:
                change = d
            h_out[c] = hn
        if not cell_states(tab, h_out, P_ot + dpu, dpp, Tf, rhof, muf, theta):
            return 3, u, opening, speed, m, it
        rn = rhof.mean()
        mn = muf.mean()
        change = max(change, abs(rn - rho_p) / rn, abs(mn - mu_p) / mn)
        rho_p = rn
        mu_p = mn
        if change < tol and it > 0:
            area = math.pi / 4.0 * prm[I_D] ** 2
            for c in range(n):
                cell_mass_out[c] = rhof[c] * area * prm[I_L] / n
            return 0, u, opening, speed, m, it + 1
    return 1, u, opening, speed, m, max_iter
