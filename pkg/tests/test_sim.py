"""Flowsheet assembly, integration, KPIs, entropy accounting and sweeps."""

import dataclasses
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from lh2transfer import equipment as eq
from lh2transfer import props
from lh2transfer.config import ConfigError, ScenarioConfig
from lh2transfer.equipment import ActuatorError
from lh2transfer.sim import analysis as A
from lh2transfer.sim import flowsheet as F
from lh2transfer.sim import kernel as K
from lh2transfer.sim import tuning

from conftest import FLOWS, PRESSURES


@pytest.fixture(scope="module")
def fs(base_config):
    return F.build_flowsheet(base_config)


# ---------------------------------------------------------------- build / init

def test_build_defaults(fs, split_traj):
    assert split_traj["liquid_volume_onshore"][0] == pytest.approx(45000.0, rel=1e-9)
    assert fs.config.seaborne.stop_fill * fs.seaborne.volume == pytest.approx(40500.0)
    v = split_traj["liquid_volume_seaborne"]
    assert v[0] == pytest.approx(0.011 * 45000.0, rel=1e-9)
    assert v[-1] - v[0] == pytest.approx(40000.0, rel=2e-3)
    gap = fs.config.seaborne.max_working_pressure - fs.config.onshore.pressure_setpoint
    assert gap == pytest.approx(0.05e5)


def test_build_rejects_bad_config(base_config):
    with pytest.raises(ConfigError):
        F.build_flowsheet(dataclasses.replace(base_config, lh2_pipe=dataclasses.replace(
            base_config.lh2_pipe, length=-1.0)))


def test_init_enthalpy_rise(fs):
    h = fs.lh2_pipe.cell_enthalpy
    mdot = fs.initial_mdot / fs.lh2_pipe.parallel_count
    rise = 8.5 * 1100.0 / mdot
    # inlet to the pipe is the pump outlet; each cell carries 1/n of the rise
    n = fs.n_cells
    assert h[-1] - h[0] == pytest.approx(rise * (n - 1) / n, rel=1e-4)
    assert np.all(np.diff(h) > 0)
    assert np.all(fs.lh2_pipe.wall_temperature == 20.0)


def test_init_zero_ingress_flat_profile(base_config):
    f0 = F.build_flowsheet(base_config.replace(**{"lh2_pipe.heat_ingress_per_m": 0.0}))
    h = f0.lh2_pipe.cell_enthalpy
    assert np.ptp(h) == pytest.approx(0.0, abs=1e-9)
    # with no ingress the pipe carries the pump-outlet liquid
    h1 = props.sat_point(base_config.onshore.pressure_setpoint).liquid.enthalpy
    assert h[0] > h1
    assert h[0] - h1 < 5e3


def test_init_doubling_flow_halves_rise(base_config):
    def rise(q):
        f = F.build_flowsheet(base_config.replace(**{"control.flow_setpoint": q}))
        h = f.lh2_pipe.cell_enthalpy
        return (h[-1] - h[0]) * f.initial_mdot
    assert rise(1700.0) == pytest.approx(rise(3400.0), rel=1e-4)


def test_init_unreachable_setpoint(base_config):
    with pytest.raises(F.InitializationError):
        F.build_flowsheet(base_config.replace(**{"control.flow_setpoint": 9000.0}))


# ---------------------------------------------------------------- flow network

def test_network_full_open(fs):
    r = F.solve_flow_network(fs, 60.0, 1.0, 0.0, 0.0, 1.1e5, 1.1e5)
    assert not r.starved
    assert r.pump_dp == pytest.approx(r.pipe_dp + r.valve_dp, abs=1.0)
    # bracketing oracle on the monotone residual built from the equipment models
    sp = props.sat_point(1.1e5)
    rho = sp.liquid.density
    cv = fs.throttle.flow_coefficient

    def resid(m):
        return (eq.pump_dp(m / rho * 3600, 60.0, fs.pump)
                - eq.pipe_pressure_drop(fs.lh2_pipe, m / 2, sp.liquid) - (m / cv) ** 2 / rho)

    m = brentq(resid, 1.0, 300.0, xtol=1e-10)
    assert r.lh2 == pytest.approx(m, rel=1e-6)
    # at full speed and no throttling the pump runs out well past its best point
    assert r.volumetric > 3250.0


def test_network_closed_valve(fs):
    r = F.solve_flow_network(fs, 60.0, 0.0, 0.0, 0.0, 1.1e5, 1.15e5)
    assert r.lh2 == 0.0


def test_network_monotone_in_back_pressure(fs):
    flows = [F.solve_flow_network(fs, 45.0, 0.8, 0.5, 0.5, 1.1e5, p).lh2
             for p in np.linspace(1.1e5, 1.8e5, 8)]
    assert np.all(np.diff(flows) < 0)


def test_network_starvation_and_limits(fs):
    r = F.solve_flow_network(fs, 25.0, 1.0, 0.0, 0.0, 1.1e5, 2.5e5)
    assert r.lh2 == 0.0 and r.starved
    with pytest.raises(ActuatorError):
        F.solve_flow_network(fs, 70.0, 1.0, 0.0, 0.0, 1.1e5, 1.1e5)


def test_network_vapor_and_bog_flows(fs):
    r = F.solve_flow_network(fs, 40.0, 1.0, 1.0, 1.0, 1.1e5, 1.15e5)
    assert r.vapor_return > 0.0 and r.bog > 0.0
    r = F.solve_flow_network(fs, 40.0, 1.0, 1.0, 1.0, 1.02e5, 1.0e5)
    assert r.vapor_return == 0.0 and r.bog == 0.0


# ---------------------------------------------------------------- integration

@pytest.mark.parametrize("name", ["split_traj", "fixed_traj"])
def test_conservation(name, request):
    tr = request.getfixturevalue(name)
    assert tr.completed
    assert np.max(np.abs(tr["mass_residual"])) <= 1e-6
    assert np.max(np.abs(tr["energy_residual"])) <= 1e-3 * tr["energy_turnover"][-1]
    # independent check from the final state; the pipe holdup is constant
    y0 = F.initial_state(tr.flowsheet)
    y = tr.final_state
    bog = tr.accumulated(K.O_ACC_BOG_M)
    before = y0[K.Y_M_OT] + y0[K.Y_M_ST]
    after = y[K.Y_M_OT] + y[K.Y_M_ST] + bog
    assert abs(after - before) / before <= 1e-6


@pytest.mark.parametrize("name", ["split_traj", "fixed_traj"])
def test_second_law_every_row(name, request):
    tr = request.getfixturevalue(name)
    for ch in ("sgen_pump", "sgen_pipe", "sgen_valve"):
        assert tr[ch].min() >= -1e-9


def test_time_and_flows_finite(split_traj):
    assert np.all(np.diff(split_traj.time) > 0)
    assert np.all(np.isfinite(split_traj.records))


def test_seaborne_volume_nondecreasing_and_halt(split_traj, fixed_traj):
    for tr in (split_traj, fixed_traj):
        assert np.diff(tr["liquid_volume_seaborne"]).min() >= 0.0
        dt = tr.config.run.comm_interval
        assert 0.0 <= tr.time[-1] - tr.event_time <= dt
        assert tr["liquid_volume_seaborne"][-1] == pytest.approx(40500.0, rel=2e-4)


def test_filling_time_nominal(split_traj):
    assert split_traj.filling_time / 3600 == pytest.approx(40000 / 3250, rel=0.02)


def test_split_range_valve_saturates_first(split_traj):
    speed = split_traj["pump_speed"]
    opening = split_traj["valve_opening"]
    above = speed > split_traj.flowsheet.split.min_speed + 1e-9
    assert above.any()
    assert opening[above].min() >= 0.999


def test_fixed_speed_equivalence(base_config, fixed_traj):
    cfg = base_config.replace(**{"pump.min_speed": 60.0, "pump.max_speed": 60.0})
    assert cfg.control.mode == "split-range"
    tr = A.simulate(cfg)
    assert tr.records.shape == fixed_traj.records.shape
    assert np.array_equal(tr.records, fixed_traj.records)


@pytest.mark.parametrize("mode", ["split-range", "fixed-speed"])
def test_kpi_invariant_to_halving_interval(base_config, split_traj, fixed_traj, mode):
    coarse = split_traj if mode == "split-range" else fixed_traj
    fine = A.simulate(base_config.replace(**{
        "control.mode": mode, "run.comm_interval": 0.5 * base_config.run.comm_interval}))
    a, b = A.kpi_record(coarse), A.kpi_record(fine)
    for key in ("relative_bog", "relative_power", "filling_time"):
        assert getattr(b, key) == pytest.approx(getattr(a, key), rel=1e-3)


def test_time_limit_stops_run(base_config):
    tr = A.simulate(base_config.replace(**{"run.time_limit_h": 0.5}))
    assert not tr.completed
    assert tr.time[-1] == pytest.approx(1800.0)
    assert tr.filling_time == pytest.approx(1800.0)


# ---------------------------------------------------------------- KPIs

def _with(tr, **channels):
    rec = tr.records.copy()
    for name, value in channels.items():
        rec[:, A.CHANNELS[name][0]] = value
    return A.Trajectory(tr.config, rec, tr.status, tr.event_time, tr.final_state, tr.flowsheet)


def test_relative_bog_units(split_traj):
    span = split_traj.time[-1] - split_traj.time[0]
    assert A.kpi_relative_bog(_with(split_traj, bog_flow=0.0)) == 0.0
    assert A.kpi_relative_bog(_with(split_traj, bog_flow=2812.0 / span)) == pytest.approx(0.1)
    assert A.kpi_relative_bog(_with(split_traj, bog_flow=23.34e3 / span)) == pytest.approx(0.83, rel=1e-3)


def test_relative_power_units(split_traj):
    span = split_traj.time[-1] - split_traj.time[0]
    assert A.kpi_relative_power(_with(split_traj, shaft_power=0.0)) == 0.0
    # four trains, 12.9 MWh over 160000 m3; one train moves a quarter of each
    per_train = 12.9e6 * 3600.0 / 4.0
    assert A.kpi_relative_power(_with(split_traj, shaft_power=per_train / span)) == pytest.approx(290.25)
    per_train = 3.6e6 * 3600.0 / 4.0
    assert A.kpi_relative_power(_with(split_traj, shaft_power=per_train / span)) == pytest.approx(81.0)


def test_kpi_record(split_traj):
    r = A.kpi_record(split_traj)
    assert r.completed
    assert r.relative_bog >= 0 and r.filling_time > 0
    assert r.bog_mass == pytest.approx(r.relative_bog / 100 * 2812e3)
    assert r.mean_bog_flow == pytest.approx(r.bog_mass / (r.filling_time * 3600))
    assert r.max_bog_flow >= r.mean_bog_flow
    assert r.shaft_energy / 1e3 / 40000 == pytest.approx(r.relative_power)
    assert set(r.to_dict()) >= {"relative_bog", "relative_power", "filling_time"}


# ---------------------------------------------------------------- entropy / TS

@pytest.mark.parametrize("name", ["split_traj", "fixed_traj"])
def test_entropy_report_structure(name, request):
    tr = request.getfixturevalue(name)
    rep = A.entropy_report(tr)
    assert rep.steady
    parts = rep.pump_rate + rep.pipe_rate + rep.valve_rate
    assert rep.total_rate == pytest.approx(parts, rel=1e-9)
    for v in (rep.pump_rate, rep.pipe_rate, rep.valve_rate, rep.pump_total, rep.pipe_total, rep.valve_total):
        assert v >= 0.0
    assert rep.exergy_rate() == pytest.approx(298.15 * rep.total_rate)
    assert rep.exergy("pump") == pytest.approx(298.15 * rep.pump_total)
    assert [r[0] for r in rep.rows()] == ["pump", "pipe", "valve", "total"]


@pytest.mark.parametrize("name", ["split_traj", "fixed_traj"])
def test_entropy_matches_state_points(name, request):
    # element rates against mdot * (s_out - s_in) from the recorded state points
    tr = request.getfixturevalue(name)
    row, _ = A.steady_index(tr)
    pts, _ = A.ts_diagram(tr, row)
    s = {p.label: p.entropy for p in pts}
    m = tr["lh2_flow"][row]
    rep = A.entropy_report(tr, row)
    assert rep.pump_rate == pytest.approx(m * (s[2] - s[1]), rel=0.02)
    assert rep.valve_rate == pytest.approx(m * (s[4] - s[3]), rel=0.05, abs=0.5)
    # pipe: entropy gain of the flow minus the ingress entropy flux at the wall
    pipe = tr.flowsheet.lh2_pipe
    q = pipe.heat_ingress_per_m * pipe.length * pipe.parallel_count
    t_wall = 0.5 * (pts[1].temperature + pts[2].temperature)
    assert rep.pipe_rate == pytest.approx(m * (s[3] - s[2]) - q / t_wall, rel=0.1)


def test_isentropic_pump_no_pump_entropy(base_config):
    tr = A.simulate(base_config.replace(**{"pump.peak_efficiency": 1.0,
                                           "pump.efficiency_curvature": 0.0,
                                           "run.time_limit_h": 1.0}))
    rep = A.entropy_report(tr, len(tr) - 1)
    assert rep.pump_rate < 0.01 * rep.total_rate


def test_ts_diagram(split_traj, fixed_traj):
    for tr in (split_traj, fixed_traj):
        pts, steady = A.ts_diagram(tr)
        assert steady
        assert [p.label for p in pts] == [1, 2, 3, 4]
        assert pts[3].entropy >= pts[0].entropy
    pts, _ = A.ts_diagram(fixed_traj)
    gaps = {k: pts[k].entropy - pts[k - 1].entropy for k in (1, 2, 3)}
    assert sorted(gaps, key=gaps.get)[-2:] in ([1, 3], [3, 1])
    pts, _ = A.ts_diagram(split_traj)
    total = pts[3].entropy - pts[0].entropy
    assert pts[3].entropy - pts[2].entropy < 0.05 * total


def test_steady_index_flags_transient(split_traj):
    short = A.Trajectory(split_traj.config, split_traj.records[:50], split_traj.status,
                         split_traj.event_time, split_traj.final_state, split_traj.flowsheet)
    _, steady = A.steady_index(short)
    assert not steady


# ---------------------------------------------------------------- sweeps

def _bog(points):
    return [p.record.relative_bog for p in points]


def test_pressure_sweep_trend(pressure_sweep):
    for mode, pts in pressure_sweep.items():
        assert all(p.error == "" for p in pts), mode
        b = _bog(pts)
        assert all(x >= y - 1e-9 for x, y in zip(b, b[1:])), mode


def test_flow_sweep_trends(flow_sweep):
    fixed = _bog(flow_sweep["fixed-speed"])
    assert fixed[0] > fixed[1] > fixed[2]
    power = [p.record.relative_power for p in flow_sweep["split-range"]]
    assert power[0] < power[1] < power[2]
    for q, p in zip(FLOWS, flow_sweep["split-range"]):
        assert p.record.filling_time == pytest.approx(40000 / q, rel=0.02)


def test_sweep_rejects_unknown_parameter(base_config):
    with pytest.raises(ValueError):
        A.sweep("pump.shutoff_head_ratio", [1.2], base_config)


def test_sweep_records_failures(base_config):
    pts = A.sweep("control.flow_setpoint", [9000.0], base_config)
    assert pts[0].record is None
    assert "InitializationError" in pts[0].error


def test_single_value_sweep_equals_simulate(split_traj, pressure_sweep):
    assert pressure_sweep["split-range"][0].record == A.kpi_record(split_traj)


def test_zero_loss_crossover():
    p = [1.15, 1.20, 1.25, 1.30]
    assert A.zero_loss_crossover(p, [0.4, 0.2, 0.0, 0.0], threshold=0.0) == pytest.approx(1.25)
    assert A.zero_loss_crossover(p, [0.0, 0.0, 0.0, 0.0]) == 1.15
    assert math.isnan(A.zero_loss_crossover(p, [0.4, 0.3, 0.2, 0.1]))
    assert A.zero_loss_crossover(p, [0.4, 0.2, 0.0, 0.0], threshold=0.1) == pytest.approx(1.225)


# ---------------------------------------------------------------- tuning

def test_tuning_identification(base_config):
    rows = tuning.tuning_report(base_config)
    by = {r.loop: r for r in rows}
    assert set(by) == {"fc", "pc1", "pc2", "fc_fixed"}
    assert not any(r.flagged for r in rows)
    assert by["fc"].gain > 0 and by["fc_fixed"].gain > 0
    # venting more gas lowers the tank pressures
    assert by["pc1"].gain < 0 and by["pc2"].gain < 0
    # stored plant models in the defaults come from this identification
    for name, r in by.items():
        loop = getattr(base_config.control, name)
        assert r.gain == pytest.approx(loop.gain, rel=0.01)
    again = tuning.tuning_report(base_config)
    assert again == rows
