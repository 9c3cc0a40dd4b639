"""Parahydrogen property tables: anchors, identities and round trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lh2transfer import props


# anchors at 1.1 bara
T_ANCHOR = 20.55
RHO_ANCHOR = 70.505
HVAP_ANCHOR = 444.7e3


def test_anchor_values_at_1p1_bara():
    sp = props.sat_point(1.10e5)
    assert sp.temperature == pytest.approx(T_ANCHOR, rel=2e-3)
    assert sp.liquid.density == pytest.approx(RHO_ANCHOR, rel=2e-3)
    assert sp.latent_heat == pytest.approx(HVAP_ANCHOR, rel=2e-3)


def test_normal_boiling_point():
    assert props.sat_temperature(1.013e5) == pytest.approx(20.3, abs=0.05)
    assert props.sat_point(1.013e5).vapor.density == pytest.approx(1.3, abs=0.06)
    assert props.vapor_state(1.013e5, 20.3).density == pytest.approx(1.3, abs=0.06)


def test_entropy_datum_is_nbp_liquid():
    liq = props.sat_point(101325.0).liquid
    assert abs(liq.enthalpy) < 1.0
    assert abs(liq.entropy) < 1e-3


@pytest.mark.parametrize("P", [0.2e5, 0.5e5, 1.0e5, 1.5e5, 3.0e5, 6.0e5, 9.0e5])
def test_clausius_clapeyron(P):
    T = props.sat_temperature(P)
    dT = 1e-3
    dPdT = (props.sat_pressure(T + dT) - props.sat_pressure(T - dT)) / (2 * dT)
    sp = props.sat_point(P)
    lhs = dPdT * T * (1 / sp.vapor.density - 1 / sp.liquid.density)
    assert lhs == pytest.approx(sp.latent_heat, rel=0.03)


@pytest.mark.parametrize("P", np.linspace(0.15e5, 9.5e5, 9))
def test_entropy_of_vaporization(P):
    sp = props.sat_point(P)
    ds = sp.vapor.entropy - sp.liquid.entropy
    assert ds == pytest.approx(sp.latent_heat / sp.temperature, rel=0.01)


def test_saturation_monotone():
    P = np.linspace(props.P_MIN, props.P_MAX, 400)
    sps = [props.sat_point(p) for p in P]
    T = np.array([s.temperature for s in sps])
    hl = np.array([s.liquid.enthalpy for s in sps])
    hv = np.array([s.vapor.enthalpy for s in sps])
    assert np.all(np.diff(T) > 0)
    assert np.all(np.diff(hl) > 0)
    # h_v of hydrogen peaks near 3.38 bara (25.1 K) and falls towards the
    # critical point; it is monotone over the loading envelope only
    assert np.all(np.diff(hv[P < 3.3e5]) > 0)
    assert np.all(np.diff(hv[P > 3.5e5]) < 0)
    assert all(s.liquid.density > s.vapor.density for s in sps)
    assert all(s.latent_heat > 0 for s in sps)


def test_liquid_density_falls_with_temperature():
    T = np.linspace(15.0, 22.0, 30)
    rho = [props.liquid_state_pt(3.0e5, t).density for t in T]
    assert np.all(np.diff(rho) < 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=14.5, max_value=31.0))
def test_sat_round_trip(T):
    assert props.sat_temperature(props.sat_pressure(T)) == pytest.approx(T, abs=1e-9)


def test_sat_round_trip_grid():
    tab = props.saturation_table()
    for T in tab[1:-1:7, 0]:
        assert props.sat_temperature(props.sat_pressure(T)) == pytest.approx(T, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.3e5, max_value=9.0e5), st.floats(min_value=-0.6, max_value=0.95))
def test_ph_round_trip(P, frac):
    # frac < 0 reaches into the subcooled region, frac in [0, 1) into the dome
    sp = props.sat_point(P)
    h = sp.liquid.enthalpy + frac * sp.latent_heat
    if frac < 0:
        subcool = sp.liquid.enthalpy - props.liquid_state_pt(P, 14.6).enthalpy
        h = sp.liquid.enthalpy + frac / 0.6 * subcool
    s = props.liquid_state(P, h)
    if s.phase == "liquid":
        back = props.liquid_state_pt(P, s.temperature).enthalpy
    else:
        assert s.temperature == pytest.approx(sp.temperature, abs=1e-8)
        back = (1 - s.quality) * sp.liquid.enthalpy + s.quality * sp.vapor.enthalpy
    assert back == pytest.approx(h, rel=1e-6, abs=1e-3)


def test_saturated_liquid_boundary():
    sp = props.sat_point(1.10e5)
    s = props.liquid_state(1.10e5, sp.liquid.enthalpy)
    assert s.quality == pytest.approx(0.0, abs=1e-9)
    assert s.temperature == pytest.approx(T_ANCHOR, abs=0.04)


def test_lever_rule_quality():
    sp = props.sat_point(1.10e5)
    s = props.liquid_state(1.10e5, sp.liquid.enthalpy + 0.5 * sp.latent_heat)
    assert s.phase == "two-phase"
    assert s.quality == pytest.approx(0.5, abs=1e-9)
    v = 0.5 / sp.liquid.density + 0.5 / sp.vapor.density
    assert s.density == pytest.approx(1 / v, rel=1e-9)


def test_compressed_liquid_temperature_shift():
    # isenthalpic compression of a liquid: dT = -(v - T dv/dT) dP / cp
    P0, P1 = 1.10e5, 3.10e5
    sp = props.sat_point(P0)
    s = props.liquid_state(P1, sp.liquid.enthalpy)
    assert s.phase == "liquid"
    dT = s.temperature - sp.temperature
    assert abs(dT) < 0.25

    Pm, Tm, eps = 0.5 * (P0 + P1), sp.temperature - 0.1, 0.05
    a = props.liquid_state_pt(Pm, Tm + eps)
    b = props.liquid_state_pt(Pm, Tm - eps)
    cp = (a.enthalpy - b.enthalpy) / (2 * eps)
    dvdT = (1 / a.density - 1 / b.density) / (2 * eps)
    v = 1 / props.liquid_state_pt(Pm, Tm).density
    oracle = -(v - Tm * dvdT) * (P1 - P0) / cp
    assert dT == pytest.approx(oracle, rel=0.1)


def test_vapor_state_matches_saturation():
    sp = props.sat_point(1.10e5)
    v = props.vapor_state(1.10e5, sp.temperature)
    assert v.density == pytest.approx(sp.vapor.density, rel=1e-6)
    assert v.enthalpy == pytest.approx(sp.vapor.enthalpy, rel=1e-6, abs=1e-3)
    assert v.entropy == pytest.approx(sp.vapor.entropy, rel=1e-6, abs=1e-6)


def test_vapor_density_falls_with_temperature():
    T = np.linspace(props.sat_temperature(1.1e5), 40.0, 25)
    rho = [props.vapor_state(1.1e5, t).density for t in T]
    assert np.all(np.diff(rho) < 0)


def test_errors():
    with pytest.raises(props.PropertyRangeError, match="below"):
        props.sat_temperature(1.0e3)
    with pytest.raises(props.PropertyRangeError, match="above"):
        props.sat_point(2.0e6)
    with pytest.raises(props.PhaseError):
        props.vapor_state(1.1e5, 18.0)
    sp = props.sat_point(1.1e5)
    with pytest.raises(props.PhaseError):
        props.liquid_state(1.1e5, sp.vapor.enthalpy + 1e4)


def test_against_reference_formulation():
    cp = pytest.importorskip("CoolProp.CoolProp")
    for P in (0.5e5, 1.1e5, 2.0e5, 5.0e5):
        T = cp.PropsSI("T", "P", P, "Q", 0, "ParaHydrogen")
        assert props.sat_temperature(P) == pytest.approx(T, abs=1e-4)
        rho = cp.PropsSI("D", "P", P, "Q", 0, "ParaHydrogen")
        assert props.sat_point(P).liquid.density == pytest.approx(rho, rel=1e-4)
    T = 19.0
    rho = cp.PropsSI("D", "P", 3e5, "T", T, "ParaHydrogen")
    assert props.liquid_state_pt(3e5, T).density == pytest.approx(rho, rel=1e-4)
    assert math.isfinite(props.liquid_state_pt(3e5, T).entropy)
