"""Sampling, sensitivity estimators, statistics and batch execution."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lh2transfer.sim.analysis import kpi_record, simulate
from lh2transfer.ugsa import (
    IndexResult, Parameter, ParameterSpace, apply_sample, class_count,
    delta_indices, histogram, kpi_statistics, lhs_sample, run_batch, s1_indices,
    sensitivity_indices, tank_U_for_bor,
)
from lh2transfer.ugsa.estimators import class_edges
from lh2transfer.equipment import TankGeometry, boil_off_rate, tank_heat_ingress
from lh2transfer import props

from oracles import ishigami, ishigami_delta, ishigami_s1


@pytest.fixture(scope="module")
def space():
    return ParameterSpace((Parameter("a", 0.0, 1.0), Parameter("b", -5.0, 5.0)))


# ---------------------------------------------------------------- sampling

def test_lhs_strata(space):
    S = lhs_sample(space, 4, seed=3)
    assert S.values.shape == (4, 2)
    lo, hi = space.bounds
    u = (S.values - lo) / (hi - lo)
    for j in range(2):
        assert sorted(np.floor(u[:, j] * 4).astype(int)) == [0, 1, 2, 3]


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 300), st.integers(0, 2 ** 31))
def test_lhs_one_per_stratum(n, seed):
    space = ParameterSpace((Parameter("x", 2.0, 3.0), Parameter("y", 0.0, 10.0), Parameter("z", -1, 1)))
    S = lhs_sample(space, n, seed)
    lo, hi = space.bounds
    u = (S.values - lo) / (hi - lo)
    for j in range(3):
        assert np.array_equal(np.sort(np.floor(u[:, j] * n).astype(int)), np.arange(n))


def test_lhs_deterministic(space):
    a, b = lhs_sample(space, 50, 7), lhs_sample(space, 50, 7)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, lhs_sample(space, 50, 8).values)
    assert a.scheme == "latin-hypercube" and a.row(0) == {"a": a.values[0, 0], "b": a.values[0, 1]}


def test_lhs_mean_converges(space):
    # stratified mean of a uniform: variance per draw is at most 1/(12 n^3)
    n = 200
    means = np.array([lhs_sample(space, n, s).values[:, 0].mean() for s in range(50)])
    sigma = np.sqrt(1 / (12 * n ** 3))
    assert np.all(np.abs(means - 0.5) < 3 * sigma * 1.5)


def test_lhs_errors(space):
    with pytest.raises(ValueError):
        lhs_sample(space, 1, 0)
    with pytest.raises(ValueError):
        Parameter("x", 1.0, 1.0)


# ---------------------------------------------------------------- estimators

def test_class_count():
    assert class_count(8192) == 21
    assert class_count(1000) == 6
    assert class_count(50) == 3
    assert class_count(30) == 3
    assert class_count(10 ** 7) == 48
    x = np.arange(100.0)
    e = class_edges(x, 4)
    assert np.array_equal(np.searchsorted(e, x, side="right"), np.repeat(np.arange(4), 25))


def test_estimator_limits_small():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(2000, 3))
    y = X[:, 0] + 0.01 * X[:, 1]
    r = sensitivity_indices(X, y, resamples=20)
    assert r.delta[0] > 0.6
    assert r.delta[2] < 0.08
    assert r.s1[0] > 0.95
    assert np.all((r.delta >= 0) & (r.delta <= 1))
    # percentile bounds of a biased estimator need not bracket the point value
    assert np.all(r.delta_low <= r.delta_high)
    assert r.delta_high[2] < 0.1
    assert r.rank() == ["x1", "x2", "x3"]


def test_s1_additive_model():
    rng = np.random.default_rng(1)
    X = rng.uniform(size=(4000, 4))
    r = sensitivity_indices(X, X.sum(axis=1), resamples=0)
    assert r.s1 == pytest.approx(np.full(4, 0.25), abs=0.03)
    assert r.s1.sum() == pytest.approx(1.0, abs=0.05)
    assert np.all((r.s1 > -0.05) & (r.s1 < 1.05))


def test_s1_ishigami_small():
    rng = np.random.default_rng(2)
    X = rng.uniform(-np.pi, np.pi, size=(3000, 3))
    s1, lo, hi = s1_indices(X, ishigami(X), resamples=30)
    assert s1 == pytest.approx(ishigami_s1(), abs=0.05)
    assert np.all(lo <= hi)


def test_degenerate_output():
    X = np.random.default_rng(0).uniform(size=(500, 2))
    r = sensitivity_indices(X, np.full(500, 3.0))
    assert r.degenerate
    assert np.all(r.delta == 0) and np.all(r.s1 == 0)


def test_nonfinite_and_shape_errors():
    X = np.zeros((10, 2))
    with pytest.raises(ValueError):
        sensitivity_indices(X, np.zeros(9))
    y = np.arange(10.0)
    y[3] = np.nan
    with pytest.raises(ValueError):
        sensitivity_indices(np.random.default_rng(0).uniform(size=(10, 2)), y)


@pytest.fixture(scope="module")
def ish_small():
    rng = np.random.default_rng(5)
    X = rng.uniform(-np.pi, np.pi, size=(1500, 3))
    y = ishigami(X)
    return X, y, sensitivity_indices(X, y, resamples=30, seed=11)


def test_permutation_invariance(ish_small):
    X, y, r = ish_small
    perm = np.random.default_rng(9).permutation(len(y))
    p = sensitivity_indices(X[perm], y[perm], resamples=30, seed=11)
    for k in ("delta", "delta_low", "delta_high", "s1", "s1_low", "s1_high"):
        assert getattr(p, k) == pytest.approx(getattr(r, k), abs=1e-12)


def test_delta_scale_invariance(ish_small):
    X, y, r = ish_small
    s = sensitivity_indices(X, -3.5 * y + 100.0, resamples=30, seed=11)
    half = 0.5 * (r.delta_high - r.delta_low)
    assert np.all(np.abs(s.delta - r.delta) < half)


def test_determinism(ish_small):
    X, y, r = ish_small
    again = sensitivity_indices(X, y, resamples=30, seed=11)
    for k in ("delta", "delta_low", "delta_high", "s1", "s1_low", "s1_high"):
        assert np.array_equal(getattr(again, k), getattr(r, k))


def test_wrappers(ish_small):
    X, y, r = ish_small
    d, lo, hi = delta_indices(X, y, resamples=5)
    assert d == pytest.approx(r.delta)
    assert isinstance(r, IndexResult)
    rows = list(r.rows())
    assert len(rows) == 3 and rows[0][0] == "x1"


def test_quadrature_oracle_resolution():
    coarse = ishigami_delta(50, 100, 500)
    ref = ishigami_delta()
    assert coarse == pytest.approx(ref, abs=5e-3)
    assert ref == pytest.approx([0.2636, 0.4256, 0.2105], abs=2e-3)


# ---------------------------------------------------------------- statistics

class _Rec:
    def __init__(self, v):
        self.relative_bog = v
        self.relative_power = 2 * v
        self.mean_bog_flow = v / 10
        self.max_bog_flow = v / 5
        self.filling_time = 12.0


def test_histogram_identical_values():
    counts, edges = histogram([2.0] * 7)
    assert counts.tolist() == [7]


def test_kpi_statistics():
    vals = [0.1, 0.2, 0.2, 0.9, 3.0]
    st_ = kpi_statistics([_Rec(v) for v in vals] + [None], bins=10,
                         thresholds={"relative_bog": [-1.0, 0.5, 10.0]})
    s = st_["relative_bog"]
    assert s.mean == pytest.approx(np.mean(vals))
    assert s.maximum == 3.0 and s.minimum == 0.1
    assert s.counts.sum() == 5 and s.counts.size == 10
    assert s.exceed == {-1.0: 5, 0.5: 2, 10.0: 0}
    assert s.skewness > 0
    assert st_["filling_time"].counts.tolist() == [5]
    with pytest.raises(ValueError):
        kpi_statistics([None])


# ---------------------------------------------------------------- batch

def test_bor_mapping(base_config):
    for tank, bor in (("onshore", 0.08), ("seaborne", 0.1)):
        U = tank_U_for_bor(base_config, tank, bor)
        sec = getattr(base_config, tank)
        p = sec.pressure_setpoint if tank == "onshore" else sec.max_working_pressure
        sat = props.sat_point(p)
        g = TankGeometry.sphere(sec.volume, U, sec.ambient_T)
        assert boil_off_rate(g, tank_heat_ingress(g, sat.temperature), sat) == pytest.approx(bor, rel=1e-9)


def test_apply_sample(base_config):
    names = ("pump.peak_efficiency", "pipe.roughness", "onshore.bor", "control.flow_setpoint")
    cfg = apply_sample(base_config, names, (0.55, 1e-4, 0.05, 3000.0))
    assert cfg.pump.peak_efficiency == 0.55
    assert cfg.lh2_pipe.roughness == cfg.vapor_pipe.roughness == 1e-4
    assert cfg.onshore.overall_U == pytest.approx(tank_U_for_bor(cfg, "onshore", 0.05))
    assert cfg.control.flow_setpoint == 3000.0
    assert cfg.run.comm_interval == base_config.ugsa.comm_interval


def test_batch_deterministic_and_monotone(base_config):
    names = ("lh2_pipe.heat_ingress_per_m",)
    S = np.array([[6.0], [12.0], [6.0]])
    res = run_batch(S, names, base_config)
    assert [r.index for r in res] == [0, 1, 2]
    assert all(r.ok for r in res)
    assert res[0].record == res[2].record
    assert res[1].record.relative_bog >= res[0].record.relative_bog
    sub = run_batch(S, names, base_config, indices=[2])
    assert len(sub) == 1 and sub[0].record == res[2].record


def test_batch_records_failures(base_config):
    res = run_batch(np.array([[9000.0]]), ("control.flow_setpoint",), base_config)
    assert not res[0].ok and "InitializationError" in res[0].error


def test_nominal_sample_matches_simulate(base_config):
    names = [p["name"] for p in base_config.ugsa.parameters]
    nominal = {"pump.peak_efficiency": 0.6, "lh2_pipe.heat_ingress_per_m": 8.5,
               "pipe.roughness": 0.07e-3, "control.flow_setpoint": 3250.0}
    names = list(nominal)
    res = run_batch(np.array([list(nominal.values())]), names, base_config)
    cfg = base_config.replace(**{"run.comm_interval": base_config.ugsa.comm_interval})
    assert res[0].record == kpi_record(simulate(cfg))
