import pytest

from lh2transfer.config import ScenarioConfig
from lh2transfer.sim import analysis


@pytest.fixture(scope="session")
def base_config():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def split_traj(base_config):
    return analysis.simulate(base_config)


@pytest.fixture(scope="session")
def fixed_traj(base_config):
    return analysis.simulate(base_config.replace(**{"control.mode": "fixed-speed"}))


PRESSURES = (1.15e5, 1.20e5, 1.25e5, 1.30e5, 1.35e5, 1.40e5)
FLOWS = (2560.0, 3250.0, 3585.0)
MODES = ("split-range", "fixed-speed")


@pytest.fixture(scope="session")
def pressure_sweep(base_config):
    """Sweep points keyed by pump mode."""
    return {m: analysis.sweep("seaborne.max_working_pressure", PRESSURES,
                              base_config.replace(**{"control.mode": m}))
            for m in MODES}


@pytest.fixture(scope="session")
def flow_sweep(base_config):
    return {m: analysis.sweep("control.flow_setpoint", FLOWS,
                              base_config.replace(**{"control.mode": m}))
            for m in MODES}


# one PASS/FAIL line per acceptance criterion, printed after the run
_CRITERIA: dict = {}


@pytest.fixture(scope="session")
def criterion():
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n])
