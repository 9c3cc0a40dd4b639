"""PI control, SIMC tuning and the valve/speed split-range map.

The controllers are discrete PI laws sampled once per communication
interval. Parameters and state are kept in small float arrays so the same
kernel runs inside the compiled integrator; the dataclasses below are the
user-facing view of those arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

REVERSE = 1.0  # output rises when the measurement is below set-point
DIRECT = -1.0  # output rises when the measurement is above set-point
_DIRECTIONS = {"reverse": REVERSE, "direct": DIRECT}

# parameter / state array layout used by the compiled kernels
K_GAIN, K_TI, K_LO, K_HI, K_SIGN = range(5)
S_INT, S_PREV, S_OUT = range(3)


class TuningError(ValueError):
    """A plant model that cannot be tuned (zero gain, bad time constants)."""


@dataclass(frozen=True)
class PlantModel:
    """First-order-plus-dead-time model ``k exp(-theta s) / (tau1 s + 1)``."""

    gain: float
    time_constant: float
    dead_time: float = 0.0

    def __post_init__(self):
        if self.time_constant <= 0:
            raise ValueError("time_constant must be positive")
        if self.dead_time < 0:
            raise ValueError("dead_time must be non-negative")


@dataclass(frozen=True)
class PidParams:
    gain: float
    integral_time: float
    derivative_time: float = 0.0
    output_low: float = 0.0
    output_high: float = 1.0
    direction: str = "reverse"

    def __post_init__(self):
        if self.integral_time <= 0:
            raise ValueError("integral_time must be positive")
        if not self.output_low < self.output_high:
            raise ValueError("output_low must be below output_high")
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be 'reverse' or 'direct', got {self.direction!r}")
        if self.derivative_time != 0.0:
            raise ValueError("derivative action is not supported")

    def as_array(self) -> np.ndarray:
        return np.array([self.gain, self.integral_time, self.output_low,
                         self.output_high, _DIRECTIONS[self.direction]])


@dataclass
class PidState:
    integral: float = 0.0
    previous_pv: float = float("nan")
    last_output: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.integral, self.previous_pv, self.last_output])

    @classmethod
    def bumpless(cls, params: PidParams, output: float) -> "PidState":
        """State that reproduces ``output`` at zero control error."""
        out = min(max(output, params.output_low), params.output_high)
        return cls(out * params.integral_time / params.gain, float("nan"), out)


@dataclass(frozen=True)
class SplitRangeConfig:
    split_point: float = 0.5
    min_speed: float = 25.0
    max_speed: float = 60.0
    valve_range: tuple[float, float] = field(default=(0.0, 1.0))

    def __post_init__(self):
        if not 0.0 < self.split_point < 1.0:
            raise ValueError("split_point must lie in (0, 1)")
        if self.min_speed > self.max_speed:
            raise ValueError("min_speed must not exceed max_speed")


def simc_tune(plant: PlantModel, closed_loop_tc: float, output_low: float = 0.0,
              output_high: float = 1.0, direction: str | None = None) -> PidParams:
    """SIMC PI settings for a first-order-plus-dead-time plant.

    ``Kc = tau1 / (k (tc + theta))`` and ``tauI = min(tau1, 4 (tc + theta))``.
    A negative plant gain yields a positive controller gain with the
    direction flipped, so the closed loop keeps negative feedback.
    """
    if closed_loop_tc <= 0:
        raise TuningError("closed-loop time constant must be positive")
    if plant.gain == 0 or not np.isfinite(plant.gain):
        raise TuningError("plant gain must be finite and non-zero")
    tc = closed_loop_tc + plant.dead_time
    kc = plant.time_constant / (abs(plant.gain) * tc)
    ti = min(plant.time_constant, 4.0 * tc)
    if direction is None:
        direction = "reverse" if plant.gain > 0 else "direct"
    return PidParams(kc, ti, 0.0, output_low, output_high, direction)


@njit(cache=True)
def pid_step_k(pp, st, setpoint, pv, dt):
    """One PI update with conditional integration; mutates ``st``."""
    e = pp[K_SIGN] * (setpoint - pv)
    integral = st[S_INT] + e * dt
    u = pp[K_GAIN] * (e + integral / pp[K_TI])
    # freeze the integral if it would push further into saturation
    if (u > pp[K_HI] and e > 0.0) or (u < pp[K_LO] and e < 0.0):
        integral = st[S_INT]
        u = pp[K_GAIN] * (e + integral / pp[K_TI])
    if u > pp[K_HI]:
        u = pp[K_HI]
    elif u < pp[K_LO]:
        u = pp[K_LO]
    st[S_INT] = integral
    st[S_PREV] = pv
    st[S_OUT] = u
    return u


def pid_step(state: PidState, params: PidParams, setpoint: float, pv: float, dt: float) -> float:
    """Advance ``state`` in place by one sample and return the clamped output."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    st = state.as_array()
    u = pid_step_k(params.as_array(), st, float(setpoint), float(pv), float(dt))
    state.integral, state.previous_pv, state.last_output = float(st[0]), float(st[1]), float(st[2])
    return float(u)


@njit(cache=True)
def split_range_k(u, split_point, min_speed, max_speed):
    """Map one controller output to (valve opening, pump speed).

    With a fixed-speed pump (``min_speed == max_speed``) the whole output
    range goes to the valve and the opening equals ``u``.
    """
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    if max_speed <= min_speed:
        return u, min_speed
    if u <= split_point:
        return u / split_point, min_speed
    return 1.0, min_speed + (u - split_point) / (1.0 - split_point) * (max_speed - min_speed)


def split_range_map(u: float, config: SplitRangeConfig) -> tuple[float, float]:
    opening, speed = split_range_k(float(u), config.split_point, config.min_speed, config.max_speed)
    return float(opening), float(speed)


def fopdt_response(t, gain, time_constant, dead_time, step=1.0):
    t = np.asarray(t, dtype=float)
    tt = np.clip(t - dead_time, 0.0, None)
    return gain * step * (1.0 - np.exp(-tt / time_constant))


def fit_fopdt(t, y, step: float, min_dead_time: float = 0.0) -> PlantModel:
    """Least-squares FOPDT fit of a step response.

    ``y`` is the deviation from the pre-step trajectory and ``step`` the
    size of the input step. Raises :class:`TuningError` on a flat response.
    """
    from scipy.optimize import least_squares

    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if step == 0 or not np.any(np.abs(y) > 1e-12 * max(1.0, np.max(np.abs(y)))):
        raise TuningError("flat step response; loop is not identifiable")
    y_end = y[-1]
    k0 = y_end / step
    # first crossing of 63 % of the final value as a time-constant guess
    idx = np.nonzero(np.abs(y) >= 0.632 * abs(y_end))[0]
    tau0 = max(t[idx[0]] if idx.size else t[-1] / 3.0, 1e-3)
    span = t[-1] - t[0]

    def resid(p):
        return fopdt_response(t, p[0], p[1], p[2], step) - y

    lo = [-np.inf, 1e-3, min_dead_time]
    hi = [np.inf, 100.0 * span, 0.5 * span]
    x0 = [k0, min(tau0, hi[1] * 0.5), max(min_dead_time, 0.0)]
    fit = least_squares(resid, x0, bounds=(lo, hi), x_scale="jac")
    k, tau, theta = fit.x
    if k == 0:
        raise TuningError("fitted gain is zero")
    return PlantModel(float(k), float(tau), float(theta))
