"""Target motion, bearing-range sensing, and clutter generation.

Shared by the ground-truth simulator and the filter. The target state is
``[p_east, v_east, p_north, v_north, omega]`` (positions m, velocities m/s,
turn rate rad/s). All randomness flows through an injected numpy Generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import GeoModel, Point2D, _coords

# Below this turn rate the constant-velocity limit of the turn model is used.
OMEGA_SMALL = 1e-6


@dataclass(frozen=True)
class TargetState:
    p_east: float
    v_east: float
    p_north: float
    v_north: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.p_east, self.v_east, self.p_north, self.v_north, self.omega]
        )

    @classmethod
    def from_array(cls, arr) -> "TargetState":
        return cls(*(float(v) for v in arr))

    @property
    def position(self) -> Point2D:
        return Point2D(self.p_east, self.p_north)


@dataclass(frozen=True)
class MotionParams:
    T: float = 1.0  # sampling interval, s
    sigma_w: float = 2.5  # process noise on velocity, m/s^2
    sigma_u: float = math.pi / 180.0  # turn-rate noise, rad/s

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("sampling interval must be positive")
        if self.sigma_w < 0 or self.sigma_u < 0:
            raise ValueError("noise scales must be nonnegative")


@dataclass(frozen=True)
class Measurement:
    bearing: float  # rad, zero at due north, positive toward east
    range: float  # m

    def __post_init__(self):
        if self.range < 0:
            raise ValueError("range must be nonnegative")

    def to_position(self, sensor) -> np.ndarray:
        s = _coords(sensor)
        return np.array(
            [
                s[0] + self.range * math.sin(self.bearing),
                s[1] + self.range * math.cos(self.bearing),
            ]
        )


@dataclass(frozen=True)
class SensorParams:
    sigma_theta: float = 2.0 * math.pi / 180.0  # bearing noise, rad
    sigma_r: float = 10.0  # range noise, m
    p_detect: float = 0.98
    clutter_rate: float = 20.0  # expected clutter count per scan
    bearing_span: tuple = (0.0, math.pi)
    range_span: tuple = (0.0, 2000.0)

    def __post_init__(self):
        if not 0.0 <= self.p_detect <= 1.0:
            raise ValueError("p_detect must be a probability")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be nonnegative")
        if self.bearing_span[1] <= self.bearing_span[0]:
            raise ValueError("empty bearing span")
        if self.range_span[1] <= self.range_span[0]:
            raise ValueError("empty range span")


def constant_turn_many(
    states: np.ndarray, T: float, w: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """Constant-turn transition applied to an (N, 5) state array.

    ``w`` is (N, 2) velocity process noise, ``u`` is (N,) turn-rate noise.
    Uses the constant-velocity limit where |omega| < OMEGA_SMALL.
    """
    pe, ve, pn, vn, om = states.T
    wt = om * T
    small = np.abs(om) < OMEGA_SMALL
    om_safe = np.where(small, 1.0, om)
    sin_wt = np.sin(wt)
    cos_wt = np.cos(wt)
    s_over = np.where(small, T, sin_wt / om_safe)  # sin(wT)/w -> T
    c_over = np.where(small, 0.0, (1.0 - cos_wt) / om_safe)  # (1-cos wT)/w -> 0
    sin_wt = np.where(small, 0.0, sin_wt)
    cos_wt = np.where(small, 1.0, cos_wt)

    half_T2 = 0.5 * T * T
    out = np.empty_like(states)
    out[:, 0] = pe + s_over * ve - c_over * vn + half_T2 * w[:, 0]
    out[:, 1] = cos_wt * ve - sin_wt * vn + T * w[:, 0]
    out[:, 2] = pn + c_over * ve + s_over * vn + half_T2 * w[:, 1]
    out[:, 3] = sin_wt * ve + cos_wt * vn + T * w[:, 1]
    out[:, 4] = om + T * u
    return out


def constant_turn_step(
    x: TargetState, params: MotionParams, noise=((0.0, 0.0), 0.0)
) -> TargetState:
    """Single constant-turn step with explicit noise ``((w_e, w_n), u)``."""
    w, u = noise
    out = constant_turn_many(
        x.as_array()[None, :],
        params.T,
        np.asarray(w, dtype=float)[None, :],
        np.array([u], dtype=float),
    )
    return TargetState.from_array(out[0])


def bearing_range_many(positions: np.ndarray, sensor) -> tuple:
    """Noiseless bearing/range of (N, 2) positions from the sensor."""
    s = _coords(sensor)
    de = positions[:, 0] - s[0]
    dn = positions[:, 1] - s[1]
    return np.arctan2(de, dn), np.hypot(de, dn)


def measure(p, sensor, noise=(0.0, 0.0)) -> Measurement:
    """Bearing-range observation of point ``p`` with additive noise.

    Bearing is the two-argument arctangent of (east, north) offsets: zero at
    due north, positive clockwise toward east.
    """
    pc, s = _coords(p), _coords(sensor)
    de, dn = pc[0] - s[0], pc[1] - s[1]
    if de == 0.0 and dn == 0.0:
        raise ValueError("target coincides with the sensor position")
    return Measurement(
        bearing=math.atan2(de, dn) + noise[0],
        range=max(math.hypot(de, dn) + noise[1], 0.0),
    )


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a), 2.0 * np.pi)


def likelihood(z: Measurement, x: TargetState, sensor, params: SensorParams) -> float:
    """Bivariate Gaussian density of ``z`` about the noiseless prediction."""
    pred = measure(x.position, sensor)
    db = float(wrap_angle(z.bearing - pred.bearing))
    dr = z.range - pred.range
    st, sr = params.sigma_theta, params.sigma_r
    return math.exp(-0.5 * ((db / st) ** 2 + (dr / sr) ** 2)) / (
        2.0 * math.pi * st * sr
    )


def likelihood_matrix(
    measurements, states: np.ndarray, sensor, params: SensorParams
) -> np.ndarray:
    """(M, N) Gaussian densities of M measurements against N particle states."""
    bearings, ranges = bearing_range_many(states[:, [0, 2]], sensor)
    zb = np.array([z.bearing for z in measurements])[:, None]
    zr = np.array([z.range for z in measurements])[:, None]
    # both bearing sets lie in (-pi, pi], so one +/- 2*pi correction wraps
    # the residual exactly (and leaves already-wrapped values untouched)
    db = zb - bearings[None, :]
    db = np.where(db > np.pi, db - 2.0 * np.pi, db)
    db = np.where(db <= -np.pi, db + 2.0 * np.pi, db)
    dr = zr - ranges[None, :]
    st, sr = params.sigma_theta, params.sigma_r
    return np.exp(-0.5 * ((db / st) ** 2 + (dr / sr) ** 2)) / (
        2.0 * math.pi * st * sr
    )


def generate_clutter(params: SensorParams, rng: np.random.Generator) -> list:
    """Poisson-count clutter, uniform over the bearing x range spans."""
    n = rng.poisson(params.clutter_rate)
    bearings = rng.uniform(*params.bearing_span, size=n)
    ranges = rng.uniform(*params.range_span, size=n)
    return [Measurement(b, r) for b, r in zip(bearings, ranges)]


def generate_measurements(
    truth: TargetState | None,
    model: GeoModel | None,
    params: SensorParams,
    rng: np.random.Generator,
    sensor=None,
) -> list:
    """One scan: a possibly-detected target return plus clutter.

    The target contributes a noisy measurement only when it exists, has line
    of sight to the sensor (always true without a model), and the detection
    Bernoulli trial succeeds. ``sensor`` defaults to the model's sensor, or
    the origin when no model is given.
    """
    if sensor is None:
        sensor = model.sensor if model is not None else (0.0, 0.0)
    out = []
    if truth is not None:
        visible = True
        if model is not None:
            visible = bool(model.is_los_many(truth.as_array()[None, [0, 2]])[0])
        if visible and rng.random() < params.p_detect:
            noise = (
                rng.normal(0.0, params.sigma_theta),
                rng.normal(0.0, params.sigma_r),
            )
            out.append(measure(truth.position, sensor, noise))
    out.extend(generate_clutter(params, rng))
    return out
