"""Sequential-Monte-Carlo Bernoulli filter with terrain-aware modifications.

The plain filter tracks a probability of existence ``q`` and a weighted
particle cloud. With a :class:`~shadowtrack.geometry.GeoModel` attached,
three things change:

* survival particles proposed inside a building get zero weight (and the
  survival mass is renormalized),
* the detection probability is zero for particles without line of sight,
  so a fully shadowed cloud passes through the update untouched,
* birth particles are rejection-resampled out of shadowed/obstructed spots.

Without a model the three branches are inert and the filter is the
unmodified Bernoulli SMC recursion.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import GeoModel, _coords
from .models import (
    MotionParams,
    SensorParams,
    TargetState,
    constant_turn_many,
    likelihood_matrix,
)

log = logging.getLogger("shadowtrack")

# How many times adaptive birth redraws a shadowed/obstructed position
# before giving up (the stragglers are then zero-weighted).
BIRTH_RETRY_CAP = 10

_DELTA_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class Particle:
    state: TargetState
    weight: float


@dataclass
class BernoulliState:
    """Existence probability plus weighted particle system.

    ``states`` is (N, 5), ``weights`` is (N,) and sums to one after every
    update/resample.
    """

    q: float
    states: np.ndarray
    weights: np.ndarray

    @property
    def particles(self) -> list:
        return [
            Particle(TargetState.from_array(s), float(w))
            for s, w in zip(self.states, self.weights)
        ]

    @classmethod
    def empty(cls, num_particles: int) -> "BernoulliState":
        return cls(
            q=0.0,
            states=np.zeros((num_particles, 5)),
            weights=np.full(num_particles, 1.0 / num_particles),
        )


@dataclass(frozen=True)
class FilterParams:
    p_birth: float = 0.01
    p_survive: float = 0.98
    num_particles: int = 5000  # J
    num_birth: int = 5000  # B
    clutter_rate: float = 20.0  # lambda
    clutter_density: float = 1.0 / (2000.0 * math.pi)  # c(z)
    birth_sigma_v: float = 10.0  # m/s
    birth_sigma_omega: float = 30.0 * math.pi / 180.0  # rad/s
    existence_report_threshold: float = 0.5

    def __post_init__(self):
        for name in ("p_birth", "p_survive", "existence_report_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")
        if self.num_particles < 1 or self.num_birth < 1:
            raise ValueError("particle counts must be >= 1")
        if self.clutter_rate < 0 or self.clutter_density <= 0:
            raise ValueError("invalid clutter parameters")


def predict_existence(q: float, params: FilterParams) -> float:
    """Prior existence: reborn if absent, else survives."""
    return params.p_birth * (1.0 - q) + params.p_survive * q


def adaptive_birth(
    measurements,
    geo: GeoModel | None,
    sensor_pos,
    B: int,
    sensor: SensorParams,
    params: FilterParams,
    rng: np.random.Generator,
    _return_los: bool = False,
) -> np.ndarray:
    """Draw B birth states around the current measurements.

    Positions invert a uniformly chosen bearing-range measurement with
    sensor-noise jitter (uniform over the surveillance region if the scan is
    empty); velocities and turn rate are zero-mean Gaussians. With a geo
    model, states landing in shadows or obstacles are redrawn up to
    BIRTH_RETRY_CAP times.
    """
    s = _coords(sensor_pos)
    if measurements:
        meas_b = np.array([z.bearing for z in measurements])
        meas_r = np.array([z.range for z in measurements])

    def draw_positions(n: int) -> np.ndarray:
        if measurements:
            idx = rng.integers(0, len(measurements), size=n)
            b = meas_b[idx] + rng.normal(0.0, sensor.sigma_theta, size=n)
            r = meas_r[idx] + rng.normal(0.0, sensor.sigma_r, size=n)
            return np.column_stack([s[0] + r * np.sin(b), s[1] + r * np.cos(b)])
        if geo is not None:
            lo = geo.boundary.vertices.min(axis=0)
            hi = geo.boundary.vertices.max(axis=0)
            return rng.uniform(lo, hi, size=(n, 2))
        b = rng.uniform(*sensor.bearing_span, size=n)
        r = rng.uniform(*sensor.range_span, size=n)
        return np.column_stack([s[0] + r * np.sin(b), s[1] + r * np.cos(b)])

    pos = draw_positions(B)
    vel = rng.normal(0.0, params.birth_sigma_v, size=(B, 2))
    omega = rng.normal(0.0, params.birth_sigma_omega, size=B)
    los = np.ones(B, dtype=bool)
    if geo is not None:
        los = geo.is_los_many(pos)
        bad = np.flatnonzero(~los)
        for _ in range(BIRTH_RETRY_CAP):
            if len(bad) == 0:
                break
            pos[bad] = draw_positions(len(bad))
            ok = geo.is_los_many(pos[bad])
            los[bad[ok]] = True
            bad = bad[~ok]

    states = np.empty((B, 5))
    states[:, 0] = pos[:, 0]
    states[:, 1] = vel[:, 0]
    states[:, 2] = pos[:, 1]
    states[:, 3] = vel[:, 1]
    states[:, 4] = omega
    if _return_los:
        return states, los
    return states


def predict_particles(
    state: BernoulliState,
    q_pred: float,
    measurements,
    geo: GeoModel | None,
    motion: MotionParams,
    sensor: SensorParams,
    sensor_pos,
    params: FilterParams,
    rng: np.random.Generator,
) -> tuple:
    """Importance-sampling predict: J survival + B birth particles.

    Returns ``(states, weights, los)`` with total weight one; ``los`` is the
    per-particle line-of-sight mask (``None`` without a geo model, since every
    particle is then observable). The survival block
    carries mass ``p_survive * q_prev / q_pred``, the birth block
    ``p_birth * (1 - q_prev) / q_pred``; both proposals equal their target
    densities, so the only weight corrections are the obstacle zeroing and
    the subsequent block renormalization.
    """
    q_prev = state.q
    if q_pred <= 0.0:
        raise ValueError("predicted existence is zero; nothing to sample")
    J = len(state.weights)
    B = params.num_birth

    w_noise = rng.normal(0.0, motion.sigma_w, size=(J, 2))
    u_noise = rng.normal(0.0, motion.sigma_u, size=J)
    surv_states = constant_turn_many(state.states, motion.T, w_noise, u_noise)

    surv_mass = params.p_survive * q_prev / q_pred
    birth_mass = params.p_birth * (1.0 - q_prev) / q_pred
    surv_w = surv_mass * state.weights

    surv_los = None
    if geo is not None:
        surv_los = geo.is_los_many(surv_states[:, [0, 2]])
    if geo is not None and surv_mass > 0.0:
        blocked = geo.in_obstacle_many(surv_states[:, [0, 2]])
        if blocked.any():
            surv_w = np.where(blocked, 0.0, surv_w)
            total = surv_w.sum()
            if total > 0.0:
                surv_w = surv_w * (surv_mass / total)
            else:
                log.warning(
                    "all survival particles obstructed; "
                    "reassigning survival mass to births"
                )
                birth_mass += surv_mass
                surv_mass = 0.0

    birth_states, birth_los = adaptive_birth(
        measurements, geo, sensor_pos, B, sensor, params, rng, _return_los=True
    )
    birth_w = np.full(B, birth_mass / B)
    if geo is not None and birth_mass > 0.0:
        nlos = ~birth_los
        if nlos.any():
            birth_w = np.where(nlos, 0.0, birth_w)
            total = birth_w.sum()
            if total > 0.0:
                birth_w = birth_w * (birth_mass / total)
            elif surv_mass > 0.0:
                log.warning(
                    "all birth particles shadowed; "
                    "reassigning birth mass to survivors"
                )
                surv_w = surv_w * ((surv_mass + birth_mass) / surv_mass)
            else:
                raise RuntimeError(
                    "complete impoverishment: no particle admissible"
                )

    states = np.vstack([surv_states, birth_states])
    weights = np.concatenate([surv_w, birth_w])
    los = None if geo is None else np.concatenate([surv_los, birth_los])
    return states, weights, los


def detection_prob_many(
    states: np.ndarray, geo: GeoModel | None, sensor: SensorParams
) -> np.ndarray:
    """Per-particle detection probability: zero without line of sight."""
    if geo is None:
        return np.full(len(states), sensor.p_detect)
    return np.where(geo.is_los_many(states[:, [0, 2]]), sensor.p_detect, 0.0)


def detection_prob(x: TargetState, geo: GeoModel | None, sensor: SensorParams) -> float:
    return float(detection_prob_many(x.as_array()[None, :], geo, sensor)[0])


def update(
    q_pred: float,
    states: np.ndarray,
    weights: np.ndarray,
    measurements,
    geo: GeoModel | None,
    sensor: SensorParams,
    sensor_pos,
    params: FilterParams,
    los: np.ndarray | None = None,
) -> BernoulliState:
    """Measurement update of existence and particle weights.

    ``los`` optionally supplies a precomputed line-of-sight mask for the
    particles (as returned by :func:`predict_particles`) to avoid a second
    geometry query; without it the mask is evaluated here.
    """
    if geo is None:
        pd = np.full(len(states), sensor.p_detect)
    elif los is not None:
        pd = np.where(los, sensor.p_detect, 0.0)
    else:
        pd = detection_prob_many(states, geo, sensor)
    ratio_sum = np.zeros(len(states))
    if measurements:
        # likelihoods only matter where a detection is possible
        visible = np.flatnonzero(pd > 0.0)
        if len(visible) == len(states):
            L = likelihood_matrix(measurements, states, sensor_pos, sensor)
            ratio_sum = np.sum(L, axis=0) / (
                params.clutter_rate * params.clutter_density
            )
        elif len(visible):
            L = likelihood_matrix(
                measurements, states[visible], sensor_pos, sensor
            )
            ratio_sum[visible] = np.sum(L, axis=0) / (
                params.clutter_rate * params.clutter_density
            )

    pdw = pd * weights
    delta = np.sum(pdw) - np.sum(pdw * ratio_sum)
    delta = min(delta, _DELTA_CLAMP)
    denom = 1.0 - delta * q_pred
    if denom <= 0.0:
        raise ValueError(
            "update denominator nonpositive: likelihood/clutter misconfiguration"
        )
    q_post = (1.0 - delta) * q_pred / denom
    q_post = min(max(q_post, 0.0), 1.0)

    new_w = (1.0 - pd + pd * ratio_sum) * weights
    # a fully shadowed cloud (pd = 0 everywhere) passes through untouched;
    # the input weights already sum to one, so skip the renormalization
    if not np.array_equal(new_w, weights):
        total = np.sum(new_w)
        if total <= 0.0:
            raise ValueError("all posterior weights vanished")
        new_w = new_w / total
    return BernoulliState(q=q_post, states=states, weights=new_w)


def resample(
    states: np.ndarray, weights: np.ndarray, J: int, rng: np.random.Generator
) -> tuple:
    """Systematic resampling to J equally weighted particles."""
    total = np.sum(weights)
    if total <= 0.0:
        raise ValueError("cannot resample from all-zero weights")
    positions = (np.arange(J) + rng.random()) / J
    cum = np.cumsum(weights / total)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, positions, side="left")
    return states[idx].copy(), np.full(J, 1.0 / J)


def estimate(state: BernoulliState, params: FilterParams):
    """Weighted-mean state if existence clears the report threshold."""
    if state.q < params.existence_report_threshold:
        return None
    mean = state.weights @ state.states
    return TargetState.from_array(mean), state.q


def step(
    state: BernoulliState,
    measurements,
    geo: GeoModel | None,
    motion: MotionParams,
    sensor: SensorParams,
    sensor_pos,
    params: FilterParams,
    rng: np.random.Generator,
    birth_measurements=None,
) -> BernoulliState:
    """One full predict/update/resample cycle.

    Births are proposed around ``birth_measurements`` (normally the previous
    scan, since a target detectable now was plausibly detected then, while
    clutter is uncorrelated between scans). Defaults to ``measurements``.
    """
    if birth_measurements is None:
        birth_measurements = measurements
    q_pred = predict_existence(state.q, params)
    if q_pred <= 0.0:
        return BernoulliState(0.0, state.states.copy(), state.weights.copy())
    states, weights, los = predict_particles(
        state, q_pred, birth_measurements, geo, motion, sensor, sensor_pos, params, rng
    )
    posterior = update(
        q_pred, states, weights, measurements, geo, sensor, sensor_pos, params,
        los=los,
    )
    new_states, new_weights = resample(
        posterior.states, posterior.weights, params.num_particles, rng
    )
    return BernoulliState(posterior.q, new_states, new_weights)
