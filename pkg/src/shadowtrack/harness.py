"""Scenario orchestration: ground truth, simulation, Monte-Carlo runs, I/O.

A :class:`ScenarioConfig` (JSON on disk) fully describes an experiment. The
geospatial model is always built for the *simulation* physics (a shadowed
target produces no detection); ``use_geo_model`` only controls whether the
filter is given the model. Monte-Carlo runs feed both filter variants the
same pre-generated measurement streams so the comparison is paired, and all
randomness is derived from ``seed + run_index``, making every output
reproducible regardless of worker count.
"""

from __future__ import annotations

import csv
import json
import math
import multiprocessing
import os
from dataclasses import dataclass, field

import numpy as np

from . import bernoulli, geometry, metrics, models
from .bernoulli import BernoulliState, FilterParams
from .geometry import GeodeticCoord, GeoModel, Point2D, Polygon2D
from .metrics import OspaParams, StepMetrics
from .models import MotionParams, SensorParams, TargetState

AGGREGATE_HEADER = [
    "k",
    "truth_card",
    "truth_los",
    "q_mean_geo",
    "q_mean_nogeo",
    "ospa_mean_geo",
    "ospa_mean_nogeo",
]

RAW_HEADER = ["run", "k", "q", "est_east", "est_north", "ospa"]


@dataclass(frozen=True)
class TruthSpec:
    """Deterministic noiseless trajectory: start state plus turn schedule."""

    initial_state: TargetState
    birth_step: int = 0
    death_step: int | None = None  # exclusive; None = alive to the end
    turn_schedule: tuple = ()  # ((k, omega), ...)


@dataclass
class ScenarioConfig:
    geodetic_ref: GeodeticCoord | None
    buildings_path: str
    height_threshold: float
    boundary: dict
    sensor: Point2D
    sensor_height: float
    motion: MotionParams
    sensor_params: SensorParams
    filter_params: FilterParams
    num_steps: int
    truth_spec: TruthSpec
    seed: int
    use_geo_model: bool = True
    ospa: OspaParams = field(default_factory=OspaParams)

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            doc = json.load(fh)
        ref = doc.get("geodetic_ref")
        ts = doc["truth_spec"]
        buildings = doc["buildings_path"]
        if not os.path.isabs(buildings):
            buildings = os.path.join(os.path.dirname(os.path.abspath(path)), buildings)
        return cls(
            geodetic_ref=GeodeticCoord(
                ref["longitude"], ref["latitude"], ref.get("altitude", 0.0)
            )
            if ref
            else None,
            buildings_path=buildings,
            height_threshold=float(doc["height_threshold"]),
            boundary=doc["boundary"],
            sensor=Point2D(doc["sensor"]["east"], doc["sensor"]["north"]),
            sensor_height=float(doc["sensor"].get("height", 0.0)),
            motion=MotionParams(**doc["motion"]),
            sensor_params=SensorParams(
                sigma_theta=doc["sensor_params"]["sigma_theta"],
                sigma_r=doc["sensor_params"]["sigma_r"],
                p_detect=doc["sensor_params"]["p_detect"],
                clutter_rate=doc["sensor_params"]["clutter_rate"],
                bearing_span=tuple(doc["sensor_params"]["bearing_span"]),
                range_span=tuple(doc["sensor_params"]["range_span"]),
            ),
            filter_params=FilterParams(**doc["filter_params"]),
            num_steps=int(doc["num_steps"]),
            truth_spec=TruthSpec(
                initial_state=TargetState(*ts["initial_state"]),
                birth_step=int(ts.get("birth_step", 0)),
                death_step=ts.get("death_step"),
                turn_schedule=tuple(
                    (int(t["k"]), float(t["omega"]))
                    for t in ts.get("turn_schedule", [])
                ),
            ),
            seed=int(doc["seed"]),
            use_geo_model=bool(doc.get("use_geo_model", True)),
            ospa=OspaParams(**doc.get("ospa", {})),
        )


def boundary_from_spec(spec: dict) -> Polygon2D:
    kind = spec.get("type", "rect")
    if kind == "rect":
        return geometry.rect_boundary(spec["min"], spec["max"])
    if kind == "regular":
        return geometry.regular_boundary(spec["center"], spec["radius"], spec["sides"])
    if kind == "polygon":
        return Polygon2D(spec["vertices"])
    raise ValueError(f"unknown boundary type: {kind!r}")


def build_model(config: ScenarioConfig) -> GeoModel:
    """Run the offline pipeline for the scenario's building file."""
    buildings = geometry.load_buildings(config.buildings_path, config.geodetic_ref)
    return geometry.build_geo_model(
        buildings,
        config.sensor,
        config.sensor_height,
        config.height_threshold,
        boundary_from_spec(config.boundary),
    )


@dataclass
class StepRecord:
    k: int
    truth_state: TargetState | None
    truth_los: bool
    measurements: list
    q: float
    estimate: TargetState | None
    ospa: float


def generate_ground_truth(config: ScenarioConfig, geo: GeoModel):
    """Noiseless constant-turn trajectory plus per-step LOS flags.

    Raises if the trajectory crosses an obstacle or if birth/death do not
    happen in line of sight.
    """
    ts = config.truth_spec
    death = ts.death_step if ts.death_step is not None else config.num_steps
    schedule = dict(ts.turn_schedule)
    truths: list[TargetState | None] = [None] * config.num_steps
    los = [False] * config.num_steps

    state = ts.initial_state
    for k in range(ts.birth_step, min(death, config.num_steps)):
        if k in schedule:
            state = TargetState(
                state.p_east, state.v_east, state.p_north, state.v_north, schedule[k]
            )
        pos = state.as_array()[None, [0, 2]]
        if bool(geo.in_obstacle_many(pos)[0]):
            raise ValueError(f"ground truth enters an obstacle at step {k}")
        truths[k] = state
        los[k] = bool(geo.is_los_many(pos)[0])
        state = models.constant_turn_step(state, config.motion)

    if truths[ts.birth_step] is not None and not los[ts.birth_step]:
        raise ValueError("target birth is not in a LOS region")
    last = min(death, config.num_steps) - 1
    if truths[last] is not None and not los[last]:
        raise ValueError("target death is not in a LOS region")
    return truths, los


def _simulate_measurements(config, geo, truths, run_seed):
    rng = np.random.default_rng([run_seed, 0])
    return [
        models.generate_measurements(truths[k], geo, config.sensor_params, rng)
        for k in range(config.num_steps)
    ]


def _run_filter(config, filter_geo, truths, measurements, run_seed):
    """Run one filter variant over a pre-generated measurement stream."""
    rng = np.random.default_rng([run_seed, 1])
    fp = config.filter_params
    state = BernoulliState.empty(fp.num_particles)
    rows = []
    prev_scan: list = []
    for k in range(config.num_steps):
        state = bernoulli.step(
            state,
            measurements[k],
            filter_geo,
            config.motion,
            config.sensor_params,
            config.sensor,
            fp,
            rng,
            birth_measurements=prev_scan,
        )
        prev_scan = measurements[k]
        est = bernoulli.estimate(state, fp)
        est_state = est[0] if est else None
        truth_set = [truths[k].position] if truths[k] is not None else []
        est_set = [est_state.position] if est_state is not None else []
        rows.append((state.q, est_state, metrics.ospa(truth_set, est_set, config.ospa)))
    return rows


def run_scenario(config: ScenarioConfig, seed: int | None = None) -> list:
    """Single realization: simulate measurements, filter, record metrics."""
    run_seed = config.seed if seed is None else seed
    geo = build_model(config)
    truths, los = generate_ground_truth(config, geo)
    measurements = _simulate_measurements(config, geo, truths, run_seed)
    filter_geo = geo if config.use_geo_model else None
    rows = _run_filter(config, filter_geo, truths, measurements, run_seed)
    return [
        StepRecord(
            k=k,
            truth_state=truths[k],
            truth_los=los[k],
            measurements=measurements[k],
            q=rows[k][0],
            estimate=rows[k][1],
            ospa=rows[k][2],
        )
        for k in range(config.num_steps)
    ]


# worker globals, set once per process by _pool_init
_WORK = {}


def _pool_init(config, geo, truths):
    _WORK["config"] = config
    _WORK["geo"] = geo
    _WORK["truths"] = truths


def _run_pair(run_index: int):
    config, geo, truths = _WORK["config"], _WORK["geo"], _WORK["truths"]
    run_seed = config.seed + run_index
    measurements = _simulate_measurements(config, geo, truths, run_seed)
    rows_geo = _run_filter(config, geo, truths, measurements, run_seed)
    rows_nogeo = _run_filter(config, None, truths, measurements, run_seed)
    strip = lambda rows: [
        (q, (e.p_east, e.p_north) if e else None, o) for q, e, o in rows
    ]
    return strip(rows_geo), strip(rows_nogeo)


def run_monte_carlo(config: ScenarioConfig, n_runs: int, jobs: int = 1):
    """Paired Monte-Carlo evaluation of both filter variants.

    Returns ``(metrics_geo, metrics_nogeo, raw)`` where the metrics are
    per-step :class:`StepMetrics` averaged over runs and ``raw`` maps
    ``"geo"``/``"nogeo"`` to per-(run, step) ``(run, k, q, estimate, ospa)``
    logs for each variant.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    geo = build_model(config)
    truths, los = generate_ground_truth(config, geo)

    if jobs > 1:
        with multiprocessing.Pool(
            jobs, initializer=_pool_init, initargs=(config, geo, truths)
        ) as pool:
            results = pool.map(_run_pair, range(n_runs))
    else:
        _pool_init(config, geo, truths)
        results = [_run_pair(i) for i in range(n_runs)]

    def summarize(variant_rows):
        out = []
        for k in range(config.num_steps):
            out.append(
                StepMetrics(
                    k=k,
                    q_mean=float(np.mean([rows[k][0] for rows in variant_rows])),
                    ospa_mean=float(np.mean([rows[k][2] for rows in variant_rows])),
                    truth_cardinality=int(truths[k] is not None),
                    truth_los=bool(los[k]),
                )
            )
        return out

    geo_rows = [r[0] for r in results]
    nogeo_rows = [r[1] for r in results]
    flatten = lambda rows: [
        (i, k, *rows[i][k]) for i in range(n_runs) for k in range(config.num_steps)
    ]
    raw = {"geo": flatten(geo_rows), "nogeo": flatten(nogeo_rows)}
    return summarize(geo_rows), summarize(nogeo_rows), raw


def _fmt(v) -> str:
    return repr(float(v))


def write_aggregate_csv(path, metrics_geo, metrics_nogeo):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_HEADER)
        for g, n in zip(metrics_geo, metrics_nogeo):
            writer.writerow(
                [
                    g.k,
                    g.truth_cardinality,
                    int(g.truth_los),
                    _fmt(g.q_mean),
                    _fmt(n.q_mean),
                    _fmt(g.ospa_mean),
                    _fmt(n.ospa_mean),
                ]
            )


def write_raw_csv(path, raw):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_HEADER)
        for run, k, q, est, ospa_val in raw:
            writer.writerow(
                [
                    run,
                    k,
                    _fmt(q),
                    _fmt(est[0]) if est else "",
                    _fmt(est[1]) if est else "",
                    _fmt(ospa_val),
                ]
            )


SIMULATE_HEADER = [
    "k",
    "truth_card",
    "truth_los",
    "num_meas",
    "q",
    "est_east",
    "est_north",
    "ospa",
]


def write_scenario_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SIMULATE_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.k,
                    int(r.truth_state is not None),
                    int(r.truth_los),
                    len(r.measurements),
                    _fmt(r.q),
                    _fmt(r.estimate.p_east) if r.estimate else "",
                    _fmt(r.estimate.p_north) if r.estimate else "",
                    _fmt(r.ospa),
                ]
            )


def render_aggregate_svg(csv_path, svg_path):
    """Plot mean q and OSPA versus time with NLOS intervals shaded."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = []
    with open(csv_path) as fh:
        for row in csv.DictReader(fh):
            rows.append(row)
    k = [int(r["k"]) for r in rows]
    card = [int(r["truth_card"]) for r in rows]
    nlos = [bool(int(r["truth_card"])) and not bool(int(r["truth_los"])) for r in rows]
    qg = [float(r["q_mean_geo"]) for r in rows]
    qn = [float(r["q_mean_nogeo"]) for r in rows]
    og = [float(r["ospa_mean_geo"]) for r in rows]
    on = [float(r["ospa_mean_nogeo"]) for r in rows]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 8), sharex=True)
    for ax in (ax1, ax2):
        in_block = False
        for i, flag in enumerate(nlos + [False]):
            if flag and not in_block:
                start, in_block = i, True
            elif not flag and in_block:
                ax.axvspan(start - 0.5, i - 0.5, color="0.85", zorder=0)
                in_block = False
    ax1.plot(k, card, "k--", label="true cardinality")
    ax1.plot(k, qg, label="with geo model")
    ax1.plot(k, qn, label="without geo model")
    ax1.set_ylabel("probability of existence")
    ax1.legend()
    ax2.plot(k, og, label="with geo model")
    ax2.plot(k, on, "--", label="without geo model")
    ax2.set_ylabel("OSPA (m)")
    ax2.set_xlabel("time step k")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
