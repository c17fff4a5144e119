"""Occlusion-aware single-target tracking in urban terrain.

A sequential-Monte-Carlo Bernoulli filter whose birth, survival, and
detection models are conditioned on line-of-sight regions computed from
building footprints, plus the simulation and evaluation harness around it.
"""

from .bernoulli import (
    BernoulliState,
    FilterParams,
    Particle,
    adaptive_birth,
    detection_prob,
    estimate,
    predict_existence,
    predict_particles,
    resample,
    step,
    update,
)
from .geometry import (
    BuildingRecord,
    GeodeticCoord,
    GeoModel,
    Point2D,
    Polygon2D,
    build_geo_model,
    cast_shadow,
    convex_hull,
    geodetic_to_enu,
    in_obstacle,
    is_los,
    load_buildings,
    point_in_polygon,
    rect_boundary,
    regular_boundary,
)
from .harness import (
    ScenarioConfig,
    StepRecord,
    TruthSpec,
    generate_ground_truth,
    run_monte_carlo,
    run_scenario,
)
from .metrics import OspaParams, StepMetrics, aggregate, ospa
from .models import (
    Measurement,
    MotionParams,
    SensorParams,
    TargetState,
    constant_turn_step,
    generate_clutter,
    generate_measurements,
    likelihood,
    measure,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
