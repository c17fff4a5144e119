"""Command-line entry point: offline geo pipeline and experiment harness.

Subcommands: ``geo-build``, ``simulate``, ``mc``, ``plot``. Diagnostics go
to stderr; data only to the ``--out`` files. The ``SHADOWTRACK_LOG``
environment variable ({error, warn, info, debug}) sets verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import geometry, harness
from .geometry import GeodeticCoord, Point2D

log = logging.getLogger("shadowtrack")

_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging():
    level = _LEVELS.get(os.environ.get("SHADOWTRACK_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")


def _parse_boundary(text: str) -> dict:
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)
    return json.loads(text)


def cmd_geo_build(args) -> int:
    ref = None
    if args.ref:
        lon, lat, alt = (float(v) for v in args.ref.split(","))
        ref = GeodeticCoord(lon, lat, alt)
    east, north, height = (float(v) for v in args.sensor.split(","))
    try:
        buildings = geometry.load_buildings(args.buildings, ref)
    except json.JSONDecodeError as exc:
        print(
            f"error: malformed GeoJSON in {args.buildings}: {exc.msg} "
            f"at byte offset {exc.pos}",
            file=sys.stderr,
        )
        return 1
    boundary = harness.boundary_from_spec(_parse_boundary(args.boundary))
    model = geometry.build_geo_model(
        buildings, Point2D(east, north), height, args.height_threshold, boundary
    )
    model.save(args.out)
    print(
        f"geo model: {len(model.obstacles)} obstacles, "
        f"{len(model.shadows)} shadows -> {args.out}",
        file=sys.stderr,
    )
    return 0


def cmd_simulate(args) -> int:
    config = harness.ScenarioConfig.from_json(args.config)
    if args.no_geo:
        config.use_geo_model = False
    records = harness.run_scenario(config, seed=args.seed)
    harness.write_scenario_csv(args.out, records)
    print(f"wrote {len(records)} steps -> {args.out}", file=sys.stderr)
    return 0


def cmd_mc(args) -> int:
    config = harness.ScenarioConfig.from_json(args.config)
    if args.seed is not None:
        config.seed = args.seed
    metrics_geo, metrics_nogeo, raw = harness.run_monte_carlo(
        config, args.runs, jobs=args.jobs
    )
    harness.write_aggregate_csv(args.out, metrics_geo, metrics_nogeo)
    if args.raw_out:
        variant = "geo" if config.use_geo_model else "nogeo"
        harness.write_raw_csv(args.raw_out, raw[variant])
    if args.svg:
        harness.render_aggregate_svg(args.out, args.svg)
    print(f"aggregated {args.runs} runs -> {args.out}", file=sys.stderr)
    return 0


def cmd_plot(args) -> int:
    harness.render_aggregate_svg(args.inp, args.out)
    print(f"wrote plot -> {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shadowtrack",
        description="Occlusion-aware Bernoulli particle filter experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geo-build", help="build the offline geospatial model")
    p.add_argument("--buildings", required=True, help="GeoJSON FeatureCollection")
    p.add_argument("--ref", help="geodetic reference 'lon,lat,alt'")
    p.add_argument("--sensor", required=True, help="sensor 'east,north,height'")
    p.add_argument("--height-threshold", type=float, required=True)
    p.add_argument("--boundary", required=True, help="boundary spec (JSON or path)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_geo_build)

    p = sub.add_parser("simulate", help="single scenario realization")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-geo", action="store_true", help="run the filter blind")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc", help="paired Monte-Carlo evaluation")
    p.add_argument("--config", required=True)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--raw-out", help="optional per-run log CSV")
    p.add_argument("--svg", help="optional SVG plot of the aggregate")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("plot", help="plot an aggregate CSV as SVG")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
