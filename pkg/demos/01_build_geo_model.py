"""Walk through the offline geospatial pipeline on the packaged scenario.

Loads the bundled building footprints, filters the tall ones, casts their
shadows, and prints a small report of what the sensor can and cannot see.
Writes the resulting model to geo_model.json next to this script.
"""

import os
from importlib import resources

import numpy as np

from shadowtrack import (
    GeodeticCoord,
    Point2D,
    build_geo_model,
    is_los,
    load_buildings,
    rect_boundary,
)

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = resources.files("shadowtrack") / "data"

REF = GeodeticCoord(longitude=-73.9675, latitude=40.781, altitude=200.0)
SENSOR = Point2D(0.0, 0.0)
SENSOR_HEIGHT = 200.0
HEIGHT_THRESHOLD = 115.0


def main():
    buildings = load_buildings(str(DATA / "nyc_buildings.geojson"), REF)
    print(f"loaded {len(buildings)} building footprints")
    for i, b in enumerate(buildings):
        c = b.footprint.centroid()
        print(
            f"  building {i}: roof {b.roof_height:6.1f} m, "
            f"centroid ({c[0]:7.1f} E, {c[1]:7.1f} N), "
            f"area {b.footprint.area:8.0f} m^2"
        )

    boundary = rect_boundary((-150.0, -800.0), (1150.0, 800.0))
    model = build_geo_model(
        buildings, SENSOR, SENSOR_HEIGHT, HEIGHT_THRESHOLD, boundary
    )
    print(
        f"\nretained {len(model.obstacles)} obstacles above "
        f"{HEIGHT_THRESHOLD:.0f} m inside the boundary"
    )
    for i, (obs, sh) in enumerate(zip(model.obstacles, model.shadows)):
        print(
            f"  obstacle {i}: {len(obs.vertices)} vertices, "
            f"shadow area {sh.area / 1e3:7.1f} x 10^3 m^2"
        )

    # how much of the surveillance region is actually observable?
    rng = np.random.default_rng(0)
    lo = boundary.vertices.min(axis=0)
    hi = boundary.vertices.max(axis=0)
    pts = rng.uniform(lo, hi, size=(20000, 2))
    visible = model.is_los_many(pts)
    print(f"\nline-of-sight coverage: {visible.mean():.1%} of the boundary box")

    probe = Point2D(600.0, 300.0)
    print(f"probe {probe}: {'LOS' if is_los(probe, model) else 'shadowed'}")

    out = os.path.join(HERE, "geo_model.json")
    model.save(out)
    print(f"\nsaved model -> {out}")


if __name__ == "__main__":
    main()
