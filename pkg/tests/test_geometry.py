"""Geometry unit tests against independent oracles.

Oracles here are deliberately naive re-implementations: an O(n^3) convex
hull (every hull edge must have all points on one side), a winding-number
point-in-polygon, and a dense segment march for shadow membership.
"""

import json
import math

import numpy as np
import pytest

from shadowtrack.geometry import (
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


# ---------------------------------------------------------------- oracles


def hull_oracle(points):
    """Brute-force hull: a point is a hull vertex iff some directed line
    through it and another point has all remaining points on the left."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    n = len(pts)
    edges = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = pts[j] - pts[i]
            off = pts - pts[i]
            cross = d[0] * off[:, 1] - d[1] * off[:, 0]
            if np.all(cross >= -1e-9):
                edges.append((i, j))
    verts = sorted({i for e in edges for i in e})
    return pts[verts]


def winding_number_contains(p, verts):
    """Winding-number membership (boundary counts as inside)."""
    p = np.asarray(p, dtype=float)
    total = 0.0
    n = len(verts)
    for i in range(n):
        a = verts[i] - p
        b = verts[(i + 1) % n] - p
        cross = a[0] * b[1] - a[1] * b[0]
        dot = a @ b
        # on-segment check
        seg = verts[(i + 1) % n] - verts[i]
        L2 = seg @ seg
        t = np.clip((p - verts[i]) @ seg / L2, 0.0, 1.0)
        if np.linalg.norm(verts[i] + t * seg - p) <= 1e-9:
            return True
        total += math.atan2(cross, dot)
    return abs(total) > math.pi


def segment_blocked_march(sensor, p, obstacle_verts, samples=1024):
    """True iff the sensor->p segment passes through the obstacle interior,
    by dense sampling along the segment."""
    t = np.linspace(0.0, 1.0, samples)[1:-1]
    pts = sensor[None, :] + t[:, None] * (p - sensor)[None, :]
    nxt = np.roll(obstacle_verts, -1, axis=0)
    e = nxt - obstacle_verts
    normals = np.column_stack([-e[:, 1], e[:, 0]])
    offsets = np.einsum("ij,ij->i", normals, obstacle_verts)
    slack = pts @ normals.T - offsets
    return bool(np.any(np.min(slack, axis=1) > 1e-9))


# ------------------------------------------------------------- primitives


class TestPolygon2D:
    def test_ccw_normalization(self):
        cw = Polygon2D([[0, 0], [0, 1], [1, 1], [1, 0]])
        assert cw.area > 0

    def test_area_square(self):
        sq = Polygon2D([[0, 0], [2, 0], [2, 2], [0, 2]])
        assert sq.area == pytest.approx(4.0)

    def test_centroid(self):
        sq = Polygon2D([[0, 0], [2, 0], [2, 2], [0, 2]])
        assert np.allclose(sq.centroid(), [1.0, 1.0])

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            Polygon2D([[0, 0], [1, 1], [2, 2]])
        with pytest.raises(ValueError):
            Polygon2D([[0, 0], [1, 0]])
        with pytest.raises(ValueError):
            Polygon2D([[0, 0], [1, 0], [np.nan, 1]])

    def test_rejects_self_intersecting(self):
        with pytest.raises(ValueError):
            Polygon2D([[0, 0], [2, 2], [2, 0], [0, 2]])

    def test_contains_boundary_inclusive(self):
        sq = Polygon2D([[0, 0], [2, 0], [2, 2], [0, 2]])
        assert sq.contains((1, 1))
        assert sq.contains((0, 0))
        assert sq.contains((2, 1))
        assert not sq.contains((2.001, 1))
        assert not sq.contains((-0.001, 1))

    def test_contains_matches_winding_oracle(self, rng):
        for _ in range(30):
            verts = rng.uniform(-10, 10, size=(rng.integers(3, 9), 2))
            try:
                poly = Polygon2D(verts)
            except ValueError:
                continue
            pts = rng.uniform(-12, 12, size=(200, 2))
            got = poly.contains_many(pts)
            want = np.array(
                [winding_number_contains(p, poly.vertices) for p in pts]
            )
            assert np.array_equal(got, want)


class TestConvexHull:
    def test_square_with_interior_points(self):
        pts = [[0, 0], [4, 0], [4, 4], [0, 4], [2, 2], [1, 3]]
        hull = convex_hull(pts)
        assert len(hull.vertices) == 4
        assert hull.area == pytest.approx(16.0)

    def test_drops_collinear_vertices(self):
        pts = [[0, 0], [2, 0], [4, 0], [4, 4], [0, 4]]
        hull = convex_hull(pts)
        assert len(hull.vertices) == 4

    def test_rejects_collinear_input(self):
        with pytest.raises(ValueError):
            convex_hull([[0, 0], [1, 1], [2, 2], [3, 3]])

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(100):
            pts = rng.uniform(-100, 100, size=(rng.integers(4, 40), 2))
            hull = convex_hull(pts)
            want = hull_oracle(pts)
            got = hull.vertices
            assert len(got) == len(want)
            got_sorted = got[np.lexsort((got[:, 1], got[:, 0]))]
            want_sorted = want[np.lexsort((want[:, 1], want[:, 0]))]
            assert np.allclose(got_sorted, want_sorted, atol=1e-9)

    def test_all_points_inside_hull(self, rng):
        pts = rng.normal(0, 50, size=(60, 2))
        hull = convex_hull(pts)
        assert hull.contains_many(pts).all()


class TestGeodeticToEnu:
    REF = GeodeticCoord(-73.9675, 40.781, 200.0)

    def test_reference_maps_to_origin(self):
        p, up = geodetic_to_enu(self.REF, self.REF)
        assert abs(p.east) < 1e-9 and abs(p.north) < 1e-9 and abs(up) < 1e-9

    def test_small_offsets_match_meridian_arc(self):
        # 0.001 deg of latitude is ~111.0 m at this latitude
        north_pt = GeodeticCoord(self.REF.longitude, self.REF.latitude + 1e-3, 200.0)
        p, _ = geodetic_to_enu(north_pt, self.REF)
        assert abs(p.east) < 0.01
        assert p.north == pytest.approx(111.04, abs=0.2)

        east_pt = GeodeticCoord(self.REF.longitude + 1e-3, self.REF.latitude, 200.0)
        p, _ = geodetic_to_enu(east_pt, self.REF)
        # one deg of longitude shrinks with cos(latitude)
        expect = 111.32e3 * 1e-3 * math.cos(math.radians(self.REF.latitude))
        assert p.east == pytest.approx(expect, rel=2e-3)
        assert abs(p.north) < 0.05

    def test_altitude_maps_to_up(self):
        pt = GeodeticCoord(self.REF.longitude, self.REF.latitude, 250.0)
        p, up = geodetic_to_enu(pt, self.REF)
        assert up == pytest.approx(50.0, abs=1e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            GeodeticCoord(200.0, 0.0)
        with pytest.raises(ValueError):
            GeodeticCoord(0.0, 95.0)


# ----------------------------------------------------------------- shadow


class TestCastShadow:
    BOUNDARY = rect_boundary((-200, -200), (400, 400))

    def test_known_square(self):
        # square x in [10,20], y in [-5,5]; sensor at origin looking +x:
        # shadow is beyond x=10 between the rays y = +/- x/2
        sq = Polygon2D([[10, -5], [20, -5], [20, 5], [10, 5]])
        shadow = cast_shadow(sq, (0, 0), self.BOUNDARY)
        assert shadow.contains((30, 0))
        assert shadow.contains((40, 10))
        assert shadow.contains((15, 0))  # rear of the obstacle is shadowed
        assert not shadow.contains((5, 0))  # in front
        assert not shadow.contains((40, 25))  # outside the silhouette rays
        assert not shadow.contains((40, -25))

    def test_shadow_clipped_to_boundary(self):
        sq = Polygon2D([[10, -5], [20, -5], [20, 5], [10, 5]])
        shadow = cast_shadow(sq, (0, 0), self.BOUNDARY)
        assert self.BOUNDARY.contains_many(shadow.vertices).all()

    def test_sensor_inside_rejected(self):
        sq = Polygon2D([[-1, -1], [1, -1], [1, 1], [-1, 1]])
        with pytest.raises(ValueError):
            cast_shadow(sq, (0, 0), self.BOUNDARY)

    def test_obstacle_outside_boundary_rejected(self):
        far = Polygon2D([[1000, 0], [1010, 0], [1010, 10], [1000, 10]])
        with pytest.raises(ValueError):
            cast_shadow(far, (0, 0), self.BOUNDARY)

    def test_matches_ray_march_oracle_random(self, rng):
        sensor = np.array([0.0, 0.0])
        for _ in range(10):
            center = rng.uniform(40, 150, size=2) * rng.choice([-1, 1], size=2)
            pts = center + rng.uniform(-15, 15, size=(8, 2))
            obstacle = convex_hull(pts)
            if obstacle.contains(Point2D(*sensor)):
                continue
            shadow = cast_shadow(obstacle, sensor, self.BOUNDARY)
            samples = rng.uniform(-200, 400, size=(400, 2))
            inside_obs = obstacle.contains_many(samples)
            got = shadow.contains_many(samples)
            want = np.array(
                [segment_blocked_march(sensor, p, obstacle.vertices) for p in samples]
            )
            # skip points near shadow/obstacle edges where the two tests
            # legitimately disagree by a hair
            edge_dist = np.array(
                [_dist_to_polygon_boundary(p, shadow.vertices) for p in samples]
            )
            check = (~inside_obs) & (edge_dist > 0.5)
            assert np.array_equal(got[check], want[check])


def _dist_to_polygon_boundary(p, verts):
    n = len(verts)
    best = np.inf
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        seg = b - a
        t = np.clip((p - a) @ seg / (seg @ seg), 0.0, 1.0)
        best = min(best, np.linalg.norm(a + t * seg - p))
    return best


# --------------------------------------------------------------- GeoModel


class TestGeoModel:
    def _small_model(self):
        boundary = rect_boundary((-100, -100), (300, 300))
        obstacle = Polygon2D([[50, -10], [70, -10], [70, 10], [50, 10]])
        sensor = Point2D(0.0, 0.0)
        shadow = cast_shadow(obstacle, sensor, boundary)
        return GeoModel(sensor, 30.0, [obstacle], [shadow], boundary)

    def test_los_queries(self):
        m = self._small_model()
        assert is_los((20, 0), m)  # before obstacle
        assert not is_los((100, 0), m)  # behind it
        assert is_los((100, 150), m)  # off to the side
        assert not is_los((60, 0), m)  # inside it
        assert not is_los((500, 0), m)  # outside the boundary

    def test_obstacle_queries(self):
        m = self._small_model()
        assert in_obstacle((60, 0), m)
        assert not in_obstacle((100, 0), m)

    def test_json_roundtrip(self, tmp_path):
        m = self._small_model()
        path = tmp_path / "model.json"
        m.save(path)
        m2 = GeoModel.load(path)
        pts = np.random.default_rng(7).uniform(-100, 300, size=(500, 2))
        assert np.array_equal(m.is_los_many(pts), m2.is_los_many(pts))
        assert np.array_equal(m.in_obstacle_many(pts), m2.in_obstacle_many(pts))

    def test_sensor_in_obstacle_rejected(self):
        boundary = rect_boundary((-100, -100), (300, 300))
        obstacle = Polygon2D([[-10, -10], [10, -10], [10, 10], [-10, 10]])
        shadow = rect_boundary((200, 200), (250, 250))  # placeholder
        with pytest.raises(ValueError):
            GeoModel(Point2D(0, 0), 30.0, [obstacle], [shadow], boundary)

    def test_sensor_outside_boundary_rejected(self):
        boundary = rect_boundary((100, 100), (300, 300))
        with pytest.raises(ValueError):
            GeoModel(Point2D(0, 0), 30.0, [], [], boundary)

    def test_mismatched_shadow_count_rejected(self):
        boundary = rect_boundary((-100, -100), (300, 300))
        obstacle = Polygon2D([[50, -10], [70, -10], [70, 10], [50, 10]])
        with pytest.raises(ValueError):
            GeoModel(Point2D(0, 0), 30.0, [obstacle], [], boundary)


class TestBuildGeoModel:
    BOUNDARY = rect_boundary((-100, -100), (300, 300))

    def _building(self, verts, roof):
        return BuildingRecord(Polygon2D(verts), ground_height=0.0, roof_height=roof)

    def test_height_threshold_filters(self):
        tall = self._building([[50, -10], [70, -10], [70, 10], [50, 10]], 150.0)
        low = self._building([[50, 40], [70, 40], [70, 60], [50, 60]], 80.0)
        m = build_geo_model([tall, low], Point2D(0, 0), 30.0, 115.0, self.BOUNDARY)
        assert len(m.obstacles) == 1
        assert len(m.shadows) == 1

    def test_outside_boundary_filtered(self):
        far = self._building([[500, 0], [520, 0], [520, 20], [500, 20]], 150.0)
        m = build_geo_model([far], Point2D(0, 0), 30.0, 115.0, self.BOUNDARY)
        assert len(m.obstacles) == 0

    def test_nonconvex_footprint_hulled(self):
        ell = self._building(
            [[50, -10], [70, -10], [70, 10], [60, 10], [60, 0], [50, 0]], 150.0
        )
        m = build_geo_model([ell], Point2D(0, 0), 30.0, 115.0, self.BOUNDARY)
        hull = m.obstacles[0]
        assert len(hull.vertices) == 5  # the notch corner is dropped
        assert hull.area == pytest.approx(350.0)
        assert hull.contains_many(ell.footprint.vertices).all()


class TestBoundaries:
    def test_rect(self):
        b = rect_boundary((-1, -2), (3, 4))
        assert b.area == pytest.approx(24.0)

    def test_regular(self):
        b = regular_boundary((0, 0), 10.0, 64)
        assert b.area == pytest.approx(math.pi * 100.0, rel=2e-3)


class TestLoadBuildings:
    def test_enu_features(self, tmp_path):
        doc = {
            "type": "FeatureCollection",
            "crs": "enu",
            "features": [
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [
                            [[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]
                        ],
                    },
                    "properties": {"ground_elev": 5.0, "roof_height": 120.0},
                }
            ],
        }
        path = tmp_path / "b.geojson"
        path.write_text(json.dumps(doc))
        recs = load_buildings(path)
        assert len(recs) == 1
        assert recs[0].roof_height == 120.0
        assert recs[0].footprint.area == pytest.approx(100.0)

    def test_geodetic_needs_ref(self, tmp_path):
        doc = {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [[[-73.9, 40.7], [-73.89, 40.7], [-73.89, 40.71]]],
                    },
                    "properties": {"ground_elev": 0.0, "roof_height": 50.0},
                }
            ],
        }
        path = tmp_path / "b.geojson"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            load_buildings(path)

    def test_non_collection_rejected(self, tmp_path):
        path = tmp_path / "b.geojson"
        path.write_text(json.dumps({"type": "Feature"}))
        with pytest.raises(ValueError):
            load_buildings(path)

    def test_packaged_fixture_loads(self, default_config):
        recs = load_buildings(default_config.buildings_path, default_config.geodetic_ref)
        assert len(recs) == 8
        tall = [r for r in recs if r.roof_height >= 115.0]
        assert len(tall) == 6  # one tall building sits outside the boundary
