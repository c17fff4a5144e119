"""2D geospatial model: building footprints, hard shadows, and LOS queries.

All geometry lives in a local East-North plane (meters). The model is built
once, offline, from building vector data: footprints are reduced to convex
hulls, each hull casts a hard-shadow polygon away from the sensor out to the
surveillance boundary, and the resulting ``GeoModel`` answers point queries
(inside an obstacle? line of sight to the sensor?) for the filter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

# Signed-area epsilon (m^2) for orientation predicates and degeneracy checks.
AREA_EPS = 1e-9
# Distance tolerance (m) for boundary-inclusive containment tests.
EDGE_EPS = 1e-9

# WGS-84 ellipsoid
_WGS84_A = 6378137.0
_WGS84_F = 1.0 / 298.257223563
_WGS84_E2 = _WGS84_F * (2.0 - _WGS84_F)


@dataclass(frozen=True)
class Point2D:
    """A point in the local East-North plane, meters."""

    east: float
    north: float

    def __post_init__(self):
        if not (math.isfinite(self.east) and math.isfinite(self.north)):
            raise ValueError("Point2D coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.east, self.north], dtype=float)


@dataclass(frozen=True)
class GeodeticCoord:
    """Longitude/latitude in degrees, altitude in meters above the ellipsoid."""

    longitude: float
    latitude: float
    altitude: float = 0.0

    def __post_init__(self):
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")


class Polygon2D:
    """Closed simple polygon, counter-clockwise, first vertex not repeated."""

    def __init__(self, vertices, validate: bool = True):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError("vertices must be an (N, 2) array-like")
        if verts.shape[0] < 3:
            raise ValueError("a polygon needs at least 3 vertices")
        if not np.all(np.isfinite(verts)):
            raise ValueError("polygon vertices must be finite")
        area2 = _signed_area2(verts)
        if abs(area2) <= 2.0 * AREA_EPS:
            raise ValueError("polygon has (near-)zero area")
        if area2 < 0.0:  # normalize to CCW
            verts = verts[::-1].copy()
        if validate and _self_intersects(verts):
            raise ValueError("polygon is self-intersecting")
        self.vertices = verts
        self.vertices.setflags(write=False)

    @property
    def area(self) -> float:
        return 0.5 * _signed_area2(self.vertices)

    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
        a2 = cross.sum()
        return ((v + w) * cross[:, None]).sum(axis=0) / (3.0 * a2)

    def contains(self, point) -> bool:
        return bool(self.contains_many(np.atleast_2d(_coords(point)))[0])

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        """Boundary-inclusive containment for an (M, 2) array of points."""
        pts = np.asarray(points, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        inside = np.zeros(len(pts), dtype=bool)
        on_edge = np.zeros(len(pts), dtype=bool)
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        for (x1, y1), (x2, y2) in zip(v, w):
            # even-odd crossing count
            cond = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= cond & (x < xint)
            # boundary points count as inside
            ex, ey = x2 - x1, y2 - y1
            L2 = ex * ex + ey * ey
            t = np.clip(((x - x1) * ex + (y - y1) * ey) / L2, 0.0, 1.0)
            d2 = (x - (x1 + t * ex)) ** 2 + (y - (y1 + t * ey)) ** 2
            on_edge |= d2 <= EDGE_EPS * EDGE_EPS
        return inside | on_edge

    def __repr__(self):
        return f"Polygon2D({len(self.vertices)} vertices, area={self.area:.1f})"


@dataclass(frozen=True)
class BuildingRecord:
    """A building footprint (ENU polygon) with ground and roof heights."""

    footprint: Polygon2D
    ground_height: float
    roof_height: float

    def __post_init__(self):
        if self.roof_height < self.ground_height:
            raise ValueError("roof_height must be >= ground_height")


def _coords(point) -> np.ndarray:
    if isinstance(point, Point2D):
        return point.as_array()
    return np.asarray(point, dtype=float)


def _signed_area2(verts: np.ndarray) -> float:
    w = np.roll(verts, -1, axis=0)
    return float(np.sum(verts[:, 0] * w[:, 1] - verts[:, 1] * w[:, 0]))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _self_intersects(verts: np.ndarray) -> bool:
    n = len(verts)
    for i in range(n):
        a1, a2 = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = verts[j], verts[(j + 1) % n]
            if _segments_properly_intersect(a1, a2, b1, b2):
                return True
    return False


def geodetic_to_enu(coord: GeodeticCoord, ref: GeodeticCoord):
    """Convert a geodetic coordinate to an East-North offset (plus Up).

    Full WGS-84 path: geodetic -> ECEF -> local tangent frame at ``ref``.
    Returns ``(Point2D, up_meters)``.
    """
    xyz = _geodetic_to_ecef(coord)
    ref_xyz = _geodetic_to_ecef(ref)
    d = xyz - ref_xyz
    lon = math.radians(ref.longitude)
    lat = math.radians(ref.latitude)
    sl, cl = math.sin(lon), math.cos(lon)
    sp, cp = math.sin(lat), math.cos(lat)
    east = -sl * d[0] + cl * d[1]
    north = -sp * cl * d[0] - sp * sl * d[1] + cp * d[2]
    up = cp * cl * d[0] + cp * sl * d[1] + sp * d[2]
    return Point2D(east, north), up


def _geodetic_to_ecef(coord: GeodeticCoord) -> np.ndarray:
    lon = math.radians(coord.longitude)
    lat = math.radians(coord.latitude)
    sp, cp = math.sin(lat), math.cos(lat)
    n = _WGS84_A / math.sqrt(1.0 - _WGS84_E2 * sp * sp)
    x = (n + coord.altitude) * cp * math.cos(lon)
    y = (n + coord.altitude) * cp * math.sin(lon)
    z = (n * (1.0 - _WGS84_E2) + coord.altitude) * sp
    return np.array([x, y, z])


def convex_hull(points) -> Polygon2D:
    """Smallest convex polygon containing ``points`` (monotone chain).

    Output is CCW with no collinear interior vertices. Raises for fewer than
    3 points or an all-collinear input.
    """
    pts = np.unique(np.array([_coords(p) for p in points], dtype=float), axis=0)
    if len(pts) < 3:
        raise ValueError("convex hull needs at least 3 distinct points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= AREA_EPS:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise ValueError("degenerate (collinear) input: no 2D convex hull")
    return Polygon2D(np.array(hull), validate=False)


def point_in_polygon(p, poly: Polygon2D) -> bool:
    """True iff ``p`` is interior to or on the boundary of ``poly``."""
    return poly.contains(p)


def _sensor_angles(verts: np.ndarray, sensor: np.ndarray) -> np.ndarray:
    d = verts - sensor
    return np.arctan2(d[:, 1], d[:, 0])


def cast_shadow(obstacle: Polygon2D, sensor, boundary: Polygon2D) -> Polygon2D:
    """Hard-shadow polygon cast by a convex obstacle, clipped to the boundary.

    The shadow is the set of boundary points whose segment to the sensor
    crosses the obstacle interior: the region behind the sensor-facing edge
    chain, between the two silhouette rays. For a convex obstacle this region
    is convex, so it is assembled as the visible vertex chain plus the two
    silhouette rays pushed past the boundary, then clipped (Sutherland-
    Hodgman) against the convex surveillance boundary.
    """
    s = _coords(sensor)
    if obstacle.contains(s):
        raise ValueError("sensor lies inside (or on) the obstacle")

    v = obstacle.vertices
    n = len(v)
    nxt = np.roll(v, -1, axis=0)
    edge = nxt - v
    # CCW polygon: edge i faces the sensor iff the sensor is on its right
    front = (edge[:, 0] * (s[1] - v[:, 1]) - edge[:, 1] * (s[0] - v[:, 0])) < -AREA_EPS
    if not front.any():
        raise ValueError("no sensor-facing edge; obstacle is degenerate")

    # front edges of a convex polygon are cyclically contiguous
    start = 0
    if front.all():  # cannot happen for a sensor outside, guard anyway
        raise ValueError("sensor appears inside the obstacle")
    while not (front[start] and not front[start - 1]):
        start = (start + 1) % n
    chain = [v[start]]
    i = start
    while front[i]:
        chain.append(nxt[i])
        i = (i + 1) % n
    chain = np.array(chain)  # visible chain, silhouette vertex to silhouette vertex

    # push silhouette rays well past the boundary
    diam = np.ptp(boundary.vertices, axis=0).max() + np.linalg.norm(
        boundary.vertices.mean(axis=0) - s
    )
    far_last = _extend_ray(s, chain[-1], 8.0 * diam)
    far_first = _extend_ray(s, chain[0], 8.0 * diam)
    subject = np.vstack([chain, far_last, far_first])

    clipped = _clip_convex(subject, boundary.vertices)
    clipped = _dedupe(clipped)
    if len(clipped) < 3 or abs(_signed_area2(clipped)) <= 2.0 * AREA_EPS:
        raise ValueError("shadow degenerates to zero area (obstacle outside boundary?)")
    return Polygon2D(clipped, validate=False)


def _extend_ray(origin: np.ndarray, through: np.ndarray, length: float) -> np.ndarray:
    d = through - origin
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise ValueError("ray through the sensor position itself")
    return through + d / norm * length


def _clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of ``subject`` against convex CCW ``clip``."""
    output = list(subject)
    m = len(clip)
    for i in range(m):
        a, b = clip[i], clip[(i + 1) % m]
        if not output:
            break
        polygon, output = output, []
        for j, cur in enumerate(polygon):
            prev = polygon[j - 1]
            cur_in = _cross(a, b, cur) >= -AREA_EPS
            prev_in = _cross(a, b, prev) >= -AREA_EPS
            if cur_in:
                if not prev_in:
                    output.append(_line_intersection(prev, cur, a, b))
                output.append(cur)
            elif prev_in:
                output.append(_line_intersection(prev, cur, a, b))
    return np.array(output) if output else np.empty((0, 2))


def _line_intersection(p1, p2, q1, q2) -> np.ndarray:
    r = p2 - p1
    s = q2 - q1
    denom = r[0] * s[1] - r[1] * s[0]
    t = ((q1[0] - p1[0]) * s[1] - (q1[1] - p1[1]) * s[0]) / denom
    return p1 + t * r


def _dedupe(verts: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    if len(verts) == 0:
        return verts
    keep = [verts[0]]
    for p in verts[1:]:
        if np.linalg.norm(p - keep[-1]) > tol:
            keep.append(p)
    if len(keep) > 1 and np.linalg.norm(keep[0] - keep[-1]) <= tol:
        keep.pop()
    return np.array(keep)


class _ConvexSet:
    """Half-plane representation of a convex CCW polygon for fast queries."""

    def __init__(self, verts: np.ndarray):
        nxt = np.roll(verts, -1, axis=0)
        e = nxt - verts
        # inward normal for CCW is (-ey, ex); inside iff dot(p - v, inward) >= -eps
        lengths = np.hypot(e[:, 0], e[:, 1])
        self.normals = np.column_stack([-e[:, 1], e[:, 0]]) / lengths[:, None]
        self.offsets = np.einsum("ij,ij->i", self.normals, verts)

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        proj = pts @ self.normals.T
        return np.all(proj >= self.offsets - EDGE_EPS, axis=1)


class _ConvexGroup:
    """Any-membership test over a family of convex CCW polygons.

    All half-planes are stacked into one matrix so a batch query costs a
    single matrix product plus per-polygon segmented minima.
    """

    def __init__(self, polygons):
        sets = [_ConvexSet(p.vertices) for p in polygons]
        self.empty = not sets
        if self.empty:
            return
        self.normals = np.vstack([s.normals for s in sets])
        self.offsets = np.concatenate([s.offsets for s in sets])
        counts = [len(s.offsets) for s in sets]
        self.starts = np.concatenate([[0], np.cumsum(counts[:-1])]).astype(np.intp)

    def any_contains(self, pts: np.ndarray) -> np.ndarray:
        if self.empty:
            return np.zeros(len(pts), dtype=bool)
        slack = pts @ self.normals.T - (self.offsets - EDGE_EPS)
        mins = np.minimum.reduceat(slack, self.starts, axis=1)
        return (mins >= 0.0).any(axis=1)


@dataclass
class GeoModel:
    """Immutable offline geospatial model: obstacles, shadows, boundary.

    ``obstacles[i]`` is convex and casts ``shadows[i]``. All queries are
    read-only and thread-safe.
    """

    sensor: Point2D
    sensor_height: float
    obstacles: list
    shadows: list
    boundary: Polygon2D
    _obstacle_group: _ConvexGroup = field(default=None, repr=False)
    _blocked_group: _ConvexGroup = field(default=None, repr=False)
    _boundary_set: _ConvexSet = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.obstacles) != len(self.shadows):
            raise ValueError("each obstacle needs exactly one shadow")
        for obs in self.obstacles:
            if obs.contains(self.sensor):
                raise ValueError("sensor lies inside an obstacle")
        if not self.boundary.contains(self.sensor):
            raise ValueError("sensor lies outside the surveillance boundary")
        self._obstacle_group = _ConvexGroup(self.obstacles)
        self._blocked_group = _ConvexGroup(list(self.shadows) + list(self.obstacles))
        self._boundary_set = _ConvexSet(self.boundary.vertices)

    def in_obstacle_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return self._obstacle_group.any_contains(pts)

    def is_los_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        los = self._boundary_set.contains_many(pts)
        los &= ~self._blocked_group.any_contains(pts)
        return los

    def to_json(self) -> str:
        doc = {
            "sensor": [self.sensor.east, self.sensor.north],
            "sensor_height": self.sensor_height,
            "obstacles": [o.vertices.tolist() for o in self.obstacles],
            "shadows": [s.vertices.tolist() for s in self.shadows],
            "boundary": self.boundary.vertices.tolist(),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GeoModel":
        doc = json.loads(text)
        return cls(
            sensor=Point2D(*doc["sensor"]),
            sensor_height=doc.get("sensor_height", 0.0),
            obstacles=[Polygon2D(v, validate=False) for v in doc["obstacles"]],
            shadows=[Polygon2D(v, validate=False) for v in doc["shadows"]],
            boundary=Polygon2D(doc["boundary"], validate=False),
        )

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "GeoModel":
        with open(path) as fh:
            return cls.from_json(fh.read())


def in_obstacle(p, model: GeoModel) -> bool:
    """True iff ``p`` lies inside (or on) any obstacle polygon."""
    return bool(model.in_obstacle_many(np.atleast_2d(_coords(p)))[0])


def is_los(p, model: GeoModel) -> bool:
    """True iff ``p`` is inside the boundary and in no shadow or obstacle."""
    return bool(model.is_los_many(np.atleast_2d(_coords(p)))[0])


def _polygons_intersect(a: Polygon2D, b: Polygon2D) -> bool:
    if a.contains_many(b.vertices).any() or b.contains_many(a.vertices).any():
        return True
    av, bv = a.vertices, b.vertices
    an, bn = np.roll(av, -1, axis=0), np.roll(bv, -1, axis=0)
    for p1, p2 in zip(av, an):
        for q1, q2 in zip(bv, bn):
            if _segments_properly_intersect(p1, p2, q1, q2):
                return True
    return False


def build_geo_model(
    buildings,
    sensor,
    sensor_height: float,
    height_threshold: float,
    boundary: Polygon2D,
) -> GeoModel:
    """Offline pipeline: filter buildings, hull footprints, cast shadows.

    Keeps buildings with ``roof_height >= height_threshold`` whose footprint
    intersects the boundary; each retained footprint becomes its convex hull
    and casts one shadow polygon.
    """
    sensor_pt = sensor if isinstance(sensor, Point2D) else Point2D(*_coords(sensor))
    obstacles, shadows = [], []
    for b in buildings:
        if b.roof_height < height_threshold:
            continue
        hull = convex_hull(b.footprint.vertices)
        if not _polygons_intersect(hull, boundary):
            continue
        if hull.contains(sensor_pt):
            raise ValueError("sensor lies inside a retained building footprint")
        obstacles.append(hull)
        shadows.append(cast_shadow(hull, sensor_pt, boundary))
    return GeoModel(sensor_pt, sensor_height, obstacles, shadows, boundary)


def rect_boundary(min_corner, max_corner) -> Polygon2D:
    """Axis-aligned rectangular surveillance boundary."""
    (x0, y0), (x1, y1) = _coords(min_corner), _coords(max_corner)
    return Polygon2D([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], validate=False)


def regular_boundary(center, radius: float, sides: int) -> Polygon2D:
    """Regular-polygon surveillance boundary."""
    c = _coords(center)
    ang = 2.0 * np.pi * np.arange(sides) / sides
    return Polygon2D(
        np.column_stack([c[0] + radius * np.cos(ang), c[1] + radius * np.sin(ang)]),
        validate=False,
    )


def load_buildings(path, ref: GeodeticCoord | None = None) -> list:
    """Read building footprints from a GeoJSON FeatureCollection.

    Each ``Polygon`` feature needs numeric ``ground_elev`` and ``roof_height``
    properties. Coordinates are longitude/latitude degrees unless the feature
    (or top level) carries ``crs: "enu"``, in which case they are meters.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise ValueError("expected a GeoJSON FeatureCollection")
    top_crs = doc.get("crs") if isinstance(doc.get("crs"), str) else None
    records = []
    for feat in doc.get("features", []):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon":
            continue
        props = feat.get("properties") or {}
        ring = geom["coordinates"][0]
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring = ring[:-1]
        crs = props.get("crs", top_crs)
        if crs == "enu":
            verts = np.asarray(ring, dtype=float)
        else:
            if ref is None:
                raise ValueError("geodetic coordinates need a reference point")
            verts = np.array(
                [
                    geodetic_to_enu(
                        GeodeticCoord(lon, lat, ref.altitude), ref
                    )[0].as_array()
                    for lon, lat in ring
                ]
            )
        records.append(
            BuildingRecord(
                footprint=Polygon2D(verts),
                ground_height=float(props["ground_elev"]),
                roof_height=float(props["roof_height"]),
            )
        )
    return records
