"""Geometric and temporal primitives.

Distances are great-circle (haversine, fixed earth radius).  Everything that
needs straight lines (segment intersection, point-in-polygon, closest points)
works in a local equirectangular projection: longitude scaled by the cosine of
the mean latitude.  The projection is affine in (lat, lon), so a segment that
is straight in degrees stays straight in projected meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from typing import Iterable, Sequence

EARTH_RADIUS_M = 6_371_000.0

Timestamp = datetime
Duration = timedelta

_DEG = math.pi / 180.0
# Shewchuk's bound for the naive 2x2 orientation determinant
_ORIENT_ERRBOUND = 3.3306690738754716e-16


# --------------------------------------------------------------------------
# timestamps
# --------------------------------------------------------------------------

def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 instant into an aware UTC datetime.

    A trailing ``Z`` or an explicit offset is required; naive times are rejected.
    """
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC designator")
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    dt = as_utc(dt)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def as_utc(dt: datetime) -> datetime:
    if dt.tzinfo is None:
        raise ValueError("naive datetime; timestamps must be UTC-aware")
    return dt.astimezone(timezone.utc)


# --------------------------------------------------------------------------
# points and regions
# --------------------------------------------------------------------------

def normalize_lon(lon: float) -> float:
    """Wrap a longitude into (-180, 180]."""
    if -180.0 < lon <= 180.0:
        return float(lon)
    wrapped = math.fmod(lon + 180.0, 360.0)
    if wrapped <= 0.0:
        wrapped += 360.0
    return wrapped - 180.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        lat, lon = float(self.lat), float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise ValueError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", normalize_lon(lon))

    def __iter__(self):
        yield self.lat
        yield self.lon


class LocalProjection:
    """Equirectangular projection to meters about an origin point."""

    __slots__ = ("lat0", "lon0", "kx", "ky")

    def __init__(self, origin: GeoPoint):
        self.lat0 = origin.lat
        self.lon0 = origin.lon
        self.ky = EARTH_RADIUS_M * _DEG
        self.kx = self.ky * math.cos(origin.lat * _DEG)

    @classmethod
    def about(cls, points: Iterable[GeoPoint]) -> "LocalProjection":
        """Projection centred on the points' mean position.

        Uses ``math.fsum`` so the origin does not depend on point order; the
        mean longitude is circular to stay sane across the antimeridian.
        """
        pts = list(points)
        lat0 = math.fsum(p.lat for p in pts) / len(pts)
        s = math.fsum(math.sin(p.lon * _DEG) for p in pts)
        c = math.fsum(math.cos(p.lon * _DEG) for p in pts)
        lon0 = math.atan2(s, c) / _DEG if (s or c) else pts[0].lon
        return cls(GeoPoint(lat0, lon0))

    def project(self, p: GeoPoint) -> tuple[float, float]:
        dlon = p.lon - self.lon0
        if dlon > 180.0:
            dlon -= 360.0
        elif dlon <= -180.0:
            dlon += 360.0
        return (dlon * self.kx, (p.lat - self.lat0) * self.ky)

    def unproject(self, x: float, y: float) -> GeoPoint:
        lat = self.lat0 + y / self.ky
        lat = min(90.0, max(-90.0, lat))
        lon = self.lon0 + (x / self.kx if self.kx else 0.0)
        return GeoPoint(lat, lon)


@dataclass(frozen=True)
class Region:
    """A closed simple polygon; the first vertex is not repeated at the end."""

    id: str
    ring: tuple[GeoPoint, ...]
    _xy: tuple[tuple[float, float], ...] = field(init=False, repr=False, compare=False)
    _projection: LocalProjection = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ring = tuple(self.ring)
        object.__setattr__(self, "ring", ring)
        if not self.id:
            raise ValueError("region id must be non-empty")
        if len(ring) < 3:
            raise ValueError(f"region {self.id}: ring needs at least 3 vertices")
        if ring[0] == ring[-1]:
            raise ValueError(f"region {self.id}: ring must not repeat its first vertex")
        proj = LocalProjection.about(ring)
        xy = tuple(proj.project(p) for p in ring)
        object.__setattr__(self, "_projection", proj)
        object.__setattr__(self, "_xy", xy)
        if len(set(xy)) != len(xy):
            raise ValueError(f"region {self.id}: repeated vertex")
        if not _ring_is_simple(xy):
            raise ValueError(f"region {self.id}: ring self-intersects")
        if planar_area(xy) <= 0.0:
            raise ValueError(f"region {self.id}: zero area")

    @property
    def projection(self) -> LocalProjection:
        return self._projection

    @property
    def projected_ring(self) -> tuple[tuple[float, float], ...]:
        return self._xy

    def edges(self) -> list[tuple[GeoPoint, GeoPoint]]:
        n = len(self.ring)
        return [(self.ring[i], self.ring[(i + 1) % n]) for i in range(n)]


# --------------------------------------------------------------------------
# planar predicates (projected meters)
# --------------------------------------------------------------------------

XY = tuple[float, float]


def orientation(a: XY, b: XY, c: XY) -> int:
    """Sign of the turn a -> b -> c: +1 left, -1 right, 0 collinear (exact)."""
    t1 = (b[0] - a[0]) * (c[1] - a[1])
    t2 = (b[1] - a[1]) * (c[0] - a[0])
    det = t1 - t2
    if abs(det) > _ORIENT_ERRBOUND * (abs(t1) + abs(t2)):
        return 1 if det > 0 else -1
    ax, ay, bx, by, cx, cy = map(Fraction, (*a, *b, *c))
    exact = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (exact > 0) - (exact < 0)


def _within_box(a: XY, b: XY, p: XY) -> bool:
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def point_on_segment(p: XY, a: XY, b: XY) -> bool:
    return orientation(a, b, p) == 0 and _within_box(a, b, p)


def planar_segments_intersect(p1: XY, p2: XY, q1: XY, q2: XY) -> bool:
    o1 = orientation(p1, p2, q1)
    o2 = orientation(p1, p2, q2)
    o3 = orientation(q1, q2, p1)
    o4 = orientation(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _within_box(p1, p2, q1):
        return True
    if o2 == 0 and _within_box(p1, p2, q2):
        return True
    if o3 == 0 and _within_box(q1, q2, p1):
        return True
    if o4 == 0 and _within_box(q1, q2, p2):
        return True
    return False


def planar_point_in_polygon(p: XY, ring: Sequence[XY]) -> bool:
    """Closed-polygon membership: boundary points count as inside."""
    n = len(ring)
    for i in range(n):
        if point_on_segment(p, ring[i], ring[(i + 1) % n]):
            return True
    inside = False
    x, y = p
    for i in range(n):
        ax, ay = ring[i]
        bx, by = ring[(i + 1) % n]
        if (ay > y) != (by > y):
            # sign of orientation tells which side of the edge the ray origin lies
            o = orientation((ax, ay), (bx, by), p)
            if (o > 0) == (by > ay):
                inside = not inside
    return inside


def planar_area(ring: Sequence[XY]) -> float:
    n = len(ring)
    s = math.fsum(ring[i][0] * ring[(i + 1) % n][1] - ring[(i + 1) % n][0] * ring[i][1]
                  for i in range(n))
    return abs(s) / 2.0


def _ring_is_simple(xy: Sequence[XY]) -> bool:
    n = len(xy)
    for i in range(n):
        a, b = xy[i], xy[(i + 1) % n]
        for j in range(i + 1, n):
            c, d = xy[j], xy[(j + 1) % n]
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent edges share one vertex; reject fold-backs along a line
                shared, other_ab, other_cd = (b, a, d) if j == i + 1 else (a, b, c)
                if (orientation(other_ab, shared, other_cd) == 0
                        and (point_on_segment(other_cd, other_ab, shared)
                             or point_on_segment(other_ab, shared, other_cd))):
                    return False
                continue
            if planar_segments_intersect(a, b, c, d):
                return False
    return True


def closest_point_param(p: XY, a: XY, b: XY) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return 0.0
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / denom
    return min(1.0, max(0.0, t))


# --------------------------------------------------------------------------
# geographic operations
# --------------------------------------------------------------------------

def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters."""
    lat1, lat2 = a.lat * _DEG, b.lat * _DEG
    dlat = lat2 - lat1
    dlon = (b.lon - a.lon) * _DEG
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    h = min(1.0, max(0.0, h))
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def segments_intersect(p1: GeoPoint, p2: GeoPoint, q1: GeoPoint, q2: GeoPoint) -> bool:
    """True iff the two segments share a point (touching and overlap included)."""
    proj = LocalProjection.about((p1, p2, q1, q2))
    a, b, c, d = (proj.project(p) for p in (p1, p2, q1, q2))
    return planar_segments_intersect(a, b, c, d)


def point_in_region(p: GeoPoint, r: Region) -> bool:
    return planar_point_in_polygon(r.projection.project(p), r.projected_ring)


def point_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint,
                           proj: LocalProjection | None = None) -> float:
    """Meters from p to the closest point of segment a-b."""
    if proj is None:
        proj = LocalProjection.about((p, a, b))
    pa, pb, pp = proj.project(a), proj.project(b), proj.project(p)
    t = closest_point_param(pp, pa, pb)
    closest = proj.unproject(pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))
    return min(haversine_distance(p, closest), haversine_distance(p, a), haversine_distance(p, b))


def segment_distance(p1: GeoPoint, p2: GeoPoint, q1: GeoPoint, q2: GeoPoint) -> float:
    """Minimum distance in meters between two segments; 0 when they intersect.

    Symmetric in the two segments and never larger than any vertex-to-vertex
    haversine distance.
    """
    proj = LocalProjection.about((p1, p2, q1, q2))
    a, b, c, d = (proj.project(p) for p in (p1, p2, q1, q2))
    if planar_segments_intersect(a, b, c, d):
        return 0.0
    return min(
        point_segment_distance(p1, q1, q2, proj),
        point_segment_distance(p2, q1, q2, proj),
        point_segment_distance(q1, p1, p2, proj),
        point_segment_distance(q2, p1, p2, proj),
    )


def centroid(points: Sequence[GeoPoint]) -> GeoPoint:
    """Arithmetic mean of lat/lon (city-scale clusters, no antimeridian handling)."""
    n = len(points)
    return GeoPoint(math.fsum(p.lat for p in points) / n, math.fsum(p.lon for p in points) / n)
