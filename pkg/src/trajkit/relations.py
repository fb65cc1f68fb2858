"""Trajectory relations.

Trajectory pairs: intersects, equal, near, far.  Trajectory against a region:
stay within, bypass, leave, enter, cross.  All of them look only at the
spatial footprint; time plays no part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    Region,
    haversine_distance,
    orientation,
    planar_point_in_polygon,
    planar_segments_intersect,
    segment_distance,
    segments_intersect,
)
from .model import Trajectory, spatial_footprint

_M_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0


@dataclass(frozen=True)
class RelationParams:
    near_threshold: float = 500.0
    equal_tolerance: float = 50.0
    bypass_margin: float = 500.0

    def __post_init__(self) -> None:
        if min(self.near_threshold, self.equal_tolerance, self.bypass_margin) <= 0:
            raise ValueError("relation thresholds must be positive")
        if self.equal_tolerance > self.near_threshold:
            raise ValueError("equal_tolerance must not exceed near_threshold")


@dataclass(frozen=True)
class RegionRelationSet:
    stay_within: bool
    bypass: bool
    leave: bool
    enter: bool
    cross: bool
    crossings: int

    def flags(self) -> dict[str, bool]:
        return {"stay_within": self.stay_within, "bypass": self.bypass, "leave": self.leave,
                "enter": self.enter, "cross": self.cross}


Polyline = Sequence[GeoPoint]


def _segments(points: Polyline) -> list[tuple[GeoPoint, GeoPoint]]:
    if len(points) == 1:
        return [(points[0], points[0])]
    return list(zip(points, points[1:]))


def _box(a: GeoPoint, b: GeoPoint) -> tuple[float, float, float, float]:
    return (min(a.lat, b.lat), max(a.lat, b.lat), min(a.lon, b.lon), max(a.lon, b.lon))


def _lat_gap(b1, b2) -> float:
    return max(0.0, b1[0] - b2[1], b2[0] - b1[1])


def _boxes_disjoint(b1, b2) -> bool:
    # only trusted when no longitude span could wrap the antimeridian
    if max(b1[3], b2[3]) - min(b1[2], b2[2]) >= 180.0:
        return False
    return b1[1] < b2[0] or b2[1] < b1[0] or b1[3] < b2[2] or b2[3] < b1[2]


def footprints_intersect(f1: Polyline, f2: Polyline) -> bool:
    segs2 = [(s, _box(*s)) for s in _segments(f2)]
    for a, b in _segments(f1):
        box1 = _box(a, b)
        for (c, d), box2 in segs2:
            if _boxes_disjoint(box1, box2):
                continue
            if segments_intersect(a, b, c, d):
                return True
    return False


def footprint_min_distance(f1: Polyline, f2: Polyline) -> float:
    """Minimum distance in meters between two polylines."""
    segs2 = [(s, _box(*s)) for s in _segments(f2)]
    best = float("inf")
    for a, b in _segments(f1):
        box1 = _box(a, b)
        for (c, d), box2 in segs2:
            # a latitude gap is a lower bound on great-circle distance
            if _lat_gap(box1, box2) * _M_PER_DEG_LAT > best:
                continue
            best = min(best, segment_distance(a, b, c, d))
            if best == 0.0:
                return 0.0
    return best


def _directed_hausdorff(f1: Polyline, f2: Polyline) -> float:
    worst = 0.0
    for p in f1:
        nearest = min(haversine_distance(p, q) for q in f2)
        worst = max(worst, nearest)
    return worst


def footprint_hausdorff(f1: Polyline, f2: Polyline) -> float:
    """Symmetric discrete Hausdorff distance over footprint vertices."""
    return max(_directed_hausdorff(f1, f2), _directed_hausdorff(f2, f1))


def intersects(t1: Trajectory, t2: Trajectory) -> bool:
    return footprints_intersect(spatial_footprint(t1), spatial_footprint(t2))


def equal(t1: Trajectory, t2: Trajectory, params: RelationParams | None = None) -> bool:
    params = params or RelationParams()
    return footprint_hausdorff(spatial_footprint(t1), spatial_footprint(t2)) <= params.equal_tolerance


def near(t1: Trajectory, t2: Trajectory, params: RelationParams | None = None) -> bool:
    params = params or RelationParams()
    return footprint_min_distance(spatial_footprint(t1), spatial_footprint(t2)) <= params.near_threshold


def far(t1: Trajectory, t2: Trajectory, params: RelationParams | None = None) -> bool:
    return not near(t1, t2, params)


def _boundary_params(a, b, ring) -> list[float]:
    """Parameters along a->b (in [0, 1]) where the segment meets the ring."""
    ts = []
    n = len(ring)
    dx, dy = b[0] - a[0], b[1] - a[1]
    length2 = dx * dx + dy * dy
    for i in range(n):
        c, d = ring[i], ring[(i + 1) % n]
        if not planar_segments_intersect(a, b, c, d):
            continue
        if orientation(a, b, c) == 0 and orientation(a, b, d) == 0:
            # collinear overlap: both ends of the shared stretch are boundary
            if length2 == 0.0:
                ts.append(0.0)
                continue
            for p in (c, d):
                ts.append(min(1.0, max(0.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / length2)))
            continue
        ex, ey = d[0] - c[0], d[1] - c[1]
        denom = dx * ey - dy * ex
        if denom == 0.0:
            ts.append(0.0)
            continue
        t = ((c[0] - a[0]) * ey - (c[1] - a[1]) * ex) / denom
        ts.append(min(1.0, max(0.0, t)))
    return ts


def inside_sequence(footprint: Polyline, region: Region) -> list[bool]:
    """Inside/outside states along the footprint, one per boundary-delimited piece."""
    proj = region.projection
    ring = region.projected_ring
    xy = [proj.project(p) for p in footprint]
    if len(xy) == 1:
        return [planar_point_in_polygon(xy[0], ring)]
    states: list[bool] = []
    for a, b in zip(xy, xy[1:]):
        ts = sorted({0.0, 1.0, *_boundary_params(a, b, ring)})
        samples = []
        for k, t in enumerate(ts):
            samples.append(t)
            if k + 1 < len(ts):
                samples.append((t + ts[k + 1]) / 2.0)
        if states:
            samples = samples[1:]  # segment start is the previous segment's end
        for t in samples:
            p = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
            if t == 0.0:
                p = a
            elif t == 1.0:
                p = b
            states.append(planar_point_in_polygon(p, ring))
    return states


def footprint_region_relation(footprint: Polyline, region: Region,
                              params: RelationParams | None = None) -> RegionRelationSet:
    params = params or RelationParams()
    states = inside_sequence(footprint, region)
    runs = [states[0]]
    for s in states[1:]:
        if s != runs[-1]:
            runs.append(s)
    enter = any(not a and b for a, b in zip(runs, runs[1:]))
    leave = any(a and not b for a, b in zip(runs, runs[1:]))
    # an entry followed, later, by an exit: outside, inside, outside
    first_in = next((k for k in range(1, len(runs)) if runs[k] and not runs[k - 1]), None)
    cross = first_in is not None and any(not runs[k] for k in range(first_in + 1, len(runs)))
    stay_within = runs == [True]
    bypass = False
    if runs == [False]:
        ring = list(region.ring)
        bypass = footprint_min_distance(footprint, ring + [ring[0]]) <= params.bypass_margin
    return RegionRelationSet(stay_within, bypass, leave, enter, cross, len(runs) - 1)


def region_relation(t: Trajectory, r: Region, params: RelationParams | None = None) -> RegionRelationSet:
    return footprint_region_relation(spatial_footprint(t), r, params)
