"""Segmentation of raw GPS fixes into stops and moves.

Stops are stay points: a run of consecutive fixes where each new fix lies
within ``stop_radius`` of the running centroid of the fixes before it, lasting
at least ``min_dwell``.  Stops declared by the manager (mission events that put
the vehicle in a stopped state) are merged with detected ones by interval
union.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Sequence

from .errors import MixedObjectError, NoStopFoundError, UnsortedInputError
from .geo import GeoPoint, as_utc, centroid, format_timestamp, haversine_distance
from .mission import MissionEvent, replay, stop_state_intervals
from .model import Move, Stop, StopSource, Trajectory, build_trajectory


@dataclass(frozen=True)
class GpsFix:
    object_id: str
    timestamp: datetime
    position: GeoPoint
    source_device: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamp", as_utc(self.timestamp))
        if not isinstance(self.position, GeoPoint):
            raise TypeError("position must be a GeoPoint")
        if self.source_device == "":
            object.__setattr__(self, "source_device", None)


def _as_duration(value: timedelta | float | int) -> timedelta:
    return value if isinstance(value, timedelta) else timedelta(seconds=value)


@dataclass(frozen=True)
class SegmentationParams:
    stop_radius: float = 100.0
    min_dwell: timedelta = timedelta(seconds=300)
    max_fix_gap: timedelta = timedelta(seconds=600)

    def __post_init__(self) -> None:
        object.__setattr__(self, "stop_radius", float(self.stop_radius))
        object.__setattr__(self, "min_dwell", _as_duration(self.min_dwell))
        object.__setattr__(self, "max_fix_gap", _as_duration(self.max_fix_gap))
        if not self.stop_radius > 0:
            raise ValueError("stop_radius must be positive")
        if self.min_dwell <= timedelta(0) or self.max_fix_gap <= timedelta(0):
            raise ValueError("min_dwell and max_fix_gap must be positive")

    def as_dict(self) -> dict[str, float]:
        return {
            "stop_radius": self.stop_radius,
            "min_dwell": self.min_dwell.total_seconds(),
            "max_fix_gap": self.max_fix_gap.total_seconds(),
        }


@dataclass(frozen=True)
class Anomaly:
    kind: str  # "out_of_order" | "duplicate" | "gap"
    timestamp: datetime
    index: int

    def __str__(self) -> str:
        return f"{self.kind} at {format_timestamp(self.timestamp)} (fix {self.index})"


@dataclass(frozen=True)
class SegmentationReport:
    trajectory: Trajectory
    trimmed_head: int = 0
    trimmed_tail: int = 0
    anomalies: tuple[Anomaly, ...] = field(default_factory=tuple)


def validate_fix_stream(fixes: Sequence[GpsFix],
                        max_fix_gap: timedelta | float = timedelta(seconds=600)) -> list[Anomaly]:
    """Flag out-of-order and duplicate timestamps and gaps longer than ``max_fix_gap``."""
    max_gap = _as_duration(max_fix_gap)
    anomalies: list[Anomaly] = []
    latest: datetime | None = None
    for i, fix in enumerate(fixes):
        t = fix.timestamp
        if latest is not None:
            if t < latest:
                anomalies.append(Anomaly("out_of_order", t, i))
                continue
            if t == latest:
                anomalies.append(Anomaly("duplicate", t, i))
                continue
            if t - latest > max_gap:
                anomalies.append(Anomaly("gap", latest, i))
        latest = t
    return anomalies


def _check_stream(fixes: Sequence[GpsFix], strict: bool) -> None:
    ids = {f.object_id for f in fixes}
    if len(ids) > 1:
        raise MixedObjectError(f"fixes for several objects: {sorted(ids)}")
    for i in range(1, len(fixes)):
        a, b = fixes[i - 1].timestamp, fixes[i].timestamp
        if b < a or (strict and b == a):
            what = "duplicate" if b == a else "out-of-order"
            raise UnsortedInputError(f"{what} timestamp at fix {i}")


def _stop_windows(fixes: Sequence[GpsFix], params: SegmentationParams) -> list[tuple[int, int]]:
    """Index windows [i, j] of the detected stops."""
    windows: list[tuple[int, int]] = []
    n = len(fixes)
    i = 0
    while i < n:
        lat_sum, lon_sum = fixes[i].position.lat, fixes[i].position.lon
        j = i
        while j + 1 < n:
            k = j + 1
            count = k - i
            anchor = GeoPoint(lat_sum / count, lon_sum / count)
            if haversine_distance(fixes[k].position, anchor) > params.stop_radius:
                break
            lat_sum += fixes[k].position.lat
            lon_sum += fixes[k].position.lon
            j = k
        if fixes[j].timestamp - fixes[i].timestamp >= params.min_dwell:
            windows.append((i, j))
            i = j + 1
        else:
            i += 1
    return windows


def detect_stops(fixes: Sequence[GpsFix], params: SegmentationParams | None = None) -> list[Stop]:
    params = params or SegmentationParams()
    _check_stream(fixes, strict=True)
    stops = []
    for n, (i, j) in enumerate(_stop_windows(fixes, params)):
        members = [f.position for f in fixes[i:j + 1]]
        stops.append(Stop(
            id=f"{fixes[i].object_id}-S{n}",
            object_id=fixes[i].object_id,
            begin=fixes[i].timestamp,
            end=fixes[j].timestamp,
            position=centroid(members),
            source=StopSource.DETECTED,
        ))
    return stops


def _declared_intervals(events: Sequence[MissionEvent], fixes: Sequence[GpsFix],
                        params: SegmentationParams, table=None) -> list[tuple[datetime, datetime]]:
    if not events:
        return []
    start = events[0].timestamp
    if fixes:
        start = min(start, fixes[0].timestamp)
    kwargs = {"table": table} if table is not None else {}
    timeline = replay(events, start, **kwargs)
    last_fix = fixes[-1].timestamp if fixes else None
    out = []
    for begin, end in stop_state_intervals(timeline):
        if end is None:
            if last_fix is None or last_fix <= begin:
                continue
            end = last_fix
        # declared stops obey the same minimum dwell as detected ones
        if end - begin >= params.min_dwell:
            out.append((begin, end))
    return out


def _merge(intervals: list[tuple[datetime, datetime, bool]]) -> list[tuple[datetime, datetime, bool]]:
    merged: list[tuple[datetime, datetime, bool]] = []
    for begin, end, declared in sorted(intervals, key=lambda iv: (iv[0], iv[1])):
        if merged and begin <= merged[-1][1]:
            b, e, d = merged[-1]
            merged[-1] = (b, max(e, end), d or declared)
        else:
            merged.append((begin, end, declared))
    return merged


def _position_at(fixes: Sequence[GpsFix], times: list[datetime], t: datetime) -> GeoPoint:
    k = bisect.bisect_left(times, t)
    if k == 0:
        return fixes[0].position
    if k >= len(fixes):
        return fixes[-1].position
    a, b = fixes[k - 1], fixes[k]
    w = (t - a.timestamp) / (b.timestamp - a.timestamp)
    return GeoPoint(a.position.lat + w * (b.position.lat - a.position.lat),
                    a.position.lon + w * (b.position.lon - a.position.lon))


def segment(fixes: Sequence[GpsFix], params: SegmentationParams | None = None,
            declared_events: Sequence[MissionEvent] | None = None,
            trajectory_id: str | None = None, transition_table=None) -> SegmentationReport:
    """Build a trajectory from a time-sorted fix stream plus optional declared events."""
    params = params or SegmentationParams()
    fixes = list(fixes)
    declared_events = list(declared_events or [])
    _check_stream(fixes, strict=False)
    anomalies = validate_fix_stream(fixes, params.max_fix_gap)

    clean: list[GpsFix] = []
    for f in fixes:
        if not clean or f.timestamp != clean[-1].timestamp:
            clean.append(f)

    object_ids = {f.object_id for f in clean} | {e.object_id for e in declared_events}
    if len(object_ids) > 1:
        raise MixedObjectError(f"fixes and events for several objects: {sorted(object_ids)}")
    if not object_ids:
        raise NoStopFoundError("no fixes and no declared events")
    object_id = object_ids.pop()

    intervals = [(s.begin, s.end, False) for s in detect_stops(clean, params)]
    intervals += [(b, e, True) for b, e in _declared_intervals(declared_events, clean, params, transition_table)]
    merged = _merge(intervals)
    if not merged:
        raise NoStopFoundError(f"{object_id}: no stop detected or declared")
    if not clean:
        raise NoStopFoundError(f"{object_id}: declared stops cannot be positioned without fixes")

    times = [f.timestamp for f in clean]
    stops: list[Stop] = []
    for n, (begin, end, declared) in enumerate(merged):
        lo, hi = bisect.bisect_left(times, begin), bisect.bisect_right(times, end)
        members = [f.position for f in clean[lo:hi]]
        position = centroid(members) if members else _position_at(clean, times, begin + (end - begin) / 2)
        stops.append(Stop(
            id=f"{object_id}-S{n}",
            object_id=object_id,
            begin=begin,
            end=end,
            position=position,
            source=StopSource.DECLARED if declared else StopSource.DETECTED,
        ))

    moves: list[Move] = []
    for n, (a, b) in enumerate(zip(stops, stops[1:])):
        lo, hi = bisect.bisect_right(times, a.end), bisect.bisect_left(times, b.begin)
        path = [(a.end, a.position)]
        path += [(f.timestamp, f.position) for f in clean[lo:hi]]
        path.append((b.begin, b.position))
        moves.append(Move(
            id=f"{object_id}-M{n}",
            object_id=object_id,
            begin=a.end,
            end=b.begin,
            begin_position=a.position,
            end_position=b.position,
            path=tuple(path),
        ))

    trajectory = build_trajectory(object_id, stops, moves, trajectory_id)
    head = bisect.bisect_left(times, stops[0].begin)
    tail = len(clean) - bisect.bisect_right(times, stops[-1].end)
    return SegmentationReport(trajectory, head, tail, tuple(anomalies))
