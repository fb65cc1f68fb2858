"""Scripted mission scenarios.

A :class:`ScenarioBuilder` walks a vehicle through waits and drives, emitting
GPS fixes and mission events from the same script, so the fix stream and the
event log always describe one consistent mission.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .geo import EARTH_RADIUS_M, GeoPoint, as_utc, haversine_distance
from .mission import EventKind, MissionEvent
from .segmentation import GpsFix


def offset(p: GeoPoint, north_m: float, east_m: float) -> GeoPoint:
    dlat = north_m / EARTH_RADIUS_M * 180.0 / math.pi
    dlon = east_m / (EARTH_RADIUS_M * math.cos(math.radians(p.lat))) * 180.0 / math.pi
    return GeoPoint(p.lat + dlat, p.lon + dlon)


@dataclass
class Scenario:
    object_id: str
    start: datetime
    fixes: list[GpsFix] = field(default_factory=list)
    events: list[MissionEvent] = field(default_factory=list)
    expected_stops: int = 0


class ScenarioBuilder:
    def __init__(self, object_id: str, start: datetime, origin: GeoPoint, *,
                 interval: timedelta = timedelta(seconds=30), jitter_m: float = 8.0,
                 seed: int = 0, device: str | None = None, reporter: str = ""):
        self.object_id = object_id
        self.start = as_utc(start)
        self.t = self.start
        self.pos = origin
        self.interval = interval
        self.jitter_m = jitter_m
        self.rng = random.Random(seed)
        self.device = device
        self.reporter = reporter
        self.fixes: list[GpsFix] = [GpsFix(object_id, self.t, origin, device)]
        self.events: list[MissionEvent] = []
        self.expected_stops = 0

    def _fix(self, p: GeoPoint) -> None:
        self.fixes.append(GpsFix(self.object_id, self.t, p, self.device))

    def event(self, kind: EventKind) -> "ScenarioBuilder":
        self.events.append(MissionEvent(self.object_id, self.t, kind, self.reporter))
        return self

    def stay(self, duration: timedelta) -> "ScenarioBuilder":
        """Sit still (GPS jitter only) for ``duration``, a multiple of the interval."""
        steps = round(duration / self.interval)
        for _ in range(steps):
            self.t += self.interval
            r = self.jitter_m * math.sqrt(self.rng.random())
            a = self.rng.uniform(0, 2 * math.pi)
            self._fix(offset(self.pos, r * math.cos(a), r * math.sin(a)))
        return self

    def drive(self, dest: GeoPoint, speed_mps: float = 15.0) -> "ScenarioBuilder":
        """Straight drive to ``dest``; the last fix lands exactly on it."""
        dist = haversine_distance(self.pos, dest)
        steps = max(1, math.ceil(dist / speed_mps / self.interval.total_seconds()))
        a = self.pos
        for k in range(1, steps + 1):
            w = k / steps
            self.t += self.interval
            if k == steps:
                p = dest
            else:
                p = GeoPoint(a.lat + w * (dest.lat - a.lat), a.lon + w * (dest.lon - a.lon))
            self._fix(p)
        self.pos = dest
        return self

    def build(self) -> Scenario:
        return Scenario(self.object_id, self.start, list(self.fixes), list(self.events), self.expected_stops)


SAMPLE_START = datetime(2010, 3, 1, 8, 0, 0, tzinfo=timezone.utc)
BASE = GeoPoint(36.8065, 10.1815)


def sample_mission(object_id: str = "MH-01", seed: int = 7) -> Scenario:
    """Three destination stops, two road legs, a short breakdown on the first leg."""
    d1 = offset(BASE, 3000, 4000)
    d2 = offset(d1, 6000, -2000)
    d3 = offset(d2, -1500, 7000)
    b = ScenarioBuilder(object_id, SAMPLE_START, BASE, seed=seed, device=f"GPS-{object_id}",
                        reporter=f"PDA-{object_id}")
    b.stay(timedelta(minutes=2))                       # ready at base
    b.event(EventKind.DepartRoad).drive(d1)
    b.event(EventKind.ArriveDestination).stay(timedelta(minutes=40))
    midway = GeoPoint((d1.lat + d2.lat) / 2, (d1.lon + d2.lon) / 2)
    b.event(EventKind.DepartForNextLeg).drive(midway)
    b.event(EventKind.Breakdown).stay(timedelta(seconds=30))
    b.event(EventKind.Repaired).drive(d2)
    b.event(EventKind.ArriveDestination).stay(timedelta(minutes=55))
    b.event(EventKind.DepartForNextLeg).drive(d3)
    b.event(EventKind.ArriveDestination).stay(timedelta(minutes=30))
    b.event(EventKind.EndMission)
    b.expected_stops = 3
    return b.build()


def second_mission(object_id: str = "MH-02", seed: int = 11) -> Scenario:
    """A shorter mission whose road leg crosses the first one's."""
    start = SAMPLE_START + timedelta(minutes=20)
    a = offset(BASE, 6000, 0)
    z = offset(BASE, 4000, 9000)
    b = ScenarioBuilder(object_id, start, a, seed=seed, device=f"GPS-{object_id}", reporter=f"PDA-{object_id}")
    b.event(EventKind.DepartRoad).drive(offset(a, 100, 100))
    b.event(EventKind.ArriveDestination).stay(timedelta(minutes=20))
    b.event(EventKind.DepartForNextLeg).drive(z)
    b.event(EventKind.ArriveDestination).stay(timedelta(minutes=20))
    b.event(EventKind.EndMission)
    b.expected_stops = 2
    return b.build()


def random_mission(rng: random.Random, object_id: str = "MH-R",
                   min_dwell: timedelta = timedelta(minutes=5),
                   tolerance: timedelta = timedelta(seconds=60)) -> Scenario:
    """A random but internally consistent mission.

    Breakdowns are either brief (within the reconcile tolerance, so they
    never form a stop) or long enough to be a stop in their own right.
    """
    interval = timedelta(seconds=30)
    origin = GeoPoint(rng.uniform(-60, 60), rng.uniform(-170, 170))
    start = SAMPLE_START + timedelta(days=rng.randrange(0, 365))
    b = ScenarioBuilder(object_id, start, origin, interval=interval, seed=rng.randrange(1 << 30))

    def dwell() -> timedelta:
        return min_dwell + interval * rng.randint(1, 30)

    def far_point() -> GeoPoint:
        dist = rng.uniform(3000, 12000)
        ang = rng.uniform(0, 2 * math.pi)
        return offset(b.pos, dist * math.cos(ang), dist * math.sin(ang))

    def road_leg() -> None:
        dest = far_point()
        if rng.random() < 0.5:
            w = rng.uniform(0.3, 0.7)
            mid = GeoPoint(b.pos.lat + w * (dest.lat - b.pos.lat), b.pos.lon + w * (dest.lon - b.pos.lon))
            b.drive(mid).event(EventKind.Breakdown)
            if rng.random() < 0.5:
                short = interval * rng.randint(1, int(tolerance / interval))
                b.stay(short)
            else:
                b.stay(dwell())
                b.expected_stops += 1
            b.event(EventKind.Repaired)
        b.drive(dest).event(EventKind.ArriveDestination)

    b.stay(interval * rng.randint(0, 4))
    b.event(EventKind.DepartRoad)
    road_leg()
    b.stay(dwell())
    b.expected_stops += 1
    for _ in range(rng.randint(1, 3)):
        if rng.random() < 0.4:
            here = b.pos
            b.event(EventKind.RoamDestination).drive(offset(here, rng.uniform(1500, 3000), rng.uniform(-500, 500)))
            b.drive(here).event(EventKind.HaltAtDestination).stay(dwell())
        else:
            b.event(EventKind.DepartForNextLeg)
            road_leg()
            b.stay(dwell())
        b.expected_stops += 1
    b.event(EventKind.EndMission)
    return b.build()
