"""Stop/move trajectory model.

A trajectory is an alternating, gap-free sequence ``stop, move, stop, ...,
stop``.  Every value validates itself on construction, so anything you can
hold is already consistent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Sequence

from .errors import (
    AlternationError,
    EmptyTrajectoryError,
    InvalidElementError,
    MixedObjectError,
    TemporalGapError,
)
from .geo import GeoPoint, as_utc


class StopSource(str, enum.Enum):
    DETECTED = "detected"
    DECLARED = "declared"


@dataclass(frozen=True)
class Stop:
    id: str
    object_id: str
    begin: datetime
    end: datetime
    position: GeoPoint
    source: StopSource = StopSource.DETECTED

    def __post_init__(self) -> None:
        object.__setattr__(self, "begin", as_utc(self.begin))
        object.__setattr__(self, "end", as_utc(self.end))
        object.__setattr__(self, "source", StopSource(self.source))
        if not isinstance(self.position, GeoPoint):
            raise InvalidElementError(f"stop {self.id}: position must be a GeoPoint")
        if self.end <= self.begin:
            raise InvalidElementError(f"stop {self.id}: empty time interval")

    @property
    def duration(self) -> timedelta:
        return self.end - self.begin


@dataclass(frozen=True)
class Move:
    id: str
    object_id: str
    begin: datetime
    end: datetime
    begin_position: GeoPoint
    end_position: GeoPoint
    path: tuple[tuple[datetime, GeoPoint], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "begin", as_utc(self.begin))
        object.__setattr__(self, "end", as_utc(self.end))
        path = tuple((as_utc(t), p) for t, p in self.path)
        object.__setattr__(self, "path", path)
        if self.end <= self.begin:
            raise InvalidElementError(f"move {self.id}: empty time interval")
        for t, p in path:
            if not self.begin <= t <= self.end:
                raise InvalidElementError(f"move {self.id}: path sample at {t} outside move interval")
            if not isinstance(p, GeoPoint):
                raise InvalidElementError(f"move {self.id}: path sample is not a GeoPoint")
        for (t0, _), (t1, _) in zip(path, path[1:]):
            if t1 <= t0:
                raise InvalidElementError(f"move {self.id}: path timestamps not strictly increasing")
        if path and (path[0][1] != self.begin_position or path[-1][1] != self.end_position):
            raise InvalidElementError(f"move {self.id}: path endpoints differ from begin/end positions")

    @property
    def duration(self) -> timedelta:
        return self.end - self.begin


@dataclass(frozen=True)
class TrajectorySection:
    index: int
    start_stop: Stop
    move: Move
    end_stop: Stop

    def __post_init__(self) -> None:
        if self.start_stop.end != self.move.begin or self.move.end != self.end_stop.begin:
            raise TemporalGapError(f"section {self.index}: stop/move boundaries do not meet")


@dataclass(frozen=True)
class Trajectory:
    id: str
    object_id: str
    begin: datetime
    end: datetime
    duration: timedelta
    stops: tuple[Stop, ...]
    moves: tuple[Move, ...]

    def __post_init__(self) -> None:
        stops, moves = tuple(self.stops), tuple(self.moves)
        object.__setattr__(self, "stops", stops)
        object.__setattr__(self, "moves", moves)
        _check_sequence(self.object_id, stops, moves)
        if self.begin != stops[0].begin or self.end != stops[-1].end:
            raise TemporalGapError("trajectory begin/end differ from its first/last stop")
        if self.duration != self.end - self.begin:
            raise TemporalGapError("trajectory duration is not end - begin")

    def elements(self) -> list[Stop | Move]:
        """Stops and moves interleaved in temporal order."""
        out: list[Stop | Move] = []
        for i, stop in enumerate(self.stops):
            out.append(stop)
            if i < len(self.moves):
                out.append(self.moves[i])
        return out


def _check_sequence(object_id: str, stops: Sequence[Stop], moves: Sequence[Move]) -> None:
    if not stops:
        raise EmptyTrajectoryError("a trajectory needs at least one stop")
    if len(moves) != len(stops) - 1:
        raise AlternationError(f"{len(stops)} stops need {len(stops) - 1} moves, got {len(moves)}")
    if not all(isinstance(s, Stop) for s in stops) or not all(isinstance(m, Move) for m in moves):
        raise AlternationError("sequence must alternate stop, move, stop")
    for el in (*stops, *moves):
        if el.object_id != object_id:
            raise MixedObjectError(f"{el.id} belongs to {el.object_id}, not {object_id}")
    for i, move in enumerate(moves):
        before, after = stops[i], stops[i + 1]
        if not before.begin < move.begin < after.begin:
            raise AlternationError(f"{before.id}, {move.id}, {after.id} are not in stop, move, stop order")
    for i, move in enumerate(moves):
        before, after = stops[i], stops[i + 1]
        if before.end != move.begin:
            raise TemporalGapError(f"stop {before.id} ends at {before.end}, move {move.id} begins at {move.begin}")
        if move.end != after.begin:
            raise TemporalGapError(f"move {move.id} ends at {move.end}, stop {after.id} begins at {after.begin}")


def build_trajectory(object_id: str, stops: Sequence[Stop], moves: Sequence[Move],
                     trajectory_id: str | None = None) -> Trajectory:
    """Assemble and validate a trajectory from time-sorted stops and moves."""
    stops, moves = tuple(stops), tuple(moves)
    _check_sequence(object_id, stops, moves)
    begin, end = stops[0].begin, stops[-1].end
    return Trajectory(
        id=trajectory_id or f"{object_id}-T",
        object_id=object_id,
        begin=begin,
        end=end,
        duration=end - begin,
        stops=stops,
        moves=moves,
    )


def sections(t: Trajectory) -> list[TrajectorySection]:
    return [TrajectorySection(i, t.stops[i], t.moves[i], t.stops[i + 1]) for i in range(len(t.moves))]


def spatial_footprint(t: Trajectory) -> list[GeoPoint]:
    """Stop positions and move paths in time order, consecutive duplicates removed."""
    points: list[GeoPoint] = []
    for el in t.elements():
        if isinstance(el, Stop):
            seq = [el.position]
        else:
            seq = [p for _, p in el.path] or [el.begin_position, el.end_position]
        for p in seq:
            if not points or points[-1] != p:
                points.append(p)
    return points
