"""Mobile-hospital mission lifecycle.

Five states, driven by events reported from the manager's PDA.  The default
edge set is eight transitions; an alternative table can be loaded from a
``FromState,EventKind,ToState`` file.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    InvalidTransitionError,
    MixedObjectError,
    ObjectMismatchError,
    SchemaError,
    UnsortedInputError,
)
from .geo import as_utc
from .model import Stop, Trajectory


class MissionState(str, enum.Enum):
    Ready = "Ready"
    MoveInRoad = "MoveInRoad"
    StopFailure = "StopFailure"
    StopInDestination = "StopInDestination"
    MoveInDestination = "MoveInDestination"

    def __str__(self) -> str:
        return self.value


class EventKind(str, enum.Enum):
    DepartRoad = "DepartRoad"
    Breakdown = "Breakdown"
    Repaired = "Repaired"
    ArriveDestination = "ArriveDestination"
    RoamDestination = "RoamDestination"
    HaltAtDestination = "HaltAtDestination"
    DepartForNextLeg = "DepartForNextLeg"
    EndMission = "EndMission"

    def __str__(self) -> str:
        return self.value


STOP_STATES = frozenset({MissionState.StopFailure, MissionState.StopInDestination})
MOVE_STATES = frozenset({MissionState.MoveInRoad, MissionState.MoveInDestination})


@dataclass(frozen=True)
class MissionEvent:
    object_id: str
    timestamp: datetime
    kind: EventKind
    reporter: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamp", as_utc(self.timestamp))
        object.__setattr__(self, "kind", EventKind(self.kind))


class TransitionTable:
    """Immutable (state, event) -> state mapping."""

    def __init__(self, edges: Mapping[tuple[MissionState, EventKind], MissionState]):
        self._edges = {(MissionState(s), EventKind(e)): MissionState(t) for (s, e), t in edges.items()}

    @property
    def edges(self) -> dict[tuple[MissionState, EventKind], MissionState]:
        return dict(self._edges)

    def __len__(self) -> int:
        return len(self._edges)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TransitionTable) and self._edges == other._edges

    def target(self, state: MissionState, kind: EventKind) -> MissionState | None:
        return self._edges.get((state, kind))

    def events_from(self, state: MissionState) -> list[EventKind]:
        return [e for (s, e) in self._edges if s == state]

    def to_text(self) -> str:
        return "".join(f"{s.value},{e.value},{t.value}\n" for (s, e), t in self._edges.items())

    @classmethod
    def from_text(cls, text: str) -> "TransitionTable":
        edges: dict[tuple[MissionState, EventKind], MissionState] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise SchemaError("expected FromState,EventKind,ToState", lineno)
            try:
                key = (MissionState(parts[0]), EventKind(parts[1]))
                target = MissionState(parts[2])
            except ValueError as exc:
                raise SchemaError(str(exc), lineno) from None
            if key in edges and edges[key] != target:
                raise SchemaError(f"conflicting edge for {parts[0]},{parts[1]}", lineno)
            edges[key] = target
        return cls(edges)

    @classmethod
    def load(cls, path: str | Path) -> "TransitionTable":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


S, E = MissionState, EventKind
DEFAULT_TABLE = TransitionTable({
    (S.Ready, E.DepartRoad): S.MoveInRoad,
    (S.MoveInRoad, E.Breakdown): S.StopFailure,
    (S.StopFailure, E.Repaired): S.MoveInRoad,
    (S.MoveInRoad, E.ArriveDestination): S.StopInDestination,
    (S.StopInDestination, E.RoamDestination): S.MoveInDestination,
    (S.MoveInDestination, E.HaltAtDestination): S.StopInDestination,
    (S.StopInDestination, E.DepartForNextLeg): S.MoveInRoad,
    (S.StopInDestination, E.EndMission): S.Ready,
})
del S, E


def transition(state: MissionState, kind: EventKind,
               table: TransitionTable = DEFAULT_TABLE) -> MissionState:
    target = table.target(MissionState(state), EventKind(kind))
    if target is None:
        raise InvalidTransitionError(MissionState(state), EventKind(kind))
    return target


@dataclass(frozen=True)
class TimelineEntry:
    state: MissionState
    begin: datetime
    end: datetime | None = None


@dataclass(frozen=True)
class StateTimeline:
    object_id: str
    entries: tuple[TimelineEntry, ...]

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries or entries[0].state != MissionState.Ready:
            raise ValueError("a timeline starts in Ready")
        for a, b in zip(entries, entries[1:]):
            if a.end is None or a.end != b.begin:
                raise ValueError("timeline entries must be contiguous")

    @property
    def states(self) -> list[MissionState]:
        return [e.state for e in self.entries]

    def state_at(self, t: datetime) -> MissionState | None:
        """State in force at ``t``; an event at ``t`` has already taken effect."""
        t = as_utc(t)
        if t < self.entries[0].begin:
            return None
        current = None
        for entry in self.entries:
            if entry.begin <= t:
                current = entry.state
            else:
                break
        last = self.entries[-1]
        if last.end is not None and t > last.end:
            return None
        return current


def replay(events: Sequence[MissionEvent], start: datetime,
           table: TransitionTable = DEFAULT_TABLE) -> StateTimeline:
    """Fold events over the transition table starting from Ready at ``start``.

    Either returns the whole timeline or raises; nothing partial escapes.
    """
    start = as_utc(start)
    object_ids = {ev.object_id for ev in events}
    if len(object_ids) > 1:
        raise MixedObjectError(f"events for several objects: {sorted(object_ids)}")
    object_id = next(iter(object_ids), "")
    state = MissionState.Ready
    begin = start
    entries: list[TimelineEntry] = []
    for i, ev in enumerate(events):
        if ev.timestamp < begin:
            raise UnsortedInputError(f"event {i} at {ev.timestamp} precedes {begin}")
        try:
            nxt = transition(state, ev.kind, table)
        except InvalidTransitionError:
            raise InvalidTransitionError(state, ev.kind, i) from None
        entries.append(TimelineEntry(state, begin, ev.timestamp))
        state, begin = nxt, ev.timestamp
    entries.append(TimelineEntry(state, begin, None))
    return StateTimeline(object_id, tuple(entries))


def stop_state_intervals(timeline: StateTimeline) -> list[tuple[datetime, datetime | None]]:
    """Maximal spans the timeline spends in stop states (open end allowed)."""
    spans: list[tuple[datetime, datetime | None]] = []
    for entry in timeline.entries:
        if entry.state not in STOP_STATES:
            continue
        if spans and spans[-1][1] == entry.begin:
            spans[-1] = (spans[-1][0], entry.end)
        else:
            spans.append((entry.begin, entry.end))
    return spans


@dataclass(frozen=True)
class Discrepancy:
    element_id: str
    element_kind: str
    state: MissionState
    overlap: timedelta

    def __str__(self) -> str:
        return (f"{self.element_kind} {self.element_id} overlaps {self.state} "
                f"for {self.overlap.total_seconds():g} s")


def _overlap(a0: datetime, a1: datetime, b0: datetime, b1: datetime | None) -> timedelta:
    hi = a1 if b1 is None else min(a1, b1)
    lo = max(a0, b0)
    return max(hi - lo, timedelta(0))


def reconcile(timeline: StateTimeline, trajectory: Trajectory,
              tolerance: timedelta = timedelta(seconds=60)) -> list[Discrepancy]:
    """Stops that overlap moving states, and moves that overlap stopped states."""
    if timeline.object_id and timeline.object_id != trajectory.object_id:
        raise ObjectMismatchError(f"timeline is for {timeline.object_id}, trajectory for {trajectory.object_id}")
    found: list[Discrepancy] = []
    for el in trajectory.elements():
        is_stop = isinstance(el, Stop)
        conflicting = MOVE_STATES if is_stop else STOP_STATES
        for entry in timeline.entries:
            if entry.state not in conflicting:
                continue
            ov = _overlap(el.begin, el.end, entry.begin, entry.end)
            if ov > tolerance:
                found.append(Discrepancy(el.id, "stop" if is_stop else "move", entry.state, ov))
    return found


def random_walk(table: TransitionTable, steps: int, rng) -> list[EventKind]:
    """A valid event sequence of up to ``steps`` events from Ready."""
    state = MissionState.Ready
    kinds: list[EventKind] = []
    for _ in range(steps):
        options = table.events_from(state)
        if not options:
            break
        kind = rng.choice(sorted(options, key=lambda k: k.value))
        kinds.append(kind)
        state = table.target(state, kind)
    return kinds


def events_from_kinds(object_id: str, kinds: Iterable[EventKind], start: datetime,
                      step: timedelta = timedelta(minutes=1), reporter: str = "") -> list[MissionEvent]:
    start = as_utc(start)
    return [MissionEvent(object_id, start + step * (i + 1), k, reporter) for i, k in enumerate(kinds)]

