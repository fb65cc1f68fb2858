import random
from datetime import timedelta

import pytest

from trajkit.errors import InvalidTransitionError, MixedObjectError, ObjectMismatchError, SchemaError, \
    UnsortedInputError
from trajkit.mission import (DEFAULT_TABLE, EventKind, MissionEvent, MissionState, TransitionTable,
                             events_from_kinds, random_walk, reconcile, replay, stop_state_intervals,
                             transition)
from trajkit.model import Move, Stop, build_trajectory
from trajkit.scenario import sample_mission
from trajkit.segmentation import segment

from oracles import T0

S, E = MissionState, EventKind


def test_table_has_eight_edges():
    assert len(DEFAULT_TABLE) == 8
    assert transition(S.Ready, E.DepartRoad) is S.MoveInRoad
    assert transition(S.StopInDestination, E.EndMission) is S.Ready
    with pytest.raises(InvalidTransitionError):
        transition(S.Ready, E.Breakdown)


def test_replay_builds_contiguous_timeline():
    events = events_from_kinds("MH", [E.DepartRoad, E.Breakdown, E.Repaired, E.ArriveDestination], T0)
    tl = replay(events, T0)
    assert tl.states == [S.Ready, S.MoveInRoad, S.StopFailure, S.MoveInRoad, S.StopInDestination]
    assert tl.entries[-1].end is None
    assert tl.state_at(T0 + timedelta(minutes=2)) is S.StopFailure
    assert tl.state_at(T0 - timedelta(seconds=1)) is None
    assert stop_state_intervals(tl) == [(T0 + timedelta(minutes=2), T0 + timedelta(minutes=3)),
                                        (T0 + timedelta(minutes=4), None)]


def test_replay_reports_failing_index_and_rejects_bad_input():
    events = events_from_kinds("MH", [E.DepartRoad, E.ArriveDestination, E.Repaired], T0)
    with pytest.raises(InvalidTransitionError) as info:
        replay(events, T0)
    assert info.value.index == 2 and info.value.state is S.StopInDestination
    with pytest.raises(UnsortedInputError):
        replay([MissionEvent("MH", events[1].timestamp, E.DepartRoad),
                MissionEvent("MH", events[0].timestamp, E.ArriveDestination)], T0)
    with pytest.raises(MixedObjectError):
        replay([events[0], MissionEvent("X", events[1].timestamp, E.ArriveDestination)], T0)


def test_random_walks_replay_and_prefixes_are_consistent():
    rng = random.Random(3)
    for _ in range(300):
        kinds = random_walk(DEFAULT_TABLE, rng.randint(0, 40), rng)
        events = events_from_kinds("MH", kinds, T0)
        full = replay(events, T0)
        cut = rng.randint(0, len(events))
        prefix = replay(events[:cut], T0)
        assert prefix.states == full.states[:cut + 1]


def test_single_edge_corruption_fails_at_that_index():
    rng = random.Random(4)
    for _ in range(300):
        kinds = random_walk(DEFAULT_TABLE, rng.randint(1, 30), rng)
        i = rng.randrange(len(kinds))
        state = S.Ready
        for k in kinds[:i]:
            state = DEFAULT_TABLE.target(state, k)
        wrong = [k for k in EventKind if DEFAULT_TABLE.target(state, k) is None]
        kinds[i] = rng.choice(wrong)
        with pytest.raises(InvalidTransitionError) as info:
            replay(events_from_kinds("MH", kinds, T0), T0)
        assert info.value.index == i


def test_table_text_roundtrip_and_override(tmp_path):
    assert TransitionTable.from_text(DEFAULT_TABLE.to_text()) == DEFAULT_TABLE
    path = tmp_path / "table.csv"
    path.write_text("# breakdowns end the mission\nReady,DepartRoad,MoveInRoad\nMoveInRoad,Breakdown,Ready\n")
    table = TransitionTable.load(path)
    tl = replay(events_from_kinds("MH", [E.DepartRoad, E.Breakdown, E.DepartRoad], T0), T0, table)
    assert tl.states[-1] is S.MoveInRoad
    with pytest.raises(SchemaError) as info:
        TransitionTable.from_text("Ready,DepartRoad,MoveInRoad\nReady,Nope,Ready\n")
    assert info.value.line == 2


def test_reconcile_sample_is_clean_and_catches_inserted_stop():
    sc = sample_mission()
    t = segment(sc.fixes, declared_events=sc.events).trajectory
    tl = replay(sc.events, sc.fixes[0].timestamp)
    assert reconcile(tl, t) == []
    # fabricate a stop in the middle of the first road leg
    m = t.moves[0]
    mid = m.begin + (m.end - m.begin) / 2
    a, b = mid - timedelta(minutes=3), mid + timedelta(minutes=3)
    stops = [t.stops[0], Stop("X", t.object_id, a, b, m.begin_position), *t.stops[1:]]
    moves = [Move("M0a", t.object_id, m.begin, a, m.begin_position, m.begin_position),
             Move("M0b", t.object_id, b, m.end, m.begin_position, m.end_position), *t.moves[1:]]
    bad = build_trajectory(t.object_id, stops, moves)
    found = reconcile(tl, bad)
    assert found and {(d.element_id, d.state) for d in found} == {("X", S.MoveInRoad)}
    with pytest.raises(ObjectMismatchError):
        reconcile(replay(events_from_kinds("other", [E.DepartRoad], T0), T0), t)
