import random
from datetime import timedelta

import pytest

from trajkit.errors import AlternationError, InvalidElementError, TemporalGapError, TrajectoryError
from trajkit.geo import GeoPoint
from trajkit.model import (Move, Stop, StopSource, Trajectory, TrajectorySection, build_trajectory, sections,
                           spatial_footprint)

from oracles import T0, random_invalid_case, random_trajectory

P, Q = GeoPoint(36.8, 10.18), GeoPoint(36.81, 10.2)


def minutes(n):
    return T0 + timedelta(minutes=n)


def two_stop_trajectory():
    s0 = Stop("S0", "MH", minutes(0), minutes(10), P)
    m0 = Move("M0", "MH", minutes(10), minutes(20), P, Q, ((minutes(10), P), (minutes(20), Q)))
    s1 = Stop("S1", "MH", minutes(20), minutes(30), Q, StopSource.DECLARED)
    return build_trajectory("MH", [s0, s1], [m0])


def test_build_basic():
    t = two_stop_trajectory()
    assert t.id == "MH-T"
    assert t.begin == minutes(0) and t.end == minutes(30)
    assert t.duration == timedelta(minutes=30)
    assert [e.id for e in t.elements()] == ["S0", "M0", "S1"]


def test_single_stop_trajectory():
    t = build_trajectory("MH", [Stop("S0", "MH", minutes(0), minutes(5), P)], [])
    assert t.moves == () and spatial_footprint(t) == [P]


def test_gap_between_stop_and_move():
    s0 = Stop("S0", "MH", minutes(0), minutes(10), P)
    m0 = Move("M0", "MH", minutes(11), minutes(20), P, Q)
    s1 = Stop("S1", "MH", minutes(20), minutes(30), Q)
    with pytest.raises(TemporalGapError):
        build_trajectory("MH", [s0, s1], [m0])


def test_errors_share_a_base():
    assert issubclass(AlternationError, TrajectoryError)
    assert issubclass(TemporalGapError, TrajectoryError)


def test_duration_is_revalidated():
    t = two_stop_trajectory()
    with pytest.raises(TemporalGapError):
        Trajectory(t.id, t.object_id, t.begin, t.end, t.duration + timedelta(seconds=1), t.stops, t.moves)


def test_move_path_must_match_endpoints():
    with pytest.raises(InvalidElementError):
        Move("M", "MH", minutes(0), minutes(1), P, Q, ((minutes(0), P), (minutes(1), P)))
    with pytest.raises(InvalidElementError):
        Move("M", "MH", minutes(0), minutes(1), P, Q, ((minutes(0), P), (minutes(2), Q)))


def test_naive_timestamps_rejected():
    with pytest.raises(ValueError):
        Stop("S", "MH", minutes(0).replace(tzinfo=None), minutes(1), P)


def test_valid_random_trajectories_and_sections_roundtrip():
    rng = random.Random(1)
    for _ in range(300):
        t = random_trajectory(rng)
        assert len(t.moves) == len(t.stops) - 1
        secs = sections(t)
        stops = [secs[0].start_stop] + [s.end_stop for s in secs] if secs else list(t.stops)
        assert tuple(stops) == t.stops
        assert tuple(s.move for s in secs) == t.moves
        assert all(isinstance(s, TrajectorySection) for s in secs)
        for a, b in zip(t.elements(), t.elements()[1:]):
            assert a.end == b.begin


def test_invalid_random_inputs_raise_expected_class():
    rng = random.Random(2)
    for _ in range(300):
        thunk, expected = random_invalid_case(rng)
        with pytest.raises(expected):
            thunk()


def test_footprint_drops_consecutive_duplicates():
    t = two_stop_trajectory()
    assert spatial_footprint(t) == [P, Q]
