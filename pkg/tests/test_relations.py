import itertools
import random

import pytest

from trajkit.geo import GeoPoint, Region, segment_distance, segments_intersect
from trajkit.model import spatial_footprint
from trajkit.relations import (RelationParams, equal, far, footprint_hausdorff, footprint_min_distance,
                               footprint_region_relation, footprints_intersect, intersects, near,
                               region_relation)

from oracles import dense_region_flags, densify, move_by, np_hausdorff, np_haversine, random_convex_region, \
    random_trajectory

O = GeoPoint(36.8, 10.18)


def square(half_m=500):
    return Region("sq", (move_by(O, -half_m, -half_m), move_by(O, -half_m, half_m),
                         move_by(O, half_m, half_m), move_by(O, half_m, -half_m)))


def line(*offsets):
    return [move_by(O, n, e) for n, e in offsets]


def test_straight_line_through_region():
    rel = footprint_region_relation(line((0, -2000), (0, 2000)), square())
    assert (rel.enter, rel.leave, rel.cross, rel.stay_within, rel.bypass) == (True, True, True, False, False)
    assert rel.crossings == 2


def test_stay_within_and_bypass():
    inside = footprint_region_relation(line((0, -100), (100, 100)), square())
    assert inside.stay_within and not (inside.enter or inside.leave or inside.cross)
    passing = footprint_region_relation(line((800, -2000), (800, 2000)), square())
    assert passing.bypass and not passing.enter
    distant = footprint_region_relation(line((5000, -2000), (5000, 2000)), square())
    assert not distant.bypass


def test_enter_only_and_leave_only():
    assert footprint_region_relation(line((0, -2000), (0, 0)), square()).flags() == {
        "stay_within": False, "bypass": False, "leave": False, "enter": True, "cross": False}
    rel = footprint_region_relation(line((0, 0), (0, 2000)), square())
    assert rel.leave and not rel.enter and not rel.cross


def test_touching_the_boundary_counts_as_inside():
    rel = footprint_region_relation(line((500, -2000), (500, 2000)), square())
    assert rel.enter and rel.leave and rel.cross


def test_relation_params_validation():
    with pytest.raises(ValueError):
        RelationParams(near_threshold=10, equal_tolerance=20)
    with pytest.raises(ValueError):
        RelationParams(bypass_margin=0)


def test_pair_relations_examples():
    a = line((0, -1000), (0, 1000))
    b = line((-1000, 0), (1000, 0))
    c = line((300, -1000), (300, 1000))
    assert footprints_intersect(a, b)
    assert not footprints_intersect(a, c)
    assert footprint_min_distance(a, c) == pytest.approx(300, rel=1e-3)
    assert footprint_hausdorff(a, a) == 0.0


def test_pair_laws_and_oracles():
    rng = random.Random(42)
    p = RelationParams()
    for _ in range(150):
        base = GeoPoint(rng.uniform(-60, 60), rng.uniform(-170, 170))
        t1 = random_trajectory(rng, "A", origin=base, scale_m=rng.choice([300, 3000]))
        t2 = random_trajectory(rng, "B", origin=move_by(base, rng.uniform(-3000, 3000), rng.uniform(-3000, 3000)),
                               scale_m=rng.choice([300, 3000]))
        f1, f2 = spatial_footprint(t1), spatial_footprint(t2)
        assert intersects(t1, t2) == intersects(t2, t1)
        assert near(t1, t2, p) == near(t2, t1, p)
        assert equal(t1, t2, p) == equal(t2, t1, p)
        assert not equal(t1, t2, p) or near(t1, t2, p)
        assert near(t1, t2, p) != far(t1, t2, p)
        s1 = list(zip(f1, f1[1:])) or [(f1[0], f1[0])]
        s2 = list(zip(f2, f2[1:])) or [(f2[0], f2[0])]
        assert intersects(t1, t2) == any(segments_intersect(a, b, c, d) for (a, b), (c, d) in itertools.product(s1, s2))
        brute = min(segment_distance(a, b, c, d) for (a, b), (c, d) in itertools.product(s1, s2))
        assert footprint_min_distance(f1, f2) == pytest.approx(brute, abs=1e-9)
        assert footprint_hausdorff(f1, f2) == pytest.approx(np_hausdorff(f1, f2), rel=1e-9, abs=1e-6)
        # dense sampling can only find a distance at least as large as the exact minimum
        l1, o1 = densify(f1, 25.0)
        l2, o2 = densify(f2, 25.0)
        sampled = float(np_haversine(l1[:, None], o1[:, None], l2[None, :], o2[None, :]).min())
        assert brute <= sampled + 1e-6
        assert sampled <= brute + 25.0


def test_region_relation_implications_and_dense_oracle():
    rng = random.Random(7)
    p = RelationParams()
    for k in range(120):
        center = GeoPoint(rng.uniform(-60, 60), rng.uniform(-170, 170))
        region = random_convex_region(rng, center, rng.uniform(300, 2000), f"R{k}")
        t = random_trajectory(rng, "A", origin=move_by(center, rng.uniform(-2500, 2500), rng.uniform(-2500, 2500)),
                              scale_m=2500, max_path=3)
        rel = region_relation(t, region, p)
        assert not rel.cross or (rel.enter and rel.leave)
        assert not rel.stay_within or not (rel.enter or rel.leave or rel.bypass)
        assert not rel.bypass or not (rel.enter or rel.leave or rel.stay_within)
        want = dense_region_flags(spatial_footprint(t), region.ring, p.bypass_margin)
        assert rel.flags() == {k2: v for k2, v in want.items() if k2 != "crossings"}, k
