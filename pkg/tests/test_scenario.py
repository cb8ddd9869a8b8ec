import math

import numpy as np
import pytest

from nearmiss import (IntervalBox, Waypoint, build_path_segment, load_preset,
                      sample_initial_states, sample_waypoint)
from nearmiss.errors import ConfigError


def test_interval_box_rejects_inverted_bounds():
    with pytest.raises(ConfigError):
        IntervalBox(x=(1.0, 0.0), y=(0, 1), theta=(0, 0), v=(0, 1))


def test_initial_states_within_case1_boxes():
    cfg = load_preset("case1")
    rng = np.random.default_rng(0)
    for _ in range(50):
        state = sample_initial_states(cfg, rng)
        ego = state.vehicles[0]
        assert 30.0 <= ego.x <= 50.0
        assert -1.75 <= ego.y <= 1.75
        assert -math.pi / 8 <= ego.theta <= math.pi / 8
        assert 10.0 <= ego.v <= 15.0
        a1 = state.vehicles[1]
        assert 0.0 <= a1.x <= 25.0
        assert a1.theta == 0.0
        assert state.clock == 0.0 and state.tick == 0


def test_degenerate_box_deterministic_point():
    box = IntervalBox(x=(10.0, 10.0), y=(0.0, 0.0), theta=(0.0, 0.0), v=(15.0, 15.0))
    rng = np.random.default_rng(1)
    w = sample_waypoint(box, rng)
    assert (w.x, w.y, w.theta, w.v) == (10.0, 0.0, 0.0, 15.0)


def test_same_seed_same_states():
    cfg = load_preset("case1")
    s1 = sample_initial_states(cfg, np.random.default_rng(99))
    s2 = sample_initial_states(cfg, np.random.default_rng(99))
    assert s1 == s2
    w1 = sample_waypoint(cfg.waypoint_space, np.random.default_rng(5))
    w2 = sample_waypoint(cfg.waypoint_space, np.random.default_rng(5))
    assert w1 == w2


def test_waypoint_sampling_uniform_moments():
    box = IntervalBox(x=(0.0, 100.0), y=(-3.5, 3.5),
                      theta=(-math.pi / 2, math.pi / 2), v=(0.0, 30.0))
    rng = np.random.default_rng(2)
    n = 10_000
    samples = np.array([[w.x, w.y, w.theta, w.v]
                        for w in (sample_waypoint(box, rng) for _ in range(n))])
    for col, (lo, hi) in zip(samples.T, (box.x, box.y, box.theta, box.v)):
        assert lo <= col.min() and col.max() <= hi
        width = hi - lo
        se = width / math.sqrt(12.0 * n)   # standard error of the mean
        assert abs(col.mean() - (lo + hi) / 2.0) < 3.0 * se


WSPACE = IntervalBox(x=(0.0, 100.0), y=(-3.5, 3.5),
                     theta=(-math.pi, math.pi), v=(0.0, 30.0))


def test_segment_interior_straight():
    w = Waypoint(50.0, 0.0, 0.0, 15.0)
    seg = build_path_segment(w, 10.0, WSPACE)
    assert len(seg.waypoints) == 2
    end = seg.waypoints[1]
    assert (end.x, end.y, end.theta, end.v) == (60.0, 0.0, 0.0, 15.0)
    assert seg.length == pytest.approx(10.0, abs=1e-9)


def test_segment_boundary_break_with_corner_truncation():
    w = Waypoint(95.0, 0.0, 0.0, 15.0)
    seg = build_path_segment(w, 10.0, WSPACE)
    assert len(seg.waypoints) == 3
    mid, end = seg.waypoints[1], seg.waypoints[2]
    # breaks at x=100, turns to +pi/2 (positive-rotation tie-break), then the
    # remaining 5 m is clipped at the y=3.5 corner
    assert (mid.x, mid.y) == (100.0, 0.0)
    assert mid.theta == pytest.approx(math.pi / 2)
    assert (end.x, end.y) == (100.0, 3.5)
    assert end.theta == pytest.approx(math.pi / 2)
    assert seg.length == pytest.approx(5.0 + 3.5, abs=1e-9)


def test_segment_boundary_break_heading_closest():
    w = Waypoint(50.0, 3.0, math.pi / 4, 20.0)
    seg = build_path_segment(w, 2.0, WSPACE)
    assert len(seg.waypoints) == 3
    mid, end = seg.waypoints[1], seg.waypoints[2]
    t_hit = 0.5 / math.sin(math.pi / 4)
    assert mid.y == pytest.approx(3.5)
    assert mid.x == pytest.approx(50.0 + t_hit * math.cos(math.pi / 4))
    # boundary heading 0 beats pi (closer to pi/4)
    assert mid.theta == 0.0
    assert end.theta == 0.0
    assert end.y == pytest.approx(3.5)
    assert seg.length == pytest.approx(2.0, abs=1e-9)


def test_segment_rejects_nonpositive_leg():
    with pytest.raises(ValueError):
        build_path_segment(Waypoint(50.0, 0.0, 0.0, 10.0), 0.0, WSPACE)
    with pytest.raises(ValueError):
        build_path_segment(Waypoint(50.0, 0.0, 0.0, 10.0), -1.0, WSPACE)


def test_segment_vertices_inside_box_random():
    rng = np.random.default_rng(31)
    for _ in range(500):
        w = sample_waypoint(WSPACE, rng)
        d_leg = rng.uniform(0.5, 60.0)
        seg = build_path_segment(w, d_leg, WSPACE)
        for wp in seg.waypoints:
            assert WSPACE.contains_xy(wp.x, wp.y, tol=1e-9)
            assert wp.v == w.v
        # exact length unless corner truncation, in which case strictly less
        # and the last vertex is a box corner
        if seg.length < d_leg - 1e-9:
            last = seg.waypoints[-1]
            assert (last.x in (0.0, 100.0)) and (abs(last.y) == 3.5)
        else:
            assert seg.length == pytest.approx(d_leg, abs=1e-9)


def test_segment_waypoints_distinct():
    rng = np.random.default_rng(77)
    for _ in range(300):
        w = sample_waypoint(WSPACE, rng)
        seg = build_path_segment(w, rng.uniform(0.5, 40.0), WSPACE)
        for a, b in zip(seg.waypoints, seg.waypoints[1:]):
            assert (a.x, a.y) != (b.x, b.y)
