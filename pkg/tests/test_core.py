import math
import random

import numpy as np
import pytest

from drivepipe.core import (
    DegenerateSegmentError,
    EgoHistory,
    EgoSample,
    EvalRecord,
    RefinementConfig,
    Trajectory,
    Waypoint,
    heading_change,
)


def _line(n, step=1.0, dt=0.25):
    return Trajectory(tuple(Waypoint(step * i, 0.0) for i in range(n)), dt=dt)


def _heading_oracle(a, b, c):
    # Independent route: absolute difference of the two chord headings,
    # folded into [0, 180].
    ang_u = math.atan2(b.y - a.y, b.x - a.x)
    ang_v = math.atan2(c.y - b.y, c.x - b.x)
    diff = math.degrees(abs(ang_v - ang_u)) % 360.0
    return min(diff, 360.0 - diff)


def test_trajectory_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        Trajectory((Waypoint(0, 0),), dt=0.0)
    with pytest.raises(ValueError):
        Trajectory((Waypoint(0, 0),), dt=-1.0)


def test_trajectory_len_and_array_round_trip():
    t = _line(7, step=0.5)
    assert len(t) == 7
    arr = t.as_array()
    assert arr.shape == (7, 2)
    back = Trajectory.from_array(arr, dt=t.dt)
    assert back == t


def test_trajectory_empty_is_allowed():
    t = Trajectory(())
    assert len(t) == 0
    assert t.as_array().shape == (0, 2)


def test_trajectory_finiteness_check_observes_nan():
    good = _line(3)
    assert good.is_finite()
    bad = Trajectory((Waypoint(0, 0), Waypoint(float("nan"), 0), Waypoint(2, 0)))
    assert not bad.is_finite()


def test_ego_history_accepts_empty_and_single_present_sample():
    EgoHistory()
    EgoHistory((EgoSample(0.0, 10.0, 0.0),))


def test_ego_history_rejects_bad_timestamps():
    with pytest.raises(ValueError):
        EgoHistory((EgoSample(-1.0, 5.0, 0.0), EgoSample(-1.0, 5.0, 0.0), EgoSample(0.0, 5.0, 0.0)))
    with pytest.raises(ValueError):
        EgoHistory((EgoSample(-1.0, 5.0, 0.0),))  # does not end at t=0
    with pytest.raises(ValueError):
        EgoHistory((EgoSample(-6.0, 5.0, 0.0), EgoSample(0.0, 5.0, 0.0)), span=4.0)


def test_eval_record_needs_text_or_pred():
    gt = _line(20)
    EvalRecord(id="a", gt=gt, raw_text="x")
    EvalRecord(id="b", gt=gt, pred=_line(20))
    with pytest.raises(ValueError):
        EvalRecord(id="c", gt=gt)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"z_threshold": 0.0},
        {"min_window": 4},
        {"min_window": 1},
        {"max_window": 3, "min_window": 5},
        {"max_window": 8},
        {"poly_order": 0},
        {"poly_order": 5, "min_window": 5},
        {"keypoint_angle_deg": 0.0},
        {"keypoint_angle_deg": 180.0},
        {"keypoint_weight": 1.5},
        {"keypoint_weight": -0.1},
    ],
)
def test_refinement_config_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        RefinementConfig(**kwargs)


def test_refinement_config_defaults():
    cfg = RefinementConfig()
    assert cfg.z_threshold == 3.0
    assert (cfg.min_window, cfg.max_window) == (5, 9)
    assert cfg.poly_order == 2
    assert cfg.keypoint_angle_deg == 25.0
    assert cfg.keypoint_weight == 0.7


def test_heading_change_collinear_is_zero():
    assert heading_change(Waypoint(0, 0), Waypoint(1, 0), Waypoint(2, 0)) == pytest.approx(0.0)


def test_heading_change_right_angle():
    assert heading_change(Waypoint(0, 0), Waypoint(1, 0), Waypoint(1, 1)) == pytest.approx(90.0)


def test_heading_change_45_matches_atan2_oracle():
    a, b, c = Waypoint(0, 0), Waypoint(1, 0), Waypoint(2, 1)
    expected = _heading_oracle(a, b, c)
    assert expected == pytest.approx(45.0)
    assert heading_change(a, b, c) == pytest.approx(45.0, abs=1e-12)


def test_heading_change_degenerate_segment_raises():
    with pytest.raises(DegenerateSegmentError):
        heading_change(Waypoint(0, 0), Waypoint(0, 0), Waypoint(1, 1))
    with pytest.raises(DegenerateSegmentError):
        heading_change(Waypoint(0, 0), Waypoint(1, 1), Waypoint(1, 1))


def test_heading_change_reversal_symmetry_and_range():
    rng = random.Random(23)
    for _ in range(200):
        pts = [Waypoint(rng.uniform(-10, 10), rng.uniform(-10, 10)) for _ in range(3)]
        a, b, c = pts
        try:
            fwd = heading_change(a, b, c)
        except DegenerateSegmentError:
            continue
        rev = heading_change(c, b, a)
        assert 0.0 <= fwd <= 180.0
        assert fwd == pytest.approx(rev, abs=1e-9)
        assert fwd == pytest.approx(_heading_oracle(a, b, c), abs=1e-9)


def test_heading_change_rigid_motion_invariance():
    rng = random.Random(7)
    for _ in range(100):
        pts = [(rng.uniform(-5, 5), rng.uniform(-5, 5)) for _ in range(3)]
        (ax, ay), (bx, by), (cx, cy) = pts
        if (ax, ay) == (bx, by) or (bx, by) == (cx, cy):
            continue
        theta = rng.uniform(0, 2 * math.pi)
        tx, ty = rng.uniform(-50, 50), rng.uniform(-50, 50)
        cos_t, sin_t = math.cos(theta), math.sin(theta)

        def move(x, y):
            return Waypoint(cos_t * x - sin_t * y + tx, sin_t * x + cos_t * y + ty)

        base = heading_change(Waypoint(ax, ay), Waypoint(bx, by), Waypoint(cx, cy))
        moved = heading_change(move(ax, ay), move(bx, by), move(cx, cy))
        assert moved == pytest.approx(base, abs=1e-9)
