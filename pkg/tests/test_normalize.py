import math
import random

import pytest

from drivepipe.core import Trajectory, Waypoint
from drivepipe.normalize import EmptyPredictionError, is_complete, normalize_length


def _traj(coords, dt=0.25):
    return Trajectory(tuple(Waypoint(x, y) for x, y in coords), dt=dt)


def _extrapolate_oracle(coords, target):
    # One-line constant-velocity oracle used to freeze the short-input cases.
    out = list(coords)
    vx, vy = out[-1][0] - out[-2][0], out[-1][1] - out[-2][1]
    while len(out) < target:
        out.append((out[-1][0] + vx, out[-1][1] + vy))
    return out


def test_long_input_keeps_first_target_points():
    t = _traj([(float(i), 0.0) for i in range(22)])
    out = normalize_length(t, 20)
    assert len(out) == 20
    assert out.points == t.points[:20]


def test_constant_velocity_on_a_line():
    out = normalize_length(_traj([(0, 0), (1, 0)]), 4)
    assert out.points == (Waypoint(0, 0), Waypoint(1, 0), Waypoint(2, 0), Waypoint(3, 0))


def test_constant_velocity_diagonal_matches_oracle():
    coords = [(0.0, 0.0), (1.0, 1.0)]
    expected = _extrapolate_oracle(coords, 3)
    assert expected == [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]
    out = normalize_length(_traj(coords), 3)
    assert [(p.x, p.y) for p in out.points] == expected


def test_single_point_repeats_with_zero_velocity():
    out = normalize_length(_traj([(2.5, -1.0)]), 5)
    assert len(out) == 5
    assert all(p == Waypoint(2.5, -1.0) for p in out.points)


def test_empty_input_raises_empty_prediction():
    with pytest.raises(EmptyPredictionError, match="empty prediction"):
        normalize_length(Trajectory(()), 20)


def test_dt_is_preserved():
    out = normalize_length(_traj([(0, 0), (1, 0)], dt=0.5), 6)
    assert out.dt == 0.5


def test_target_len_must_be_positive():
    with pytest.raises(ValueError):
        normalize_length(_traj([(0, 0)]), 0)


def test_idempotent_and_appended_steps_equal():
    rng = random.Random(5)
    for _ in range(200):
        n = rng.randrange(1, 41)
        coords = [(rng.uniform(-50, 50), rng.uniform(-50, 50)) for _ in range(n)]
        t = _traj(coords)
        out = normalize_length(t, 20)
        assert len(out) == 20
        assert normalize_length(out, 20) == out
        if n > 20:
            assert out.points == t.points[:20]
        elif 2 <= n < 20:
            steps = [
                (b.x - a.x, b.y - a.y)
                for a, b in zip(out.points[n - 1 :], out.points[n:])
            ]
            vx, vy = coords[-1][0] - coords[-2][0], coords[-1][1] - coords[-2][1]
            for sx, sy in steps:
                assert math.hypot(sx - vx, sy - vy) <= 1e-9


def test_is_complete_cases():
    assert is_complete(_traj([(float(i), 0.0) for i in range(20)]))
    assert not is_complete(_traj([(float(i), 0.0) for i in range(19)]))
    nan_points = [(float(i), 0.0) for i in range(20)]
    nan_points[7] = (float("nan"), 0.0)
    assert not is_complete(_traj(nan_points))
    assert is_complete(_traj([(0.0, 0.0)] * 6), target_len=6)
