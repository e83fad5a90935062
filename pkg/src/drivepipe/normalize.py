"""Length normalization: force parsed trajectories to the required point count.

Planner output occasionally misses the required length. Overlong predictions
are trimmed; short ones are completed by repeating the final step vector
(constant-velocity assumption). Empty predictions are an error so that the
evaluation harness can count them instead of scoring fabricated points.
"""

from __future__ import annotations

from .core import COMPLETE_LEN, Trajectory, Waypoint


class EmptyPredictionError(ValueError):
    """Raised when asked to normalize a trajectory with no points."""


def normalize_length(traj: Trajectory, target_len: int = COMPLETE_LEN) -> Trajectory:
    """Trim or constant-velocity-extend ``traj`` to exactly ``target_len`` points.

    Longer inputs keep their first ``target_len`` points. Shorter inputs are
    extended by repeating the last step vector; a single-point input is
    extended with zero velocity (the point is repeated). ``dt`` is preserved.
    """
    if target_len < 1:
        raise ValueError(f"target_len must be >= 1, got {target_len}")
    n = len(traj)
    if n == 0:
        raise EmptyPredictionError("empty prediction")
    if n >= target_len:
        return Trajectory(traj.points[:target_len], dt=traj.dt)
    points = list(traj.points)
    if n == 1:
        vx, vy = 0.0, 0.0
    else:
        vx = points[-1].x - points[-2].x
        vy = points[-1].y - points[-2].y
    while len(points) < target_len:
        last = points[-1]
        points.append(Waypoint(last.x + vx, last.y + vy))
    return Trajectory(tuple(points), dt=traj.dt)


def is_complete(traj: Trajectory, target_len: int = COMPLETE_LEN) -> bool:
    """True iff ``traj`` has exactly ``target_len`` points, all finite."""
    return len(traj) == target_len and traj.is_finite()
