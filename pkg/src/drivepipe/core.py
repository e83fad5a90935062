"""Shared domain types for BEV driving trajectories.

Coordinate convention: x is longitudinal (forward-positive), y is lateral
(left-positive), origin at the ego vehicle at t=0. Waypoints are sampled at a
uniform time step, 0.25 s by default, so a full 5 s horizon is 20 points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_DT = 0.25
COMPLETE_LEN = 20
DEFAULT_HISTORY_SPAN = 4.0


class DegenerateSegmentError(ValueError):
    """Raised when a heading is requested over a zero-length segment."""


@dataclass(frozen=True)
class Waypoint:
    """A single future (x, y) position of the ego vehicle, in meters.

    The container itself does not reject non-finite coordinates; parsing and
    refinement enforce finiteness at their boundaries so that completeness
    checks can still observe bad values.
    """

    x: float
    y: float

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


@dataclass(frozen=True)
class Trajectory:
    """Ordered, uniformly sampled sequence of waypoints.

    ``dt`` is the time spacing between consecutive points in seconds. A
    trajectory is "complete" when it has exactly ``COMPLETE_LEN`` finite
    points (see ``normalize.is_complete``).
    """

    points: tuple[Waypoint, ...]
    dt: float = DEFAULT_DT

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    def __len__(self) -> int:
        return len(self.points)

    def is_finite(self) -> bool:
        return all(p.is_finite for p in self.points)

    def as_array(self) -> np.ndarray:
        """Return the waypoints as a float array of shape (n, 2)."""
        return np.array([(p.x, p.y) for p in self.points], dtype=float).reshape(-1, 2)

    @classmethod
    def from_array(cls, arr, dt: float = DEFAULT_DT) -> "Trajectory":
        return cls(tuple(Waypoint(float(x), float(y)) for x, y in arr), dt=dt)


@dataclass(frozen=True)
class EgoSample:
    """One past kinematic state: time offset (s, <= 0), speed (m/s), acceleration (m/s^2)."""

    t: float
    velocity: float
    acceleration: float


@dataclass(frozen=True)
class EgoHistory:
    """Recent ego kinematics covering up to ``span`` seconds before t=0.

    Samples are ordered oldest first; the final sample is the present
    (t = 0). The window they cover must fit inside the declared span.
    """

    samples: tuple[EgoSample, ...] = ()
    span: float = DEFAULT_HISTORY_SPAN

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.span <= 0:
            raise ValueError(f"span must be positive, got {self.span}")
        if not self.samples:
            return
        ts = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("history timestamps must be strictly increasing")
        if ts[-1] != 0.0:
            raise ValueError(f"final history sample must be at t=0, got t={ts[-1]}")
        if ts[-1] - ts[0] > self.span + 1e-9:
            raise ValueError(
                f"history covers {ts[-1] - ts[0]:.3f}s, exceeding declared span {self.span}s"
            )


@dataclass(frozen=True)
class StructuredResponse:
    """The three-stage planner output: scene description, decision, trajectory.

    The text fields must not contain any of the six delimiter literals; this
    is enforced where the response meets the wire format (serialization).
    """

    description: str
    decision: str
    trajectory: Trajectory


@dataclass(frozen=True)
class RefinementConfig:
    """Tunables of the trajectory refinement pipeline.

    ``keypoint_weight`` is the weight given to the original (pre-smoothing)
    point when blending at detected turning points.
    """

    z_threshold: float = 3.0
    min_window: int = 5
    max_window: int = 9
    poly_order: int = 2
    keypoint_angle_deg: float = 25.0
    keypoint_weight: float = 0.7

    def __post_init__(self) -> None:
        if self.z_threshold <= 0:
            raise ValueError("z_threshold must be positive")
        if self.min_window < 3 or self.min_window % 2 == 0:
            raise ValueError("min_window must be an odd integer >= 3")
        if self.max_window < self.min_window or self.max_window % 2 == 0:
            raise ValueError("max_window must be an odd integer >= min_window")
        if self.poly_order < 1:
            raise ValueError("poly_order must be >= 1")
        if self.poly_order >= self.min_window:
            raise ValueError("poly_order must be smaller than min_window")
        if not 0.0 < self.keypoint_angle_deg < 180.0:
            raise ValueError("keypoint_angle_deg must lie in (0, 180)")
        if not 0.0 <= self.keypoint_weight <= 1.0:
            raise ValueError("keypoint_weight must lie in [0, 1]")


@dataclass(frozen=True)
class EvalRecord:
    """One evaluation row: raw model text and/or parsed prediction plus ground truth."""

    id: str
    gt: Trajectory
    raw_text: str | None = None
    pred: Trajectory | None = None
    ego_history: EgoHistory | None = None
    nav_instruction: str | None = None

    def __post_init__(self) -> None:
        if self.raw_text is None and self.pred is None:
            raise ValueError(f"record {self.id!r} has neither raw_text nor pred")


def heading_change(a: Waypoint, b: Waypoint, c: Waypoint) -> float:
    """Unsigned angle in degrees between segment a->b and segment b->c.

    Returns a value in [0, 180]: 0 for collinear continuation, 180 for a
    full reversal. Raises ``DegenerateSegmentError`` if either segment has
    zero length, since the heading through that vertex is undefined.
    """
    ux, uy = b.x - a.x, b.y - a.y
    vx, vy = c.x - b.x, c.y - b.y
    if (ux == 0.0 and uy == 0.0) or (vx == 0.0 and vy == 0.0):
        raise DegenerateSegmentError("undefined heading: zero-length segment")
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return math.degrees(math.atan2(abs(cross), dot))
