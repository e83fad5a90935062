"""Trajectory refinement: outlier repair, adaptive smoothing, feature preservation.

The pipeline runs in a fixed order:

1. displacement z-score outlier repair,
2. turning-point detection on the repaired trajectory,
3. per-point Savitzky-Golay smoothing with curvature-adaptive window sizes,
4. weighted blending at turning points so sharp maneuvers survive smoothing,
5. exact restoration of both endpoints.

x and y are smoothed independently as 1-D signals over the point index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import COMPLETE_LEN, RefinementConfig, Trajectory
from .normalize import is_complete

# Relative spread below which step lengths are treated as constant: protects
# against last-ulp rounding noise on geometrically uniform steps.
_REL_STD_FLOOR = 1e-9


@dataclass(frozen=True)
class RefinementReport:
    """Diagnostics from one refinement run."""

    outlier_indices: tuple[int, ...]
    keypoint_indices: tuple[int, ...]
    window_used: tuple[int, ...]
    pre_smoothness: float
    post_smoothness: float


@lru_cache(maxsize=256)
def _savgol_weights_cached(window: int, order: int) -> tuple[float, ...]:
    # Weights w satisfy the moment conditions sum(w_i * x_i^j) = delta_j0 for
    # j = 0..order at unit spacing centered on 0; the minimum-norm solution is
    # the classical central smoothing filter.
    x = np.arange(window, dtype=float) - window // 2
    moments = np.vander(x, order + 1, increasing=True).T
    target = np.zeros(order + 1)
    target[0] = 1.0
    weights, *_ = np.linalg.lstsq(moments, target, rcond=None)
    return tuple(weights)


def savgol_weights(window: int, order: int) -> np.ndarray:
    """Central smoothing weights of a Savitzky-Golay filter.

    Dotting the returned weights with ``window`` consecutive samples gives
    the value at the window center of the least-squares polynomial of the
    given order fitted to those samples at unit spacing.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    if not 0 <= order < window:
        raise ValueError(f"order must satisfy 0 <= order < window, got {order}")
    return np.array(_savgol_weights_cached(window, order))


def _step_lengths(pts: np.ndarray) -> np.ndarray:
    steps = np.diff(pts, axis=0)
    return np.hypot(steps[:, 0], steps[:, 1])


def _heading_changes_deg(pts: np.ndarray) -> np.ndarray:
    """Per-vertex unsigned heading change in degrees for interior points.

    Returns an array of length n with zeros at both ends; vertices adjacent
    to a zero-length segment also get zero (their heading is undefined and
    they are treated as straight).
    """
    n = len(pts)
    out = np.zeros(n)
    if n < 3:
        return out
    u = pts[1:-1] - pts[:-2]
    v = pts[2:] - pts[1:-1]
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    dot = u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1]
    ok = (np.hypot(u[:, 0], u[:, 1]) > 0.0) & (np.hypot(v[:, 0], v[:, 1]) > 0.0)
    ang = np.zeros(n - 2)
    ang[ok] = np.degrees(np.arctan2(np.abs(cross[ok]), dot[ok]))
    out[1:-1] = ang
    return out


def _mean_sq_second_diff(pts: np.ndarray) -> float:
    if len(pts) < 3:
        return 0.0
    dd = pts[2:] - 2.0 * pts[1:-1] + pts[:-2]
    return float(np.mean(np.sum(dd * dd, axis=1)))


def zscore_filter(traj: Trajectory, threshold: float) -> tuple[Trajectory, tuple[int, ...]]:
    """Repair displacement outliers by linear interpolation.

    The z-score is taken over all step lengths ``d_i = |p_{i+1} - p_i|``; an
    interior point whose incoming displacement scores ``|z| > threshold`` is
    replaced by linear interpolation between its nearest non-outlier
    neighbors. The first and last points are never flagged, so the point
    count and sampling stay intact. Inputs with fewer than 3 points, or with
    (numerically) constant step lengths, are returned unchanged.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    n = len(traj)
    if n < 3:
        return traj, ()
    pts = traj.as_array()
    d = _step_lengths(pts)
    std = float(d.std())
    if std <= _REL_STD_FLOOR * max(1.0, float(d.mean())):
        return traj, ()
    z = (d - d.mean()) / std
    # z[i-1] scores the incoming displacement of point i.
    outliers = [i for i in range(1, n - 1) if abs(z[i - 1]) > threshold]
    if not outliers:
        return traj, ()
    bad = set(outliers)
    repaired = pts.copy()
    for i in outliers:
        left = i - 1
        while left in bad:
            left -= 1
        right = i + 1
        while right in bad:
            right += 1
        frac = (i - left) / (right - left)
        repaired[i] = pts[left] + frac * (pts[right] - pts[left])
    return Trajectory.from_array(repaired, dt=traj.dt), tuple(outliers)


def detect_keypoints(traj: Trajectory, angle_threshold: float) -> tuple[int, ...]:
    """Interior indices whose heading change exceeds ``angle_threshold`` degrees.

    Vertices touching a zero-length segment are never key-points.
    """
    if len(traj) < 3:
        raise ValueError("key-point detection needs at least 3 points")
    angles = _heading_changes_deg(traj.as_array())
    return tuple(i for i in range(1, len(traj) - 1) if angles[i] > angle_threshold)


def adaptive_window(traj: Trajectory, cfg: RefinementConfig) -> tuple[int, ...]:
    """Per-point odd smoothing window lengths driven by local heading change.

    Straight stretches (heading change below half the key-point angle) get
    ``max_window``; the window shrinks linearly, rounded down to odd, as the
    heading change grows toward the key-point angle, bottoming out at
    ``min_window``. Every window is additionally clipped so it fits inside
    the trajectory centered on its point.
    """
    n = len(traj)
    angles = _heading_changes_deg(traj.as_array())
    half_angle = cfg.keypoint_angle_deg / 2.0
    windows = []
    for i in range(n):
        theta = angles[i]
        if theta <= half_angle:
            w = cfg.max_window
        elif theta >= cfg.keypoint_angle_deg:
            w = cfg.min_window
        else:
            frac = (theta - half_angle) / (cfg.keypoint_angle_deg - half_angle)
            w = int(math.floor(cfg.max_window - frac * (cfg.max_window - cfg.min_window)))
            if w % 2 == 0:
                w -= 1
            w = max(w, cfg.min_window)
        fit = 2 * min(i, n - 1 - i) + 1
        windows.append(min(w, fit))
    return tuple(windows)


def refine(
    traj: Trajectory,
    cfg: RefinementConfig = RefinementConfig(),
    target_len: int = COMPLETE_LEN,
) -> tuple[Trajectory, RefinementReport]:
    """Run the full refinement pipeline on a complete trajectory.

    Requires a complete, finite input (normalize first). Both output
    endpoints are set exactly (bitwise) to the endpoints of the
    outlier-repaired trajectory.
    """
    if not is_complete(traj, target_len):
        raise ValueError(
            f"refine requires a complete finite trajectory of {target_len} points; "
            "normalize first"
        )
    filtered, outlier_idx = zscore_filter(traj, cfg.z_threshold)
    keypoint_idx = detect_keypoints(filtered, cfg.keypoint_angle_deg)
    windows = adaptive_window(filtered, cfg)

    pts = filtered.as_array()
    n = len(pts)
    smoothed = pts.copy()
    for i in range(1, n - 1):
        w = windows[i]
        if w < 3:
            continue
        # A clipped window can undercut poly_order + 1 samples; cap the order
        # so the local fit stays determined.
        order = min(cfg.poly_order, w - 1)
        weights = savgol_weights(w, order)
        half = w // 2
        smoothed[i] = weights @ pts[i - half : i + half + 1]

    out = smoothed.copy()
    kw = cfg.keypoint_weight
    for i in keypoint_idx:
        out[i] = kw * pts[i] + (1.0 - kw) * smoothed[i]
    out[0] = pts[0]
    out[-1] = pts[-1]

    refined = Trajectory.from_array(out, dt=traj.dt)
    report = RefinementReport(
        outlier_indices=outlier_idx,
        keypoint_indices=keypoint_idx,
        window_used=windows,
        pre_smoothness=_mean_sq_second_diff(traj.as_array()),
        post_smoothness=_mean_sq_second_diff(out),
    )
    return refined, report
