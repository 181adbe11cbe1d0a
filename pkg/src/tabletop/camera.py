"""Camera model: look-at poses, waypoint schedules, projection, ground homography."""

from __future__ import annotations

from dataclasses import dataclass
from math import tan, radians

import numpy as np

from .world import CameraMode, SceneConfig

__all__ = [
    "STATIC_LOCATION",
    "MOVING_START",
    "GeometryError",
    "BehindCameraError",
    "Intrinsics",
    "CameraPose",
    "CameraSchedule",
    "waypoint_set",
    "camera_schedule",
    "project",
    "ground_homography",
    "image_to_ground",
]

# Default static viewpoint, looking at the plane origin.
STATIC_LOCATION = (7.5, -6.5, 5.3)

# Shared first waypoint of every moving schedule.
MOVING_START = (10.0, -10.0, 10.0)

_WAYPOINT_XY = (-10.0, 10.0)
_WAYPOINT_Z = (8.0, 10.0, 12.0)

_WORLD_UP = np.array([0.0, 0.0, 1.0])


class GeometryError(ValueError):
    """Degenerate camera geometry (singular pose or unusable homography)."""


class BehindCameraError(GeometryError):
    """A point to project lies on or behind the camera plane."""


def waypoint_set() -> tuple[tuple[float, float, float], ...]:
    """The 12 candidate locations for a moving camera."""
    return tuple(
        (x, y, z) for x in _WAYPOINT_XY for y in _WAYPOINT_XY for z in _WAYPOINT_Z
    )


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics with the principal point at the image center."""

    width: int = 320
    height: int = 240
    vfov_deg: float = 40.0

    @property
    def focal(self) -> float:
        return (self.height / 2.0) / tan(radians(self.vfov_deg) / 2.0)

    @property
    def center(self) -> tuple[float, float]:
        return (self.width / 2.0, self.height / 2.0)

    def matrix(self) -> np.ndarray:
        cx, cy = self.center
        f = self.focal
        return np.array([[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class CameraPose:
    """Camera location; orientation is always a look-at toward the world origin."""

    x: float
    y: float
    z: float

    @property
    def location(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def rotation(self) -> np.ndarray:
        """World-to-camera rotation, rows (right, image-down, forward)."""
        loc = self.location
        dist = float(np.linalg.norm(loc))
        if dist == 0.0:
            raise GeometryError("camera placed at the look-at point")
        forward = -loc / dist
        right = np.cross(forward, _WORLD_UP)
        n = float(np.linalg.norm(right))
        if n < 1e-12:
            raise GeometryError("camera directly above the origin: up axis degenerate")
        right /= n
        up = np.cross(right, forward)
        return np.stack([right, -up, forward])


@dataclass(frozen=True)
class CameraSchedule:
    """Per-frame camera poses, piecewise linear between per-slot waypoints."""

    mode: CameraMode
    waypoints: tuple[tuple[float, float, float], ...]
    slot_len: int
    n_frames: int

    def pose_at(self, frame: int) -> CameraPose:
        if not (0 <= frame < self.n_frames):
            raise ValueError(f"frame {frame} outside schedule")
        if self.mode is CameraMode.STATIC:
            return CameraPose(*self.waypoints[0])
        slot = frame // self.slot_len
        u = (frame - slot * self.slot_len) / self.slot_len
        a = np.array(self.waypoints[slot])
        b = np.array(self.waypoints[slot + 1])
        loc = (1.0 - u) * a + u * b
        return CameraPose(float(loc[0]), float(loc[1]), float(loc[2]))

    def poses(self) -> list[CameraPose]:
        return [self.pose_at(t) for t in range(self.n_frames)]


def camera_schedule(
    mode: CameraMode,
    config: SceneConfig,
    rng: np.random.Generator | None = None,
    *,
    start: tuple[float, float, float] = MOVING_START,
) -> CameraSchedule:
    """Build the per-episode schedule. Static mode uses the default viewpoint.

    A moving camera picks one new waypoint per slot from the 12-point grid,
    never changing both X and Y at once; repeats are allowed, and every moving
    schedule shares the same first pose.
    """
    if mode is CameraMode.STATIC:
        return CameraSchedule(mode, (STATIC_LOCATION,), config.slot_len, config.frames)
    if rng is None:
        raise ValueError("moving camera schedule needs an rng")
    grid = waypoint_set()
    waypoints = [start]
    for _ in range(config.n_slots):
        cx, cy, _ = waypoints[-1]
        options = [w for w in grid if w[0] == cx or w[1] == cy]
        waypoints.append(options[int(rng.integers(len(options)))])
    return CameraSchedule(mode, tuple(waypoints), config.slot_len, config.frames)


def project(
    points: np.ndarray,
    pose: CameraPose,
    intrinsics: Intrinsics = Intrinsics(),
) -> np.ndarray:
    """Project world points (..., 3) to pixel coordinates (..., 2)."""
    pts = np.asarray(points, dtype=float)
    cam = (pts - pose.location) @ pose.rotation().T
    z = cam[..., 2]
    if np.any(z <= 1e-12):
        raise BehindCameraError("point on or behind the camera plane")
    f = intrinsics.focal
    cx, cy = intrinsics.center
    u = cx + f * cam[..., 0] / z
    v = cy + f * cam[..., 1] / z
    return np.stack([u, v], axis=-1)


def ground_homography(pose: CameraPose, intrinsics: Intrinsics = Intrinsics()) -> np.ndarray:
    """Homography mapping ground-plane points (X, Y, 1) to pixels (u, v, 1)."""
    rot = pose.rotation()
    t = -rot @ pose.location
    h = intrinsics.matrix() @ np.column_stack([rot[:, 0], rot[:, 1], t])
    if abs(np.linalg.det(h)) < 1e-12 or np.linalg.cond(h) > 1e12:
        raise GeometryError("ground homography is singular for this pose")
    return h


def image_to_ground(
    pixels: np.ndarray,
    pose: CameraPose,
    intrinsics: Intrinsics = Intrinsics(),
) -> np.ndarray:
    """Back-project pixels (..., 2) to ground-plane coordinates (..., 2)."""
    h_inv = np.linalg.inv(ground_homography(pose, intrinsics))
    px = np.asarray(pixels, dtype=float)
    ones = np.ones(px.shape[:-1] + (1,))
    homog = np.concatenate([px, ones], axis=-1) @ h_inv.T
    return homog[..., :2] / homog[..., 2:3]
