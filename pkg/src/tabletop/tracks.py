"""Pixel-space tracks: project replayed object centers through the camera.

Output is tracker-friendly: per-frame pixel positions for every object, a
fixed-size initialization box around the snitch at frame zero, and flags for
frames where a point falls on or behind the camera plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraSchedule, Intrinsics
from .io import SCHEMA_VERSION
from .simulate import EpisodeTimeline

__all__ = [
    "INIT_BOX_SIZE",
    "PixelTrack",
    "pixel_tracks",
    "snitch_init_box",
    "tracks_to_dict",
]

INIT_BOX_SIZE = 24  # pixels, both dimensions


@dataclass(frozen=True)
class PixelTrack:
    """One object's projected center, frame by frame."""

    object_id: int
    pixels: np.ndarray  # (n_frames, 2); nan where the point is not in front
    in_front: np.ndarray  # (n_frames,) bool

    def in_frame(self, intrinsics: Intrinsics = Intrinsics()) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            inside = (
                (self.pixels[:, 0] >= 0)
                & (self.pixels[:, 0] < intrinsics.width)
                & (self.pixels[:, 1] >= 0)
                & (self.pixels[:, 1] < intrinsics.height)
            )
        return inside & self.in_front


def _project_frames(
    points: np.ndarray,  # (n_frames, n_objects, 3) world coordinates
    camera: CameraSchedule,
    intrinsics: Intrinsics,
) -> tuple[np.ndarray, np.ndarray]:
    n_frames, n_objects = points.shape[:2]
    pixels = np.full((n_frames, n_objects, 2), np.nan)
    in_front = np.zeros((n_frames, n_objects), dtype=bool)
    f = intrinsics.focal
    cx, cy = intrinsics.center
    for t in range(n_frames):
        pose = camera.pose_at(t)
        cam = (points[t] - pose.location) @ pose.rotation().T
        ok = cam[:, 2] > 1e-12
        in_front[t] = ok
        pixels[t, ok, 0] = cx + f * cam[ok, 0] / cam[ok, 2]
        pixels[t, ok, 1] = cy + f * cam[ok, 1] / cam[ok, 2]
    return pixels, in_front


def pixel_tracks(
    timeline: EpisodeTimeline, intrinsics: Intrinsics = Intrinsics()
) -> dict[int, PixelTrack]:
    """Project every object's center through the episode's camera schedule."""
    if timeline.camera is None:
        raise ValueError("timeline was replayed without a camera schedule")
    ids = sorted(timeline.frames[0])
    points = np.array(
        [[(f[oid].x, f[oid].y, f[oid].z) for oid in ids] for f in timeline.frames]
    )
    pixels, in_front = _project_frames(points, timeline.camera, intrinsics)
    return {
        oid: PixelTrack(oid, pixels[:, j], in_front[:, j]) for j, oid in enumerate(ids)
    }


def snitch_init_box(
    timeline: EpisodeTimeline,
    intrinsics: Intrinsics = Intrinsics(),
    *,
    box_size: int = INIT_BOX_SIZE,
) -> tuple[float, float, int, int]:
    """Fixed-size box (left, top, w, h) around the snitch at frame zero."""
    track = pixel_tracks(timeline, intrinsics)[timeline.scene.snitch_id]
    if not track.in_front[0]:
        raise ValueError("snitch is behind the camera at frame zero")
    u, v = track.pixels[0]
    half = box_size / 2
    return (float(u - half), float(v - half), box_size, box_size)


def _pixel_list(track: PixelTrack) -> list:
    return [
        [float(u), float(v)] if front else None
        for (u, v), front in zip(track.pixels, track.in_front)
    ]


def tracks_to_dict(
    timeline: EpisodeTimeline,
    episode_id: str,
    intrinsics: Intrinsics = Intrinsics(),
    *,
    box_size: int = INIT_BOX_SIZE,
) -> dict:
    """JSON-ready track export for one episode."""
    tracks = pixel_tracks(timeline, intrinsics)
    snitch = tracks[timeline.scene.snitch_id]
    return {
        "schema_version": SCHEMA_VERSION,
        "episode_id": episode_id,
        "image_size": [intrinsics.width, intrinsics.height],
        "camera_mode": timeline.camera.mode.value,
        "init_box": list(snitch_init_box(timeline, intrinsics, box_size=box_size)),
        "snitch": _pixel_list(snitch),
        "objects": {str(oid): _pixel_list(t) for oid, t in sorted(tracks.items())},
    }
