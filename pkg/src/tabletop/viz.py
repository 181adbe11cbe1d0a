"""Top-down schematic renderings of episodes.

These are diagnostic sketches, not the photorealistic frames a learned model
would consume: the ground grid, object footprints at a chosen frame, the
snitch trail fading in over time, and optionally a predicted cell heat map.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simulate import EpisodeTimeline
from .world import Scene, SceneConfig, Shape

__all__ = ["render_episode", "render_frame_strip", "trail_points"]

_MARKERS = {
    Shape.CUBE: "s",
    Shape.SPHERE: "o",
    Shape.CYLINDER: "H",
    Shape.CONE: "^",
    Shape.SNITCH: "*",
}


def _draw_plane(ax, config: SceneConfig) -> None:
    he = config.plane_half_extent
    edges = np.linspace(-he, he, config.grid_resolution + 1)
    for e in edges:
        ax.plot([e, e], [-he, he], color="0.85", lw=0.6, zorder=0)
        ax.plot([-he, he], [e, e], color="0.85", lw=0.6, zorder=0)
    ax.plot([-he, he, he, -he, -he], [-he, -he, he, he, -he], color="0.4", lw=1.0, zorder=0)
    pad = 0.4
    ax.set_xlim(-he - pad, he + pad)
    ax.set_ylim(-he - pad, he + pad)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])


def _draw_objects(ax, scene: Scene, frame_states: dict) -> None:
    for oid in sorted(frame_states):
        state = frame_states[oid]
        if state.contained_by is not None:
            continue  # hidden inside its container
        spec = scene.spec(oid)
        airborne = state.z > 1e-9
        ax.scatter(
            state.x,
            state.y,
            s=(46.0 * spec.radius) ** 2,
            marker=_MARKERS[spec.shape],
            c=spec.color,
            alpha=0.45 if airborne else 0.9,
            edgecolors="black",
            linewidths=0.5,
            zorder=3 if spec.shape is Shape.SNITCH else 2,
        )


def trail_points(track: tuple[tuple[float, float], ...]) -> np.ndarray:
    """Distinct trail positions in order of first visit (a parked snitch is one dot)."""
    seen: set[tuple[float, float]] = set()
    out = []
    for p in track:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return np.asarray(out)


def _draw_trail(ax, timeline: EpisodeTimeline, upto: int) -> None:
    pts = trail_points(timeline.snitch_track[: upto + 1])
    alphas = np.linspace(0.1, 0.9, len(pts))  # later positions brighter
    colors = np.zeros((len(pts), 4))
    colors[:] = matplotlib.colors.to_rgba("gold")
    colors[:, 3] = alphas
    ax.scatter(pts[:, 0], pts[:, 1], s=4, c=colors, zorder=1)


def _draw_heat(ax, heat: np.ndarray, config: SceneConfig) -> None:
    grid = int(round(len(heat) ** 0.5))
    if grid * grid != len(heat):
        raise ValueError(f"heat vector length {len(heat)} is not a square grid")
    he = config.plane_half_extent
    # row 0 of the cell layout is the lowest y band
    ax.imshow(
        np.asarray(heat, dtype=float).reshape(grid, grid),
        extent=(-he, he, -he, he),
        origin="lower",
        cmap="Reds",
        alpha=0.5,
        zorder=0.5,
    )


def render_episode(
    timeline: EpisodeTimeline,
    out_path: Path | str,
    *,
    frame: int | None = None,
    heat: np.ndarray | None = None,
    title: str | None = None,
) -> Path:
    """Render one frame (default: the last) with the snitch trail so far."""
    frame = timeline.n_frames - 1 if frame is None else frame
    if not (0 <= frame < timeline.n_frames):
        raise ValueError(f"frame {frame} outside episode")
    fig, ax = plt.subplots(figsize=(5, 5))
    _draw_plane(ax, timeline.config)
    if heat is not None:
        _draw_heat(ax, heat, timeline.config)
    _draw_trail(ax, timeline, frame)
    _draw_objects(ax, timeline.scene, timeline.frames[frame])
    if title:
        ax.set_title(title, fontsize=9)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return out_path


def render_frame_strip(
    timeline: EpisodeTimeline,
    out_path: Path | str,
    *,
    every: int = 60,
) -> Path:
    """Render a row of snapshots sampled every N frames."""
    if every < 1:
        raise ValueError("every must be positive")
    frames = list(range(0, timeline.n_frames, every))
    if frames[-1] != timeline.n_frames - 1:
        frames.append(timeline.n_frames - 1)
    fig, axes = plt.subplots(1, len(frames), figsize=(2.4 * len(frames), 2.6))
    for ax, t in zip(np.atleast_1d(axes), frames):
        _draw_plane(ax, timeline.config)
        _draw_trail(ax, timeline, t)
        _draw_objects(ax, timeline.scene, timeline.frames[t])
        ax.set_title(f"t={t}", fontsize=8)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return out_path
