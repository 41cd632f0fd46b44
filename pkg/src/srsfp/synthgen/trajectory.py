"""Pedestrian trajectories: reflecting random walk in a square, back-and-forth along a path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GeometryError, ValidationError
from .scenario import PEDESTRIAN_SPEED

MAX_SPEED = 2.0
SAMPLE_PERIOD_S = 0.1
KINDS = ("dense_walk", "path_back_and_forth", "custom")


@dataclass(frozen=True, eq=False)
class Trajectory:
    utc: np.ndarray  # (N,) int64 ms
    xy: np.ndarray  # (N, 2) meters
    kind: str = "custom"

    def __post_init__(self):
        utc = np.asarray(self.utc, dtype=np.int64)
        xy = np.asarray(self.xy, dtype=float)
        if self.kind not in KINDS:
            raise ValidationError(f"unknown trajectory kind {self.kind!r}")
        if len(utc) == 0:
            raise ValidationError("trajectory is empty")
        if xy.shape != (len(utc), 2):
            raise ValidationError(f"xy must have shape ({len(utc)}, 2), got {xy.shape}")
        dt = np.diff(utc)
        if np.any(dt <= 0):
            raise ValidationError("trajectory utc must be strictly increasing")
        if len(utc) > 1:
            speed = np.linalg.norm(np.diff(xy, axis=0), axis=1) / (dt / 1000.0)
            if speed.max() > MAX_SPEED:
                raise ValidationError(
                    f"step speed {speed.max():.3f} m/s exceeds pedestrian bound {MAX_SPEED} m/s"
                )
        object.__setattr__(self, "utc", utc)
        object.__setattr__(self, "xy", xy)

    def __len__(self) -> int:
        return len(self.utc)

    @property
    def start_utc(self) -> int:
        return int(self.utc[0])

    @property
    def end_utc(self) -> int:
        return int(self.utc[-1])

    @property
    def duration_s(self) -> float:
        return (self.end_utc - self.start_utc) / 1000.0

    def position_at(self, utc) -> np.ndarray:
        """Linear interpolation of the track; times are clamped to the track span."""
        utc = np.asarray(utc, dtype=float)
        t = self.utc.astype(float)
        return np.stack([np.interp(utc, t, self.xy[:, 0]), np.interp(utc, t, self.xy[:, 1])], axis=-1)


def _times(duration_s: float, dt: float) -> np.ndarray:
    n = int(np.floor(duration_s / dt + 1e-9))
    t = np.arange(n + 1) * dt
    if duration_s - t[-1] > 1e-9:
        t = np.append(t, duration_s)
    return t


def _to_utc(start_utc: int, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    utc = start_utc + np.rint(t * 1000.0).astype(np.int64)
    keep = np.concatenate([[True], np.diff(utc) > 0])
    return utc, keep


def dense_walk(
    square: tuple[float, float, float, float],
    duration_s: float,
    seed: int,
    start_utc: int = 0,
    speed: float = PEDESTRIAN_SPEED,
    turn_rate: float = 0.2,
) -> Trajectory:
    """Constant-speed walk with a diffusing heading, reflected at the square's edges.

    ``square`` is (xmin, ymin, xmax, ymax); ``turn_rate`` is the heading
    diffusion in rad per sqrt(second).
    """
    xmin, ymin, xmax, ymax = square
    if not (xmax > xmin and ymax > ymin):
        raise GeometryError(f"dense-walk square {square} has zero area")
    if duration_s <= 0:
        raise ValidationError("duration must be > 0")
    rng = np.random.default_rng([seed, 0xD1])
    t = _times(duration_s, SAMPLE_PERIOD_S)
    n = len(t)
    xy = np.empty((n, 2))
    xy[0] = rng.uniform([xmin, ymin], [xmax, ymax])
    heading = rng.uniform(0, 2 * np.pi)
    turns = rng.standard_normal(n) * turn_rate
    lo = np.array([xmin, ymin])
    hi = np.array([xmax, ymax])
    for k in range(1, n):
        dt = t[k] - t[k - 1]
        heading += turns[k] * np.sqrt(dt)
        step = speed * dt * np.array([np.cos(heading), np.sin(heading)])
        p = xy[k - 1] + step
        # reflect at the walls; the step is far shorter than the square so one bounce suffices
        for ax in range(2):
            if p[ax] < lo[ax]:
                p[ax] = 2 * lo[ax] - p[ax]
                heading = np.pi - heading if ax == 0 else -heading
            elif p[ax] > hi[ax]:
                p[ax] = 2 * hi[ax] - p[ax]
                heading = np.pi - heading if ax == 0 else -heading
        xy[k] = np.clip(p, lo, hi)
    utc, keep = _to_utc(start_utc, t)
    return Trajectory(utc[keep], xy[keep], "dense_walk")


def path_back_and_forth(
    waypoints,
    duration_s: float,
    start_utc: int = 0,
    speed: float = PEDESTRIAN_SPEED,
) -> Trajectory:
    """Walk a polyline from its first waypoint to its last and back, repeatedly.

    A duration of ``2 * length / speed`` is exactly one cycle.
    """
    pts = np.asarray(waypoints, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise GeometryError("path needs at least two 2-D waypoints")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    length = seg.sum()
    if length <= 0:
        raise GeometryError("path has zero length")
    if duration_s <= 0:
        raise ValidationError("duration must be > 0")
    t = _times(duration_s, SAMPLE_PERIOD_S)
    period = 2 * length
    s = np.mod(speed * t, period)
    s = np.where(s > length, period - s, s)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    xy = np.stack([np.interp(s, cum, pts[:, 0]), np.interp(s, cum, pts[:, 1])], axis=1)
    utc, keep = _to_utc(start_utc, t)
    return Trajectory(utc[keep], xy[keep], "path_back_and_forth")


def sample_trajectory(kind: str, geometry, duration_s: float, seed: int = 0, start_utc: int = 0) -> Trajectory:
    """Dispatch on ``kind``.

    ``dense_walk``: geometry is the square (xmin, ymin, xmax, ymax).
    ``path_back_and_forth``: geometry is a list of waypoints.
    ``custom``: geometry is a pair (utc_ms array, xy array).
    """
    if kind == "dense_walk":
        return dense_walk(tuple(geometry), duration_s, seed, start_utc)
    if kind == "path_back_and_forth":
        return path_back_and_forth(geometry, duration_s, start_utc)
    if kind == "custom":
        utc, xy = geometry
        return Trajectory(np.asarray(utc), np.asarray(xy), "custom")
    raise ValidationError(f"unknown trajectory kind {kind!r}")
