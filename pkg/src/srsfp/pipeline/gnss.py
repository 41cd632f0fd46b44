"""GNSS handling: local projection, time interpolation, target noise."""

from __future__ import annotations

import numpy as np

from ..errors import GeometryError, InsufficientDataError, ValidationError

EARTH_RADIUS_M = 6_371_000.0


def geodetic_to_local(lat_deg, lon_deg, origin=None) -> np.ndarray:
    """Equirectangular projection about ``origin`` (default: the first point).

    Returns (N, 2) east/north meters. Adequate within about a kilometre.
    """
    lat = np.atleast_1d(np.asarray(lat_deg, dtype=float))
    lon = np.atleast_1d(np.asarray(lon_deg, dtype=float))
    if lat.size == 0:
        return np.zeros((0, 2))
    lat0, lon0 = (lat[0], lon[0]) if origin is None else origin
    if abs(lat0) >= 90.0 - 1e-9:
        raise GeometryError("projection origin at a pole")
    k = EARTH_RADIUS_M * np.pi / 180.0
    east = (lon - lon0) * np.cos(np.deg2rad(lat0)) * k
    north = (lat - lat0) * k
    return np.column_stack([east, north])


def interpolate_positions(fixes, query_utc) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-linear east/north at each query time.

    Returns ``(xy, kept)``; ``xy`` has a row per kept query only, ``kept`` is
    the boolean mask over all queries (outside the fix span -> False).
    """
    if len(fixes) < 2:
        raise InsufficientDataError(f"need at least 2 GNSS fixes, got {len(fixes)}")
    t = np.array([f.utc for f in fixes], dtype=np.int64)
    if np.any(np.diff(t) <= 0):
        raise ValidationError("GNSS fix times must be strictly increasing")
    east = np.array([f.east for f in fixes], dtype=float)
    north = np.array([f.north for f in fixes], dtype=float)
    q = np.asarray(query_utc, dtype=np.int64)
    kept = (q >= t[0]) & (q <= t[-1])
    qk = q[kept].astype(float)
    tf = t.astype(float)
    xy = np.column_stack([np.interp(qk, tf, east), np.interp(qk, tf, north)])
    return xy, kept


def inject_target_noise(targets: np.ndarray, sigma_m: float, seed: int, epoch: int = 0) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) to every coordinate; a fresh draw per (seed, epoch)."""
    if sigma_m < 0:
        raise ValidationError("noise sigma must be >= 0")
    targets = np.asarray(targets, dtype=float)
    if sigma_m == 0:
        return targets.copy()
    rng = np.random.default_rng([seed, epoch, 0x7A5])
    return targets + rng.normal(0.0, sigma_m, size=targets.shape)
