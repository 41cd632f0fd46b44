"""Scenario description: base station, array, carriers, reflectors, blockers, shadowing."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import ndimage

from ..config import from_mapping, load_yaml
from ..errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0
CENTER_FREQUENCY_HZ = 3.85e9
BANDWIDTH_HZ = 100e6
# one container = 2 PRBs at 30 kHz subcarrier spacing
CONTAINER_BANDWIDTH_HZ = 2 * 12 * 30e3
PEDESTRIAN_SPEED = 3.0 / 3.6


def default_channel_frequencies() -> tuple[float, float, float]:
    """Centres of the lowest, middle and highest 2-PRB containers of the carrier."""
    lo = CENTER_FREQUENCY_HZ - BANDWIDTH_HZ / 2 + CONTAINER_BANDWIDTH_HZ / 2
    hi = CENTER_FREQUENCY_HZ + BANDWIDTH_HZ / 2 - CONTAINER_BANDWIDTH_HZ / 2
    return (lo, CENTER_FREQUENCY_HZ, hi)


@dataclass(frozen=True)
class Reflector:
    position: tuple[float, float, float]
    loss: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.loss <= 1.0:
            raise ConfigError(f"reflector loss {self.loss} outside [0, 1]")


@dataclass(frozen=True)
class Blocker:
    """Axis-aligned box that removes the direct path when it cuts the UE-BS ray."""

    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.min_corner, self.max_corner)):
            raise ConfigError("blocker min_corner must be below max_corner on every axis")

    def blocks(self, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        """Slab test of segments ``start[k] -> end[k]`` against the box; returns (N,) bool."""
        start = np.atleast_2d(start).astype(float)
        end = np.broadcast_to(end, start.shape).astype(float)
        d = end - start
        lo = np.asarray(self.min_corner, dtype=float)
        hi = np.asarray(self.max_corner, dtype=float)
        t0 = np.zeros(len(start))
        t1 = np.ones(len(start))
        inside = np.ones(len(start), dtype=bool)
        for ax in range(3):
            da = d[:, ax]
            sa = start[:, ax]
            par = np.abs(da) < 1e-12
            inside &= ~par | ((sa >= lo[ax]) & (sa <= hi[ax]))
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (lo[ax] - sa) / da
                tb = (hi[ax] - sa) / da
            tmin = np.where(par, -np.inf, np.minimum(ta, tb))
            tmax = np.where(par, np.inf, np.maximum(ta, tb))
            t0 = np.maximum(t0, tmin)
            t1 = np.minimum(t1, tmax)
        return inside & (t0 <= t1)


@dataclass(frozen=True)
class Shadowing:
    sigma_db: float = 3.0
    correlation_length_m: float = 15.0

    def __post_init__(self):
        if self.correlation_length_m <= 0:
            raise ConfigError("shadowing correlation_length_m must be > 0")
        if self.sigma_db < 0:
            raise ConfigError("shadowing sigma_db must be >= 0")


@dataclass(frozen=True)
class GnssModel:
    accuracy_m: float = 3.5
    accuracy_spread_m: float = 0.5

    def __post_init__(self):
        if self.accuracy_m <= 0 or self.accuracy_spread_m < 0:
            raise ConfigError("gnss accuracy_m must be > 0 and accuracy_spread_m >= 0")
        if self.accuracy_m - self.accuracy_spread_m <= 0:
            raise ConfigError("gnss accuracy range must stay positive")


@dataclass(frozen=True)
class Scenario:
    bs_position: tuple[float, float, float] = (25.0, -45.0, 20.0)
    # array boresight, degrees counter-clockwise from east
    boresight_azimuth_deg: float = 90.0
    array_shape: tuple[int, int] = (8, 8)
    element_spacing_m: float = SPEED_OF_LIGHT / CENTER_FREQUENCY_HZ / 2
    channel_frequencies_hz: tuple[float, float, float] = field(
        default_factory=default_channel_frequencies
    )
    ue_height_m: float = 1.5
    # region (xmin, ymin, xmax, ymax) the UE may occupy
    bounds: tuple[float, float, float, float] = (-30.0, -20.0, 80.0, 80.0)
    path_gain_scale: float = 2.0
    reflectors: tuple[Reflector, ...] = (
        Reflector((-40.0, 60.0, 10.0), 0.3),
        Reflector((95.0, 40.0, 10.0), 0.3),
        Reflector((25.0, 110.0, 15.0), 0.3),
    )
    blockers: tuple[Blocker, ...] = ()
    shadowing: Shadowing | None = field(default_factory=Shadowing)
    gnss: GnssModel = field(default_factory=GnssModel)
    # per-UE-antenna perturbation: gain drop per antenna index, vertical offset per index
    antenna_gain_step: float = 0.04
    antenna_offset_m: float = SPEED_OF_LIGHT / CENTER_FREQUENCY_HZ / 4
    seed: int = 0

    def __post_init__(self):
        f = self.channel_frequencies_hz
        if len(f) != 3:
            raise ConfigError("exactly 3 channel frequencies are required")
        if not (f[0] < f[1] < f[2]):
            raise ConfigError("channel frequencies must be strictly increasing")
        if tuple(self.array_shape) != (8, 8):
            raise ConfigError("only the 8x8 planar array is supported")
        xmin, ymin, xmax, ymax = self.bounds
        if xmin >= xmax or ymin >= ymax:
            raise ConfigError("scenario bounds must have positive area")
        if self.path_gain_scale <= 0 or self.element_spacing_m <= 0:
            raise ConfigError("path_gain_scale and element_spacing_m must be > 0")

    @classmethod
    def from_yaml(cls, path) -> "Scenario":
        data = load_yaml(path)
        return from_mapping(cls, data.get("scenario", data), "scenario")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    @property
    def array_axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(boresight, horizontal, vertical) unit vectors of the array frame."""
        az = np.deg2rad(self.boresight_azimuth_deg)
        boresight = np.array([np.cos(az), np.sin(az), 0.0])
        horizontal = np.array([np.sin(az), -np.cos(az), 0.0])
        return boresight, horizontal, np.array([0.0, 0.0, 1.0])

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        xmin, ymin, xmax, ymax = self.bounds
        return (xy[:, 0] >= xmin) & (xy[:, 0] <= xmax) & (xy[:, 1] >= ymin) & (xy[:, 1] <= ymax)

    @cached_property
    def shadowing_field(self) -> "ShadowingField | None":
        if self.shadowing is None or self.shadowing.sigma_db == 0:
            return None
        return ShadowingField(self.shadowing, self.bounds, self.seed)


class ShadowingField:
    """Seeded log-normal shadowing map in dB.

    White Gaussian noise on a grid is smoothed with a Gaussian kernel of std
    L/2, giving autocorrelation exp(-d^2 / L^2) (1/e at the correlation length
    L), rescaled to the requested sigma and sampled bilinearly.
    """

    def __init__(self, cfg: Shadowing, bounds, seed: int):
        self.cfg = cfg
        L = cfg.correlation_length_m
        self.spacing = L / 6.0
        margin = 3 * L
        xmin, ymin, xmax, ymax = bounds
        self.origin = np.array([xmin - margin, ymin - margin])
        nx = int(np.ceil((xmax - xmin + 2 * margin) / self.spacing)) + 1
        ny = int(np.ceil((ymax - ymin + 2 * margin) / self.spacing)) + 1
        rng = np.random.default_rng([seed, 0x5AD0])
        white = rng.standard_normal((nx, ny))
        smooth = ndimage.gaussian_filter(white, sigma=(L / 2) / self.spacing, mode="wrap")
        smooth -= smooth.mean()
        smooth /= smooth.std()
        self.grid = cfg.sigma_db * smooth

    def db(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        coords = ((xy[:, :2] - self.origin) / self.spacing).T
        return ndimage.map_coordinates(self.grid, coords, order=1, mode="nearest")

    def linear(self, xy: np.ndarray) -> np.ndarray:
        return 10.0 ** (self.db(xy) / 20.0)


def los_scenario(**changes) -> Scenario:
    return Scenario(**changes)


def nlos_scenario(**changes) -> Scenario:
    """Default geometry with a building between the BS and the walking area.

    Two extra flank scatterers stand in for the surrounding buildings that carry
    the signal once the direct path is blocked.
    """
    kw = dict(
        blockers=(Blocker((-10.0, -25.0, 0.0), (60.0, -15.0, 25.0)),),
        reflectors=Scenario().reflectors
        + (Reflector((-40.0, 0.0, 10.0), 0.3), Reflector((95.0, -5.0, 10.0), 0.3)),
    )
    kw.update(changes)
    return Scenario(**kw)
