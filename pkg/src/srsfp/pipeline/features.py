"""Amplitude features: magnitude, UE-antenna averaging, global max scaling, root expansion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ProvenanceError, ValidationError
from ..srslog import BEAM_GRID, FULL_SCALE, N_CHANNELS, N_GAINS, N_UE_ANTENNAS

FULL_CHANNELS = 137
SPARSE_RAW_VALUES = N_CHANNELS * N_UE_ANTENNAS * N_GAINS
FEATURE_WIDTH = 2 * N_CHANNELS * N_GAINS
SQRT_ONLY_WIDTH = N_CHANNELS * N_GAINS


def channel_capacity(
    n_channels: int = FULL_CHANNELS, n_ue_antennas: int = N_UE_ANTENNAS, n_directions: int = N_GAINS
) -> int:
    """Complex values per SRS transmission when every PRB container is logged."""
    return n_channels * n_ue_antennas * n_directions


def amplitude(raw: np.ndarray) -> np.ndarray:
    """Magnitude of int16 (re, im) gains, ``(..., 12, 64, 2) -> (..., 12, 8, 8)`` float64.

    Complex input (``(..., 12, 8, 8)``) is accepted too.
    """
    raw = np.asarray(raw)
    if np.iscomplexobj(raw):
        return np.abs(raw.astype(np.complex128))
    mag = np.hypot(raw[..., 0].astype(np.float64), raw[..., 1].astype(np.float64)) / FULL_SCALE
    return mag.reshape(*mag.shape[:-1], *BEAM_GRID)


def average_ue_antennas(a: np.ndarray) -> np.ndarray:
    """``(..., 12, 8, 8) -> (..., 3, 8, 8)``: mean over the 4 UE antennas of each channel."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape[-3] != N_CHANNELS * N_UE_ANTENNAS:
        raise ValidationError(f"expected 12 sub-matrices on axis -3, got {a.shape[-3]}")
    grouped = a.reshape(*a.shape[:-3], N_CHANNELS, N_UE_ANTENNAS, *a.shape[-2:])
    return grouped.mean(axis=-3)


@dataclass(frozen=True)
class Normalizer:
    """Single global scale: every amplitude is divided by the training maximum.

    ``fitted_on`` lists the session ids whose rows determined the maximum.
    """

    max_amplitude: float | None = None
    fitted_on: tuple[str, ...] = ()

    @property
    def fitted(self) -> bool:
        return self.max_amplitude is not None

    def apply(self, a: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise ProvenanceError("normalizer used before being fitted on training data")
        return np.asarray(a, dtype=np.float64) / self.max_amplitude


def fit_normalizer(train_amplitudes: np.ndarray, sessions=()) -> Normalizer:
    a = np.asarray(train_amplitudes, dtype=np.float64)
    m = float(a.max()) if a.size else 0.0
    if not np.isfinite(m) or m <= 0:
        raise ValidationError("degenerate normalizer: training amplitudes are all zero or empty")
    return Normalizer(m, tuple(sessions))


def apply_normalizer(n: Normalizer, a: np.ndarray) -> np.ndarray:
    return n.apply(a)


def root_features(x: np.ndarray, fourth_root: bool = True) -> np.ndarray:
    """Flatten ``(..., 3, 8, 8)`` and emit ``[sqrt(x) | x**0.25]`` (or just sqrt).

    Layout: ``out[c*64 + i*8 + j]`` is sqrt of channel c, beam (i, j); the fourth
    roots follow at offset 192.
    """
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(*x.shape[:-3], int(np.prod(x.shape[-3:])))
    if np.any(flat < 0):
        raise ValidationError("root features need nonnegative input")
    s = np.sqrt(flat)
    if not fourth_root:
        return s
    return np.concatenate([s, np.sqrt(s)], axis=-1)
