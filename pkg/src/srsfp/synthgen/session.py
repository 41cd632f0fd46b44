"""One measurement session: sparse SRS occasions plus a 1 Hz noisy GNSS stream."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO

import numpy as np

from ..errors import FormatError, ValidationError
from ..srslog import N_PAIRS, N_UE_ANTENNAS, SFN_MODULUS, SrsLog, quantize
from .channel import beam_amplitudes
from .scenario import Scenario
from .trajectory import Trajectory

SRS_INTERVAL_MS = (35, 110)
FRAME_MS = 10
PAIR_REFRESH_PROB = 0.5
GNSS_PERIOD_MS = 1000
GNSS_HEADER = ("utc_ms", "east_m", "north_m", "accuracy_m")


@dataclass(frozen=True)
class GnssFix:
    utc: int
    east: float
    north: float
    accuracy: float

    def __post_init__(self):
        if not self.accuracy > 0:
            raise ValidationError(f"GNSS accuracy must be > 0, got {self.accuracy}")


def sfn_advance(dt_ms) -> np.ndarray:
    """Whole 10 ms frames elapsed, rounding halves up."""
    return np.floor(np.asarray(dt_ms) / FRAME_MS + 0.5).astype(np.int64)


def occasion_times(start_utc: int, end_utc: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = SRS_INTERVAL_MS
    span = end_utc - start_utc
    n_max = span // lo + 2
    steps = rng.integers(lo, hi + 1, size=n_max)
    t = start_utc + np.cumsum(steps)
    return t[t <= end_utc]


def refresh_masks(n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, 12) bool; each pair refreshed with probability 1/2, empty draws redrawn."""
    masks = rng.random((n, N_PAIRS)) < PAIR_REFRESH_PROB
    empty = ~masks.any(axis=1)
    while empty.any():
        masks[empty] = rng.random((int(empty.sum()), N_PAIRS)) < PAIR_REFRESH_PROB
        empty = ~masks.any(axis=1)
    return masks


def simulate_session(
    scenario: Scenario, trajectory: Trajectory, seed: int
) -> tuple[SrsLog, list[GnssFix]]:
    if len(trajectory) < 2:
        raise ValidationError("trajectory must have at least two samples")
    ss = np.random.SeedSequence([scenario.seed, seed])
    rng_time, rng_mask, rng_phase, rng_gnss, rng_sfn = (
        np.random.default_rng(s) for s in ss.spawn(5)
    )

    t = occasion_times(trajectory.start_utc, trajectory.end_utc, rng_time)
    masks = refresh_masks(len(t), rng_mask)
    positions = trajectory.position_at(t)

    sfn = np.empty(len(t), dtype=np.int64)
    if len(t):
        sfn0 = int(rng_sfn.integers(0, SFN_MODULUS))
        first = sfn_advance(t[0] - trajectory.start_utc)
        sfn[0] = sfn0 + first
        sfn[1:] = sfn_advance(np.diff(t))
        sfn = np.cumsum(sfn) % SFN_MODULUS

    # beam amplitudes per (channel, antenna) pair, only where the pair is refreshed
    occ_idx, pair_idx = np.nonzero(masks)  # row-major: occasion, then pair order
    n_rec = len(occ_idx)
    amps = np.empty((n_rec, 64))
    for pair in range(N_PAIRS):
        sel = pair_idx == pair
        if not sel.any():
            continue
        ch, ant = divmod(pair, N_UE_ANTENNAS)
        a = beam_amplitudes(scenario, positions[occ_idx[sel]], ch, ant)
        amps[sel] = a.reshape(-1, 64)
    phase = rng_phase.uniform(0.0, 2 * np.pi, size=amps.shape)
    gains = quantize(amps * np.exp(1j * phase))
    log = SrsLog(t[occ_idx], sfn[occ_idx], pair_idx, gains)

    spread = scenario.gnss.accuracy_spread_m
    accuracy = scenario.gnss.accuracy_m + (rng_gnss.uniform(-spread, spread) if spread > 0 else 0.0)
    n_fix = int(np.floor(trajectory.duration_s)) + 1
    fix_t = trajectory.start_utc + GNSS_PERIOD_MS * np.arange(n_fix)
    truth = trajectory.position_at(fix_t)
    noisy = truth + rng_gnss.normal(0.0, accuracy, size=truth.shape)
    fixes = [GnssFix(int(u), float(e), float(n), float(accuracy)) for u, (e, n) in zip(fix_t, noisy)]
    return log, fixes


def write_gnss_csv(fixes, sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(GNSS_HEADER)
    for f in fixes:
        w.writerow([f.utc, repr(float(f.east)), repr(float(f.north)), repr(float(f.accuracy))])


def read_gnss_csv(source: IO[str]) -> list[GnssFix]:
    """Read a GNSS CSV; accepts local ``east_m,north_m`` or geodetic ``lat_deg,lon_deg`` columns.

    Geodetic fixes are projected about the first fix.
    """
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        return []
    header = [h.strip() for h in header]
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if tuple(header) == GNSS_HEADER:
        out = []
        for i, r in enumerate(rows, start=2):
            try:
                out.append(GnssFix(int(r[0]), float(r[1]), float(r[2]), float(r[3])))
            except (ValueError, IndexError) as exc:
                raise FormatError(f"GNSS line {i}: {exc}") from None
        return out
    if tuple(header) == ("utc_ms", "lat_deg", "lon_deg", "accuracy_m"):
        from ..pipeline.gnss import geodetic_to_local

        try:
            utc = [int(r[0]) for r in rows]
            lat = np.array([float(r[1]) for r in rows])
            lon = np.array([float(r[2]) for r in rows])
            acc = [float(r[3]) for r in rows]
        except (ValueError, IndexError) as exc:
            raise FormatError(f"GNSS geodetic CSV: {exc}") from None
        en = geodetic_to_local(lat, lon)
        return [GnssFix(u, float(e), float(n), a) for u, (e, n), a in zip(utc, en, acc)]
    raise FormatError(f"unrecognised GNSS CSV header {header}")
