"""Channel snapshots: merging per-pair records into H(12x8x8) occasions, and forward-fill."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AmbiguityError, ValidationError
from ..srslog import BEAM_GRID, N_GAINS, N_PAIRS, SrsLog, dequantize


@dataclass(frozen=True, eq=False)
class ChannelSnapshot:
    utc: int
    sfn: int
    raw: np.ndarray  # (12, 64, 2) int16
    fresh_mask: np.ndarray  # (12,) updated at this occasion
    present: np.ndarray  # (12,) has any value (fresh or carried forward)

    @property
    def h(self) -> np.ndarray:
        """(12, 8, 8) complex; absent sub-matrices are NaN, never zero."""
        h = dequantize(self.raw).reshape(N_PAIRS, *BEAM_GRID)
        h[~self.present] = np.nan
        return h

    @property
    def complete(self) -> bool:
        return bool(self.present.all())


class SnapshotSeries:
    """Time-ordered snapshots stored column-wise.

    ``raw`` holds the int16 (re, im) gains, shape (S, 12, 64, 2); rows of
    absent sub-matrices are zero-filled but flagged False in ``present``.
    """

    def __init__(self, utc, sfn, raw, fresh, present):
        self.utc = np.asarray(utc, dtype=np.int64)
        self.sfn = np.asarray(sfn, dtype=np.int64)
        self.raw = np.asarray(raw, dtype=np.int16)
        self.fresh = np.asarray(fresh, dtype=bool)
        self.present = np.asarray(present, dtype=bool)
        s = len(self.utc)
        if self.raw.shape != (s, N_PAIRS, N_GAINS, 2):
            raise ValidationError(f"raw must have shape ({s}, 12, 64, 2), got {self.raw.shape}")
        if self.fresh.shape != (s, N_PAIRS) or self.present.shape != (s, N_PAIRS):
            raise ValidationError("mask shapes do not match the snapshot count")
        if np.any(np.diff(self.utc) < 0):
            raise ValidationError("snapshots must be time-ordered")

    def __len__(self) -> int:
        return len(self.utc)

    def __getitem__(self, i) -> ChannelSnapshot:
        return ChannelSnapshot(
            int(self.utc[i]), int(self.sfn[i]), self.raw[i], self.fresh[i], self.present[i]
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def take(self, idx) -> "SnapshotSeries":
        return SnapshotSeries(
            self.utc[idx], self.sfn[idx], self.raw[idx], self.fresh[idx], self.present[idx]
        )

    @property
    def complete(self) -> bool:
        return bool(self.present.all())


def assemble_snapshots(log: SrsLog) -> SnapshotSeries:
    """Merge records sharing one utc into a snapshot; the fresh mask marks the pairs present."""
    if len(log) == 0:
        return SnapshotSeries(
            [], [], np.zeros((0, N_PAIRS, N_GAINS, 2), np.int16),
            np.zeros((0, N_PAIRS), bool), np.zeros((0, N_PAIRS), bool),
        )
    starts = np.flatnonzero(np.concatenate([[True], np.diff(log.utc) != 0]))
    snap = np.cumsum(np.concatenate([[False], np.diff(log.utc) != 0]))
    key = snap * N_PAIRS + log.pair_index
    order = np.argsort(key, kind="stable")
    dup = np.flatnonzero(np.diff(key[order]) == 0)
    for d in dup:
        a, b = order[d], order[d + 1]
        if not np.array_equal(log.gains[a], log.gains[b]):
            raise AmbiguityError(
                f"utc {log.utc[a]}: pair {log.pair_index[a]} logged twice with different gains"
            )
    n = len(starts)
    raw = np.zeros((n, N_PAIRS, N_GAINS, 2), dtype=np.int16)
    fresh = np.zeros((n, N_PAIRS), dtype=bool)
    raw[snap, log.pair_index] = log.gains
    fresh[snap, log.pair_index] = True
    return SnapshotSeries(log.utc[starts], log.sfn[starts], raw, fresh, fresh.copy())


def last_seen_index(present: np.ndarray) -> np.ndarray:
    """(S, 12) index of the latest snapshot <= s holding each pair, -1 if none yet."""
    s = np.arange(len(present))[:, None]
    return np.maximum.accumulate(np.where(present, s, -1), axis=0)


def forward_fill(series: SnapshotSeries) -> SnapshotSeries:
    """Fill absent sub-matrices with their most recent prior value.

    Leading snapshots that still miss a never-seen pair are dropped. Only past
    and current values are used.
    """
    if len(series) == 0:
        return series
    src = last_seen_index(series.present)
    keep = np.flatnonzero((src >= 0).all(axis=1))
    if keep.size == 0:
        return series.take(keep)
    src = src[keep]
    raw = series.raw[src, np.arange(N_PAIRS)[None, :]]
    return SnapshotSeries(
        series.utc[keep],
        series.sfn[keep],
        raw,
        series.fresh[keep],
        np.ones((len(keep), N_PAIRS), dtype=bool),
    )
