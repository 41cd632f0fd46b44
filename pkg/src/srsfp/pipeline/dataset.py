"""Dataset assembly from SRS logs and GNSS fixes, and its on-disk CSV form."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FormatError, InsufficientDataError, ProvenanceError, ValidationError
from ..srslog import SrsLog
from .features import (
    Normalizer,
    amplitude,
    average_ue_antennas,
    fit_normalizer,
    root_features,
)
from .gnss import interpolate_positions
from .snapshots import assemble_snapshots, forward_fill

SPLITS = ("train", "validation", "test")
DATASET_VERSION = 1
HEADER_PREFIX = "# srsfp-dataset "
_CHUNK = 4096


def log_digest(log: SrsLog) -> str:
    """Content hash of a log; identifies a session independently of its name."""
    h = hashlib.sha256()
    for arr in (log.utc, log.sfn, log.pair_index, log.gains):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SessionRows:
    """Pre-normalisation rows of one session: antenna-averaged amplitudes and targets."""

    session_id: str
    timestamps: np.ndarray  # (N,) int64
    amplitudes: np.ndarray  # (N, 3, 8, 8)
    targets: np.ndarray  # (N, 2)
    n_snapshots: int = 0


def extract_session(log: SrsLog, gnss, session_id: str | None = None) -> SessionRows:
    """assemble -> forward-fill -> amplitude -> antenna average; targets from GNSS.

    Rows whose time falls outside the GNSS span are dropped.
    """
    sid = session_id or log_digest(log)
    snaps = forward_fill(assemble_snapshots(log))
    if len(snaps) == 0:
        return SessionRows(sid, np.zeros(0, np.int64), np.zeros((0, 3, 8, 8)), np.zeros((0, 2)))
    xy, kept = interpolate_positions(gnss, snaps.utc)
    idx = np.flatnonzero(kept)
    amps = np.empty((len(idx), 3, 8, 8))
    for k in range(0, len(idx), _CHUNK):
        sel = idx[k : k + _CHUNK]
        amps[k : k + _CHUNK] = average_ue_antennas(amplitude(snaps.raw[sel]))
    return SessionRows(sid, snaps.utc[idx], amps, xy, n_snapshots=len(snaps))


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray  # (N, F)
    targets: np.ndarray  # (N, 2) local XY meters
    timestamps: np.ndarray  # (N,) utc ms
    split_tag: str
    sessions: tuple[str, ...] = ()
    normalizer: Normalizer = field(default_factory=Normalizer)

    def __post_init__(self):
        if self.split_tag not in SPLITS:
            raise ValidationError(f"split tag must be one of {SPLITS}, got {self.split_tag!r}")
        n = len(self.timestamps)
        if n < 1:
            raise InsufficientDataError(f"{self.split_tag} dataset is empty")
        if self.features.ndim != 2 or len(self.features) != n or self.targets.shape != (n, 2):
            raise ValidationError("features/targets/timestamps row counts differ")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def width(self) -> int:
        return self.features.shape[1]

    def header(self) -> dict:
        return {
            "version": DATASET_VERSION,
            "feature_width": self.width,
            "split": self.split_tag,
            "n_rows": len(self),
            "sessions": list(self.sessions),
            "normalizer_max": self.normalizer.max_amplitude,
            "normalizer_fitted_on": list(self.normalizer.fitted_on),
        }


def check_isolation(split_tag: str, sessions, normalizer: Normalizer | None) -> None:
    if split_tag == "train" or normalizer is None:
        return
    leaked = sorted(set(sessions) & set(normalizer.fitted_on))
    if leaked:
        raise ProvenanceError(
            f"{split_tag} session(s) {leaked} were used to fit the normalizer"
        )


def build_split(
    sessions: list[SessionRows],
    split_tag: str,
    normalizer: Normalizer | None = None,
    fourth_root: bool = True,
) -> tuple[Dataset, Normalizer]:
    """Turn pre-normalised session rows into one dataset.

    The train split fits a normalizer on its own rows when none is given;
    other splits must be handed the train normalizer.
    """
    if split_tag not in SPLITS:
        raise ValidationError(f"split tag must be one of {SPLITS}, got {split_tag!r}")
    ids = tuple(s.session_id for s in sessions)
    if len(set(ids)) != len(ids):
        raise ProvenanceError(f"session listed twice in the {split_tag} split")
    rows = [s for s in sessions if len(s.timestamps)]
    if not rows:
        raise InsufficientDataError(f"{split_tag} split has no rows after GNSS-bound drops")
    amps = np.concatenate([s.amplitudes for s in rows])
    targets = np.concatenate([s.targets for s in rows])
    ts = np.concatenate([s.timestamps for s in rows])
    order = np.argsort(ts, kind="stable")
    amps, targets, ts = amps[order], targets[order], ts[order]
    if normalizer is None:
        if split_tag != "train":
            raise ProvenanceError(f"{split_tag} split needs the normalizer fitted on train")
        normalizer = fit_normalizer(amps, ids)
    check_isolation(split_tag, ids, normalizer)
    feats = root_features(normalizer.apply(amps), fourth_root=fourth_root)
    return Dataset(feats, targets, ts, split_tag, ids, normalizer), normalizer


def build_dataset(
    log: SrsLog,
    gnss,
    normalizer: Normalizer | None = None,
    split_tag: str = "train",
    session_id: str | None = None,
    fourth_root: bool = True,
) -> tuple[Dataset, Normalizer]:
    rows = extract_session(log, gnss, session_id)
    if len(rows.timestamps) == 0:
        raise InsufficientDataError("no rows left after forward-fill warm-up and GNSS-bound drops")
    return build_split([rows], split_tag, normalizer, fourth_root)


def write_dataset(ds: Dataset, path) -> None:
    path = Path(path)
    cols = ["utc_ms", "x_m", "y_m"] + [f"f{k}" for k in range(ds.width)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER_PREFIX + json.dumps(ds.header(), sort_keys=True) + "\n")
        fh.write(",".join(cols) + "\n")
        body = np.column_stack([ds.targets, ds.features])
        fmt = ",".join(["%.17g"] * body.shape[1])
        for t, row in zip(ds.timestamps, body):
            fh.write(f"{t}," + fmt % tuple(row) + "\n")


def read_dataset(path) -> Dataset:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith(HEADER_PREFIX):
            raise FormatError(f"{path}: missing dataset header")
        try:
            header = json.loads(first[len(HEADER_PREFIX) :])
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: bad dataset header: {exc}") from None
        if header.get("version") != DATASET_VERSION:
            raise FormatError(f"{path}: unsupported dataset version {header.get('version')}")
        fh.readline()
        data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=np.float64)
    width = header["feature_width"]
    if data.shape != (header["n_rows"], 3 + width):
        raise FormatError(f"{path}: expected {header['n_rows']} rows of {3 + width} columns, got {data.shape}")
    norm = Normalizer(header["normalizer_max"], tuple(header["normalizer_fitted_on"]))
    return Dataset(
        data[:, 3:],
        data[:, 1:3],
        data[:, 0].astype(np.int64),
        header["split"],
        tuple(header["sessions"]),
        norm,
    )

