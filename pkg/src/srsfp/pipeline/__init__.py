"""SRS log + GNSS -> supervised dataset."""

from .dataset import (
    Dataset,
    SessionRows,
    build_dataset,
    build_split,
    check_isolation,
    extract_session,
    log_digest,
    read_dataset,
    write_dataset,
)
from .features import (
    FEATURE_WIDTH,
    SPARSE_RAW_VALUES,
    Normalizer,
    amplitude,
    apply_normalizer,
    average_ue_antennas,
    channel_capacity,
    fit_normalizer,
    root_features,
)
from .gnss import geodetic_to_local, inject_target_noise, interpolate_positions
from .snapshots import ChannelSnapshot, SnapshotSeries, assemble_snapshots, forward_fill

__all__ = [
    "FEATURE_WIDTH",
    "SPARSE_RAW_VALUES",
    "ChannelSnapshot",
    "Dataset",
    "Normalizer",
    "SessionRows",
    "SnapshotSeries",
    "amplitude",
    "apply_normalizer",
    "assemble_snapshots",
    "average_ue_antennas",
    "build_dataset",
    "build_split",
    "channel_capacity",
    "check_isolation",
    "extract_session",
    "fit_normalizer",
    "forward_fill",
    "geodetic_to_local",
    "inject_target_noise",
    "interpolate_positions",
    "log_digest",
    "read_dataset",
    "root_features",
    "write_dataset",
]
