"""Run configuration and the five pipeline commands behind the CLI.

Output directory layout::

    sessions/<name>.srs.log  sessions/<name>.gnss.csv
    datasets/{train,validation,test}.csv   datasets/normalizer.json
    model/checkpoint.bin   model/history.csv
    reports/{validation,test}.json   reports/{validation,test}_samples.csv
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import from_mapping, load_yaml, to_mapping
from .dnn import Architecture, Checkpoint, TrainConfig, init_network, load_checkpoint, save_checkpoint, train
from .errors import ConfigError, DivergenceError, InsufficientDataError, ProvenanceError, ValidationError
from .evaluation import PER_SAMPLE_HEADER, evaluate, predict, write_per_sample
from .pipeline import (
    build_split,
    extract_session,
    log_digest,
    read_dataset,
    root_features,
    write_dataset,
)
from .pipeline.features import amplitude, average_ue_antennas
from .pipeline.gnss import interpolate_positions
from .pipeline.snapshots import assemble_snapshots, forward_fill
from .srslog import SrsLog, read_log_file, write_log_file
from .synthgen import Scenario, read_gnss_csv, sample_trajectory, simulate_session, write_gnss_csv

log = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "validation", "test")
BASE_UTC_MS = 1_600_000_000_000
SESSION_SPACING_MS = 86_400_000


@dataclass(frozen=True)
class SessionSpec:
    name: str
    seed: int
    duration_s: float
    kind: str = "dense_walk"
    square: tuple[float, float, float, float] = (0.0, 0.0, 50.0, 50.0)
    waypoints: tuple[tuple[float, float], ...] = ()
    start_utc: int | None = None

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ConfigError(f"session {self.name}: duration_s must be > 0")
        if self.seed < 0:
            raise ConfigError(f"session {self.name}: seed must be >= 0")
        if self.kind not in ("dense_walk", "path_back_and_forth"):
            raise ConfigError(f"session {self.name}: kind must be dense_walk or path_back_and_forth")
        if self.kind == "path_back_and_forth" and len(self.waypoints) < 2:
            raise ConfigError(f"session {self.name}: path_back_and_forth needs >= 2 waypoints")


@dataclass(frozen=True)
class Splits:
    train: tuple[str, ...] = ()
    validation: tuple[str, ...] = ()
    test: tuple[str, ...] = ()

    def __post_init__(self):
        for a, b in (("train", "validation"), ("train", "test"), ("validation", "test")):
            shared = sorted(set(getattr(self, a)) & set(getattr(self, b)))
            if shared:
                raise ProvenanceError(f"session(s) {shared} appear in both the {a} and {b} splits")
        for name in SPLIT_NAMES:
            ids = getattr(self, name)
            if len(set(ids)) != len(ids):
                raise ConfigError(f"splits.{name} lists a session twice")


@dataclass(frozen=True)
class PipelineOptions:
    fourth_root: bool = True
    knn_k: int = 5


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    sessions: tuple[SessionSpec, ...]
    splits: Splits
    output_dir: str = "runs/default"
    seed: int = 0
    pipeline: PipelineOptions = field(default_factory=PipelineOptions)
    train: TrainConfig = field(default_factory=TrainConfig)
    architecture: Architecture = field(default_factory=Architecture)
    # directory the config was loaded from; relative paths resolve against it
    base_dir: str = "."

    def __post_init__(self):
        names = [s.name for s in self.sessions]
        if len(set(names)) != len(names):
            raise ConfigError("session names must be unique")
        for split in SPLIT_NAMES:
            for name in getattr(self.splits, split):
                if name not in names:
                    raise ConfigError(f"splits.{split}: unknown session {name!r}")

    @classmethod
    def load(cls, path, seed: int | None = None, out: str | None = None) -> "RunConfig":
        data = dict(load_yaml(path))
        data.setdefault("base_dir", str(Path(path).resolve().parent))
        cfg = from_mapping(cls, data)
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if out is not None:
            cfg = replace(cfg, output_dir=out)
        return cfg

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def out(self) -> Path:
        return self.resolve(self.output_dir)

    def session(self, name: str) -> SessionSpec:
        return next(s for s in self.sessions if s.name == name)

    def load_scenario(self) -> Scenario:
        path = self.resolve(self.scenario)
        if not path.is_file():
            raise ConfigError(f"scenario file not found: {path}")
        return Scenario.from_yaml(path)

    def session_seed(self, spec: SessionSpec) -> int:
        return int(np.random.SeedSequence([self.seed, spec.seed]).generate_state(1)[0])

    def train_config(self) -> TrainConfig:
        seed = int(np.random.SeedSequence([self.seed, self.train.seed, 0x7]).generate_state(1)[0])
        return replace(self.train, seed=seed)


def session_paths(cfg: RunConfig, name: str) -> tuple[Path, Path]:
    d = cfg.out / "sessions"
    return d / f"{name}.srs.log", d / f"{name}.gnss.csv"


def dataset_path(cfg: RunConfig, split: str) -> Path:
    return cfg.out / "datasets" / f"{split}.csv"


def checkpoint_path(cfg: RunConfig) -> Path:
    return cfg.out / "model" / "checkpoint.bin"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_generate(cfg: RunConfig) -> list[Path]:
    scenario = cfg.load_scenario()
    written = []
    for i, spec in enumerate(cfg.sessions):
        start = spec.start_utc if spec.start_utc is not None else BASE_UTC_MS + i * SESSION_SPACING_MS
        seed = cfg.session_seed(spec)
        geometry = spec.square if spec.kind == "dense_walk" else spec.waypoints
        traj = sample_trajectory(spec.kind, geometry, spec.duration_s, seed, start)
        srs, fixes = simulate_session(scenario, traj, seed)
        log_path, gnss_path = session_paths(cfg, spec.name)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        write_log_file(srs, log_path)
        buf = io.StringIO()
        write_gnss_csv(fixes, buf)
        _write_text(gnss_path, buf.getvalue())
        written += [log_path, gnss_path]
        log.info("session %s: %d records, %d fixes", spec.name, len(srs), len(fixes))
    return written


def _read_session(cfg: RunConfig, name: str):
    log_path, gnss_path = session_paths(cfg, name)
    for p in (log_path, gnss_path):
        if not p.is_file():
            raise ConfigError(f"session input not found: {p} (run `generate` first)")
    srs = read_log_file(log_path)
    with open(gnss_path, encoding="utf-8") as fh:
        fixes = read_gnss_csv(fh)
    return srs, fixes


def cmd_prepare(cfg: RunConfig) -> dict:
    """Fit the normalizer on train, then transform validation and test with it."""
    if not cfg.splits.train:
        raise ConfigError("splits.train is empty")
    rows = {}
    owner = {}
    for split in SPLIT_NAMES:
        rows[split] = []
        for name in getattr(cfg.splits, split):
            srs, fixes = _read_session(cfg, name)
            digest = log_digest(srs)
            if digest in owner:
                raise ProvenanceError(
                    f"session {name!r} ({split}) has the same content as {owner[digest][0]!r} "
                    f"({owner[digest][1]})"
                )
            owner[digest] = (name, split)
            rows[split].append(extract_session(srs, fixes, digest))
    opts = cfg.pipeline
    train_ds, normalizer = build_split(rows["train"], "train", None, opts.fourth_root)
    out = {"train": train_ds}
    for split in ("validation", "test"):
        if rows[split]:
            out[split], _ = build_split(rows[split], split, normalizer, opts.fourth_root)
    for split, ds in out.items():
        p = dataset_path(cfg, split)
        p.parent.mkdir(parents=True, exist_ok=True)
        write_dataset(ds, p)
    _write_text(
        cfg.out / "datasets" / "normalizer.json",
        json.dumps(
            {"max_amplitude": normalizer.max_amplitude, "fitted_on": list(normalizer.fitted_on)},
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    return out


def _load_split(cfg: RunConfig, split: str):
    p = dataset_path(cfg, split)
    if not p.is_file():
        raise ConfigError(f"dataset not found: {p} (run `prepare` first)")
    ds = read_dataset(p)
    if ds.split_tag != split:
        raise ProvenanceError(f"{p} is tagged {ds.split_tag!r}, expected {split!r}")
    return ds


def _history_csv(history) -> str:
    lines = ["epoch,train_loss,val_medl"]
    lines += [f"{h.epoch},{h.train_loss!r},{h.val_medl!r}" for h in history]
    return "\n".join(lines) + "\n"


def cmd_train(cfg: RunConfig) -> tuple[Checkpoint, list]:
    cfg.architecture.validate()
    tcfg = cfg.train_config()
    train_ds = _load_split(cfg, "train")
    val_ds = _load_split(cfg, "validation")
    if val_ds.normalizer.max_amplitude != train_ds.normalizer.max_amplitude:
        raise ProvenanceError("validation dataset was not normalised with the train normalizer")
    leaked = set(val_ds.sessions) & set(train_ds.sessions)
    if leaked:
        raise ProvenanceError(f"session(s) {sorted(leaked)} in both train and validation datasets")
    if cfg.architecture.widths[0] != train_ds.width:
        raise ValidationError(
            f"architecture input width {cfg.architecture.widths[0]} != feature width {train_ds.width}"
        )
    y = train_ds.targets
    net = init_network(
        cfg.architecture, tcfg.seed, output_offset=y.mean(axis=0), output_scale=float(y.std(axis=0).mean()) or 1.0
    )
    prov = {"train": train_ds.sessions, "validation": val_ds.sessions}

    def bundle(state):
        return Checkpoint(state, train_ds.normalizer, cfg.pipeline.fourth_root, prov)

    ckpt_path = checkpoint_path(cfg)
    ckpt_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        best, history = train(net, train_ds, val_ds, tcfg)
    except DivergenceError as exc:
        save_checkpoint(bundle(exc.last_good), ckpt_path)
        _write_text(cfg.out / "model" / "history.csv", _history_csv(exc.history))
        raise
    ckpt = bundle(best)
    save_checkpoint(ckpt, ckpt_path)
    _write_text(cfg.out / "model" / "history.csv", _history_csv(history))
    return ckpt, history


def cmd_evaluate(cfg: RunConfig) -> dict:
    ckpt = load_checkpoint(checkpoint_path(cfg))
    train_ds = _load_split(cfg, "train") if dataset_path(cfg, "train").is_file() else None
    reports = {}
    for split in ("validation", "test"):
        if not dataset_path(cfg, split).is_file():
            continue
        ds = _load_split(cfg, split)
        rep = evaluate(ckpt, ds, train=train_ds, k=cfg.pipeline.knn_k)
        d = cfg.out / "reports"
        d.mkdir(parents=True, exist_ok=True)
        rep.write(d / f"{split}.json", d / f"{split}_samples.csv")
        reports[split] = rep
    if not reports:
        raise InsufficientDataError("no validation or test dataset to evaluate")
    return reports


def features_for_log(srs: SrsLog, ckpt: Checkpoint, fixes=None):
    """Feature rows for every complete snapshot of a log using the checkpoint's normalizer.

    With ``fixes``, rows outside the GNSS span are dropped and targets returned.
    """
    snaps = forward_fill(assemble_snapshots(srs))
    utc = snaps.utc
    targets = None
    idx = np.arange(len(snaps))
    if fixes is not None and len(snaps):
        targets, kept = interpolate_positions(fixes, utc)
        idx = np.flatnonzero(kept)
    amps = average_ue_antennas(amplitude(snaps.raw[idx])) if len(idx) else np.zeros((0, 3, 8, 8))
    feats = root_features(ckpt.normalizer.apply(amps), fourth_root=ckpt.fourth_root)
    return utc[idx], feats, targets


def cmd_predict(checkpoint, srs_path, gnss_path=None, sink=None) -> np.ndarray:
    """Write a position CSV for a log; with GNSS the per-sample error columns are filled."""
    ckpt = load_checkpoint(checkpoint)
    srs = read_log_file(srs_path)
    fixes = None
    if gnss_path is not None:
        with open(gnss_path, encoding="utf-8") as fh:
            fixes = read_gnss_csv(fh)
    utc, feats, targets = features_for_log(srs, ckpt, fixes)
    if feats.shape[1] != ckpt.state.input_width:
        raise ValidationError(
            f"feature width {feats.shape[1]} does not match checkpoint input {ckpt.state.input_width}"
        )
    preds = predict(ckpt.state, feats)
    if sink is not None:
        if fixes is not None:
            write_per_sample(sink, utc, targets, preds)
        else:
            w = csv.writer(sink, lineterminator="\n")
            w.writerow(("utc_ms", "pred_x", "pred_y"))
            for t, (x, y) in zip(utc, preds):
                w.writerow([int(t), repr(float(x)), repr(float(y))])
    return preds


def dump_config(cfg: RunConfig) -> dict:
    d = to_mapping(cfg)
    d.pop("base_dir", None)
    return d


__all__ = [
    "PER_SAMPLE_HEADER",
    "PipelineOptions",
    "RunConfig",
    "SessionSpec",
    "Splits",
    "cmd_evaluate",
    "cmd_generate",
    "cmd_predict",
    "cmd_prepare",
    "cmd_train",
    "dump_config",
]
