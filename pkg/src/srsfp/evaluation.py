"""Position-error metrics, reference baselines and evaluation reports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dnn.checkpoint import Checkpoint
from .dnn.network import NetworkState, forward
from .errors import InsufficientDataError, ProvenanceError, ValidationError

PERCENTILES = (50, 90, 95)
DEFAULT_K = 5
PER_SAMPLE_HEADER = ("utc_ms", "true_x", "true_y", "pred_x", "pred_y", "error_m")


def euclidean_errors(preds, truth) -> np.ndarray:
    preds = np.asarray(preds, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if preds.shape != truth.shape or preds.ndim != 2 or preds.shape[1] != 2:
        raise ValidationError(f"preds {preds.shape} and truth {truth.shape} must both be (N, 2)")
    if len(preds) == 0:
        raise InsufficientDataError("no samples to evaluate")
    return np.sqrt(np.sum((preds - truth) ** 2, axis=1))


def mean_euclidean_error(preds, truth) -> float:
    return float(euclidean_errors(preds, truth).mean())


def nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    """Nearest-rank percentile of an ascending array."""
    n = len(sorted_values)
    rank = max(1, math.ceil(p / 100.0 * n))
    return float(sorted_values[rank - 1])


@dataclass(frozen=True)
class CentroidPredictor:
    centroid: np.ndarray

    def predict(self, n_or_features) -> np.ndarray:
        n = n_or_features if isinstance(n_or_features, int) else len(n_or_features)
        return np.tile(self.centroid, (n, 1))


def centroid_baseline(train_targets) -> CentroidPredictor:
    t = np.asarray(train_targets, dtype=float)
    if len(t) == 0:
        raise InsufficientDataError("centroid baseline needs at least one training target")
    return CentroidPredictor(t.mean(axis=0))


def knn_indices(train_features, query, k: int, chunk: int = 256) -> np.ndarray:
    """(Q, k) row indices of the k nearest training rows, nearest first; ties -> lower index.

    Candidates come from the fast ``|a|^2 + |b|^2 - 2ab`` expansion with a
    rounding margin; the final order uses exactly computed distances.
    """
    x = np.asarray(train_features, dtype=float)
    q = np.atleast_2d(np.asarray(query, dtype=float))
    n = len(x)
    if n == 0:
        raise InsufficientDataError("k-NN needs a nonempty training set")
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, {n}], got {k}")
    if q.shape[1] != x.shape[1]:
        raise ValidationError(f"query width {q.shape[1]} != training width {x.shape[1]}")
    xx = np.einsum("ij,ij->i", x, x)
    xx_max = xx.max()
    out = np.empty((len(q), k), dtype=np.int64)
    for s in range(0, len(q), chunk):
        qc = q[s : s + chunk]
        qq = np.einsum("ij,ij->i", qc, qc)
        approx = qq[:, None] + xx[None, :] - 2.0 * (qc @ x.T)
        kth = np.partition(approx, k - 1, axis=1)[:, k - 1]
        margin = 1e-9 * (qq + xx_max) + 1e-300
        for r in range(len(qc)):
            cand = np.flatnonzero(approx[r] <= kth[r] + margin[r])
            diff = x[cand] - qc[r]
            d2 = np.sum(diff * diff, axis=1)
            order = np.lexsort((cand, d2))[:k]
            out[s + r] = cand[order]
    return out


def knn_baseline(train_features, train_targets, k: int, query) -> np.ndarray:
    """Mean target of the k nearest training fingerprints (Euclidean feature distance)."""
    y = np.asarray(train_targets, dtype=float)
    idx = knn_indices(train_features, query, k)
    return y[idx].mean(axis=1)


@dataclass
class EvalReport:
    split_tag: str
    n_samples: int
    mean_euclidean_error_m: float
    percentiles_m: dict
    max_error_m: float
    baselines_m: dict = field(default_factory=dict)
    errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    timestamps: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    truth: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    preds: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def summary(self) -> dict:
        return {
            "split": self.split_tag,
            "n_samples": self.n_samples,
            "mean_euclidean_error_m": self.mean_euclidean_error_m,
            "percentiles_m": {str(k): v for k, v in self.percentiles_m.items()},
            "max_error_m": self.max_error_m,
            "baselines_m": dict(self.baselines_m),
        }

    def write(self, json_path, csv_path=None) -> None:
        Path(json_path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        if csv_path is not None:
            with open(csv_path, "w", newline="") as fh:
                write_per_sample(fh, self.timestamps, self.truth, self.preds)


def write_per_sample(fh, timestamps, truth, preds) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PER_SAMPLE_HEADER)
    if len(preds) == 0:
        return
    errs = euclidean_errors(preds, truth) if truth is not None else None
    for i, t in enumerate(timestamps):
        tx, ty = (repr(float(v)) for v in truth[i]) if truth is not None else ("", "")
        e = repr(float(errs[i])) if errs is not None else ""
        w.writerow([int(t), tx, ty, repr(float(preds[i, 0])), repr(float(preds[i, 1])), e])


def report_from_predictions(preds, dataset, train=None, k: int = DEFAULT_K) -> EvalReport:
    """Build a report for ``preds`` against ``dataset.targets``; baselines need ``train``."""
    errs = euclidean_errors(preds, dataset.targets)
    srt = np.sort(errs)
    baselines = {}
    if train is not None:
        cen = centroid_baseline(train.targets).predict(len(dataset))
        baselines["centroid"] = mean_euclidean_error(cen, dataset.targets)
        kk = min(k, len(train))
        knn = knn_baseline(train.features, train.targets, kk, dataset.features)
        baselines[f"knn_k{kk}"] = mean_euclidean_error(knn, dataset.targets)
    return EvalReport(
        split_tag=dataset.split_tag,
        n_samples=len(errs),
        mean_euclidean_error_m=float(errs.mean()),
        percentiles_m={p: nearest_rank(srt, p) for p in PERCENTILES},
        max_error_m=float(srt[-1]),
        baselines_m=baselines,
        errors=errs,
        timestamps=np.asarray(dataset.timestamps),
        truth=np.asarray(dataset.targets),
        preds=np.asarray(preds),
    )


def check_provenance(model: Checkpoint, dataset) -> None:
    """Refuse evaluation when the dataset's sessions fed the normalizer or training.

    Test sessions must be entirely unseen, including by checkpoint selection.
    """
    if dataset.normalizer.fitted and model.normalizer.fitted:
        if dataset.normalizer.max_amplitude != model.normalizer.max_amplitude:
            raise ProvenanceError(
                f"{dataset.split_tag} dataset was normalised with a different normalizer than the model"
            )
    if dataset.split_tag == "train":
        return
    if dataset.split_tag == "validation":
        # validation legitimately drives model selection; it must not have been fitted on
        seen = set(model.normalizer.fitted_on) | set(model.provenance.get("train", ()))
    else:
        seen = model.seen_sessions()
    leaked = sorted(set(dataset.sessions) & (seen | set(dataset.normalizer.fitted_on)))
    if leaked:
        raise ProvenanceError(
            f"{dataset.split_tag} session(s) {leaked} were used for fitting or training"
        )


def predict(net: NetworkState, features, batch_size: int = 4096) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if len(features) == 0:
        return np.zeros((0, 2))
    return np.concatenate(
        [forward(net, features[k : k + batch_size], mode="eval") for k in range(0, len(features), batch_size)]
    )


def evaluate(model, dataset, normalizer=None, train=None, k: int = DEFAULT_K) -> EvalReport:
    """Eval-mode inference plus the full report.

    ``model`` is a Checkpoint (provenance enforced) or a bare NetworkState, in
    which case ``normalizer`` must be the one the dataset was built with.
    """
    if isinstance(model, NetworkState):
        from .pipeline.features import Normalizer

        norm = normalizer if normalizer is not None else dataset.normalizer
        model = Checkpoint(model, norm if isinstance(norm, Normalizer) else Normalizer(float(norm)))
    elif normalizer is not None and normalizer.max_amplitude != model.normalizer.max_amplitude:
        raise ProvenanceError("normalizer passed to evaluate differs from the checkpoint's")
    if dataset.width != model.state.input_width:
        raise ValidationError(
            f"dataset width {dataset.width} != model input width {model.state.input_width}"
        )
    check_provenance(model, dataset)
    return report_from_predictions(predict(model.state, dataset.features), dataset, train, k)
