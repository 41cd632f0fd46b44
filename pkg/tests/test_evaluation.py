import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from srsfp.dnn import Architecture, Checkpoint, init_network
from srsfp.errors import InsufficientDataError, ProvenanceError, ValidationError
from srsfp.evaluation import (
    centroid_baseline,
    check_provenance,
    euclidean_errors,
    evaluate,
    knn_baseline,
    knn_indices,
    mean_euclidean_error,
    nearest_rank,
    report_from_predictions,
)
from srsfp.pipeline import Dataset, Normalizer

coords = hnp.arrays(np.float64, st.tuples(st.integers(1, 30), st.just(2)), elements=st.floats(-1e3, 1e3))


def make_ds(feats, targets, split="test", sessions=("s",), norm=None):
    n = len(targets)
    return Dataset(
        np.asarray(feats, float), np.asarray(targets, float), np.arange(n, dtype=np.int64) * 100,
        split, sessions, norm or Normalizer(1.0, ("tr",)),
    )


def linear_checkpoint(width=4, fitted=("tr",), prov=None):
    """Network whose prediction is exactly features[:, :2]."""
    net = init_network(Architecture.from_widths((width, 2)), 0)
    w = np.zeros((width, 2))
    w[0, 0] = w[1, 1] = 1
    net = net.with_params([w], [np.zeros(2)])
    return Checkpoint(net, Normalizer(1.0, fitted), True, prov or {"train": fitted, "validation": ("v",)})


def test_mee_zero_on_identity(rng):
    p = rng.normal(size=(10, 2))
    assert mean_euclidean_error(p, p) == 0


def test_mee_value():
    assert mean_euclidean_error([[0, 0], [1, 1]], [[3, 4], [1, 2]]) == 3.0


def test_mee_rejects_empty_and_mismatch():
    with pytest.raises(InsufficientDataError):
        mean_euclidean_error(np.zeros((0, 2)), np.zeros((0, 2)))
    with pytest.raises(ValidationError):
        mean_euclidean_error(np.zeros((3, 2)), np.zeros((2, 2)))


@given(coords, st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_mee_translation_invariant(p, dx, dy):
    t = p[::-1].copy()
    shift = np.array([dx, dy])
    assert math.isclose(
        mean_euclidean_error(p + shift, t + shift), mean_euclidean_error(p, t), rel_tol=1e-9, abs_tol=1e-9
    )


def test_nearest_rank():
    v = np.arange(1.0, 11.0)
    assert nearest_rank(v, 50) == 5 and nearest_rank(v, 90) == 9 and nearest_rank(v, 95) == 10
    assert nearest_rank(np.array([7.0]), 50) == 7


def test_centroid_examples(rng):
    assert centroid_baseline([[3.0, 4.0]]).predict(2).tolist() == [[3, 4], [3, 4]]
    with pytest.raises(InsufficientDataError):
        centroid_baseline(np.zeros((0, 2)))
    walk = np.array([[0, 0], [50, 0], [50, 50], [0, 50]] * 10, float)
    np.testing.assert_allclose(centroid_baseline(walk).centroid, [25, 25])


def test_centroid_uniform_square_mean_distance(rng):
    w = 50.0
    y = rng.uniform(0, w, (100_000, 2))
    pred = centroid_baseline(y).predict(len(y))
    # E|U - center| for U uniform on a WxW square = W * (sqrt 2 + asinh 1) / 6
    expected = w * (math.sqrt(2) + math.asinh(1)) / 6
    assert abs(expected / w - 0.3826) < 1e-4
    assert abs(mean_euclidean_error(pred, y) / expected - 1) < 0.05


def test_knn_examples(rng):
    x = rng.normal(size=(20, 5))
    y = rng.normal(size=(20, 2))
    np.testing.assert_array_equal(knn_baseline(x, y, 1, x[7:8]), y[7:8])
    with pytest.raises(InsufficientDataError):
        knn_baseline(np.zeros((0, 5)), np.zeros((0, 2)), 1, x[:1])
    with pytest.raises(ValidationError):
        knn_baseline(x, y, 21, x[:1])


def test_knn_ties_to_lower_index():
    x = np.array([[1.0], [-1.0], [1.0], [3.0]])
    assert knn_indices(x, [[0.0]], 2).tolist() == [[0, 1]]
    assert knn_indices(x, [[2.0]], 3).tolist() == [[0, 2, 3]]


@given(st.integers(0, 2**31), st.integers(1, 6))
def test_knn_matches_brute_force(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 4, (30, 3)).astype(float)  # many exact ties
    q = rng.integers(0, 4, (5, 3)).astype(float)
    got = knn_indices(x, q, k, chunk=2)
    for r in range(len(q)):
        d = [(float(np.sum((x[i] - q[r]) ** 2)), i) for i in range(len(x))]
        want = [i for _, i in sorted(d)[:k]]
        assert got[r].tolist() == want


def test_report_perfect_predictor():
    ds = make_ds(np.zeros((5, 4)), np.arange(10.0).reshape(5, 2))
    rep = report_from_predictions(ds.targets.copy(), ds)
    assert rep.mean_euclidean_error_m == 0 and rep.max_error_m == 0
    assert all(v == 0 for v in rep.percentiles_m.values())


def test_report_percentiles_match_sort_oracle(rng):
    n = 257
    ds = make_ds(rng.normal(size=(n, 4)), rng.normal(size=(n, 2)) * 10)
    preds = rng.normal(size=(n, 2)) * 10
    rep = report_from_predictions(preds, ds)
    errs = sorted(math.dist(a, b) for a, b in zip(preds, ds.targets))
    for p in (50, 90, 95):
        assert rep.percentiles_m[p] == pytest.approx(errs[math.ceil(p * n / 100) - 1], rel=1e-15)
    assert rep.max_error_m == pytest.approx(errs[-1], rel=1e-15)


@given(coords)
def test_report_order_invariants(t):
    ds = make_ds(np.zeros((len(t), 4)), t)
    rep = report_from_predictions(np.zeros_like(t), ds)
    p = rep.percentiles_m
    assert 0 <= p[50] <= p[90] <= p[95] <= rep.max_error_m
    assert 0 <= rep.mean_euclidean_error_m <= rep.max_error_m * (1 + 1e-12)


def test_centroid_report_matches_baseline(rng):
    train = make_ds(rng.normal(size=(40, 4)), rng.uniform(0, 50, (40, 2)), "train", ("tr",))
    test = make_ds(rng.normal(size=(30, 4)), rng.uniform(0, 50, (30, 2)))
    cen = centroid_baseline(train.targets).predict(len(test))
    rep = report_from_predictions(cen, test, train)
    assert rep.mean_euclidean_error_m == rep.baselines_m["centroid"]
    assert set(rep.baselines_m) == {"centroid", "knn_k5"}


def test_evaluate_checkpoint_perfect_model(tmp_path, rng):
    t = rng.uniform(0, 50, (20, 2))
    feats = np.column_stack([t, rng.random((20, 2))])
    rep = evaluate(linear_checkpoint(), make_ds(feats, t, sessions=("new",)))
    assert rep.mean_euclidean_error_m == 0
    rep.write(tmp_path / "r.json", tmp_path / "r.csv")
    summary = json.loads((tmp_path / "r.json").read_text())
    assert summary["n_samples"] == 20 and summary["percentiles_m"]["95"] == 0
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "utc_ms,true_x,true_y,pred_x,pred_y,error_m" and len(lines) == 21


def test_evaluate_bare_state(rng):
    t = rng.uniform(0, 50, (5, 2))
    ck = linear_checkpoint()
    rep = evaluate(ck.state, make_ds(np.column_stack([t, t]), t))
    assert rep.mean_euclidean_error_m == 0


def test_provenance_leak_detected(rng):
    t = rng.uniform(0, 50, (5, 2))
    ds = make_ds(np.column_stack([t, t]), t, sessions=("tr",))
    with pytest.raises(ProvenanceError):
        evaluate(linear_checkpoint(), ds)
    val_seen = make_ds(np.column_stack([t, t]), t, sessions=("v",))
    with pytest.raises(ProvenanceError):
        check_provenance(linear_checkpoint(), val_seen)
    check_provenance(linear_checkpoint(), make_ds(np.column_stack([t, t]), t, "validation", ("v",)))


def test_provenance_normalizer_mismatch(rng):
    t = rng.uniform(0, 50, (5, 2))
    ds = make_ds(np.column_stack([t, t]), t, sessions=("x",), norm=Normalizer(2.0, ("tr",)))
    with pytest.raises(ProvenanceError):
        evaluate(linear_checkpoint(), ds)


def test_evaluate_width_mismatch(rng):
    t = rng.uniform(0, 50, (5, 2))
    with pytest.raises(ValidationError):
        evaluate(linear_checkpoint(width=3), make_ds(np.column_stack([t, t]), t, sessions=("x",)))


def test_errors_are_euclidean():
    np.testing.assert_array_equal(euclidean_errors([[0, 0], [1, 1]], [[3, 4], [1, 1]]), [5, 0])
