import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from srsfp.errors import AmbiguityError, InsufficientDataError, ProvenanceError, ValidationError, GeometryError
from srsfp.pipeline import (
    FEATURE_WIDTH,
    SPARSE_RAW_VALUES,
    Normalizer,
    amplitude,
    apply_normalizer,
    assemble_snapshots,
    average_ue_antennas,
    build_dataset,
    build_split,
    channel_capacity,
    extract_session,
    fit_normalizer,
    forward_fill,
    geodetic_to_local,
    inject_target_noise,
    interpolate_positions,
    read_dataset,
    root_features,
    write_dataset,
)
from srsfp.pipeline.snapshots import SnapshotSeries
from srsfp.srslog import SrsLog
from srsfp.synthgen import GnssFix, Scenario, dense_walk, simulate_session


def log_from_masks(masks, rng, t0=1000):
    """One occasion per mask row; pair gains random, utc spaced 50 ms."""
    utc, pair = [], []
    for s, row in enumerate(masks):
        for p in np.flatnonzero(row):
            utc.append(t0 + 50 * s)
            pair.append(p)
    n = len(utc)
    gains = rng.integers(-32768, 32768, (n, 64, 2)).astype(np.int16)
    return SrsLog(utc, np.zeros(n, int), pair, gains)


def scan_back_oracle(log):
    """Brute force: for each occasion and pair, walk back to the latest record."""
    times = sorted(set(log.utc.tolist()))
    recs = list(log)
    out = []
    for t in times:
        row = []
        for p in range(12):
            found = None
            for r in reversed(recs):
                if r.utc <= t and r.pair_index == p:
                    found = r.gains
                    break
            row.append(found)
        if all(g is not None for g in row):
            out.append((t, np.stack(row)))
    return out


@pytest.fixture(scope="module")
def session():
    sc = Scenario()
    tr = dense_walk((0, 0, 50, 50), 600, seed=11, start_utc=5_000)
    log, fixes = simulate_session(sc, tr, 11)
    return log, fixes


# assembly


def test_twelve_records_one_snapshot(rng):
    log = log_from_masks(np.ones((1, 12), bool), rng)
    snaps = assemble_snapshots(log)
    assert len(snaps) == 1 and snaps.fresh[0].all()


def test_single_record_snapshot(rng):
    mask = np.zeros((1, 12), bool)
    mask[0, 5] = True
    snaps = assemble_snapshots(log_from_masks(mask, rng))
    s = snaps[0]
    assert s.fresh_mask.sum() == 1 and s.fresh_mask[5]
    assert np.isnan(s.h[np.arange(12) != 5]).all()
    assert not np.isnan(s.h[5]).any()
    assert not s.complete


def test_popcount_matches_record_count(rng):
    masks = rng.random((300, 12)) < 0.5
    masks[~masks.any(axis=1), 0] = True
    log = log_from_masks(masks, rng)
    snaps = assemble_snapshots(log)
    _, counts = np.unique(log.utc, return_counts=True)
    np.testing.assert_array_equal(snaps.fresh.sum(axis=1), counts)


def test_duplicate_pair_with_different_gains(rng):
    gains = rng.integers(-100, 100, (2, 64, 2)).astype(np.int16)
    with pytest.raises(AmbiguityError):
        assemble_snapshots(SrsLog([1, 1], [0, 0], [3, 3], gains))
    same = np.stack([gains[0], gains[0]])
    assert len(assemble_snapshots(SrsLog([1, 1], [0, 0], [3, 3], same))) == 1


# forward fill


def test_forward_fill_identity_on_complete(rng):
    log = log_from_masks(np.ones((5, 12), bool), rng)
    snaps = assemble_snapshots(log)
    filled = forward_fill(snaps)
    np.testing.assert_array_equal(filled.raw, snaps.raw)
    np.testing.assert_array_equal(filled.utc, snaps.utc)


def test_forward_fill_drops_warmup(rng):
    masks = np.zeros((3, 12), bool)
    masks[0, 0] = True  # pair A only at t1
    masks[1, 1:6] = True
    masks[2, 6:] = True  # set complete first at t3
    log = log_from_masks(masks, rng)
    filled = forward_fill(assemble_snapshots(log))
    assert len(filled) == 1 and filled.utc[0] == log.utc[0] + 100
    np.testing.assert_array_equal(filled.raw[0, 0], log.gains[0])
    assert filled.complete


def test_forward_fill_scan_back_oracle_10k(rng):
    masks = rng.random((10_000, 12)) < 0.5
    masks[~masks.any(axis=1), 3] = True
    log = log_from_masks(masks, rng)
    filled = forward_fill(assemble_snapshots(log))
    # scan-back on a shorter prefix with the quadratic oracle
    prefix = 400
    n_rec = int(masks[:prefix].sum())
    small = SrsLog(log.utc[:n_rec], log.sfn[:n_rec], log.pair_index[:n_rec], log.gains[:n_rec])
    want = scan_back_oracle(small)
    for k, (t, g) in enumerate(want):
        assert filled.utc[k] == t
        np.testing.assert_array_equal(filled.raw[k], g)
    # linear scan-back over the full 10^4 snapshots
    last = [None] * 12
    k = 0
    rec = 0
    for s in range(len(masks)):
        for p in np.flatnonzero(masks[s]):
            last[p] = log.gains[rec]
            rec += 1
        if all(x is not None for x in last):
            np.testing.assert_array_equal(filled.raw[k], np.stack(last))
            k += 1
    assert k == len(filled)


@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_forward_fill_causal(seed, n):
    rng = np.random.default_rng(seed)
    masks = rng.random((n, 12)) < 0.5
    masks[~masks.any(axis=1), 0] = True
    log = log_from_masks(masks, rng)
    full = forward_fill(assemble_snapshots(log))
    cut = n // 2 + 1
    n_rec = int(masks[:cut].sum())
    part = forward_fill(
        assemble_snapshots(SrsLog(log.utc[:n_rec], log.sfn[:n_rec], log.pair_index[:n_rec], log.gains[:n_rec]))
    )
    assert len(part) <= len(full)
    np.testing.assert_array_equal(part.raw, full.raw[: len(part)])
    assert full.present.all()


def test_forward_fill_empty():
    assert len(forward_fill(assemble_snapshots(SrsLog.empty()))) == 0


# amplitude and averaging


def test_amplitude_examples():
    raw = np.zeros((12, 64, 2), np.int16)
    raw[0, 0] = (3, 4)
    a = amplitude(raw)
    assert a.shape == (12, 8, 8)
    assert a[0, 0, 0] == 5 / 32768
    assert a[1, 0, 0] == 0


def test_amplitude_phase_invariant(rng):
    z = rng.normal(size=(12, 8, 8)) + 1j * rng.normal(size=(12, 8, 8))
    rot = z * np.exp(1j * rng.uniform(0, 2 * np.pi, z.shape))
    np.testing.assert_allclose(amplitude(rot), amplitude(z), rtol=1e-12)


def test_average_examples():
    a = np.zeros((12, 8, 8))
    a[4:8, 2, 3] = [1, 2, 3, 4]
    assert average_ue_antennas(a)[1, 2, 3] == 2.5
    same = np.tile(np.arange(64.0).reshape(1, 8, 8), (12, 1, 1))
    np.testing.assert_array_equal(average_ue_antennas(same)[2], same[0])


def test_average_loop_oracle(rng):
    a = rng.random((5, 12, 8, 8))
    got = average_ue_antennas(a)
    for n in range(5):
        for c in range(3):
            for i in range(8):
                for j in range(8):
                    ref = sum(a[n, c * 4 + k, i, j] for k in range(4)) / 4
                    assert abs(got[n, c, i, j] - ref) <= 1e-15


def test_average_rejects_wrong_shape():
    with pytest.raises(ValidationError):
        average_ue_antennas(np.zeros((11, 8, 8)))


# normalizer and roots


def test_normalizer_contract():
    m = 0.37
    n = fit_normalizer(np.array([0.0, 0.1, m]))
    assert apply_normalizer(n, np.array([m]))[0] == 1.0
    assert apply_normalizer(n, np.array([0.0]))[0] == 0.0
    assert math.isclose(apply_normalizer(n, np.array([1.2 * m]))[0], 1.2)


def test_degenerate_normalizer():
    with pytest.raises(ValidationError):
        fit_normalizer(np.zeros((4, 3, 8, 8)))


def test_unfitted_normalizer():
    with pytest.raises(ProvenanceError):
        Normalizer().apply(np.ones(3))


@given(hnp.arrays(np.float64, (2, 3, 8, 8), elements=st.floats(0, 1e3)))
def test_normalizer_maps_train_max_to_one(a):
    if a.max() == 0:
        return
    n = fit_normalizer(a)
    assert apply_normalizer(n, a).max() == 1.0


def test_root_examples():
    x = np.zeros((3, 8, 8))
    assert root_features(x).shape == (384,)
    assert not root_features(x).any()
    assert (root_features(np.ones((3, 8, 8))) == 1).all()
    f = root_features(np.full((3, 8, 8), 0.25))
    assert f[0] == 0.5 and abs(f[192] - 0.70710678) < 1e-8
    assert root_features(x, fourth_root=False).shape == (192,)


def test_root_negative_rejected():
    x = np.zeros((3, 8, 8))
    x[1, 2, 3] = -1e-9
    with pytest.raises(ValidationError):
        root_features(x)


def test_root_layout(rng):
    x = rng.random((3, 8, 8))
    f = root_features(x)
    for c, i, j in [(0, 0, 0), (1, 2, 3), (2, 7, 7)]:
        k = c * 64 + i * 8 + j
        assert f[k] == math.sqrt(x[c, i, j])
        assert abs(f[192 + k] - math.sqrt(f[k])) <= 1e-12


@given(st.floats(0, 10), st.floats(0, 10))
def test_roots_monotone(a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    fl = root_features(np.full((3, 8, 8), lo))
    fh = root_features(np.full((3, 8, 8), hi))
    assert fl[0] <= fh[0] and fl[192] <= fh[192]
    if math.sqrt(lo) < math.sqrt(hi):
        assert fl[0] < fh[0]


def test_capacity_constants():
    assert channel_capacity() == 137 * 4 * 64 == 35072
    assert SPARSE_RAW_VALUES == 768
    assert FEATURE_WIDTH == 384


# GNSS


def fixes_line():
    return [GnssFix(0, 0.0, 0.0, 3.5), GnssFix(1000, 2.0, 0.0, 3.5), GnssFix(2000, 2.0, 4.0, 3.5)]


def test_interpolate_examples():
    xy, kept = interpolate_positions(fixes_line(), [500, 1000, -1, 2001, 1500])
    assert kept.tolist() == [True, True, False, False, True]
    np.testing.assert_array_equal(xy, [[1.0, 0.0], [2.0, 0.0], [2.0, 2.0]])


def test_interpolate_needs_two_fixes():
    with pytest.raises(InsufficientDataError):
        interpolate_positions(fixes_line()[:1], [0])


@given(st.lists(st.integers(-500, 2500), max_size=30))
def test_interpolation_within_hull(q):
    xy, kept = interpolate_positions(fixes_line(), q)
    assert len(xy) == kept.sum()
    assert np.all((xy >= 0) & (xy <= 4))


def test_geodetic_examples():
    out = geodetic_to_local([48.1, 48.1 + 1e-5], [11.5, 11.5])
    np.testing.assert_array_equal(out[0], [0, 0])
    assert out[1, 0] == 0
    assert abs(out[1, 1] - 6371000 * math.pi / 180 * 1e-5) < 1e-9
    assert abs(out[1, 1] - 1.11) < 0.01


def test_geodetic_pole():
    with pytest.raises(GeometryError):
        geodetic_to_local([90.0], [0.0])


def test_geodetic_additive(rng):
    lat0, lon0 = 48.15, 11.57
    dlat = 200 / 6371000 * 180 / math.pi
    dlon = dlat / math.cos(math.radians(lat0))
    p = np.column_stack([lat0 + rng.uniform(0, dlat, 50), lon0 + rng.uniform(0, dlon, 50)])
    d = np.column_stack([rng.uniform(-dlat, dlat, 50) / 20, rng.uniform(-dlon, dlon, 50) / 20])
    f = lambda pts: geodetic_to_local(pts[:, 0], pts[:, 1], origin=(lat0, lon0))
    np.testing.assert_allclose(f(p + d) - f(p), f(np.array([[lat0, lon0]]) + d), atol=1e-3)


def test_noise_identity_at_zero():
    t = np.arange(10.0).reshape(5, 2)
    np.testing.assert_array_equal(inject_target_noise(t, 0.0, 1), t)


def test_noise_statistics():
    n = 100_000
    t = np.zeros((n, 2))
    off = inject_target_noise(t, 3.5, seed=4, epoch=2)
    assert np.all(np.abs(off.mean(axis=0)) < 4 * 3.5 / math.sqrt(2 * n))
    assert np.all(np.abs(off.var(axis=0) / 3.5**2 - 1) < 0.05)


def test_noise_fresh_per_epoch_and_deterministic():
    t = np.zeros((10, 2))
    a = inject_target_noise(t, 1.0, 3, 0)
    np.testing.assert_array_equal(a, inject_target_noise(t, 1.0, 3, 0))
    assert not np.array_equal(a, inject_target_noise(t, 1.0, 3, 1))


# datasets


def test_build_dataset_row_count(session):
    log, fixes = session
    rows = extract_session(log, fixes)
    occasions = len(np.unique(log.utc))
    assert abs(len(rows.timestamps) - occasions) <= 0.1 * occasions
    ds, norm = build_dataset(log, fixes, split_tag="train")
    assert ds.width == 384 and ds.features.shape == (len(ds), 384)
    assert ds.features.max() == 1.0
    assert np.all(ds.features >= 0)
    assert np.all(np.diff(ds.timestamps) >= 0)
    assert ds.timestamps[0] >= fixes[0].utc and ds.timestamps[-1] <= fixes[-1].utc
    assert norm.fitted_on == ds.sessions


def test_normalizer_equals_recomputed_max(session):
    log, fixes = session
    _, norm = build_dataset(log, fixes)
    snaps = forward_fill(assemble_snapshots(log))
    kept = (snaps.utc >= fixes[0].utc) & (snaps.utc <= fixes[-1].utc)
    raw = snaps.raw[kept].astype(float)
    mag = np.sqrt(raw[..., 0] ** 2 + raw[..., 1] ** 2) / 32768
    assert math.isclose(norm.max_amplitude, mag.reshape(-1, 3, 4, 64).mean(axis=2).max(), rel_tol=1e-15)


def test_build_dataset_deterministic(session, tmp_path):
    log, fixes = session
    a, _ = build_dataset(log, fixes)
    b, _ = build_dataset(log, fixes)
    write_dataset(a, tmp_path / "a.csv")
    write_dataset(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_dataset_file_roundtrip(session, tmp_path):
    log, fixes = session
    ds, _ = build_dataset(log, fixes, session_id="walk")
    write_dataset(ds, tmp_path / "d.csv")
    back = read_dataset(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.targets, ds.targets)
    np.testing.assert_array_equal(back.timestamps, ds.timestamps)
    assert back.split_tag == "train" and back.sessions == ("walk",)
    assert back.normalizer == ds.normalizer
    assert (tmp_path / "d.csv").read_text().splitlines()[1].startswith("utc_ms,x_m,y_m,f0,f1")


def test_val_split_uses_train_normalizer_unclipped(session):
    log, fixes = session
    rows = extract_session(log, fixes, "a")
    half = len(rows.timestamps) // 2
    from srsfp.pipeline import SessionRows

    lo = SessionRows("t", rows.timestamps[:half], rows.amplitudes[:half] * 0.5, rows.targets[:half])
    hi = SessionRows("v", rows.timestamps[half:], rows.amplitudes[half:], rows.targets[half:])
    train, norm = build_split([lo], "train")
    frozen = Normalizer(norm.max_amplitude, norm.fitted_on)
    val, same = build_split([hi], "validation", norm)
    assert same == frozen
    assert val.features.max() > 1.0


def test_split_isolation_errors(session):
    log, fixes = session
    rows = extract_session(log, fixes, "s")
    _, norm = build_split([rows], "train")
    with pytest.raises(ProvenanceError):
        build_split([rows], "test", norm)
    with pytest.raises(ProvenanceError):
        build_split([rows], "validation")
    with pytest.raises(ProvenanceError):
        build_split([rows, rows], "train")


def test_empty_after_drops(rng):
    log = log_from_masks(np.ones((3, 12), bool), rng, t0=10_000)
    with pytest.raises(InsufficientDataError):
        build_dataset(log, fixes_line())


def test_sqrt_only_width(session):
    log, fixes = session
    ds, _ = build_dataset(log, fixes, fourth_root=False)
    assert ds.width == 192
