import math

import numpy as np
import pytest

import driftmon as dm


def blob_pools(seed=5):
    nv, nl, dv, dl = dm.synth_pools(3, 16, 1200, 8.0, seed=seed)
    return np.asarray(nv), list(nl), np.asarray(dv), list(dl)


def test_fdd_matches_the_univariate_form():
    rng = np.random.default_rng(11)
    a = dm.estimate_gaussian(rng.normal(0.0, 1.0, size=(400, 1)))
    b = dm.estimate_gaussian(rng.normal(2.0, 3.0, size=(400, 1)))
    want = (a.mean[0] - b.mean[0]) ** 2 + (
        math.sqrt(a.covariance[0, 0]) - math.sqrt(b.covariance[0, 0])
    ) ** 2
    assert dm.fdd(a, b) == pytest.approx(want, rel=1e-9)
    assert dm.fdd(a, a) <= 1e-8
    assert dm.gaussian_distance("fdd", a, b) == pytest.approx(dm.fdd(a, b))


def test_pipeline_flags_a_shifted_window():
    nv, nl, dv, dl = blob_pools()
    config = dm.OfflineConfig(
        d_prime=6, d_prime_label=4, n_th=300, t_alpha=0.01, m_w=150, seed=7
    )
    baseline = dm.fit_baseline(nv[:1800], nl[:1800], config)
    assert baseline.label_set == [0, 1, 2]
    assert len(baseline.digest) == 16

    thresholds = dm.estimate_thresholds(baseline, nv[1800:], nl[1800:], "fdd")
    assert thresholds.metric == "fdd"
    assert thresholds.t_batch > 0
    assert set(thresholds.t_label) == {0, 1, 2}

    clean = dm.analyze_window(baseline, thresholds, nv[-150:], nl[-150:])
    assert clean.batch_distance is not None
    assert not clean.batch_drift

    drifted = dm.analyze_window(baseline, thresholds, dv[:150], dl[:150])
    assert drifted.batch_drift
    assert drifted.batch_distance > clean.batch_distance
    assert sum(stat.count for stat in drifted.label_entries.values()) == 150


def test_bundle_round_trip(tmp_path):
    nv, nl, _, _ = blob_pools(seed=9)
    config = dm.OfflineConfig(d_prime=5, d_prime_label=3, n_th=100, m_w=100, seed=1)
    baseline = dm.fit_baseline(nv[:1500], nl[:1500], config)
    thresholds = dm.estimate_thresholds(baseline, nv[1500:], nl[1500:])

    path = str(tmp_path / "model.dmdl")
    dm.save_bundle(path, baseline, thresholds, seed=1, created="2026-08-16T00:00:00Z")
    loaded, loaded_thresholds, warnings = dm.load_bundle(path)
    assert warnings == []
    assert loaded.digest == baseline.digest
    assert loaded_thresholds.t_batch == thresholds.t_batch
    assert loaded_thresholds.t_label == thresholds.t_label


def test_detection_scores():
    assert dm.h_dd(1.0, 1.0) == 1.0
    assert dm.h_dd(0.0, 0.9) == 0.0
    assert dm.h_dd(0.99, 0.9575) == pytest.approx(0.97, abs=0.005)

    x = [1.0, 2.0, 2.0, 4.0]
    y = [10.0, 20.0, 30.0, 40.0]
    rx = np.array([1.0, 2.5, 2.5, 4.0])
    ry = np.array([1.0, 2.0, 3.0, 4.0])
    want = np.corrcoef(rx, ry)[0, 1]
    assert dm.spearman(x, y) == pytest.approx(want, abs=1e-12)

    schedule = dm.generate_pattern("sudden", total=10, onset=4, level=30.0)
    assert schedule == [0, 0, 0, 0, 30, 30, 30, 30, 30, 30]


def test_clustering_and_purity():
    rng = np.random.default_rng(3)
    rows = np.vstack(
        [rng.normal(0.0, 1.0, (60, 4)), rng.normal(10.0, 1.0, (40, 4))]
    )
    clustering = dm.cluster_select(rows, 5, seed=3)
    assert clustering.k == 2
    assert clustering.silhouette > 0.8
    assert len(clustering.assignment) == 100

    prototypes = dm.extract_prototypes(rows, clustering, 3)
    assert len(prototypes) == 2
    for cluster in prototypes:
        distances = [p.distance for p in cluster]
        assert distances == sorted(distances)

    flags = [True] * 60 + [False] * 40
    assert dm.purity(clustering.assignment, flags) == 1.0
    assert dm.purity([0, 0, 0, 1, 1], [True, True, False, False, False]) == 0.8


def test_errors_surface_as_drift_error():
    with pytest.raises(dm.DriftError):
        dm.fit_baseline(
            np.zeros((30, 4), np.float32), [0] * 15 + [1] * 15,
            dm.OfflineConfig(d_prime=8, d_prime_label=2, m_w=10),
        )
    with pytest.raises(dm.DriftError):
        dm.spearman([1.0, 1.0], [2.0, 3.0])
    with pytest.raises(dm.DriftError):
        dm.load_bundle("/nonexistent/model.dmdl")
