import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import purity
from sigforest import ClusterConfig, ForestConfig, ScoreReport, cluster_signatures, fit, kmeans, signature_batch, top_anomalies
from sigforest.clustering import cluster_profiles
from sigforest.errors import InvalidFractionError, TooFewSamplesError
from sigforest.synthetic import two_type_anomalies


def test_top_fraction_of_ten_is_the_minimum():
    scores = [-0.4, -0.5, -0.45, -0.7, -0.41, -0.42, -0.43, -0.44, -0.46, -0.47]
    assert top_anomalies(scores, 0.10) == [3]


def test_full_fraction_sorts_everything():
    scores = np.array([-0.3, -0.6, -0.5, -0.6])
    assert top_anomalies(scores, 1.0) == [1, 3, 2, 0]


def test_selection_size_is_ceiling():
    rng = np.random.default_rng(0)
    assert len(top_anomalies(-rng.random(2485), 0.10)) == 249
    assert len(top_anomalies(-rng.random(30), 0.10)) == 3
    assert len(top_anomalies(-rng.random(440), 0.10)) == 44


def test_accepts_score_reports():
    reports = [ScoreReport(3.0, -0.4), ScoreReport(1.0, -0.7), ScoreReport(2.0, -0.5)]
    assert top_anomalies(reports, 0.5) == [1, 2]


@pytest.mark.parametrize("q", [0.0, -0.1, 1.5])
def test_invalid_fraction(q):
    with pytest.raises(InvalidFractionError):
        top_anomalies([-0.5, -0.6], q)
    with pytest.raises(InvalidFractionError):
        ClusterConfig(top_fraction=q)


def test_k_distinct_rows_each_own_cluster():
    rows = np.array([[0.0, 0.0], [1.0, 5.0], [-3.0, 2.0], [7.0, 7.0]])
    result = kmeans(rows, ClusterConfig(k=4, seed=3))
    assert sorted(result.assignments.tolist()) == [0, 1, 2, 3]
    assert result.inertia == 0.0


def test_identical_rows_survive_empty_cluster_repair():
    rows = np.ones((6, 3))
    result = kmeans(rows, ClusterConfig(k=2, seed=1))
    assert result.inertia == 0.0
    assert len(set(result.assignments.tolist())) == 1
    assert result.assignments.min() >= 0 and result.assignments.max() < 2


def test_two_blobs_recovered_exactly():
    rng = np.random.default_rng(4)
    centres = np.array([[0.0, 0.0], [100.0, 100.0]])
    truth = np.repeat([0, 1], 50)
    rows = centres[truth] + rng.normal(size=(100, 2))
    result = kmeans(rows, ClusterConfig(k=2, seed=0))
    nearest = np.argmin(((rows[:, None, :] - centres[None]) ** 2).sum(-1), axis=1)
    assert purity(result.assignments.tolist(), nearest.tolist()) == 1.0


def test_too_few_rows():
    with pytest.raises(TooFewSamplesError):
        kmeans(np.zeros((2, 3)), ClusterConfig(k=3))


def test_kmeans_is_deterministic():
    rows = np.random.default_rng(2).normal(size=(60, 4))
    a = kmeans(rows, ClusterConfig(k=3, seed=7))
    b = kmeans(rows, ClusterConfig(k=3, seed=7))
    assert np.array_equal(a.assignments, b.assignments)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.inertia == b.inertia


@settings(max_examples=40, deadline=None)
@given(
    rows=arrays(np.float64, st.tuples(st.integers(3, 30), st.integers(1, 4)), elements=st.floats(-100, 100)),
    k=st.integers(1, 3),
    seed=st.integers(0, 1000),
)
def test_lloyd_properties(rows, k, seed):
    result = kmeans(rows, ClusterConfig(k=k, seed=seed, restarts=2))
    d2 = ((rows[:, None, :] - result.centroids[None]) ** 2).sum(-1)
    # every row sits with its nearest centroid
    assert np.all(d2[np.arange(len(rows)), result.assignments] <= d2.min(axis=1))
    assert result.inertia == pytest.approx(d2.min(axis=1).sum(), rel=1e-12, abs=1e-9)
    history = np.array(result.inertia_history)
    assert np.all(np.diff(history) <= 1e-9 * (1 + history[:-1]))


def test_single_cluster_report():
    X, _ = two_type_anomalies(0)
    model = fit(X, ForestConfig(256, 100, 0))
    report = cluster_signatures(model, X, ClusterConfig(k=1, top_fraction=0.10))
    assert len(report.selected_ids) == 44
    assert report.sizes.tolist() == [44]
    assert report.triage_ratio == 1.0
    assert np.array_equal(report.profiles[0], report.signatures.values.mean(axis=0))
    expected = signature_batch(model, X[report.selected_positions])
    assert np.array_equal(expected.values, report.signatures.values)


def test_profiles_recomputable_and_selection_sorted():
    X, _ = two_type_anomalies(1)
    model = fit(X, ForestConfig(256, 100, 1))
    report = cluster_signatures(model, X, ClusterConfig(k=3, seed=2))
    profiles, sizes = cluster_profiles(report.signatures.values, report.assignments, 3)
    assert np.array_equal(profiles, report.profiles)
    assert np.array_equal(sizes, report.sizes)
    assert np.all(np.diff(report.selected_scores) >= 0)
    assert report.to_dict()["cluster_sizes"] == sizes.tolist()


def test_k_larger_than_selection():
    X, _ = two_type_anomalies(2)
    model = fit(X, ForestConfig(64, 20, 0))
    with pytest.raises(TooFewSamplesError):
        cluster_signatures(model, X, ClusterConfig(k=50, top_fraction=0.10))


def test_two_anomaly_types_separate():
    for seed in range(3):
        X, labels = two_type_anomalies(seed)
        model = fit(X, ForestConfig(256, 300, seed))
        report = cluster_signatures(model, X, ClusterConfig(k=2, top_fraction=0.10, seed=seed))
        assert purity(report.assignments.tolist(), labels[report.selected_positions].tolist()) >= 0.9


def test_standardize_option_runs():
    X, _ = two_type_anomalies(3)
    model = fit(X, ForestConfig(128, 50, 3))
    report = cluster_signatures(model, X, ClusterConfig(k=2, standardize=True))
    assert report.sizes.sum() == len(report.selected_ids)
