import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import stump
from oracles import walk_serialized
from sigforest import (
    ForestConfig,
    PathTrace,
    expected_depth,
    expected_path_depth,
    fit,
    score,
    score_batch,
    score_samples,
    trace_path,
)
from sigforest.data_io import model_to_dict
from sigforest.errors import DimensionMismatchError
from sigforest.scoring import score_from_depth
from sigforest.synthetic import planted_outlier


def test_trace_single_leaf():
    model = fit(np.ones((8, 2)), ForestConfig(8, 1))
    trace = trace_path(model.trees[0], [3.0, -1.0])
    assert trace.records == [] and trace.leaf_size == 8 and trace.leaf_depth == 0


def test_trace_stump():
    model = stump()
    trace = trace_path(model.trees[0], [0.2, 9.0])
    assert [(r.feature, r.parent_size, r.child_size) for r in trace.records] == [(0, 2, 1)]
    assert trace.leaf_depth == 1
    assert trace_path(model.trees[0], [0.5, 0.0]).records[0].child_size == 1


def test_trace_matches_walker_on_serialized_tree():
    X = np.random.default_rng(7).normal(size=(8, 1))
    model = fit(X, ForestConfig(8, 1, 7))
    tree = model.trees[0]
    doc = model_to_dict(model)["trees"][0]
    query = [float(np.median(X[tree.subsample_indices, 0]))]
    trace = trace_path(tree, query)
    records, leaf_size, leaf_depth = walk_serialized(doc, query)
    assert [(r.feature, r.parent_size, r.child_size) for r in trace.records] == records
    assert (trace.leaf_size, trace.leaf_depth) == (leaf_size, leaf_depth)


def test_expected_path_depth_examples():
    assert expected_path_depth(PathTrace([], leaf_size=1, leaf_depth=3)) == 3.0
    assert expected_path_depth(PathTrace([], leaf_size=2, leaf_depth=0)) == 1.0
    assert expected_path_depth(PathTrace([], leaf_size=17, leaf_depth=10)) == pytest.approx(10 + 4.8791050452815155, abs=1e-12)


def test_score_of_mean_depth_equal_to_normaliser():
    # constant data: every tree is one leaf holding n points, so each tree gives E[d(n)]
    model = fit(np.ones((16, 3)), ForestConfig(16, 5))
    report = score(model, np.ones(3))
    assert report.expected_depth_mean == expected_depth(16)
    assert report.score == pytest.approx(-0.5, abs=1e-12)
    assert score_from_depth(expected_depth(64), expected_depth(64)) == -0.5


def test_score_limit_at_zero_depth():
    assert score_from_depth(1e-12, expected_depth(256)) == pytest.approx(-1.0, abs=1e-12)


def test_planted_outlier_is_lowest_score():
    for seed in range(5):
        X = planted_outlier(seed)
        scores, _ = score_samples(fit(X, ForestConfig(64, 500, seed)), X)
        assert np.argmin(scores) == 100


def test_batch_equals_scalar_bitwise():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 4))
    model = fit(X, ForestConfig(64, 50, 3))
    queries = rng.normal(size=(50, 4)) * 2
    batch = score_batch(model, queries)
    assert batch == [score(model, q) for q in queries]
    assert score_batch(model, queries[:1]) == [score(model, queries[0])]
    assert score_batch(model, np.zeros((0, 4))) == []


def test_batch_independent_of_threads():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(137, 3))
    model = fit(X, ForestConfig(32, 30, 1))
    one = score_samples(model, X, n_jobs=1)
    many = score_samples(model, X, n_jobs=8)
    assert np.array_equal(one[0], many[0]) and np.array_equal(one[1], many[1])


def test_dimension_mismatch():
    model = stump(n_features=2)
    with pytest.raises(DimensionMismatchError):
        score(model, [1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatchError):
        score_batch(model, np.zeros((4, 3)))
    with pytest.raises(DimensionMismatchError):
        trace_path(model.trees[0], [1.0])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), dims=st.integers(1, 4))
def test_scores_in_open_interval_and_rank_by_depth(seed, dims):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(70, dims))
    model = fit(X, ForestConfig(64, 20, seed))
    scores, depth = score_samples(model, np.vstack([X, rng.normal(size=(10, dims)) * 50]))
    assert np.all(scores > -1) and np.all(scores < 0)
    # exp2 rounding can tie nearly equal depths, so compare non-strictly
    assert np.all(np.diff(scores[np.argsort(depth)]) >= 0)


@given(
    depth=st.floats(0.0, 50.0),
    drop=st.floats(0.0, 10.0),
)
def test_lowering_depth_never_raises_score(depth, drop):
    norm = expected_depth(256)
    assert score_from_depth(max(depth - drop, 0.0), norm) <= score_from_depth(depth, norm)
