import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rfcluster.core import (DecisionReport, PointSet, PromiseParams, Verdict, covering_bound,
                            load_points, minimum_enclosing_ball, normalize, oracle_is_clusterable,
                            oracle_is_far, promise_status)
from rfcluster.errors import EmptyInput, OracleScaleExceeded, ParseError


def greedy_cover_1d(x, eps):
    # exact minimum number of length-2eps intervals covering points on a line
    x = np.sort(np.asarray(x).ravel())
    count, i = 0, 0
    while i < x.size:
        count += 1
        right = x[i] + 2 * eps
        while i < x.size and x[i] <= right * (1 + 1e-12) + 1e-15:
            i += 1
    return count


def far_by_enumeration(X, k2, delta):
    n = len(X)
    for combo in itertools.combinations(range(n), k2):
        if all(np.linalg.norm(X[a] - X[b]) >= delta for a, b in itertools.combinations(combo, 2)):
            return True
    return False


def meb_cvxpy(X):
    cp = pytest.importorskip("cvxpy")
    c = cp.Variable(X.shape[1])
    r = cp.Variable()
    cons = [cp.norm(X[i] - c) <= r for i in range(len(X))]
    cp.Problem(cp.Minimize(r), cons).solve()
    return float(r.value)


def test_load_csv_and_jsonl(tmp_path):
    (tmp_path / "a.csv").write_text("1,2\n\n3,4\n")
    (tmp_path / "b.jsonl").write_text("[1, 2]\n[3, 4]\n")
    a = load_points(tmp_path / "a.csv")
    b = load_points(tmp_path / "b.jsonl")
    assert a.dim == 2 and len(a) == 2
    np.testing.assert_array_equal(a.points, b.points)


def test_load_errors(tmp_path):
    (tmp_path / "ragged.csv").write_text("1,2\n3\n")
    (tmp_path / "bad.csv").write_text("1,2\nx,4\n")
    (tmp_path / "empty.csv").write_text("\n\n")
    with pytest.raises(ParseError) as e:
        load_points(tmp_path / "ragged.csv")
    assert e.value.row == 2
    with pytest.raises(ParseError):
        load_points(tmp_path / "bad.csv")
    with pytest.raises(EmptyInput):
        load_points(tmp_path / "empty.csv")


def test_points_are_read_only():
    S = PointSet.from_array([[0.0], [1.0]])
    with pytest.raises(ValueError):
        S.points[0, 0] = 5.0


def test_params_validation():
    with pytest.raises(ValueError):
        PromiseParams(0, 0.1, 2, 0.2, 1)
    with pytest.raises(ValueError):
        PromiseParams(1, 0.3, 2, 0.2, 1)
    p = PromiseParams(1, 0.1, 2, 0.2, 2).scaled(2.0)
    assert (p.eps, p.delta) == (0.2, 0.4)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 4)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_normalize_invariants(X):
    S = PointSet.from_array(X)
    N = normalize(S)
    assert np.linalg.norm(N.points, axis=1).max() <= 0.5 * (1 + 1e-12)
    np.testing.assert_allclose(N.original(), X, atol=1e-9 * (1 + np.abs(X).max()))
    if len(S) > 1:
        i, j = 0, len(S) - 1
        np.testing.assert_allclose(np.linalg.norm(N.points[i] - N.points[j]),
                                   N.scale_factor * np.linalg.norm(X[i] - X[j]), rtol=1e-9, atol=1e-12)
    # a second pass changes the scale by (almost) nothing
    assert normalize(N).scale_factor == pytest.approx(N.scale_factor, rel=1e-9)


def test_normalize_single_point():
    N = normalize(PointSet.from_array([[3.0, 4.0]]))
    assert N.scale_factor == 1.0
    np.testing.assert_array_equal(N.points, [[0.0, 0.0]])


@pytest.mark.parametrize("seed", range(5))
def test_meb_matches_socp(seed):
    X = np.random.default_rng(seed).normal(size=(12, 3))
    assert minimum_enclosing_ball(X)[1] == pytest.approx(meb_cvxpy(X), rel=1e-5)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=12), st.integers(1, 4),
       st.floats(0.01, 0.3))
def test_clusterable_1d_matches_greedy(xs, k1, eps):
    S = PointSet.from_array(np.array(xs)[:, None])
    assert oracle_is_clusterable(S, k1, eps) == (greedy_cover_1d(xs, eps) <= k1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.floats(0.1, 0.8))
def test_far_matches_enumeration(seed, k2, delta):
    X = np.random.default_rng(seed).uniform(-0.5, 0.5, (9, 2))
    assert oracle_is_far(PointSet.from_array(X), k2, delta) == far_by_enumeration(X, k2, delta)


def test_clusterable_2d_by_partitions():
    rng = np.random.default_rng(3)
    for _ in range(10):
        X = rng.uniform(-0.5, 0.5, (7, 2))
        eps = rng.uniform(0.15, 0.4)
        brute = False
        for labels in itertools.product(range(2), repeat=len(X)):
            groups = [X[np.array(labels) == g] for g in range(2)]
            if all(len(G) == 0 or minimum_enclosing_ball(G)[1] <= eps for G in groups):
                brute = True
                break
        assert oracle_is_clusterable(PointSet.from_array(X), 2, eps) == brute


def test_oracle_scale_limit():
    S = PointSet.from_array(np.zeros((26, 1)))
    with pytest.raises(OracleScaleExceeded):
        oracle_is_far(S, 2, 0.1)
    with pytest.raises(OracleScaleExceeded):
        oracle_is_clusterable(PointSet.from_array(np.zeros((3, 1))), 5, 0.1)


def test_promise_status():
    p = PromiseParams(1, 0.05, 2, 0.2, 1)
    assert promise_status(PointSet.from_array([[0.0], [0.05]]), p) == "YES"
    assert promise_status(PointSet.from_array([[0.0], [0.3]]), p) == "NO"
    assert promise_status(PointSet.from_array([[0.0], [0.15]]), p) == "NEITHER"
    q = PromiseParams(2, 0.05, 2, 0.2, 1)
    assert promise_status(PointSet.from_array([[0.0], [0.3]]), q) == "BOTH"


def test_covering_bound():
    assert covering_bound(2, 0.2, 0.1, 1) == 4.0
    assert covering_bound(1, 0.2, 0.1, 2) == 9 * 4


def test_report_roundtrip_and_fail_invariant():
    r = DecisionReport(10.0, 0.5, 0.3, 0.4, 0.31, Verdict.YES, 100, 7, "RSF")
    assert DecisionReport.from_json(r.to_json()) == r
    assert json.loads(r.to_json())["verdict"] == "YES"
    with pytest.raises(ValueError):
        DecisionReport(10.0, 0.5, 0.4, 0.3, 0.31, Verdict.YES, 100, 7)
    f = DecisionReport(10.0, 0.5, 0.4, 0.3, None, Verdict.FAIL, 0, 7)
    assert DecisionReport.from_json(f.to_json()) == f
