import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from rfcluster.core import PointSet
from rfcluster.errors import DegenerateCorrelation, DomainError
from rfcluster.exceedance import (ExceedanceEstimate, Method, ball_max_samples, ball_points,
                                  exceed_ball_mc, exceed_ball_rsf, exceed_ball_rsf_exact,
                                  exceed_equidistant_erf, exceed_equidistant_grf, exceed_k1_balls,
                                  exceed_set_empirical, set_maxima)
from rfcluster.fields import FieldSpec


def owen_pair(rho, T):
    # Pr(max(X1, X2) >= T) for a standard bivariate normal pair with correlation rho
    a = math.sqrt((1 - rho) / (1 + rho))
    both_below = special.ndtr(T) - 2 * special.owens_t(T, a)
    return 1 - both_below


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.999), st.floats(-2.0, 4.0))
def test_pair_matches_owens_t(rho, T):
    assert exceed_equidistant_grf(2, rho, T).prob == pytest.approx(owen_pair(rho, T), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.floats(0.0, 0.99), st.floats(-1.0, 3.5))
def test_two_quadrature_routes_agree(k2, rho, T):
    assert exceed_equidistant_erf(k2, rho, T) == pytest.approx(exceed_equidistant_grf(k2, rho, T).prob, abs=1e-8)


def test_equicorrelated_limits():
    assert exceed_equidistant_grf(3, 0.0, 1.0).prob == pytest.approx(1 - special.ndtr(1.0) ** 3)
    assert exceed_equidistant_grf(5, 1.0, 1.0).prob == pytest.approx(special.ndtr(-1.0))
    assert exceed_equidistant_grf(1, 0.4, 0.7).prob == pytest.approx(special.ndtr(-0.7), abs=1e-10)
    with pytest.raises(DomainError):
        exceed_equidistant_grf(2, -0.1, 1.0)
    with pytest.raises(DegenerateCorrelation):
        exceed_equidistant_grf(2, 1.1, 1.0)


def test_slepian_monotone_in_rho():
    rhos = np.linspace(0, 1, 20)
    for k2, T in [(2, 0.5), (4, 1.0), (6, 2.0)]:
        p = [exceed_equidistant_grf(k2, r, T).prob for r in rhos]
        assert np.all(np.diff(p) <= 1e-12)


def test_equicorrelated_monte_carlo():
    rng = np.random.default_rng(0)
    k2, rho, T = 4, 0.3, 1.2
    n = 400_000
    X = math.sqrt(rho) * rng.standard_normal((n, 1)) + math.sqrt(1 - rho) * rng.standard_normal((n, k2))
    hits = X.max(axis=1) >= T
    se = hits.std() / math.sqrt(n)
    assert abs(hits.mean() - exceed_equidistant_grf(k2, rho, T).prob) < 4 * se


def test_estimate_validation():
    with pytest.raises(ValueError):
        ExceedanceEstimate(1.5)
    with pytest.raises(ValueError):
        ExceedanceEstimate(0.5, 0.1, Method.CLOSED_FORM)
    ExceedanceEstimate(0.5, 0.1, Method.MONTE_CARLO)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.9, 0.99), st.floats(0.0, 0.1), st.floats(0.5, 100.0), st.integers(1, 5))
def test_closed_form_dominates_exact(T, eps, sigma, d):
    # sigma sqrt(d) >= E|a| and min(1, .) is concave, so the closed form is an upper bound
    assert exceed_ball_rsf(T, eps, sigma, d).prob >= exceed_ball_rsf_exact(T, eps, sigma, d) - 1e-9


def test_ball_exact_matches_monte_carlo():
    spec = FieldSpec("RSF", 30.0, 1)
    est = exceed_ball_mc(spec, 0.02, 0.8, 40_000, grid_pts=512, seed=3)
    exact = exceed_ball_rsf_exact(0.8, 0.02, 30.0, 1)
    assert abs(est.prob - exact) < 4 * est.stderr + 1e-3  # grid max slightly below the true max


def test_ball_points_cover_centre_and_radius():
    G = ball_points(FieldSpec("GRF_FOURIER", 1e4, 2), 0.05, 64)
    assert np.any(np.all(G == 0.0, axis=1))
    assert np.linalg.norm(G, axis=1).max() <= 0.05 * (1 + 1e-9)
    with pytest.raises(ValueError):
        ball_points(FieldSpec("RSF", 1.0), 0.1, 10)


def test_ball_max_at_least_centre_value():
    spec = FieldSpec("GRF_FOURIER", 1000.0)
    mx = ball_max_samples(spec, 0.01, 5000, seed=1)
    T = 1.0
    assert (mx >= T).mean() >= special.ndtr(-T) - 4 * math.sqrt(0.16 / 5000)


def test_k1_union():
    e = exceed_k1_balls(ExceedanceEstimate(0.2, 0.01, Method.MONTE_CARLO), 3)
    assert e.prob == pytest.approx(1 - 0.8**3)
    assert e.stderr == pytest.approx(3 * 0.8**2 * 0.01)
    with pytest.raises(ValueError):
        exceed_k1_balls(ExceedanceEstimate(0.2), 0)


def test_set_maxima_deterministic_and_monotone():
    spec = FieldSpec("RSF", 20.0, 2)
    X = np.random.default_rng(0).uniform(-0.5, 0.5, (10, 2))
    S = PointSet.from_array(X)
    a = set_maxima(S, spec, 200, 9)
    np.testing.assert_array_equal(a, set_maxima(S, spec, 200, 9))
    assert np.all(set_maxima(S.subset(slice(0, 4)), spec, 200, 9) <= a)
    e = exceed_set_empirical(S, spec, 0.7, 200, 9)
    assert e.prob == (a >= 0.7).mean()
