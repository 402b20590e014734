import math

import numpy as np
import pytest
from scipy.optimize import linprog

from rfcluster.errors import DomainError, Infeasible
from rfcluster.kernel1d import (Kernel1D, check_requirements, cosine_basis, cosine_basis_deriv, det_bound_p2,
                                gaussian_kernel_value, gaussian_truncated_feasible, kernel_eval, polya_lower_bound,
                                psd_feasibility_bound, solve_optimal_kernel_1d, step_kernel_counterexample,
                                toeplitz_gram, tridiag_counterexample)


@pytest.fixture(scope="module")
def kernel_001():
    return solve_optimal_kernel_1d(0.01, 0.99, 0.1, 60, 1000)


def highs_kernel_lp(eps, c, delta, n, grid):
    t = np.arange(1, grid + 1) / grid
    D = cosine_basis_deriv(n, t)
    keep = np.abs(D).max(axis=1) > 1e-9
    D = D[keep] / np.abs(D[keep]).max(axis=1, keepdims=True)
    A_ub = np.vstack([-cosine_basis(n, 1.0), D])
    A_eq = np.vstack([np.ones(n + 1), cosine_basis(n, eps)])
    res = linprog(cosine_basis(n, delta)[0], A_ub=A_ub, b_ub=np.zeros(A_ub.shape[0]), A_eq=A_eq,
                  b_eq=[1.0, c], bounds=[(0, None)] * (n + 1), method="highs")
    assert res.status == 0
    return res.fun


def test_basis_derivative_finite_difference():
    t = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (cosine_basis(12, t + h) - cosine_basis(12, t - h)) / (2 * h)
    np.testing.assert_allclose(cosine_basis_deriv(12, t), fd, atol=1e-6)


def test_kernel_validation_and_json():
    with pytest.raises(ValueError):
        Kernel1D([1.2, -0.2])
    with pytest.raises(ValueError):
        Kernel1D([0.5, 0.4])
    with pytest.raises(ValueError):
        Kernel1D([0.0, 1.0])  # k(1) = -1
    k = Kernel1D([0.6, 0.3, 0.1], {"c": 0.9})
    assert Kernel1D.from_json(k.to_json())(0.3) == k(0.3)
    with pytest.raises(DomainError):
        kernel_eval(k, 1.5)
    assert k(0.0) == pytest.approx(1.0)


def test_lp_matches_highs_oracle(kernel_001):
    k, kd = kernel_001
    assert kd == pytest.approx(highs_kernel_lp(0.01, 0.99, 0.1, 60, 10_000), abs=1e-6)


def test_requirements_hold_independently(kernel_001):
    k, kd = kernel_001
    t = np.linspace(0, 1, 10_001)
    v = np.cos(np.pi * np.outer(t, np.arange(61))) @ k.coeffs
    assert v[0] == pytest.approx(1.0, abs=1e-9)
    assert k(0.01) == pytest.approx(0.99, abs=1e-9)
    assert np.all(k.coeffs >= 0)
    assert np.all(np.diff(v) <= 1e-9)
    assert v[-1] >= -1e-9
    assert all(check_requirements(k, k.coeffs, 0.01, 0.99).values())
    assert 0.30 <= kd <= 0.366


def test_lp_beats_gaussian_when_gaussian_truncation_is_admissible(kernel_001):
    k, kd = kernel_001
    if gaussian_truncated_feasible(0.01, 0.99, 60):
        assert kd <= gaussian_kernel_value(0.01, 0.99, 0.1) + 1e-6
    # a convex kernel could not go below this line; the optimum is not convex
    assert polya_lower_bound(0.01, 0.99, 0.1) == pytest.approx(0.9)
    assert kd < 0.9


def test_c_equal_one_gives_constant():
    k, kd = solve_optimal_kernel_1d(0.1, 1.0, 0.3, 10, 200)
    assert kd == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(k.coeffs, np.eye(11)[0], atol=1e-9)


def test_infeasible_when_too_few_terms():
    with pytest.raises(Infeasible):
        solve_optimal_kernel_1d(0.02, 0.01, 0.05, 4, 200)


def test_argument_checks():
    with pytest.raises(ValueError):
        solve_optimal_kernel_1d(0.2, 0.9, 0.1)
    with pytest.raises(ValueError):
        solve_optimal_kernel_1d(0.1, 0.9, 0.2, n_terms=2)


def test_counterexamples():
    M, ev = step_kernel_counterexample()
    np.testing.assert_allclose(np.sort(ev), [1 - math.sqrt(2), 1.0, 1 + math.sqrt(2)], atol=1e-9)
    M, lo = tridiag_counterexample()
    assert lo == pytest.approx(-0.1326, abs=1e-3)
    # closed form for a tridiagonal Toeplitz matrix
    assert lo == pytest.approx(1 + 1.4 * math.cos(4 * math.pi / 5), abs=1e-12)


def test_det_bound():
    assert det_bound_p2(0.99) == pytest.approx(2 * 0.99**2 - 1)
    assert det_bound_p2(0.5) == 0.0
    assert det_bound_p2(0.5, return_raw=True)[1] == pytest.approx(-0.5)
    # Gram matrix of (0, e, 2e) is singular exactly at the bound
    p1 = 0.9
    G = toeplitz_gram([1.0, p1, det_bound_p2(p1)])
    assert np.linalg.eigvalsh(G)[0] == pytest.approx(0.0, abs=1e-12)


def sdp_min(p1, target, max_index):
    cp = pytest.importorskip("cvxpy")
    p = cp.Variable(max_index + 1)
    G = cp.Variable((max_index + 1, max_index + 1), symmetric=True)
    cons = [G >> 0, p[0] == 1, p[1] == p1, p >= 0]
    cons += [p[i + 1] <= p[i] for i in range(max_index)]
    cons += [G[i, j] == p[abs(i - j)] for i in range(max_index + 1) for j in range(max_index + 1)]
    cp.Problem(cp.Minimize(p[target]), cons).solve(solver="SCS", eps=1e-8, max_iters=200_000)
    return float(p.value[target])


def test_p2_bound_against_sdp():
    b = psd_feasibility_bound({1: 0.756}, 2, 4, 0.005)
    s = sdp_min(0.756, 2, 4)
    assert s - 0.02 <= b <= s + 1e-6


def test_bound_nondecreasing_in_max_index():
    vals = [psd_feasibility_bound({1: 0.756}, 2, m, 0.01) for m in (2, 3, 4)]
    assert vals[0] <= vals[1] <= vals[2]


def test_fixed_one_forces_one():
    # p1 = 1 forces the constant kernel; the grid search may land one step below
    assert 1.0 - 0.02 - 1e-12 <= psd_feasibility_bound({1: 1.0}, 3, 3, 0.02) <= 1.0
