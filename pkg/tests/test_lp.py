import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from rfcluster.lp import LinearProgram, LPStatus, lp_solve


def vertex_enumeration(c, A_ub, b_ub):
    # min c.x over {A_ub x <= b_ub, x >= 0} by trying every basis of active constraints
    n = c.size
    G = np.vstack([A_ub, -np.eye(n)])
    h = np.concatenate([b_ub, np.zeros(n)])
    best = np.inf
    for rows in itertools.combinations(range(G.shape[0]), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    return best


@pytest.mark.parametrize("seed", range(40))
def test_bounded_lp_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = 3, 5
    A = rng.uniform(-1, 1, (m, n))
    A = np.vstack([A, np.ones((1, n))])  # keeps the region bounded
    b = np.concatenate([rng.uniform(0.1, 2, m), [3.0]])
    c = rng.normal(size=n)
    res = lp_solve(LinearProgram(c, A_ub=A, b_ub=b))
    assert res.status is LPStatus.OPTIMAL
    assert res.objective_value == pytest.approx(vertex_enumeration(c, A, b), abs=1e-9)
    assert np.all(A @ res.x <= b + 1e-9) and np.all(res.x >= -1e-12)


@pytest.mark.parametrize("seed", range(60))
def test_random_lp_matches_highs(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(2, 9))
    m_eq, m_ub = int(rng.integers(0, 3)), int(rng.integers(1, 7))
    x0 = rng.uniform(0, 1, n)
    A_eq = rng.normal(size=(m_eq, n))
    b_eq = A_eq @ x0
    A_ub = rng.normal(size=(m_ub, n))
    b_ub = A_ub @ x0 + rng.uniform(0, 1, m_ub)
    bounds = [(float(rng.choice([0.0, -1.0, -np.inf])), float(rng.choice([2.0, np.inf]))) for _ in range(n)]
    c = rng.normal(size=n)
    ref = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if m_eq else None, b_eq=b_eq if m_eq else None,
                  bounds=bounds, method="highs")
    res = lp_solve(LinearProgram(c, A_eq if m_eq else None, b_eq if m_eq else None, A_ub, b_ub, bounds))
    if ref.status == 3:
        assert res.status is LPStatus.UNBOUNDED
        return
    assert ref.status == 0
    assert res.status is LPStatus.OPTIMAL
    assert res.objective_value == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)
    if m_eq:
        assert np.abs(A_eq @ res.x - b_eq).max() <= 1e-9
    assert np.all(A_ub @ res.x <= b_ub + 1e-9)


def test_infeasible_and_unbounded_are_statuses():
    inf = lp_solve(LinearProgram([1.0, 1.0], A_ub=[[1.0, 1.0]], b_ub=[-1.0]))
    assert inf.status is LPStatus.INFEASIBLE
    unb = lp_solve(LinearProgram([-1.0, 0.0], A_ub=[[0.0, 1.0]], b_ub=[1.0]))
    assert unb.status is LPStatus.UNBOUNDED
    status, x, val = unb
    assert x is None and val == -np.inf


def test_beale_cycling_example():
    # the classic instance on which textbook Dantzig pricing cycles
    c = np.array([-0.75, 150, -0.02, 6])
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    b = np.array([0.0, 0.0, 1.0])
    res = lp_solve(LinearProgram(c, A_ub=A, b_ub=b))
    assert res.status is LPStatus.OPTIMAL
    assert res.objective_value == pytest.approx(-0.05, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_strong_duality(seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0, 1, (4, 6))
    b = rng.uniform(1, 2, 4)
    c = -rng.uniform(0, 1, 6)
    res = lp_solve(LinearProgram(c, A_ub=A, b_ub=b))
    assert res.dual_objective == pytest.approx(res.objective_value, abs=1e-10)
    # multipliers of <= rows are nonpositive at a minimum and price the rhs
    assert np.all(res.ub_duals <= 1e-12)
    assert float(b @ res.ub_duals) == pytest.approx(res.objective_value, abs=1e-10)


def test_redundant_equalities():
    A_eq = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    b_eq = np.array([1.0, 2.0, 1.0])
    res = lp_solve(LinearProgram([1.0, 2.0, 3.0], A_eq, b_eq))
    assert res.status is LPStatus.OPTIMAL
    ref = linprog([1, 2, 3], A_eq=A_eq, b_eq=b_eq, method="highs")
    assert res.objective_value == pytest.approx(ref.fun, abs=1e-10)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0])
    with pytest.raises(ValueError):
        LinearProgram([np.nan])
