"""One-dimensional kernel design over the cosine basis ``cos(l pi t)``.

A kernel ``k(t) = sum_l a_l cos(l pi t)`` on [0, 1] with ``a_l >= 0`` is
positive definite. The optimal kernel problem asks for the smallest ``k(delta)``
given ``k(0) = 1``, ``k(eps) = c``, ``k(1) >= 0`` and ``k`` nonincreasing.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, Infeasible
from .lp import LinearProgram, LPStatus, lp_solve

MONO_TOL = 1e-9
VIOL_TOL = 1e-9  # on max-abs normalized derivative rows


def cosine_basis(n_terms: int, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.cos(np.pi * np.outer(t, np.arange(n_terms + 1)))


def cosine_basis_deriv(n_terms: int, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    l = np.arange(n_terms + 1)
    return -np.pi * l * np.sin(np.pi * np.outer(t, l))


@dataclass(frozen=True, eq=False)
class Kernel1D:
    coeffs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.coeffs, dtype=float)
        if np.any(a < -1e-12):
            raise ValueError("cosine coefficients must be nonnegative")
        if abs(a.sum() - 1.0) > 1e-9:
            raise ValueError("coefficients must sum to 1 so that k(0) = 1")
        if cosine_basis(a.size - 1, 1.0)[0] @ a < -1e-9:
            raise ValueError("k(1) must be nonnegative")
        a.flags.writeable = False
        object.__setattr__(self, "coeffs", a)

    def __call__(self, t):
        return kernel_eval(self, t)

    def to_json(self) -> str:
        return json.dumps({"basis": "cosine", "coeffs": self.coeffs.tolist(), "meta": self.meta})

    @classmethod
    def from_json(cls, text: str) -> "Kernel1D":
        d = json.loads(text)
        return cls(np.array(d["coeffs"]), d.get("meta", {}))


def kernel_eval(k: Kernel1D, t):
    """``sum_l a_l cos(l pi t)``; scalar in, scalar out."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise DomainError("kernel argument must lie in [0, 1]")
    val = cosine_basis(k.coeffs.size - 1, arr.ravel()) @ k.coeffs
    return float(val[0]) if arr.ndim == 0 else val.reshape(arr.shape)


def _normalize_rows(D):
    """Scale rows to unit max-abs, dropping rows that vanish up to rounding
    (e.g. the derivative at t = 1, which is zero for every basis function)."""
    s = np.abs(D).max(axis=1)
    keep = s > 1e-9 * s.max()
    return D[keep] / s[keep, None]


def _solve_via_dual(obj, A_eq, b_eq, A_ub):
    """Solve ``min obj.a : A_eq a = b_eq, A_ub a <= 0, a >= 0`` through its dual.

    All inequality right-hand sides vanish, which makes the primal simplex
    heavily degenerate. The dual ``max b_eq.y : A_eq^T y - A_ub^T z <= obj,
    z >= 0`` has one row per coefficient and a generic right-hand side; the
    kernel coefficients are minus its row multipliers. Returns None when the
    primal is infeasible (dual unbounded or infeasible).
    """
    n_eq, n_ub = A_eq.shape[0], A_ub.shape[0]
    M = np.hstack([A_eq.T, -A_ub.T])
    cost = np.concatenate([-b_eq, np.zeros(n_ub)])
    bounds = [(-np.inf, np.inf)] * n_eq + [(0.0, np.inf)] * n_ub
    res = lp_solve(LinearProgram(cost, A_ub=M, b_ub=obj, bounds=bounds))
    if res.status is not LPStatus.OPTIMAL:
        return None
    return np.maximum(-res.ub_duals, 0.0)


def radial_kernel_lp(basis, dbasis, n_vars: int, eps: float, c: float, delta: float, grid_M: int,
                     fine_factor: int = 10, max_rounds: int = 50):
    """LP shared by the cosine and Dini bases.

    ``basis(t)`` and ``dbasis(t)`` return ``(len(t), n_vars)`` matrices of
    basis values and derivatives. Monotonicity is imposed at every ``m / grid_M``;
    the solution is then checked on a ``fine_factor`` times finer grid and
    violated fine points are added as constraints until none remain.

    Returns ``(coeffs, k_delta, n_rows)``.
    """
    A_eq = np.vstack([np.ones(n_vars), basis([eps])[0]])
    b_eq = np.array([1.0, c])
    f1 = basis([1.0])[0]
    obj = basis([delta])[0]

    coarse = _normalize_rows(dbasis(np.arange(1, grid_M + 1) / grid_M))
    fine = _normalize_rows(dbasis(np.arange(1, fine_factor * grid_M + 1) / (fine_factor * grid_M)))
    extra = np.zeros(fine.shape[0], dtype=bool)
    for _ in range(max_rounds):
        A_ub = np.vstack([-f1[None, :], coarse, fine[extra]])
        a = _solve_via_dual(obj, A_eq, b_eq, A_ub)
        if a is None:
            raise Infeasible("kernel LP is infeasible",
                             diagnostic={"eps": eps, "c": c, "delta": delta, "n_vars": n_vars})
        bad = (fine @ a > VIOL_TOL) & ~extra
        if not bad.any():
            break
        extra |= bad
    else:
        raise RuntimeError("monotonicity refinement did not converge")
    a = np.maximum(a, 0.0)
    a /= a.sum()
    return a, float(obj @ a), int(coarse.shape[0] + extra.sum())


def check_requirements(values_fn, coeffs, eps, c, n_grid: int = 10_000) -> dict:
    """Re-verify kernel requirements independently of the LP solver."""
    t = np.linspace(0.0, 1.0, n_grid + 1)
    k = values_fn(t)
    return {
        "k0_is_1": abs(k[0] - 1.0) <= 1e-9,
        "k_eps_is_c": abs(float(values_fn(np.array([eps]))[0]) - c) <= 1e-9,
        "coeffs_nonnegative": bool(np.all(coeffs >= 0)),
        "monotone": bool(np.all(np.diff(k) <= MONO_TOL)),
        "k1_nonnegative": k[-1] >= -1e-9,
        "bounded_by_1": bool(np.all(k <= 1 + 1e-9)),
    }


def solve_optimal_kernel_1d(eps: float, c: float, delta: float, n_terms: int = 60, grid_M: int = 1000):
    """Cosine kernel minimizing ``k(delta)``. Returns ``(Kernel1D, k_delta)``."""
    if not (0 < eps < delta < 1):
        raise ValueError("need 0 < eps < delta < 1")
    if not (0 < c <= 1):
        raise ValueError("need 0 < c <= 1")
    if n_terms < 4 or grid_M < 100:
        raise ValueError("need n_terms >= 4 and grid_M >= 100")
    a, kd, rows = radial_kernel_lp(
        lambda t: cosine_basis(n_terms, t), lambda t: cosine_basis_deriv(n_terms, t),
        n_terms + 1, eps, c, delta, grid_M)
    k = Kernel1D(a, {"c": c, "eps": eps, "delta": delta, "n_terms": n_terms, "grid_M": grid_M, "rows": rows})
    return k, float(kernel_eval(k, delta))


def gaussian_kernel_value(eps: float, c: float, t: float) -> float:
    """``exp(-lam t^2)`` with ``lam`` chosen so that the kernel equals ``c`` at ``eps``."""
    if not (0 < c < 1):
        raise ValueError("need 0 < c < 1")
    return c ** ((t / eps) ** 2)


def polya_lower_bound(eps: float, c: float, t: float) -> float:
    """Lower bound at ``t`` for convex decreasing kernels with ``k(0)=1, k(eps)=c``."""
    if t < eps:
        raise ValueError("need t >= eps")
    return max(0.0, 1.0 - (1.0 - c) * t / eps)


def step_kernel_counterexample():
    """Gram matrix of the step kernel on three collinear points, and its spectrum."""
    M = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
    return M, np.linalg.eigvalsh(M)


def det_bound_p2(p1: float, return_raw: bool = False):
    """``p2 >= 2 p1^2 - 1`` from the determinant of the 3-point Gram matrix, clamped at 0."""
    if not (0 <= p1 <= 1):
        raise ValueError("p1 must lie in [0, 1]")
    raw = 2 * p1 * p1 - 1
    return (max(0.0, raw), raw) if return_raw else max(0.0, raw)


def tridiag_counterexample():
    """4x4 unit-diagonal matrix with 0.7 next to the diagonal and 0 elsewhere."""
    M = np.eye(4) + 0.7 * (np.eye(4, k=1) + np.eye(4, k=-1))
    return M, float(np.linalg.eigvalsh(M)[0])


def toeplitz_gram(p) -> np.ndarray:
    """Gram matrix of equally spaced points ``0, e, 2e, ...`` given ``p_j = k(j e)``."""
    p = np.asarray(p, dtype=float)
    idx = np.abs(np.subtract.outer(np.arange(p.size), np.arange(p.size)))
    return p[idx]


def _cell_upper_bound(p, free, h):
    # lambda_min is concave in p, so over the cell |p_l - v_l| <= h/2 it is at
    # most lambda_min(v) + (h/2) sum |d lambda_min / d p_l|
    n = p.size
    w, V = np.linalg.eigh(toeplitz_gram(p))
    v = V[:, 0]
    g = np.array([(1.0 if l == 0 else 2.0) * (v[: n - l] @ v[l:]) for l in range(n)])
    return w[0] + 0.5 * h * np.abs(g[free]).sum()


def psd_feasibility_bound(fixed: dict, target_index: int, max_index: int, grid_step: float) -> float:
    """Lower bound on ``p_target`` over kernels that are PSD on ``{0, e, ..., max_index e}``.

    ``p_j`` denotes ``k(j e)`` with ``p_0 = 1``. Free values range over a grid of
    spacing ``grid_step``; a grid point is discarded only when no kernel in the
    surrounding cell can be PSD, so the returned value is a lower bound that
    can sit up to one grid step below the exact one. Completions are nonincreasing up to
    one grid step and nonnegative. Returns 0 with a warning if nothing is feasible.
    """
    if not (0.001 - 1e-12 <= grid_step <= 0.02 + 1e-12):
        raise ValueError("grid_step must lie in [0.001, 0.02]")
    if not (1 <= target_index <= max_index <= 6):
        raise ValueError("need 1 <= target_index <= max_index <= 6")
    fixed = {int(k): float(v) for k, v in fixed.items()}
    if any(not (0 <= v <= 1) for v in fixed.values()):
        raise ValueError("fixed values must lie in [0, 1]")
    if target_index in fixed:
        return fixed[target_index]
    h = grid_step
    grid = np.round(np.arange(0.0, 1.0 + h / 2, h), 12)[::-1]
    best = [np.inf]

    def dfs(p, free):
        j = len(p)
        if j == max_index + 1:
            best[0] = min(best[0], p[target_index])
            return True
        if j in fixed:
            cands, is_free = [fixed[j]], False
        else:
            cands, is_free = grid[grid <= p[-1] + h + 1e-12], True
        if j == target_index:
            cands = cands[::-1]  # ascending: the first completion found is the best here
        found = False
        for v in cands:
            if j == target_index and v >= best[0]:
                break
            q, f = p + [v], free + [is_free]
            if _cell_upper_bound(np.array(q), np.array(f), h) >= -1e-9 and dfs(q, f):
                found = True
                if j >= target_index:
                    break
        return found

    dfs([1.0], [False])
    if not np.isfinite(best[0]):
        warnings.warn("no PSD completion found on the grid; returning 0")
        return 0.0
    return float(best[0])


def psd_hierarchy(p1: float = 0.99, grid_step: float = 0.005, stage2_p1: float | None = 0.756):
    """Two-stage bound: ``p5`` from ``p1``, then ``p2`` at five times the spacing.

    The second stage starts from ``stage2_p1`` (the published first-stage value
    by default); pass None to chain our own first-stage bound instead.
    """
    p5 = psd_feasibility_bound({1: p1}, 5, 5, grid_step)
    start = p5 if stage2_p1 is None else stage2_p1
    p2 = psd_feasibility_bound({1: start}, 2, 4, grid_step)
    return {"p1": p1, "p5": p5, "stage2_p1": start, "p2_at_5x": p2,
            "naive_p2": det_bound_p2(start, return_raw=True)[1]}


def kernel_curve(values_fn, n_points: int = 1000):
    t = np.linspace(0.0, 1.0, n_points)
    return t, values_fn(t)


def gaussian_truncated_feasible(eps: float, c: float, n_terms: int) -> bool:
    """Whether the clamped cosine expansion of the matching Gaussian is itself
    an admissible kernel at this truncation."""
    from .fields import grf_weights
    lam = math.log(1 / c) / eps**2
    beta = grf_weights(lam, n_terms + 1)
    beta = beta / beta.sum()
    vals = cosine_basis(n_terms, np.linspace(0, 1, 10_001)) @ beta
    return abs(cosine_basis(n_terms, [eps])[0] @ beta - c) < 1e-6 and bool(np.all(np.diff(vals) <= MONO_TOL))
