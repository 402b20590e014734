"""A small dense two-phase simplex solver.

Problems are stated as::

    minimize    c @ x
    subject to  A_eq @ x == b_eq
                A_ub @ x <= b_ub
                lo <= x <= hi

and are converted to standard form (equalities, x >= 0) before the tableau
iterations. Pricing is Dantzig's rule with a fallback to Bland's rule on
degenerate stalls.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-11
MAX_ITER = 200_000
BLAND_AFTER = 1000
REFACTOR_EVERY = 100


class LPStatus(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"


@dataclass
class LinearProgram:
    objective: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    bounds: list | None = None  # per variable (lo, hi); default (0, inf)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n)
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n)
        if self.bounds is None:
            self.bounds = [(0.0, np.inf)] * n
        if len(self.bounds) != n:
            raise ValueError("one (lo, hi) pair per variable required")
        for arr in (self.objective, self.A_eq, self.b_eq, self.A_ub, self.b_ub):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")

    @property
    def n(self):
        return self.objective.size


def _rows(A, b, n):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape != (b.size, n):
        raise ValueError(f"constraint shape {A.shape} does not match rhs {b.size} / n {n}")
    return A, b


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray | None
    objective_value: float
    iterations: int = 0
    # certificate in standard form: y solves B^T y = c_B, reduced = c - A^T y
    dual: np.ndarray | None = field(default=None, repr=False)
    reduced_costs: np.ndarray | None = field(default=None, repr=False)
    dual_objective: float | None = None
    # multipliers of the user's constraints; ub_duals <= 0 at a minimum
    eq_duals: np.ndarray | None = field(default=None, repr=False)
    ub_duals: np.ndarray | None = field(default=None, repr=False)

    def __iter__(self):
        return iter((self.status, self.x, self.objective_value))


class _Standard:
    """Bookkeeping for the map between the user problem and standard form."""

    def __init__(self, p: LinearProgram):
        n = p.n
        cols = []  # (user index, sign) for each standard column
        shift = np.zeros(n)
        ub_rows = []
        for j, (lo, hi) in enumerate(p.bounds):
            lo = -np.inf if lo is None else float(lo)
            hi = np.inf if hi is None else float(hi)
            if lo > hi:
                raise ValueError(f"variable {j}: lo > hi")
            if np.isfinite(lo):
                shift[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    ub_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                shift[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        T = np.zeros((n, len(cols)))
        for k, (j, s) in enumerate(cols):
            T[j, k] = s
        self.T, self.shift = T, shift
        nx = len(cols)

        A_eq = p.A_eq @ T
        b_eq = p.b_eq - p.A_eq @ shift
        A_ub = p.A_ub @ T
        b_ub = p.b_ub - p.A_ub @ shift
        if ub_rows:
            extra = np.zeros((len(ub_rows), nx))
            for r, (k, v) in enumerate(ub_rows):
                extra[r, k] = 1.0
            A_ub = np.vstack([A_ub, extra])
            b_ub = np.concatenate([b_ub, [v for _, v in ub_rows]])
        m_eq, m_ub = A_eq.shape[0], A_ub.shape[0]
        self.n_user_ub = p.A_ub.shape[0]
        A = np.zeros((m_eq + m_ub, nx + m_ub))
        A[:m_eq, :nx] = A_eq
        A[m_eq:, :nx] = A_ub
        A[m_eq:, nx:] = np.eye(m_ub)
        b = np.concatenate([b_eq, b_ub])
        self.A, self.b = A, b
        self.c = np.concatenate([p.objective @ T, np.zeros(m_ub)])
        self.const = float(p.objective @ shift)
        self.nx, self.m_eq, self.m_ub = nx, m_eq, m_ub

    def to_user(self, xs):
        return self.shift + self.T @ xs[: self.nx]


def _pivot(tab, r, j):
    tab[r] /= tab[r, j]
    col = tab[:, j].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        tab[nz] -= np.outer(col[nz], tab[r])


def _refactor(tab, basis, A_full, b, cost):
    """Rebuild the tableau from the original data for the current basis."""
    m = basis.size
    B = A_full[:, basis]
    try:
        tab[:m, :-1] = np.linalg.solve(B, A_full)
        tab[:m, -1] = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        return False
    tab[:m, -1][np.abs(tab[:m, -1]) < 1e-13] = 0.0
    tab[-1, :-1] = cost - cost[basis] @ tab[:m, :-1]
    tab[-1, -1] = -cost[basis] @ tab[:m, -1]
    tab[-1, :-1][basis] = 0.0
    return True


def _iterate(tab, basis, allowed, tol, it0, A_full, b, cost):
    """Simplex iterations on a tableau whose last row holds reduced costs.

    Entering columns are priced by most negative reduced cost; after a run of
    degenerate pivots the rule falls back to Bland's smallest-index choice,
    which cannot cycle, until a pivot makes progress again. The tableau is
    rebuilt from the original data every ``REFACTOR_EVERY`` pivots and before
    optimality or unboundedness is accepted.
    """
    it = it0
    m = tab.shape[0] - 1
    stall = 0
    fresh = False
    while True:
        rc = tab[-1, :-1]
        cand = np.nonzero((rc < -tol) & allowed)[0]
        if cand.size == 0:
            if fresh or not _refactor(tab, basis, A_full, b, cost):
                return "optimal", it
            fresh = True
            continue
        bland = stall >= BLAND_AFTER
        j = int(cand[0]) if bland else int(cand[np.argmin(rc[cand])])
        col = tab[:m, j]
        pos = np.nonzero(col > PIVOT_TOL)[0]
        if pos.size == 0:
            if fresh or not _refactor(tab, basis, A_full, b, cost):
                return "unbounded", it
            fresh = True
            continue
        rhs = np.maximum(tab[pos, -1], 0.0)
        ratios = rhs / col[pos]
        rmin = ratios.min()
        ties = pos[ratios <= rmin + 1e-12 * max(1.0, abs(rmin))]
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(col[ties])])
        stall = stall + 1 if rmin <= 1e-13 else 0
        _pivot(tab, r, j)
        basis[r] = j
        it += 1
        fresh = False
        if (it - it0) % REFACTOR_EVERY == 0:
            _refactor(tab, basis, A_full, b, cost)
        if it > MAX_ITER:
            raise RuntimeError("simplex iteration limit reached")


def lp_solve(p: LinearProgram, tol: float = 1e-9) -> LPResult:
    """Solve ``p`` with the two-phase simplex method.

    Infeasible and unbounded problems are reported through ``status``.
    """
    st = _Standard(p)
    A, b, c = st.A.copy(), st.b.copy(), st.c
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # slack columns of untouched <= rows form part of an initial basis
    basis = -np.ones(m, dtype=int)
    for r in range(st.m_eq, m):
        if not neg[r]:
            basis[r] = st.nx + (r - st.m_eq)
    art_rows = np.nonzero(basis < 0)[0]
    n_art = art_rows.size
    A_full = np.zeros((m, n + n_art))
    A_full[:, :n] = A
    for k, r in enumerate(art_rows):
        A_full[r, n + k] = 1.0
        basis[r] = n + k
    tab = np.zeros((m + 1, n + n_art + 1))
    tab[:m, :-1] = A_full
    tab[:m, -1] = b
    scale = max(1.0, float(np.abs(b).max()) if m else 1.0)

    it = 0
    m0 = m
    keep = np.ones(m, dtype=bool)
    if n_art:
        cost1 = np.zeros(n + n_art)
        cost1[n:] = 1.0
        tab[-1, :-1] = cost1
        tab[-1] -= tab[art_rows].sum(axis=0)
        allowed = np.ones(n + n_art, dtype=bool)
        _, it = _iterate(tab, basis, allowed, tol * 1e-2, it, A_full, b, cost1)
        if -tab[-1, -1] > tol * scale:
            return LPResult(LPStatus.INFEASIBLE, None, np.nan, it)
        # drive remaining artificials out of the basis, dropping redundant rows
        for r in range(m):
            if basis[r] >= n:
                row = tab[r, :n]
                cand = np.nonzero(np.abs(row) > 1e-9)[0]
                if cand.size:
                    j = int(cand[np.argmax(np.abs(row[cand]))])
                    _pivot(tab, r, j)
                    basis[r] = j
                else:
                    keep[r] = False
        tab = np.vstack([tab[:m][keep], tab[-1:]])
        tab = np.delete(tab, np.s_[n:n + n_art], axis=1)
        basis = basis[keep]
        A, b = A[keep], b[keep]
        m = basis.size

    tab[-1, :] = 0.0
    tab[-1, :n] = c
    tab[-1] -= c[basis] @ tab[:m]
    _refactor(tab, basis, A, b, c)
    status, it = _iterate(tab, basis, np.ones(n, dtype=bool), tol * 1e-2, it, A, b, c)
    if status == "unbounded":
        return LPResult(LPStatus.UNBOUNDED, None, -np.inf, it)

    B = A[:, basis]
    xs = np.zeros(n)
    xs[basis] = tab[:m, -1]
    try:
        y = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError:
        y = np.linalg.lstsq(B.T, c[basis], rcond=None)[0]
    xs = np.maximum(xs, 0.0)
    x = st.to_user(xs)
    reduced = c - A.T @ y
    y_rows = np.zeros(m0)
    y_rows[keep] = y
    y_rows[neg] *= -1
    return LPResult(
        LPStatus.OPTIMAL,
        x,
        float(p.objective @ x),
        it,
        dual=y,
        reduced_costs=reduced,
        dual_objective=float(b @ y) + st.const,
        eq_duals=y_rows[: st.m_eq],
        ub_duals=y_rows[st.m_eq: st.m_eq + st.n_user_ub],
    )
