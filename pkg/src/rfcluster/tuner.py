"""Choice of field parameter and threshold maximizing the gap ``M - C``.

``C`` bounds the exceedance probability of a clusterable set (``k1`` balls of
radius ``eps``) and ``M`` is the exceedance probability of the worst far set
(``k2`` points pairwise ``delta`` apart, placed on a regular simplex).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .core import PromiseParams
from .exceedance import (ExceedanceEstimate, ball_max_samples, exceed_ball_rsf,
                         exceed_equidistant_grf, exceed_k1_balls)
from .fields import MAX_TENSOR_TERMS, FieldKind, FieldSpec, default_grf_terms

RSF_M_DRAWS = 100_000
GRF_C_DRAWS = 2000


def default_param_grid(kind) -> np.ndarray:
    kind = FieldKind(kind)
    if kind is FieldKind.GRF_FOURIER:
        return np.logspace(0, 6, 40)
    return np.logspace(0, 4, 40)


def default_T_grid(kind=None) -> np.ndarray:
    return np.linspace(0.5, 0.999, 50)


def grf_terms_for(lam: float, dim: int) -> int:
    """Default truncation, capped so that ``n_terms**dim`` stays tractable."""
    return min(default_grf_terms(lam), int(MAX_TENSOR_TERMS ** (1.0 / dim) + 1e-9))


def field_spec_for(kind, param: float, dim: int) -> FieldSpec:
    kind = FieldKind(kind)
    if kind is FieldKind.GRF_FOURIER:
        return FieldSpec(kind, param, dim, grf_terms_for(param, dim))
    return FieldSpec(kind, param, dim)


@dataclass
class TuneResult:
    best_param: float
    best_T: float
    gap: float
    C: float
    M: float
    grid: dict = field(default_factory=dict)
    feasible: bool = False
    kind: str = "RSF"
    n_terms: int | None = None

    def __post_init__(self):
        self.feasible = bool(self.gap > 0)


def simplex_vertices(k: int, edge: float) -> np.ndarray:
    """``k`` points in R^(k-1) with all pairwise distances equal to ``edge``."""
    if k == 1:
        return np.zeros((1, 1))
    E = np.eye(k) - 1.0 / k
    # rows of E span a (k-1)-dim subspace; project onto an orthonormal basis of it
    U, _, _ = np.linalg.svd(E)
    V = E @ U[:, : k - 1]
    return V * (edge / math.sqrt(2.0))


def rsf_far_exceedance(k2: int, delta: float, sigma: float, T_grid, n_draws: int = RSF_M_DRAWS,
                       seed: int = 42) -> np.ndarray:
    """``Pr(max_i sin(a.v_i + b) >= T)`` for the simplex ``v_1..v_k2`` with edge ``delta``.

    The phase ``b`` is integrated out exactly: the set of ``b`` for which point
    ``i`` exceeds ``T`` is an arc of length ``L = pi - 2 asin T``, so the union
    has measure ``sum_i min(gap_i, L)`` over the circular gaps between the
    phases ``a.v_i``. Only ``a`` is sampled.
    """
    T_grid = np.atleast_1d(np.asarray(T_grid, dtype=float))
    L = np.pi - 2 * np.arcsin(np.clip(T_grid, -1, 1))
    if k2 == 1:
        return L / (2 * np.pi)
    V = simplex_vertices(k2, delta)
    rng = np.random.default_rng(seed)
    out = np.zeros(T_grid.size)
    chunk = 20_000
    for s in range(0, n_draws, chunk):
        m = min(chunk, n_draws - s)
        A = rng.normal(0.0, sigma, (m, V.shape[1]))
        ph = np.sort(np.mod(A @ V.T, 2 * np.pi), axis=1)
        gaps = np.diff(np.concatenate([ph, ph[:, :1] + 2 * np.pi], axis=1), axis=1)
        for t, Lt in enumerate(L):
            out[t] += np.minimum(gaps, Lt).sum(axis=1).sum()
    return np.minimum(out / (n_draws * 2 * np.pi), 1.0)


def _surfaces(params: PromiseParams, kind, param_grid, T_grid, n_mc: int | None, seed: int):
    kind = FieldKind(kind)
    P = np.asarray(param_grid, dtype=float)
    T = np.asarray(T_grid, dtype=float)
    if P.size == 0 or T.size == 0:
        raise ValueError("grids must be nonempty")
    C = np.empty((P.size, T.size))
    M = np.empty((P.size, T.size))
    for i, p in enumerate(P):
        if kind is FieldKind.GRF_FOURIER:
            rho = math.exp(-p * params.delta**2)
            M[i] = [exceed_equidistant_grf(params.k2, rho, t).prob for t in T]
            spec = field_spec_for(kind, p, params.dim)
            mx = ball_max_samples(spec, params.eps, n_mc or GRF_C_DRAWS, 64, seed)
            # the ball contains its centre, so C can never drop below 1 - Phi(T)
            single = np.maximum((mx[:, None] >= T[None, :]).mean(axis=0), special.ndtr(-T))
            C[i] = [exceed_k1_balls(ExceedanceEstimate(float(c)), params.k1).prob for c in single]
        elif kind is FieldKind.RSF:
            M[i] = rsf_far_exceedance(params.k2, params.delta, p, T, n_mc or RSF_M_DRAWS, seed)
            C[i] = [exceed_k1_balls(exceed_ball_rsf(t, params.eps, p, params.dim), params.k1).prob for t in T]
        else:
            raise ValueError(f"tuning supports RSF and GRF_FOURIER, not {kind.value}")
    return C, M


def gap_surface(params: PromiseParams, kind, param_grid=None, T_grid=None, n_mc: int | None = None,
                seed: int = 42, return_parts: bool = False):
    """Matrix of ``M - C`` over ``param_grid x T_grid``."""
    param_grid = default_param_grid(kind) if param_grid is None else np.asarray(param_grid, float)
    T_grid = default_T_grid(kind) if T_grid is None else np.asarray(T_grid, float)
    C, M = _surfaces(params, kind, param_grid, T_grid, n_mc, seed)
    return (M - C, C, M) if return_parts else M - C


def tune(params: PromiseParams, kind, param_grid=None, T_grid=None, n_mc: int | None = None,
         seed: int = 42) -> TuneResult:
    """Exhaustive grid search for the largest gap.

    Ties go to the smaller parameter, then the smaller threshold.
    """
    kind = FieldKind(kind)
    param_grid = default_param_grid(kind) if param_grid is None else np.asarray(param_grid, float)
    T_grid = default_T_grid(kind) if T_grid is None else np.asarray(T_grid, float)
    gap, C, M = gap_surface(params, kind, param_grid, T_grid, n_mc, seed, return_parts=True)
    bi, bj = 0, 0
    for i in np.argsort(param_grid, kind="stable"):
        for j in np.argsort(T_grid, kind="stable"):
            if gap[i, j] > gap[bi, bj] or (gap[i, j] == gap[bi, bj] and
                                           (param_grid[i], T_grid[j]) < (param_grid[bi], T_grid[bj])):
                bi, bj = i, j
    p = float(param_grid[bi])
    return TuneResult(
        best_param=p,
        best_T=float(T_grid[bj]),
        gap=float(gap[bi, bj]),
        C=float(C[bi, bj]),
        M=float(M[bi, bj]),
        grid={"kind": kind.value, "param_grid": param_grid.tolist(), "T_grid": T_grid.tolist(),
              "n_mc": n_mc, "seed": seed},
        kind=kind.value,
        n_terms=grf_terms_for(p, params.dim) if kind is FieldKind.GRF_FOURIER else None,
    )


def write_surface_csv(path, param_grid, T_grid, gap):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "T", "gap"])
        for i, p in enumerate(param_grid):
            for j, t in enumerate(T_grid):
                w.writerow([repr(float(p)), repr(float(t)), repr(float(gap[i, j]))])
