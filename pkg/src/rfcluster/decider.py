"""The randomized decision procedure and its empirical success rate."""
from __future__ import annotations

import numpy as np

from .core import (DecisionReport, PointSet, PromiseParams, Verdict, _has_clique,
                   oracle_is_clusterable, pairwise_distances, ORACLE_MAX_K1, ORACLE_MAX_POINTS)
from .errors import Infeasible
from .exceedance import set_maxima
from .fields import FieldKind, FieldSpec, mix64
from .tuner import TuneResult, simplex_vertices, tune

POINTS_PER_BALL = 50


def tuned_spec(tune_result: TuneResult, dim: int) -> FieldSpec:
    kind = FieldKind(tune_result.kind)
    if kind is FieldKind.GRF_FOURIER:
        return FieldSpec(kind, tune_result.best_param, dim, tune_result.n_terms)
    return FieldSpec(kind, tune_result.best_param, dim)


def fail_report(tune_result: TuneResult, seed: int) -> DecisionReport:
    return DecisionReport(tune_result.best_param, tune_result.best_T, tune_result.C, tune_result.M,
                          None, Verdict.FAIL, 0, seed, tune_result.kind, tune_result.n_terms)


def verdict_for(P: float, C: float, M: float) -> Verdict:
    # a tie at the midpoint goes to NO
    return Verdict.YES if P < (M + C) / 2 else Verdict.NO


def decide(S: PointSet, params: PromiseParams, kind, tune_result: TuneResult, n_draws: int = 2000,
           seed: int = 42) -> DecisionReport:
    """Decide whether ``S`` is clusterable (YES) or far (NO).

    Draws ``n_draws`` fields with the tuned parameter, takes the fraction
    ``P`` whose maximum over ``S`` reaches ``T`` and compares it with the
    midpoint of ``C`` and ``M``. An infeasible tuning gives a FAIL report.
    """
    if FieldKind(kind) is not FieldKind(tune_result.kind):
        raise ValueError("tune_result was computed for a different field kind")
    if S.dim != params.dim:
        raise ValueError(f"point dimension {S.dim} does not match params.dim {params.dim}")
    if not tune_result.feasible:
        return fail_report(tune_result, seed)
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    spec = tuned_spec(tune_result, S.dim)
    P = float((set_maxima(S, spec, n_draws, seed) >= tune_result.best_T).mean())
    return DecisionReport(tune_result.best_param, tune_result.best_T, tune_result.C, tune_result.M,
                          P, verdict_for(P, tune_result.C, tune_result.M), n_draws, seed,
                          tune_result.kind, tune_result.n_terms)


def _in_ball(rng, n, dim, radius):
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * radius * rng.uniform(size=(n, 1)) ** (1.0 / dim)


def yes_instance(params: PromiseParams, rng, points_per_ball: int = POINTS_PER_BALL) -> PointSet:
    """``k1`` random ``eps``-balls, each filled with ``points_per_ball`` points."""
    d = params.dim
    lim = max(0.5 - params.eps, 0.0)
    centers = rng.uniform(-lim, lim, (params.k1, d))
    X = np.vstack([c + _in_ball(rng, points_per_ball, d, params.eps) for c in centers])
    return PointSet(X, d)


def no_instance(params: PromiseParams, rng) -> PointSet:
    """``k2`` points pairwise exactly ``delta`` apart, randomly rotated.

    When ``dim < k2 - 1`` no regular simplex fits; the points are then put on
    a random line with spacing ``delta``.
    """
    d, k2 = params.dim, params.k2
    if d >= k2 - 1:
        V = simplex_vertices(k2, params.delta)
        V = np.hstack([V, np.zeros((k2, d - V.shape[1]))])[:, :d]
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        X = V @ Q
    else:
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        X = np.outer((np.arange(k2) - (k2 - 1) / 2) * params.delta, u)
    return PointSet(X, d)


def promise_violation(S: PointSet, params: PromiseParams, expected: str) -> bool:
    """True if a synthetic instance generated for ``expected`` also satisfies the other side."""
    if expected == "YES":
        if len(S) > 400:
            return False
        adj = pairwise_distances(S.points) >= params.delta
        np.fill_diagonal(adj, False)
        return _has_clique(adj, params.k2)
    if len(S) > ORACLE_MAX_POINTS or params.k1 > ORACLE_MAX_K1:
        return False
    return oracle_is_clusterable(S, params.k1, params.eps)


def success_rate(params: PromiseParams, kind, n_trials: int = 100, n_draws: int = 2000, seed: int = 42,
                 tune_result: TuneResult | None = None, return_details: bool = False):
    """Fraction of synthetic YES and NO instances decided correctly.

    Instances that satisfy both promises are flagged and left out of the
    accuracies.
    """
    if tune_result is None:
        tune_result = tune(params, kind, seed=seed)
    if not tune_result.feasible:
        raise Infeasible("success rate needs a feasible tuning", diagnostic={"gap": tune_result.gap})
    counts = {"YES": [0, 0], "NO": [0, 0]}
    flagged = {"YES": 0, "NO": 0}
    for case, make, want in (("YES", yes_instance, Verdict.YES), ("NO", no_instance, Verdict.NO)):
        for trial in range(n_trials):
            rng = np.random.default_rng([seed, trial, 0 if case == "YES" else 1])
            S = make(params, rng)
            if promise_violation(S, params, case):
                flagged[case] += 1
                continue
            rep = decide(S, params, kind, tune_result, n_draws, mix64(seed, 2 * trial + (case == "NO")))
            counts[case][0] += rep.verdict is want
            counts[case][1] += 1
    acc = tuple(c / n if n else float("nan") for c, n in (counts["YES"], counts["NO"]))
    if return_details:
        return acc, {"counts": counts, "promise_violating": flagged}
    return acc
