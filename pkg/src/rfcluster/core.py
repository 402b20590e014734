"""Point sets, promise-problem parameters and brute-force oracles.

The oracles here are exponential-time reference implementations meant for
tests and small sanity checks; they refuse inputs beyond desk scale.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInput, OracleScaleExceeded, ParseError

ORACLE_MAX_POINTS = 25
ORACLE_MAX_K1 = 4


class Verdict(str, enum.Enum):
    YES = "YES"
    NO = "NO"
    FAIL = "FAIL"


@dataclass(frozen=True, eq=False)
class PointSet:
    """An immutable ``(n, dim)`` array of points.

    ``scale_factor`` and ``center`` record the normalization applied so far:
    ``original = points / scale_factor + center``.
    """

    points: np.ndarray
    dim: int
    scale_factor: float = 1.0
    center: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim) if pts.size else pts.reshape(0, self.dim)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"points must have shape (n, {self.dim}), got {pts.shape}")
        if not self.scale_factor > 0:
            raise ValueError("scale_factor must be positive")
        pts.flags.writeable = False
        center = np.zeros(self.dim) if self.center is None else np.array(self.center, dtype=float)
        center.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "center", center)

    @classmethod
    def from_array(cls, arr) -> "PointSet":
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        return cls(arr, arr.shape[1])

    def __len__(self):
        return self.points.shape[0]

    def original(self) -> np.ndarray:
        """Points mapped back to the coordinates they were loaded in."""
        return self.points / self.scale_factor + self.center

    def subset(self, idx) -> "PointSet":
        return PointSet(self.points[idx], self.dim, self.scale_factor, self.center)


@dataclass(frozen=True)
class PromiseParams:
    k1: int
    eps: float
    k2: int
    delta: float
    dim: int

    def __post_init__(self):
        if self.k1 < 1:
            raise ValueError("k1 must be >= 1")
        if self.k2 < 1:
            raise ValueError("k2 must be >= 1")
        if not (0 < self.eps < self.delta):
            raise ValueError("need 0 < eps < delta")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def scaled(self, factor: float) -> "PromiseParams":
        """Same promise expressed in coordinates multiplied by ``factor``."""
        return PromiseParams(self.k1, self.eps * factor, self.k2, self.delta * factor, self.dim)


@dataclass(frozen=True)
class DecisionReport:
    """Outcome of one run of the decision procedure.

    ``empirical_P`` is None and ``draws_used`` is 0 when the tuned instance
    is infeasible (verdict FAIL): no field draws are spent in that case.
    """

    field_param: float
    threshold_T: float
    prob_yes_C: float
    prob_no_M: float
    empirical_P: float | None
    verdict: Verdict
    draws_used: int
    seed: int
    kind: str = "RSF"
    n_terms: int | None = None
    bytes_sent: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "verdict", Verdict(self.verdict))
        gap = self.prob_no_M - self.prob_yes_C
        if (self.verdict is Verdict.FAIL) != (gap <= 0):
            raise ValueError("verdict must be FAIL exactly when M - C <= 0")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["verdict"] = self.verdict.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionReport":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "DecisionReport":
        return cls.from_dict(json.loads(text))


def load_points(path, format: str | None = None) -> PointSet:
    """Read a CSV (one point per line) or JSONL (one JSON array per line) file."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unsupported point format {fmt!r}")
    rows = []
    with path.open(newline="") as fh:
        if fmt == "csv":
            lines = enumerate(csv.reader(fh), start=1)
        else:
            lines = ((i, line) for i, line in enumerate(fh, start=1))
        for lineno, raw in lines:
            if fmt == "csv":
                if not raw or all(not cell.strip() for cell in raw):
                    continue
                try:
                    row = [float(cell) for cell in raw]
                except ValueError as exc:
                    raise ParseError(str(exc), row=lineno) from None
            else:
                if not raw.strip():
                    continue
                try:
                    row = json.loads(raw)
                    row = [float(v) for v in row]
                except (ValueError, TypeError) as exc:
                    raise ParseError(str(exc), row=lineno) from None
            if rows and len(row) != len(rows[0]):
                raise ParseError(f"expected {len(rows[0])} columns, got {len(row)}", row=lineno)
            if not row:
                raise ParseError("empty row", row=lineno)
            rows.append(row)
    if not rows:
        raise EmptyInput(f"{path} contains no points")
    arr = np.array(rows, dtype=float)
    return PointSet(arr, arr.shape[1])


def normalize(S: PointSet) -> PointSet:
    """Centre on the centroid and scale uniformly into the radius-1/2 ball."""
    if len(S) == 0:
        raise EmptyInput("cannot normalize an empty point set")
    c = S.points.mean(axis=0)
    shifted = S.points - c
    radius = float(np.sqrt((shifted ** 2).sum(axis=1)).max())
    s = 1.0 if radius == 0.0 else 0.5 / radius
    return PointSet(
        shifted * s,
        S.dim,
        scale_factor=S.scale_factor * s,
        center=S.center + c / S.scale_factor,
    )


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def _has_clique(adj: np.ndarray, size: int) -> bool:
    n = adj.shape[0]
    if size <= 1:
        return n >= size
    if size > n:
        return False

    def extend(chosen_count, candidates):
        if chosen_count == size:
            return True
        if chosen_count + len(candidates) < size:
            return False
        for pos, v in enumerate(candidates):
            rest = [u for u in candidates[pos + 1:] if adj[v, u]]
            if extend(chosen_count + 1, rest):
                return True
            if chosen_count + len(candidates) - pos - 1 < size:
                break
        return False

    return extend(0, list(range(n)))


def _check_scale(S: PointSet):
    if len(S) > ORACLE_MAX_POINTS:
        raise OracleScaleExceeded(f"oracle limited to {ORACLE_MAX_POINTS} points, got {len(S)}")


def oracle_is_far(S: PointSet, k2: int, delta: float) -> bool:
    """True iff ``S`` holds ``k2`` points with all pairwise distances >= delta."""
    _check_scale(S)
    D = pairwise_distances(S.points)
    adj = D >= delta
    np.fill_diagonal(adj, False)
    return _has_clique(adj, k2)


def _circumsphere(R: list[np.ndarray]):
    if not R:
        return None, -1.0
    p0 = R[0]
    if len(R) == 1:
        return p0.copy(), 0.0
    U = np.array([p - p0 for p in R[1:]])
    G = U @ U.T
    lam = np.linalg.lstsq(2.0 * G, np.diag(G), rcond=None)[0]
    c = p0 + U.T @ lam
    return c, float(np.linalg.norm(c - p0))


def minimum_enclosing_ball(X: np.ndarray):
    """Exact smallest enclosing ball (Welzl), any dimension. Returns (center, radius)."""
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        return None, -1.0
    d = X.shape[1]
    order = np.random.default_rng(0).permutation(len(X))
    pts = [X[i] for i in order]

    def inside(p, c, r):
        return c is not None and np.linalg.norm(p - c) <= r * (1 + 1e-10) + 1e-13

    def welzl(n, R):
        if n == 0 or len(R) == d + 1:
            return _circumsphere(R)
        p = pts[n - 1]
        c, r = welzl(n - 1, R)
        if inside(p, c, r):
            return c, r
        return welzl(n - 1, R + [p])

    return welzl(len(pts), [])


def oracle_is_clusterable(S: PointSet, k1: int, eps: float) -> bool:
    """True iff ``S`` can be covered by ``k1`` balls of radius ``eps``.

    Exhaustive search over assignments of points to at most ``k1`` groups;
    each group is accepted when its exact minimum enclosing ball has radius
    at most ``eps``. Ball centres are unconstrained.
    """
    _check_scale(S)
    if k1 > ORACLE_MAX_K1:
        raise OracleScaleExceeded(f"oracle limited to k1 <= {ORACLE_MAX_K1}")
    n = len(S)
    if n <= k1:
        return True
    X = S.points
    D = pairwise_distances(X)
    far = D > 2 * eps * (1 + 1e-12)
    np.fill_diagonal(far, False)
    if _has_clique(far, k1 + 1):
        return False

    # farthest-first order makes infeasible branches fail early
    order = [int(np.argmax(D.sum(axis=1)))]
    while len(order) < n:
        rest = [i for i in range(n) if i not in order]
        order.append(max(rest, key=lambda i: D[i, order].min()))

    def fits(members):
        return minimum_enclosing_ball(X[members])[1] <= eps * (1 + 1e-12)

    groups: list[list[int]] = []

    def assign(pos):
        if pos == n:
            return True
        i = order[pos]
        for g in groups:
            if all(D[i, j] <= 2 * eps * (1 + 1e-12) for j in g) and fits(g + [i]):
                g.append(i)
                if assign(pos + 1):
                    return True
                g.pop()
        if len(groups) < k1:
            groups.append([i])
            if assign(pos + 1):
                return True
            groups.pop()
        return False

    return assign(0)


def default_c_d(dim: int) -> float:
    """Crude covering constant: 1 in one dimension, 3**d otherwise."""
    return 1.0 if dim == 1 else float(3 ** dim)


def covering_bound(ell: int, delta: float, eps: float, dim: int, c_d: float | None = None) -> float:
    """Upper bound ``ell * c(d) * (delta/eps)**d`` on the size of an eps-cover."""
    if c_d is None:
        c_d = default_c_d(dim)
    return ell * c_d * (delta / eps) ** dim


def promise_status(S: PointSet, params: PromiseParams) -> str:
    """Classify a small instance as ``YES``, ``NO``, ``BOTH`` or ``NEITHER``."""
    yes = oracle_is_clusterable(S, params.k1, params.eps)
    no = oracle_is_far(S, params.k2, params.delta)
    if yes and no:
        return "BOTH"
    if yes:
        return "YES"
    if no:
        return "NO"
    return "NEITHER"


def ceil_int(x: float) -> int:
    return int(math.ceil(x - 1e-12))
