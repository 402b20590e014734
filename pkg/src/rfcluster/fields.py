"""Random-field families used as hash functions.

Four kinds are supported:

* ``RSF``: ``sin(a.x + b)`` with ``a ~ N(0, sigma^2 I)`` and ``b ~ U[-pi, pi]``.
* ``STABLE``: same form with Cauchy frequencies of scale ``1/k``.
* ``GRF_FOURIER``: truncated cosine expansion of the Gaussian kernel
  ``exp(-lambda t^2)`` with Gaussian amplitudes and a random shift.
* ``SINC_DIAGNOSTIC``: uniform frequencies, whose covariance is a sinc and
  therefore not monotone. Only used to illustrate a bad kernel.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimError, Unsupported

MASK64 = (1 << 64) - 1
MAX_TENSOR_TERMS = 10**6


class FieldKind(str, enum.Enum):
    RSF = "RSF"
    STABLE = "STABLE"
    GRF_FOURIER = "GRF_FOURIER"
    SINC_DIAGNOSTIC = "SINC_DIAGNOSTIC"


def mix64(seed: int, index: int) -> int:
    """Splitmix64-style hash of ``(seed, index)``; used to derive per-draw seeds."""
    z = (int(seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def default_grf_terms(lam: float) -> int:
    """Terms per axis so that the dropped Gaussian tail is below about 1e-10."""
    return max(8, int(math.ceil(2.0 * math.sqrt(lam * math.log(1e10)) / math.pi)) + 1)


@dataclass(frozen=True)
class FieldSpec:
    kind: FieldKind
    param: float
    dim: int = 1
    n_terms: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FieldKind(self.kind))
        if not self.param > 0:
            raise ValueError("field parameter must be positive")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind is FieldKind.GRF_FOURIER:
            n = self.n_terms if self.n_terms is not None else default_grf_terms(self.param)
            if n < 1:
                raise ValueError("n_terms must be >= 1")
            if n ** self.dim > MAX_TENSOR_TERMS:
                raise ValueError(f"n_terms**dim = {n ** self.dim} exceeds {MAX_TENSOR_TERMS}")
            object.__setattr__(self, "n_terms", int(n))
        if self.kind is FieldKind.SINC_DIAGNOSTIC and self.dim != 1:
            raise Unsupported("the sinc diagnostic field is one-dimensional")

    def to_dict(self):
        return {"kind": self.kind.value, "param": self.param, "dim": self.dim, "n_terms": self.n_terms}

    @classmethod
    def from_dict(cls, d):
        return cls(FieldKind(d["kind"]), float(d["param"]), int(d["dim"]), d.get("n_terms"))


@dataclass(frozen=True, eq=False)
class FieldDraw:
    """One realization. ``frequencies`` holds ``a`` for the sinusoidal kinds and
    the flattened amplitudes ``N_k w_k`` for GRF_FOURIER; ``phase`` is ``b`` or
    the per-axis shift ``t``."""

    spec: FieldSpec
    frequencies: np.ndarray
    phase: np.ndarray | float
    seed: int

    def __call__(self, x):
        return evaluate(self, x)

    def to_json(self) -> str:
        return json.dumps({
            "spec": self.spec.to_dict(),
            "frequencies": np.asarray(self.frequencies).tolist(),
            "phase": np.asarray(self.phase).tolist(),
            "seed": int(self.seed),
        })

    @classmethod
    def from_json(cls, text: str) -> "FieldDraw":
        d = json.loads(text)
        spec = FieldSpec.from_dict(d["spec"])
        phase = d["phase"]
        phase = np.array(phase) if isinstance(phase, list) else float(phase)
        return cls(spec, np.array(d["frequencies"], dtype=float), phase, int(d["seed"]))


@lru_cache(maxsize=64)
def _grf_weights_cached(lam: float, n_terms: int) -> np.ndarray:
    # exp(-lam t^2) underflows past sqrt(745 / lam), so integrate only up to there
    t_max = min(1.0, math.sqrt(745.0 / lam)) if lam > 0 else 1.0
    n_panels = max(64, int(math.ceil(4 * n_terms * t_max)))
    nodes, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, t_max, n_panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    t = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    f = np.exp(-lam * t * t) * wt
    beta = np.empty(n_terms)
    for s in range(0, n_terms, 256):
        k = np.arange(s, min(s + 256, n_terms))
        beta[k] = np.cos(np.pi * np.outer(k, t)) @ f
    beta[1:] *= 2.0
    beta = np.maximum(beta, 0.0)
    beta.flags.writeable = False
    return beta


def grf_weights(lam: float, n_terms: int) -> np.ndarray:
    """Clamped cosine-series coefficients ``beta_0 .. beta_{n_terms-1}`` of
    ``exp(-lam t^2)`` on [0, 1], so that ``exp(-lam t^2) ~ sum beta_k cos(pi k t)``."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    return _grf_weights_cached(float(lam), int(n_terms)).copy()


@lru_cache(maxsize=64)
def _grf_amplitudes(spec: FieldSpec) -> np.ndarray:
    # w_0^2 = beta_0 and w_k^2 = 2 beta_k, which makes the shifted field have
    # covariance exactly sum beta_k cos(pi k t) per axis
    beta = grf_weights(spec.param, spec.n_terms)
    w1 = np.sqrt(beta * np.where(np.arange(spec.n_terms) == 0, 1.0, 2.0))
    w = w1
    for _ in range(spec.dim - 1):
        w = np.multiply.outer(w, w1)
    w = np.asarray(w).ravel()
    w.flags.writeable = False
    return w


def _sample(spec: FieldSpec, rng: np.random.Generator):
    d = spec.dim
    if spec.kind is FieldKind.RSF:
        a = rng.normal(0.0, spec.param, d)
        b = rng.uniform(-np.pi, np.pi)
    elif spec.kind is FieldKind.STABLE:
        a = np.tan(np.pi * (rng.uniform(size=d) - 0.5)) / spec.param
        b = rng.uniform(-np.pi, np.pi)
    elif spec.kind is FieldKind.SINC_DIAGNOSTIC:
        a = rng.uniform(-spec.param, spec.param, d)
        b = rng.uniform(-np.pi, np.pi)
    else:
        w = _grf_amplitudes(spec)
        a = rng.standard_normal(w.size) * w
        b = rng.uniform(-1.0, 1.0, d)
    return a, b


def draw_field(spec: FieldSpec, rng_seed: int) -> FieldDraw:
    """Sample one field; the same seed always gives the same draw."""
    rng = np.random.default_rng(int(rng_seed) & MASK64)
    a, b = _sample(spec, rng)
    return FieldDraw(spec, a, b, int(rng_seed) & MASK64)


def _as_points(x, dim):
    X = np.asarray(x, dtype=float)
    single = X.ndim <= 1
    if single:
        X = X.reshape(1, -1) if X.ndim == 1 else X.reshape(1, 1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise DimError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return X, single


def evaluate(draw: FieldDraw, x):
    """Field value at ``x`` (a d-vector) or at each row of an ``(n, d)`` array.

    Avoids BLAS so that a point's value does not depend on which other points
    are evaluated alongside it.
    """
    spec = draw.spec
    X, single = _as_points(x, spec.dim)
    if spec.kind is FieldKind.GRF_FOURIER:
        n = spec.n_terms
        k = np.arange(n, dtype=float)
        E = None
        for i in range(spec.dim):
            Ci = np.cos(np.pi * np.outer(k, X[:, i] - draw.phase[i]))
            E = Ci if E is None else (E[:, None, :] * Ci[None, :, :]).reshape(-1, X.shape[0])
        # cumsum is strictly sequential, unlike sum's pairwise reduction
        val = np.cumsum(E * draw.frequencies[:, None], axis=0)[-1]
    else:
        z = np.full(X.shape[0], float(draw.phase))
        for i in range(spec.dim):
            z = z + draw.frequencies[i] * X[:, i]
        val = np.sin(z)
        if spec.kind is FieldKind.SINC_DIAGNOSTIC:
            val = math.sqrt(spec.param) * val
    return float(val[0]) if single else val


def sample_values(spec: FieldSpec, X, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """``(n_draws, n_points)`` matrix of values of independent draws at ``X``.

    Fast batch path for Monte Carlo estimators; not bit-compatible with
    ``draw_field``/``evaluate``.
    """
    X, _ = _as_points(X, spec.dim)
    if spec.kind is FieldKind.GRF_FOURIER and spec.dim == 1:
        w = _grf_amplitudes(spec)
        N = rng.standard_normal((n_draws, w.size)) * w
        t = rng.uniform(-1.0, 1.0, (n_draws, 1))
        k = np.arange(w.size, dtype=float)
        kt = np.pi * t * k
        kx = np.pi * np.outer(k, X[:, 0])
        return (N * np.cos(kt)) @ np.cos(kx) + (N * np.sin(kt)) @ np.sin(kx)
    if spec.kind is FieldKind.GRF_FOURIER:
        out = np.empty((n_draws, X.shape[0]))
        for i in range(n_draws):
            a, b = _sample(spec, rng)
            out[i] = evaluate(FieldDraw(spec, a, b, 0), X)
        return out
    d = spec.dim
    if spec.kind is FieldKind.RSF:
        A = rng.normal(0.0, spec.param, (n_draws, d))
    elif spec.kind is FieldKind.STABLE:
        A = np.tan(np.pi * (rng.uniform(size=(n_draws, d)) - 0.5)) / spec.param
    else:
        A = rng.uniform(-spec.param, spec.param, (n_draws, d))
    b = rng.uniform(-np.pi, np.pi, (n_draws, 1))
    val = np.sin(A @ X.T + b)
    if spec.kind is FieldKind.SINC_DIAGNOSTIC:
        val *= math.sqrt(spec.param)
    return val


def covariance(spec: FieldSpec, x, y) -> float:
    """Exact covariance of the field between points ``x`` and ``y``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise DimError(f"expected {spec.dim}-vectors")
    diff = x - y
    if spec.kind is FieldKind.RSF:
        return 0.5 * math.exp(-spec.param**2 * float(diff @ diff) / 2)
    if spec.kind is FieldKind.STABLE:
        return 0.5 * math.exp(-float(np.abs(diff).sum()) / spec.param)
    if spec.kind is FieldKind.SINC_DIAGNOSTIC:
        t = float(diff[0])
        return spec.param / 2 if t == 0 else math.sin(spec.param * t) / (2 * t)
    beta = grf_weights(spec.param, spec.n_terms)
    k = np.arange(spec.n_terms)
    return float(np.prod([beta @ np.cos(np.pi * k * t) for t in diff]))


def empirical_covariance(spec: FieldSpec, x, y, n_draws: int, seed: int = 42):
    """Monte Carlo mean of ``f(x) f(y)`` and its standard error."""
    if n_draws < 100:
        raise ValueError("n_draws must be >= 100")
    rng = np.random.default_rng(seed)
    X = np.vstack([np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))])
    prod = np.empty(n_draws)
    chunk = 50_000
    for s in range(0, n_draws, chunk):
        V = sample_values(spec, X, min(chunk, n_draws - s), rng)
        prod[s:s + V.shape[0]] = V[:, 0] * V[:, 1]
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n_draws))


def lsh_msd_check(sigma: float, x, y, n_draws: int, seed: int = 42) -> float:
    """Monte Carlo estimate of ``E[(a.x - a.y)^2]`` for ``a ~ N(0, sigma^2 I)``.

    The linear projection used by classical LSH (rounding ignored); its mean
    squared difference grows like ``sigma^2 |x - y|^2`` instead of saturating.
    """
    if n_draws < 1000:
        raise ValueError("n_draws must be >= 1000")
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    A = np.random.default_rng(seed).normal(0.0, sigma, (n_draws, x.size))
    return float(np.mean((A @ (x - y)) ** 2))


def lsh_covariance_check(sigma: float, x, y, n_draws: int, seed: int = 42):
    """Monte Carlo ``E[(a.x)(a.y)]`` and stderr; equals ``sigma^2 x.y`` at any distance."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    A = np.random.default_rng(seed).normal(0.0, sigma, (n_draws, x.size))
    prod = (A @ x) * (A @ y)
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n_draws))
