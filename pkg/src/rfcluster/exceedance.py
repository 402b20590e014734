"""Probabilities that a field's maximum over a set exceeds a threshold."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .core import PointSet
from .errors import DegenerateCorrelation, DomainError
from .fields import FieldKind, FieldSpec, draw_field, evaluate, mix64, sample_values

BALL_MAX_POINTS = 200_000
RANDOM_BALL_POINTS = 10_000


class Method(str, enum.Enum):
    CLOSED_FORM = "CLOSED_FORM"
    QUADRATURE = "QUADRATURE"
    MONTE_CARLO = "MONTE_CARLO"


@dataclass(frozen=True)
class ExceedanceEstimate:
    prob: float
    stderr: float = 0.0
    method: Method = Method.CLOSED_FORM

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not (0.0 <= self.prob <= 1.0):
            raise ValueError(f"probability {self.prob} outside [0, 1]")
        if self.stderr < 0 or (self.stderr > 0 and self.method is not Method.MONTE_CARLO):
            raise ValueError("only Monte Carlo estimates carry a standard error")


def _mc(hits: np.ndarray) -> ExceedanceEstimate:
    n = hits.size
    p = float(hits.mean())
    return ExceedanceEstimate(p, math.sqrt(p * (1 - p) / n), Method.MONTE_CARLO)


def _check_rho(rho):
    if rho < 0:
        raise DomainError("equicorrelation must be >= 0 here")
    if rho > 1 + 1e-12:
        raise DegenerateCorrelation(f"correlation {rho} > 1")
    return rho >= 1 - 1e-15


def exceed_equidistant_grf(k2: int, rho: float, T: float) -> ExceedanceEstimate:
    """``Pr(max_i X_i >= T)`` for ``k2`` standard normals with common correlation ``rho``.

    Uses ``X_i = sqrt(rho) Z + sqrt(1 - rho) N_i`` and integrates
    ``phi(z) Phi((T - sqrt(rho) z)/sqrt(1 - rho))**k2`` over ``|z| <= 10``.
    ``rho == 1`` (all coordinates equal) gives ``1 - Phi(T)``.
    """
    if k2 < 1:
        raise ValueError("k2 must be >= 1")
    if _check_rho(rho):
        return ExceedanceEstimate(float(special.ndtr(-T)), 0.0, Method.QUADRATURE)
    if rho == 0.0:
        p = 1.0 - float(special.ndtr(T)) ** k2
        return ExceedanceEstimate(min(1.0, max(0.0, p)), 0.0, Method.QUADRATURE)
    sr, s = math.sqrt(rho), math.sqrt(1.0 - rho)

    def integrand(z):
        return math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * special.ndtr((T - sr * z) / s) ** k2

    # the integrand is concentrated where the Phi factor turns on; tell quad
    center = T / sr
    pts = [c for c in (center - 3 * s / sr, center, center + 3 * s / sr) if -10 < c < 10]
    val, _ = integrate.quad(integrand, -10.0, 10.0, epsabs=1e-11, epsrel=1e-10, limit=200, points=pts or None)
    return ExceedanceEstimate(min(1.0, max(0.0, 1.0 - val)), 0.0, Method.QUADRATURE)


def exceed_equidistant_erf(k2: int, rho: float, T: float, n_panels: int = 80) -> float:
    """Same probability as :func:`exceed_equidistant_grf`, by integrating the
    density of the maximum written with ``erf``.

    The density of ``max_i X_i`` at ``x`` is
    ``k2 * int phi(z) g(x|z) ((1 + erf((x - sqrt(rho) z)/sqrt(2(1-rho))))/2)**(k2-1) dz``
    with ``g`` the conditional normal density. Both integrals use composite
    Gauss-Legendre, so this is independent of the adaptive scheme above.
    """
    if _check_rho(rho):
        return 0.5 * (1 - math.erf(T / math.sqrt(2)))
    sr, s = math.sqrt(rho), math.sqrt(1.0 - rho)
    nodes, w = np.polynomial.legendre.leggauss(20)

    def rule(a, b, n):
        e = np.linspace(a, b, n + 1)
        h = np.diff(e) / 2
        m = (e[:-1] + e[1:]) / 2
        return (m[:, None] + h[:, None] * nodes).ravel(), (h[:, None] * w).ravel()

    z, wz = rule(-10.0, 10.0, n_panels)
    upper = max(T, 0.0) + 12.0
    if T >= upper:
        return 0.0
    x, wx = rule(T, upper, n_panels)
    u = (x[:, None] - sr * z[None, :]) / s
    cond = np.exp(-0.5 * u * u) / (s * math.sqrt(2 * math.pi))
    cdf = 0.5 * (1.0 + special.erf(u / math.sqrt(2)))
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    dens = k2 * (cond * cdf ** (k2 - 1)) @ (phi * wz)
    return float(min(1.0, max(0.0, dens @ wx)))


def exceed_ball_rsf(T: float, eps: float, sigma: float, dim: int) -> ExceedanceEstimate:
    """Closed form ``(pi - 2 asin T + 2 eps sigma sqrt(d)) / (2 pi)`` clamped to [0, 1].

    This replaces the projected ball width ``2 eps |a|`` by ``2 eps sigma sqrt(d)``;
    see :func:`exceed_ball_rsf_exact` for the exact average.
    """
    if eps < 0 or sigma <= 0:
        raise ValueError("need eps >= 0 and sigma > 0")
    if T <= -1:
        return ExceedanceEstimate(1.0)
    arc = math.pi - 2 * math.asin(min(T, 1.0))
    p = (arc + 2 * eps * sigma * math.sqrt(dim)) / (2 * math.pi)
    return ExceedanceEstimate(min(1.0, max(0.0, p)))


def exceed_ball_rsf_exact(T: float, eps: float, sigma: float, dim: int) -> float:
    """``E_a[min(1, (pi - 2 asin T + 2 eps |a|) / (2 pi))]`` with ``|a| ~ sigma * chi_d``.

    Given ``a``, the phase ``a.x + b`` sweeps an interval of length ``2 eps |a|``
    over the ball, and ``sin >= T`` on an arc of length ``pi - 2 asin T``.
    """
    if T <= -1:
        return 1.0
    arc = math.pi - 2 * math.asin(min(T, 1.0))
    if eps == 0:
        return arc / (2 * math.pi)
    # above r_sat the union covers the whole circle
    r_sat = (2 * math.pi - arc) / (2 * eps)
    chi = stats.chi(dim, scale=sigma)
    body, _ = integrate.quad(lambda r: (arc + 2 * eps * r) / (2 * math.pi) * chi.pdf(r), 0, r_sat,
                             epsabs=1e-12, limit=200)
    return float(min(1.0, body + chi.sf(r_sat)))


def _corr_length(spec: FieldSpec) -> float:
    if spec.kind is FieldKind.GRF_FOURIER:
        return 1.0 / math.sqrt(spec.param)
    if spec.kind is FieldKind.STABLE:
        return spec.param
    return 1.0 / spec.param


def ball_points(spec: FieldSpec, eps: float, grid_pts: int, rng=None) -> np.ndarray:
    """Sample points of the closed ``eps``-ball about the origin.

    A regular grid for ``d <= 3`` (spacing at most a tenth of the correlation
    length, capped at 4096 per axis); otherwise uniform random points.
    """
    if grid_pts < 64:
        raise ValueError("grid_pts must be >= 64")
    d = spec.dim
    if d > 3:
        rng = np.random.default_rng(0) if rng is None else rng
        g = rng.standard_normal((RANDOM_BALL_POINTS, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.uniform(size=(RANDOM_BALL_POINTS, 1)) ** (1.0 / d)
        return np.vstack([np.zeros((1, d)), eps * r * g])
    per_axis = max(grid_pts if d == 1 else int(math.ceil(grid_pts ** (1 / d))),
                   int(math.ceil(2 * eps / (_corr_length(spec) / 10))) + 1)
    per_axis = min(per_axis, 4096, int(BALL_MAX_POINTS ** (1 / d)))
    if per_axis % 2 == 0:
        per_axis += 1  # keep the centre on the grid
    axis = np.linspace(-eps, eps, per_axis)
    G = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return G[(G ** 2).sum(axis=1) <= eps * eps * (1 + 1e-12)]


def ball_max_samples(spec: FieldSpec, eps: float, n_draws: int, grid_pts: int = 64, seed: int = 42) -> np.ndarray:
    """Maximum of each of ``n_draws`` independent fields over the ``eps``-ball."""
    rng = np.random.default_rng(seed)
    G = ball_points(spec, eps, grid_pts, rng)
    chunk = max(1, 4_000_000 // G.shape[0])
    out = np.empty(n_draws)
    for s in range(0, n_draws, chunk):
        m = min(chunk, n_draws - s)
        out[s:s + m] = sample_values(spec, G, m, rng).max(axis=1)
    return out


def exceed_ball_mc(spec: FieldSpec, eps: float, T: float, n_draws: int, grid_pts: int = 64,
                   seed: int = 42) -> ExceedanceEstimate:
    return _mc(ball_max_samples(spec, eps, n_draws, grid_pts, seed) >= T)


def exceed_k1_balls(single_ball: ExceedanceEstimate, k1: int) -> ExceedanceEstimate:
    """Union over ``k1`` balls treated as independent: ``1 - (1 - p)**k1``."""
    if k1 < 1:
        raise ValueError("k1 must be >= 1")
    p = single_ball.prob
    q = 1.0 - (1.0 - p) ** k1
    se = k1 * (1.0 - p) ** (k1 - 1) * single_ball.stderr
    return ExceedanceEstimate(min(1.0, max(0.0, q)), se, single_ball.method)


def set_maxima(S: PointSet, spec: FieldSpec, n_draws: int, seed: int) -> np.ndarray:
    """Per-draw maximum of the field over ``S``; draw ``i`` uses seed ``mix64(seed, i)``."""
    if len(S) == 0:
        raise ValueError("point set is empty")
    X = S.points
    out = np.empty(n_draws)
    for i in range(n_draws):
        out[i] = evaluate(draw_field(spec, mix64(seed, i)), X).max()
    return out


def exceed_set_empirical(S: PointSet, spec: FieldSpec, T: float, n_draws: int, seed: int = 42) -> ExceedanceEstimate:
    """Fraction of draws whose maximum over ``S`` reaches ``T``."""
    return _mc(set_maxima(S, spec, n_draws, seed) >= T)
