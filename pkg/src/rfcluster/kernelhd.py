"""Radial kernels in d dimensions over the Dini basis.

With ``nu = d/2 - 1`` and ``j_n`` the positive zeros of ``J_{nu+1}``, the
basis functions are ``f_{d,n}(t) = A_nu(j_n t)`` where
``A_nu(z) = Gamma(nu+1) (z/2)^(-nu) J_nu(z)`` (so ``A_nu(0) = 1``). A radial
kernel ``k(t) = sum_n a_n f_{d,n}(t)`` with ``a_n >= 0`` (and ``f_{d,0} = 1``)
is positive definite on the ball of radius 1/2 in R^d. For d = 1 the basis
reduces to ``cos(n pi t)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .errors import Infeasible
from .kernel1d import radial_kernel_lp

SMALL_Z = 1e-4


def bessel_J(nu: float, z):
    """Bessel function of the first kind ``J_nu(z)`` for ``nu >= -1/2``, ``z >= 0``."""
    return special.jv(nu, z)


@lru_cache(maxsize=128)
def _zeros(order: float, count: int) -> tuple:
    # consecutive zeros of J_order (order >= 1/2) are at least pi apart, so a
    # scan with step pi/4 brackets each one exactly once
    out = []
    step = math.pi / 4
    a = max(order, 0.25)
    fa = special.jv(order, a)
    while len(out) < count:
        b = a + step
        fb = special.jv(order, b)
        if fa == 0.0:
            out.append(a)
        elif fa * fb < 0:
            out.append(optimize.brentq(lambda z: special.jv(order, z), a, b, xtol=1e-15, rtol=1e-15, maxiter=200))
        a, fa = b, fb
    return tuple(out[:count])


def bessel_zeros(nu: float, count: int) -> np.ndarray:
    """First ``count`` positive zeros of ``J_{nu+1}``, increasing."""
    if count < 0 or count > 200:
        raise ValueError("count must lie in [0, 200]")
    if nu + 1 < 0.5:
        raise ValueError("need nu >= -1/2")
    return np.array(_zeros(float(nu) + 1.0, int(count)))


def A_nu(nu: float, z):
    """Normalized Bessel function ``Gamma(nu+1) (z/2)^(-nu) J_nu(z)``; equals 1 at 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < SMALL_Z
    zs = z[small]
    out[small] = 1 - zs**2 / (4 * (nu + 1)) + zs**4 / (32 * (nu + 1) * (nu + 2))
    zb = z[~small]
    out[~small] = special.gamma(nu + 1) * (zb / 2) ** (-nu) * special.jv(nu, zb)
    return out if out.ndim else float(out)


def _nu(d: int) -> float:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return d / 2 - 1


def f_dn(d: int, n: int, t):
    """Dini basis function ``f_{d,n}(t) = A_nu(j_{nu+1,n} t)``; ``n = 0`` is the constant."""
    if n < 0:
        raise ValueError("n must be >= 0")
    t = np.asarray(t, dtype=float)
    if n == 0:
        return np.ones_like(t) if t.ndim else 1.0
    j = bessel_zeros(_nu(d), n)[-1]
    return A_nu(_nu(d), j * t)


def f_dn_deriv(d: int, n: int, t):
    """``f'_{d,n}(t) = -j^2 t A_{nu+1}(j t) / d``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    t = np.asarray(t, dtype=float)
    if n == 0:
        return np.zeros_like(t) if t.ndim else 0.0
    nu = _nu(d)
    j = bessel_zeros(nu, n)[-1]
    return -j * j * t * A_nu(nu + 1, j * t) / d


def dini_basis(d: int, N: int, t) -> np.ndarray:
    """``(len(t), N+1)`` matrix of ``f_{d,0..N}``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if N == 0:
        return np.ones((t.size, 1))
    nu = _nu(d)
    j = bessel_zeros(nu, N)
    return np.hstack([np.ones((t.size, 1)), A_nu(nu, np.outer(t, j))])


def dini_basis_deriv(d: int, N: int, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if N == 0:
        return np.zeros((t.size, 1))
    nu = _nu(d)
    j = bessel_zeros(nu, N)
    return np.hstack([np.zeros((t.size, 1)), -(j * j) * t[:, None] * A_nu(nu + 1, np.outer(t, j)) / d])


def dini_coefficients(d: int, func, N: int, n_panels: int = 200) -> np.ndarray:
    """Dini coefficients ``a_0..a_N`` of a radial function on [0, 1].

    Uses orthogonality of ``f_{d,n}`` with weight ``t^(2 nu + 1)``:
    ``a_0 = 2 (nu+1) int k t^(2nu+1)`` and
    ``a_n = 2 / A_nu(j_n)^2 int k(t) f_{d,n}(t) t^(2nu+1) dt``.
    """
    nu = _nu(d)
    nodes, w = np.polynomial.legendre.leggauss(20)
    e = np.linspace(0.0, 1.0, n_panels + 1)
    h = np.diff(e) / 2
    m = (e[:-1] + e[1:]) / 2
    t = (m[:, None] + h[:, None] * nodes).ravel()
    wt = (h[:, None] * w).ravel() * t ** (2 * nu + 1) * np.asarray(func(t), dtype=float)
    B = dini_basis(d, N, t)
    a = B.T @ wt
    a[0] *= 2 * (nu + 1)
    if N:
        a[1:] *= 2 / A_nu(nu, bessel_zeros(nu, N)) ** 2
    return a


def g_dn(d: int, n: int, t):
    """``(1 - f_{d,n}(t)) / (1 - f_{d,1}(t))``, finite on (0, 1]."""
    return (1 - f_dn(d, n, t)) / (1 - f_dn(d, 1, t))


def k_tilde(d: int, c: float, eps: float, t):
    """Two-term Dini kernel ``1 - (1-c)(1 - f_{d,1}(t)) / (1 - f_{d,1}(eps))``."""
    if not (0 < eps < 1):
        raise ValueError("need 0 < eps < 1")
    return 1 - (1 - c) * (1 - f_dn(d, 1, t)) / (1 - f_dn(d, 1, eps))


def k_tilde_coeffs(d: int, c: float, eps: float) -> np.ndarray:
    s = (1 - c) / (1 - f_dn(d, 1, eps))
    return np.array([1 - s, s])


def membership_threshold(d: int, eps: float) -> float:
    """Smallest ``c`` for which ``k_tilde`` stays admissible: ``(f(eps) - f(1)) / (1 - f(1))``."""
    f1e, f11 = f_dn(d, 1, eps), f_dn(d, 1, 1.0)
    return (f1e - f11) / (1 - f11)


def k_tilde_admissible(d: int, c: float, eps: float) -> bool:
    return c >= membership_threshold(d, eps)


def E_d(d: int, c: float) -> float:
    """Inverse in ``eps`` of :func:`membership_threshold` (decreasing from 1 to 0)."""
    if not (0 < c < 1):
        raise ValueError("need 0 < c < 1")
    return float(optimize.brentq(lambda e: membership_threshold(d, e) - c, 1e-12, 1.0, xtol=1e-13))


def ed_table(c: float = 0.9, dmax: int = 10):
    return [(d, E_d(d, c)) for d in range(1, dmax + 1)]


def kappa_infinity(c: float, eps: float, delta: float) -> float:
    """Dimension-free optimum ``c ** ((delta/eps)^2)``, attained by the Gaussian kernel."""
    if not (0 < eps <= delta):
        raise ValueError("need 0 < eps <= delta")
    if not (0 < c < 1):
        raise ValueError("need 0 < c < 1")
    return c ** ((delta / eps) ** 2)


@dataclass(frozen=True, eq=False)
class KernelHD:
    dim: int
    coeffs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.coeffs, dtype=float)
        if np.any(a < -1e-12):
            raise ValueError("Dini coefficients must be nonnegative")
        if abs(a.sum() - 1.0) > 1e-9:
            raise ValueError("coefficients must sum to 1")
        a.flags.writeable = False
        object.__setattr__(self, "coeffs", a)
        if self(1.0) < -1e-9:
            raise ValueError("k(1) must be nonnegative")

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        val = dini_basis(self.dim, self.coeffs.size - 1, arr.ravel()) @ self.coeffs
        return float(val[0]) if arr.ndim == 0 else val.reshape(arr.shape)

    def gram(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=-1))
        return self(D)

    def to_json(self) -> str:
        return json.dumps({"basis": "dini", "dim": self.dim, "coeffs": self.coeffs.tolist(), "meta": self.meta})

    @classmethod
    def from_json(cls, text: str) -> "KernelHD":
        d = json.loads(text)
        return cls(int(d["dim"]), np.array(d["coeffs"]), d.get("meta", {}))


def solve_optimal_kernel_hd(d: int, c: float, eps: float, delta: float, N: int = 20, M: int | None = None):
    """Dini-series kernel minimizing ``k(delta)``. Returns ``(KernelHD, k_delta)``.

    ``M`` (monotonicity grid) defaults to ``N^2 + 1``.
    """
    if M is None:
        M = N * N + 1
    if M <= N * N:
        raise ValueError("need M > N^2")
    if N > 150 or N < 1:
        raise ValueError("need 1 <= N <= 150")
    if not (0 < eps < delta < 1) or not (0 < c <= 1):
        raise ValueError("need 0 < eps < delta < 1 and 0 < c <= 1")
    try:
        a, kd, rows = radial_kernel_lp(
            lambda t: dini_basis(d, N, t), lambda t: dini_basis_deriv(d, N, t), N + 1, eps, c, delta, M)
    except Infeasible as exc:
        diag = dict(exc.diagnostic or {})
        if c < 1:
            diag["E_d"] = E_d(d, c)
        raise Infeasible(f"{exc} (E_d(c) = {diag.get('E_d')})", diagnostic=diag) from None
    k = KernelHD(d, a, {"c": c, "eps": eps, "delta": delta, "N": N, "M": M, "rows": rows})
    return k, k(delta)
