"""
Logarithmic mean kernel.

theta(s, t) = (s - t) / (log s - log t) interpolates the density on an edge.
Everything downstream (actions, the curvature form, geodesic equations)
goes through the array functions here, so they accept numpy arrays of any
shape and broadcast like ufuncs.

Derivatives are only defined on the open quadrant; near the diagonal they
are evaluated from series in u = log(s / t) because the closed forms
cancel to O(eps / u^2) (first order) and O(eps / u^3) (second order).
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

from entropic_ricci.utils.errors import BoundaryDerivative, NegativeInput, QuadratureFail

# |s - t| <= DIAGONAL_REL * max(s, t): value from the midpoint expansion
DIAGONAL_REL = 1e-8
# |log(s / t)| below these bands: derivatives from their series
FIRST_ORDER_BAND = 1e-3
SECOND_ORDER_BAND = 1e-2

MeanFunction = Callable[[float, float], float]


@dataclass(frozen=True)
class MeanEvaluation:
    value: float
    d1: Optional[float] = None
    d2: Optional[float] = None

    def gradient(self) -> Tuple[float, float]:
        if self.d1 is None or self.d2 is None:
            raise BoundaryDerivative("partial derivatives of theta are undefined on the boundary")
        return self.d1, self.d2


# ================================================================
# ARRAY KERNELS
# ================================================================

def _check_nonnegative(s: np.ndarray, t: np.ndarray) -> None:
    if np.any(s < 0) or np.any(t < 0):
        raise NegativeInput("theta is only defined for nonnegative arguments")


def _check_interior(s: np.ndarray, t: np.ndarray) -> None:
    if np.any(s <= 0) or np.any(t <= 0):
        raise BoundaryDerivative("derivatives of theta requested on the boundary")


def theta(s, t) -> np.ndarray:
    """Logarithmic mean, elementwise; zero whenever one argument is zero."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_nonnegative(s, t)
    s, t = np.broadcast_arrays(s, t)
    out = np.zeros(s.shape)
    pos = (s > 0) & (t > 0)
    if not np.any(pos):
        return out
    sp, tp = s[pos], t[pos]
    big = np.maximum(sp, tp)
    near = np.abs(sp - tp) <= DIAGONAL_REL * big
    val = np.empty(sp.shape)

    # midpoint expansion m * (1 - d^2/3 - 4 d^4/45), d = (s - t)/(s + t)
    m = 0.5 * (sp[near] + tp[near])
    d = (sp[near] - tp[near]) / (sp[near] + tp[near])
    d2 = d * d
    val[near] = m * (1.0 - d2 / 3.0 - 4.0 * d2 * d2 / 45.0)

    far = ~near
    u = np.log(sp[far]) - np.log(tp[far])
    val[far] = tp[far] * np.expm1(u) / u
    out[pos] = val
    return out


def theta_partials(s, t) -> Tuple[np.ndarray, np.ndarray]:
    """(d1 theta, d2 theta) on the open quadrant; both depend on s/t only."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_interior(s, t)
    s, t = np.broadcast_arrays(s, t)
    u = np.log(s) - np.log(t)
    d1 = np.empty(u.shape)
    d2 = np.empty(u.shape)
    small = np.abs(u) < FIRST_ORDER_BAND

    us = u[small]
    d1[small] = 0.5 - us / 6.0 + us**2 / 24.0 - us**3 / 120.0 + us**4 / 720.0
    d2[small] = 0.5 + us / 6.0 + us**2 / 24.0 + us**3 / 120.0 + us**4 / 720.0

    ul = u[~small]
    d1[~small] = (ul + np.expm1(-ul)) / ul**2
    d2[~small] = (np.expm1(ul) - ul) / ul**2
    return d1, d2


def theta_hessian(s, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Second partials (d11, d12, d22) on the open quadrant.

    Homogeneity of degree one gives s*d11 + t*d12 = 0 and s*d12 + t*d22 = 0,
    so only d11 is computed directly.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_interior(s, t)
    s, t = np.broadcast_arrays(s, t)
    u = np.log(s) - np.log(t)
    g = np.empty(u.shape)
    small = np.abs(u) < SECOND_ORDER_BAND

    us = u[small]
    g[small] = -(1.0 / 6.0 - us / 4.0 + 23.0 * us**2 / 120.0 - us**3 / 10.0 + 67.0 * us**4 / 1680.0)

    ul = u[~small]
    em = np.expm1(ul)
    g[~small] = (em * (2.0 - ul) - 2.0 * ul) / (np.exp(2.0 * ul) * ul**3)

    d11 = g / t
    d12 = -s * d11 / t
    d22 = s * s * d11 / (t * t)
    return d11, d12, d22


def alpha(x, s, t) -> np.ndarray:
    """Convex cost x^2 / theta(s, t), extended by 0 (x = 0) and +inf (x != 0) where theta vanishes."""
    x = np.asarray(x, dtype=float)
    th = theta(s, t)
    x, th = np.broadcast_arrays(x, th)
    out = np.zeros(x.shape)
    pos = th > 0
    out[pos] = x[pos] ** 2 / th[pos]
    out[(~pos) & (x != 0)] = np.inf
    return out


def alpha_derivatives(x, s, t):
    """Gradient and Hessian of x^2/theta(s, t) on the open quadrant.

    Returns ((ax, as, at), (axx, axs, axt, ass, ast, att)).
    """
    x = np.asarray(x, dtype=float)
    th = theta(s, t)
    t1, t2 = theta_partials(s, t)
    h11, h12, h22 = theta_hessian(s, t)
    inv = 1.0 / th
    x2 = x * x
    q = x2 * inv * inv

    grad = (2.0 * x * inv, -q * t1, -q * t2)
    cross = -2.0 * x * inv * inv
    hess = (
        2.0 * inv + 0.0 * x,
        cross * t1,
        cross * t2,
        -q * h11 + 2.0 * q * inv * t1 * t1,
        -q * h12 + 2.0 * q * inv * t1 * t2,
        -q * h22 + 2.0 * q * inv * t2 * t2,
    )
    return grad, hess


# ================================================================
# SCALAR API
# ================================================================

def log_mean(s: float, t: float) -> MeanEvaluation:
    """theta(s, t) with its partials; partials are None when s or t is zero."""
    if s < 0 or t < 0:
        raise NegativeInput(f"log_mean({s}, {t}): arguments must be nonnegative")
    value = float(theta(s, t))
    if s == 0 or t == 0:
        return MeanEvaluation(value=value)
    d1, d2 = theta_partials(s, t)
    return MeanEvaluation(value=value, d1=float(d1), d2=float(d2))


def alpha_cost(x: float, s: float, t: float) -> float:
    if s < 0 or t < 0:
        raise NegativeInput(f"alpha_cost: s={s}, t={t} must be nonnegative")
    return float(alpha(x, s, t))


def log_mean_value(s: float, t: float) -> float:
    return float(theta(s, t))


def arithmetic_mean_value(s: float, t: float) -> float:
    return 0.5 * (s + t)


def theta_constant_c(mean: MeanFunction = log_mean_value, abs_tol: float = 1e-8) -> float:
    """c = integral over [-1, 1] of dr / sqrt(2 theta(1 - r, 1 + r)).

    The integrand blows up logarithmically at r = +-1 for the log mean;
    QUADPACK's extrapolating routine handles integrable endpoint
    singularities, and the integral is folded onto [0, 1] by symmetry.
    """
    def integrand(r: float) -> float:
        return 1.0 / math.sqrt(2.0 * mean(1.0 - r, 1.0 + r))

    value, err = integrate.quad(integrand, 0.0, 1.0, limit=400, epsabs=abs_tol / 10, epsrel=1e-12)
    if not np.isfinite(value) or 2.0 * err > abs_tol:
        raise QuadratureFail(f"quadrature error {2.0 * err:.3e} above {abs_tol:.1e}")
    return 2.0 * value
