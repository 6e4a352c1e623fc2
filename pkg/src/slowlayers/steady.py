"""One-parameter family of approximate steady states with an internal layer.

Each profile matches two exact tanh steady branches of the viscous
conservation law at a prescribed layer position xi:

    U(x; xi) = kappa_- tanh(kappa_-(xi - x)/(2 eps))   on (-ell, xi)
               kappa_+ tanh(kappa_+(xi - x)/(2 eps))   on [xi, ell)

with kappa_+- solving the boundary conditions U(-ell) = u*, U(ell) = -u*.
The profile is an exact steady state only at xi = 0; elsewhere its residual
is a point mass at xi whose weight (the derivative jump) is exponentially
small in 1/eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .grid import Grid1D, GridFunction
from .models import BurgersModel, JinXinModel

MARGIN_FACTOR = 4.0  # layer must stay at least 4*eps away from each boundary


class LayerAtBoundaryError(ValueError):
    """Requested layer position too close to the domain boundary."""


class RootFailureError(RuntimeError):
    """kappa root solve failed to bracket."""


def _margin_check(xi: float, m) -> None:
    margin = MARGIN_FACTOR * m.epsilon
    if not (-m.ell + margin < xi < m.ell - margin):
        raise LayerAtBoundaryError(
            f"xi = {xi} violates the {margin}-margin inside (-{m.ell}, {m.ell})"
        )


def _solve_one_kappa(dist: float, eps: float, u_star: float) -> float:
    """Solve kappa * tanh(kappa * dist / (2 eps)) = u_star for kappa >= u_star."""
    if u_star == 0.0:
        return 0.0

    def g(k):
        return k * math.tanh(k * dist / (2 * eps)) - u_star

    lo = u_star * (1 - 1e-14)
    hi = 2 * u_star + 1.0
    if g(lo) > 0 or g(hi) < 0:
        raise RootFailureError(f"no bracket for kappa with dist={dist}, eps={eps}")
    return float(brentq(g, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps))


def solve_kappas(xi: float, m) -> Tuple[float, float]:
    """Branch amplitudes (kappa_minus, kappa_plus) for the layer at xi."""
    _margin_check(xi, m)
    km = _solve_one_kappa(xi + m.ell, m.epsilon, m.u_star)
    kp = _solve_one_kappa(m.ell - xi, m.epsilon, m.u_star)
    return km, kp


def _dkappa_ddist(kappa: float, dist: float, eps: float) -> float:
    """Implicit differentiation of g(kappa, d) = kappa tanh(kappa d/2eps) - u*."""
    if kappa == 0.0:
        return 0.0
    w = kappa * dist / (2 * eps)
    t = math.tanh(w)
    s2 = 1.0 / math.cosh(w) ** 2 if abs(w) < 350 else 0.0
    dg_dk = t + kappa * s2 * dist / (2 * eps)
    dg_dd = kappa**2 * s2 / (2 * eps)
    return -dg_dd / dg_dk


def _branch(x: np.ndarray, xi: float, kappa: float, eps: float) -> np.ndarray:
    return kappa * np.tanh(kappa * (xi - x) / (2 * eps))


@dataclass(frozen=True)
class MatchedLayerProfile:
    xi: float
    kappa_minus: float
    kappa_plus: float
    model: object
    U: GridFunction
    V: Optional[GridFunction] = None

    @property
    def jump(self) -> float:
        return (self.kappa_minus**2 - self.kappa_plus**2) / (2 * self.model.epsilon)


def eval_profile(xi: float, m, grid: Grid1D) -> MatchedLayerProfile:
    """Sample the matched profile on the grid (nodes at x >= xi use the
    right branch; the tie at x == xi is broken to the right, where both
    branches vanish anyway)."""
    km, kp = solve_kappas(xi, m)
    x = grid.nodes
    left = x < xi
    u = np.where(left,
                 _branch(x, xi, km, m.epsilon),
                 _branch(x, xi, kp, m.epsilon))
    U = GridFunction(grid, u)
    V = None
    if isinstance(m, JinXinModel):
        V = GridFunction(grid, np.where(left, 0.5 * km**2, 0.5 * kp**2))
    return MatchedLayerProfile(xi, km, kp, m, U, V)


def derivative_jump(xi: float, m) -> float:
    """Jump of U_x across the layer, (kappa_-^2 - kappa_+^2) / (2 eps)."""
    km, kp = solve_kappas(xi, m)
    return (km**2 - kp**2) / (2 * m.epsilon)


def _log_abs_sinh(y: float) -> float:
    ay = abs(y)
    if ay == 0.0:
        return -math.inf
    if ay > 30:
        return ay - math.log(2.0) + math.log1p(-math.exp(-2 * ay))
    return math.log(abs(math.sinh(y)))


def omega_log(xi: float, m) -> Tuple[float, float]:
    """Log-magnitude and sign of the residual-size bound Omega(xi).

    Omega(xi) = (4 u*^2 / eps) |sinh(u* xi / eps)| exp(-u* ell / eps),
    evaluated in the log domain so that epsilon sweeps below the double
    underflow threshold stay meaningful.
    """
    if m.u_star == 0.0 or xi == 0.0:
        return -math.inf, 0.0
    y = m.u_star * xi / m.epsilon
    logmag = (math.log(4 * m.u_star**2 / m.epsilon)
              + _log_abs_sinh(y)
              - m.u_star * m.ell / m.epsilon)
    return logmag, math.copysign(1.0, y)


def omega_asymptotic(xi: float, m) -> float:
    """Closed-form Omega(xi); exactly zero at xi = 0."""
    logmag, sign = omega_log(xi, m)
    if sign == 0.0:
        return 0.0
    return math.exp(logmag) if logmag > -745 else 0.0


def omega_pair(xi: float, m: JinXinModel) -> Tuple[float, float]:
    """Jin-Xin residual bound: zero first component, Omega in the second."""
    return 0.0, omega_asymptotic(xi, m)


def dprofile_dxi_analytic(xi: float, m, grid: Grid1D) -> GridFunction:
    """d U / d xi by implicit differentiation of the branch construction."""
    km, kp = solve_kappas(xi, m)
    # dist = xi + ell on the left (d dist/d xi = +1), ell - xi on the right (-1)
    dkm = _dkappa_ddist(km, xi + m.ell, m.epsilon) * (+1.0)
    dkp = _dkappa_ddist(kp, m.ell - xi, m.epsilon) * (-1.0)
    x = grid.nodes
    out = np.empty_like(x)
    for mask, kappa, dk in ((x < xi, km, dkm), (x >= xi, kp, dkp)):
        xs = x[mask]
        z = kappa * (xi - xs) / (2 * m.epsilon)
        t = np.tanh(z)
        s2 = 1.0 - t * t
        dz = (dk * (xi - xs) + kappa) / (2 * m.epsilon)
        out[mask] = dk * t + kappa * s2 * dz
    return GridFunction(grid, out)


def dprofile_dxi(xi: float, m, grid: Grid1D, delta: Optional[float] = None) -> GridFunction:
    """d U / d xi by centered differencing in xi, shrinking one-sidedly if
    xi +- delta would leave the admissible margin."""
    if delta is None:
        delta = max(1e-6, 1e-3 * grid.h)
    margin = MARGIN_FACTOR * m.epsilon
    lo, hi = -m.ell + margin, m.ell - margin
    dl = min(delta, (xi - lo) * 0.5)
    dr = min(delta, (hi - xi) * 0.5)
    d = min(dl, dr)
    if d <= 0:
        raise LayerAtBoundaryError(f"no room to difference around xi = {xi}")
    up = eval_profile(xi + d, m, grid).U
    dn = eval_profile(xi - d, m, grid).U
    return GridFunction(grid, (up.values - dn.values) / (2 * d))
