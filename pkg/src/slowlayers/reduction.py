"""Reduced layer dynamics: projection constraint, drift theta, and rates.

A ReductionContext caches biorthonormal eigensystems on a Chebyshev sample
of the working interval J of layer positions and interpolates them in xi
(each dense eigensolve is expensive; the constraint solve and the reduced
ODE need many xi evaluations).

Normalization: within a context the slow adjoint eigenfunction psi_1 is
rescaled so that <psi_1, dU/dxi> = 1 (phi_1 is scaled inversely, keeping
<psi_1, phi_1> = 1).  With this gauge the reduced drift

    theta(xi) = psi_1(xi; xi) * eps * [[U_x]]_{x=xi}

is directly the layer velocity dxi/dt, so the reduced ODE is
quantitatively comparable to the full PDE trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import BarycentricInterpolator, CubicSpline
from scipy.optimize import brentq

from .grid import Grid1D, GridFunction, derivative, inner_product, make_grid, norm
from .models import BurgersModel, JinXinModel, burgers_rhs
from .steady import (derivative_jump, dprofile_dxi_analytic, eval_profile,
                     omega_asymptotic)
from .spectral import (LinearizedOperator, assemble_linearized, eigenpairs,
                       jinxin_eigen_map)


class ProjectionFailureError(RuntimeError):
    """Constraint function has no sign change near the guess."""


def _cheb_nodes(lo: float, hi: float, n: int) -> np.ndarray:
    k = np.arange(n)
    x = np.cos(np.pi * (2 * k + 1) / (2 * n))  # Chebyshev points, (-1, 1)
    return np.sort(0.5 * (lo + hi) + 0.5 * (hi - lo) * x)


@dataclass
class _CacheNode:
    xi: float
    lam: np.ndarray          # real parts, descending
    phi: np.ndarray          # (m_modes, n_nodes)
    psi: np.ndarray          # (m_modes, n_nodes)
    dxiU: np.ndarray         # (n_nodes,)
    jump: float
    psi1_at_layer: float     # psi_1 evaluated at x = xi (cubic in x)


class ReductionContext:
    """Immutable spectral cache over J = [-xi_max, xi_max]."""

    def __init__(self, m, grid: Grid1D, xi_max: Optional[float] = None,
                 n_cache: int = 17, m_modes: int = 12):
        self.model = m
        self.grid = grid
        self.is_jinxin = isinstance(m, JinXinModel)
        self.scalar = (BurgersModel(m.epsilon, m.ell, m.u_star)
                       if self.is_jinxin else m)
        self.xi_max = 0.6 * m.ell if xi_max is None else xi_max
        self.m_modes = m_modes
        self.nodes: List[_CacheNode] = []

        xis = _cheb_nodes(-self.xi_max, self.xi_max, n_cache)
        prev = None
        for xi in xis:
            op = assemble_linearized(xi, self.scalar, grid)
            pairs = eigenpairs(op, m_modes)
            phi = np.array([p.values for p in pairs.phi])
            psi = np.array([p.values for p in pairs.psi])
            dxiU = dprofile_dxi_analytic(xi, self.scalar, grid).values
            # gauge: <psi_1, dU/dxi> = 1
            s = float(np.dot(grid.weights, psi[0] * dxiU))
            psi[0] /= s
            phi[0] *= s
            # orient fast modes consistently with the previous cache node
            if prev is not None:
                for k in range(1, m_modes):
                    ov = float(np.dot(grid.weights, prev.phi[k] * phi[k]))
                    if ov < 0:
                        phi[k] *= -1.0
                        psi[k] *= -1.0
            spline = CubicSpline(grid.nodes, psi[0])
            node = _CacheNode(xi, pairs.lam.real.copy(), phi, psi, dxiU,
                              derivative_jump(xi, self.scalar), float(spline(xi)))
            self.nodes.append(node)
            prev = node

        self._xis = np.array([n.xi for n in self.nodes])
        self._psi1_interp = BarycentricInterpolator(
            self._xis, np.array([n.psi[0] for n in self.nodes]))
        self._p_interp = BarycentricInterpolator(
            self._xis, np.array([n.psi1_at_layer for n in self.nodes]))
        self._lam_interp = BarycentricInterpolator(
            self._xis, np.array([n.lam for n in self.nodes]))
        self._phi_interp = BarycentricInterpolator(
            self._xis, np.array([n.phi for n in self.nodes]))
        self._psi_interp = BarycentricInterpolator(
            self._xis, np.array([n.psi for n in self.nodes]))
        self._dxiU_interp = BarycentricInterpolator(
            self._xis, np.array([n.dxiU for n in self.nodes]))
        self.cache_spacing = float(np.min(np.diff(self._xis)))

    # -- interpolated accessors ------------------------------------------

    def _clamp(self, xi: float) -> float:
        return float(np.clip(xi, self._xis[0], self._xis[-1]))

    def psi1_at(self, xi: float) -> GridFunction:
        return GridFunction(self.grid, np.asarray(self._psi1_interp(self._clamp(xi))))

    def dpsi1_at(self, xi: float) -> GridFunction:
        d = self.cache_spacing / 4.0
        lo, hi = self._xis[0], self._xis[-1]
        a = min(max(xi - d, lo), hi - 2 * d)
        vals = (np.asarray(self._psi1_interp(a + 2 * d))
                - np.asarray(self._psi1_interp(a))) / (2 * d)
        return GridFunction(self.grid, vals)

    def lam_at(self, xi: float) -> np.ndarray:
        lam = np.asarray(self._lam_interp(self._clamp(xi)), dtype=float)
        if self.is_jinxin:
            out = []
            for l in lam:
                mapped = jinxin_eigen_map(float(l), self.model.epsilon)
                out.append(mapped if isinstance(mapped, float)
                           else mapped[0].real)
            lam = np.asarray(out)
        return lam

    def phik_at(self, xi: float, k: int) -> GridFunction:
        vals = np.asarray(self._phi_interp(self._clamp(xi)))[k - 1]
        return GridFunction(self.grid, vals)

    def psik_at(self, xi: float, k: int) -> GridFunction:
        vals = np.asarray(self._psi_interp(self._clamp(xi)))[k - 1]
        return GridFunction(self.grid, vals)

    def dxiU_at(self, xi: float) -> GridFunction:
        return GridFunction(self.grid, dprofile_dxi_analytic(
            xi, self.scalar, self.grid).values)

    def lambda1_sup(self) -> float:
        return max(float(self.lam_at(n.xi)[0]) for n in self.nodes)

    def omega_sup(self) -> float:
        return max(omega_asymptotic(x, self.scalar)
                   for x in np.linspace(-self.xi_max, self.xi_max, 101))


# -- reduced drift and rates -----------------------------------------------


def theta(xi: float, ctx: ReductionContext) -> float:
    """Reduced layer drift: interpolated psi_1 at the layer times the
    residual point mass of the profile.

    The mass is eps * [[U_x]] = (kappa_-^2 - kappa_+^2) / 2: the classical
    parts of eps U_xx and U U_x cancel branchwise and only eps times the
    derivative jump survives.  (Verified against the discrete L1 residual
    mass and the measured full-PDE drift.)"""
    p = float(ctx._p_interp(ctx._clamp(xi)))
    th = p * ctx.scalar.epsilon * derivative_jump(xi, ctx.scalar)
    if ctx.is_jinxin:
        mapped = jinxin_eigen_map(th, ctx.model.epsilon)
        th = mapped if isinstance(mapped, float) else mapped[0].real
    return th


def beta_rate(xi_bar: float, ctx: ReductionContext, delta: float = 1e-4) -> float:
    """Exponential convergence rate beta = -theta'(xi_bar); positive at a
    stable equilibrium."""
    b = -(theta(xi_bar + delta, ctx) - theta(xi_bar - delta, ctx)) / (2 * delta)
    return b


def mu_rate(ctx: ReductionContext, C_fit: float) -> Tuple[float, bool]:
    """Decay margin mu = |sup_xi lambda_1| - C_fit * sup_J Omega."""
    mu = abs(ctx.lambda1_sup()) - C_fit * ctx.omega_sup()
    return mu, mu > 0


@dataclass
class RateBundle:
    epsilon: float
    beta: float
    mu: float
    omega_sup: float
    lambda1_sup: float

    CSV_HEADER = "epsilon,beta,mu,omega_sup,lambda1_sup"

    def to_csv_row(self) -> str:
        return (f"{self.epsilon!r},{self.beta!r},{self.mu!r},"
                f"{self.omega_sup!r},{self.lambda1_sup!r}")


def rate_bundle(ctx: ReductionContext, C_fit: float = 4.5) -> RateBundle:
    mu, _ = mu_rate(ctx, C_fit)
    return RateBundle(ctx.model.epsilon, beta_rate(0.0, ctx), mu,
                      ctx.omega_sup(), ctx.lambda1_sup())


# -- reduced ODE -------------------------------------------------------------


def reduced_ode(xi0: float, T: float, ctx: ReductionContext,
                t_eval: Optional[Sequence[float]] = None,
                rel_tol: float = 1e-8) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate dxi/dt = theta(xi) adaptively; steps grow without bound as
    the drift vanishes near equilibrium."""
    sol = solve_ivp(lambda t, y: [theta(float(y[0]), ctx)], (0.0, T), [xi0],
                    method="RK45", rtol=rel_tol, atol=1e-14,
                    t_eval=None if t_eval is None else np.asarray(t_eval, float),
                    dense_output=t_eval is None)
    if not sol.success:
        raise RuntimeError(f"reduced ODE integration aborted: {sol.message}")
    return sol.t, sol.y[0]


def time_to_reach(xi0: float, xi_target: float, ctx: ReductionContext) -> float:
    """Travel time along the reduced flow by quadrature of dxi / theta(xi)."""
    val, _ = quad(lambda x: 1.0 / theta(x, ctx), xi0, xi_target, limit=200)
    return float(val)


def time_to_reach_asymptotic(xi0: float, xi_target: float, m) -> float:
    """Closed-form travel time from the exponential drift law
    theta(xi) = -2 u* sinh(u* xi / eps) exp(-u* ell / eps), whose separable
    integral is (eps / 2 u*^2) e^{u* ell/eps} log of a tanh ratio.
    Log-domain, so it stays finite for eps far below double underflow of
    the drift.  (The drift prefactor matches the resolved quadrature of
    1/theta to three digits at eps = 0.1.)"""
    u, ell, eps = m.u_star, m.ell, m.epsilon
    a0, a1 = abs(xi0), abs(xi_target)
    if a1 >= a0 or a1 == 0.0:
        raise ValueError("target must be strictly between xi0 and 0")
    ratio = math.log(math.tanh(u * a0 / (2 * eps)) / math.tanh(u * a1 / (2 * eps)))
    logt = u * ell / eps + math.log(eps / (2 * u**2)) + math.log(ratio)
    return math.exp(logt) if logt < 700 else math.inf


def log_time_to_reach_asymptotic(xi0: float, xi_target: float, m) -> float:
    """log of time_to_reach_asymptotic (always finite)."""
    u, ell, eps = m.u_star, m.ell, m.epsilon
    a0, a1 = abs(xi0), abs(xi_target)
    ratio = math.log(math.tanh(u * a0 / (2 * eps)) / math.tanh(u * a1 / (2 * eps)))
    return u * ell / eps + math.log(eps / (2 * u**2)) + math.log(ratio)


def log_travel_time(m, xi0: float, xi_target: float,
                    grid: Optional[Grid1D] = None,
                    eps_threshold: float = 0.06) -> float:
    """log travel time of the layer from xi0 to xi_target.

    Uses the spectral quadrature of 1/theta when the drift is large enough
    for the eigensolver to resolve (eps >= eps_threshold; the two methods
    agree to three digits there), and the closed-form drift law below that,
    where the drift underflows any floating-point eigensolve.
    """
    if m.epsilon >= eps_threshold:
        if grid is None:
            n = max(299, int(math.ceil(2 * m.ell / (m.epsilon / 10))) | 1)
            grid = make_grid(-m.ell, m.ell, n)
        ctx = ReductionContext(m, grid, xi_max=min(0.45 * m.ell,
                                                   abs(xi0) * 1.2))
        return math.log(abs(time_to_reach(xi0, xi_target, ctx)))
    return log_time_to_reach_asymptotic(xi0, xi_target, m)


# -- projection constraint ----------------------------------------------------


def constraint_value(u: GridFunction, xi: float, ctx: ReductionContext) -> float:
    """g(xi) = <psi_1(.; xi), u - U(.; xi)>."""
    prof = eval_profile(xi, ctx.scalar, ctx.grid)
    diff = GridFunction(ctx.grid, u.values - prof.U.values)
    return inner_product(ctx.psi1_at(xi), diff)


def project_xi(u: GridFunction, xi_guess: float, ctx: ReductionContext,
               window: float = 0.2) -> float:
    """Layer position xi* at which the slow component of u - U(.; xi*)
    vanishes.  Safeguarded root solve in [xi_guess +- window]."""
    unorm = norm(u, "L2")
    if unorm == 0.0:
        raise ProjectionFailureError("zero input field has no layer")
    lo = max(xi_guess - window, ctx._xis[0])
    hi = min(xi_guess + window, ctx._xis[-1])
    g = lambda x: constraint_value(u, x, ctx)
    # scan for a sign change, densifying around the guess
    xs = np.unique(np.concatenate([
        np.linspace(lo, hi, 17),
        np.linspace(max(lo, xi_guess - 0.02), min(hi, xi_guess + 0.02), 9),
    ]))
    gs = [g(x) for x in xs]
    bracket = None
    best = np.inf
    for i in range(len(xs) - 1):
        if gs[i] == 0.0:
            return float(xs[i])
        if gs[i] * gs[i + 1] < 0:
            width = abs(xs[i] - xi_guess) + abs(xs[i + 1] - xi_guess)
            if width < best:
                best = width
                bracket = (xs[i], xs[i + 1])
    if bracket is None:
        raise ProjectionFailureError(
            f"no sign change of the constraint in [{lo}, {hi}]")
    xi_star = float(brentq(g, *bracket, xtol=1e-14))
    if abs(g(xi_star)) > 1e-10 * unorm:
        raise ProjectionFailureError("constraint residual above tolerance")
    return xi_star


def spectral_coeffs(v: GridFunction, xi: float, m_count: int,
                    ctx: ReductionContext) -> np.ndarray:
    """Adjoint expansion coefficients v_k = <psi_k(.; xi), v>."""
    return np.array([inner_product(ctx.psik_at(xi, k), v)
                     for k in range(1, m_count + 1)])


# -- coupled-system building blocks -------------------------------------------


@dataclass
class RankOneOperator:
    """v -> -dU/dxi * theta * <dpsi_1/dxi, v>."""

    dxiU: GridFunction
    theta: float
    dpsi1: GridFunction

    def apply(self, v: GridFunction) -> GridFunction:
        c = inner_product(self.dpsi1, v)
        return GridFunction(v.grid, -self.dxiU.values * self.theta * c)

    def norm_bound(self) -> float:
        return abs(self.theta) * norm(self.dxiU, "L2") * norm(self.dpsi1, "L2")


def assemble_H_M(xi: float, ctx: ReductionContext
                 ) -> Tuple[GridFunction, RankOneOperator]:
    """Forcing H = F[U] - dU/dxi * theta and the rank-one correction M.

    The point-mass part of F[U] is represented by the discrete residual of
    the sampled profile under the model right-hand side."""
    prof = eval_profile(xi, ctx.scalar, ctx.grid)
    FU = burgers_rhs(prof.U, ctx.scalar, check_bc=False)
    th = theta(xi, ctx)
    dxiU = ctx.dxiU_at(xi)
    H = GridFunction(ctx.grid, FU.values - dxiU.values * th)
    M = RankOneOperator(dxiU, th, ctx.dpsi1_at(xi))
    return H, M


def quadratic_terms(v: GridFunction, xi: float, ctx: ReductionContext
                    ) -> Tuple[GridFunction, float]:
    """Quadratic remainder of the flux expansion and the scalar rho.

    For the quadratic flux the second-order Taylor remainder of the
    right-hand side is -v v_x (all higher terms vanish); rho collects its
    slow component plus the square of the constraint-drift coupling."""
    vx = derivative(v, 1, bc="zero")
    Q = GridFunction(v.grid, -v.values * vx.values)
    Q.values[0] = Q.values[-1] = 0.0
    rho = (inner_product(ctx.psi1_at(xi), Q)
           + inner_product(ctx.dpsi1_at(xi), v) ** 2)
    return Q, rho
