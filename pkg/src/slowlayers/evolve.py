"""Time integration: full PDEs, the quasi-linearized and complete coupled
systems, layer tracking, and the fast/remainder decomposition of the
perturbation.

Long metastable horizons (t up to 1e6) are only reachable with implicit
stepping and step-doubling error control: during the plateau the step is
allowed to grow to dt_max, while requested output times are hit exactly by
clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .grid import Grid1D, GridFunction, derivative, inner_product, norm
from .models import BurgersModel, JinXinModel, State, burgers_rhs, jinxin_rhs
from .reduction import (ProjectionFailureError, ReductionContext,
                        constraint_value, eval_profile, project_xi,
                        quadratic_terms, theta)
from .spectral import assemble_linearized

__all__ = [
    "IntegratorConfig", "Trajectory", "StepRejectedError", "NoLayerError",
    "step", "run_adaptive", "track_layer", "simulate_coupled",
    "z_decomposition",
]


class StepRejectedError(RuntimeError):
    """Implicit solve did not converge; the caller should reduce dt."""


class NoLayerError(RuntimeError):
    """Field has no sign change to track."""


@dataclass
class IntegratorConfig:
    dt_init: float = 1e-3
    dt_max: float = 500.0
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    scheme: str = "implicit"  # or "imex"
    snapshot_stride: int = 1
    dt_min: float = 1e-12
    newton_tol: float = 1e-10
    newton_max_iter: int = 25

    def __post_init__(self):
        if not (0 < self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_init <= dt_max")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.scheme not in ("implicit", "imex"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class Trajectory:
    """Sampled time series of a run.

    For full-PDE runs `snapshots` stores States; for coupled runs the
    layer series lives in xi_tracked and snapshots hold the perturbation v
    wrapped as a single-component State.
    """

    t: List[float] = field(default_factory=list)
    xi_tracked: List[float] = field(default_factory=list)
    xi_projected: List[float] = field(default_factory=list)
    v_l2: List[float] = field(default_factory=list)
    v_h1: List[float] = field(default_factory=list)
    v1_abs: List[float] = field(default_factory=list)
    dt_used: List[float] = field(default_factory=list)
    snapshots: List[Tuple[float, State]] = field(default_factory=list)
    aborted: bool = False
    flags: List[str] = field(default_factory=list)

    CSV_HEADER = "t,xi_tracked,xi_projected,v_l2,v_h1,v1_abs,dt"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for i in range(len(self.t)):
            lines.append(
                f"{self.t[i]!r},{self.xi_tracked[i]!r},{self.xi_projected[i]!r},"
                f"{self.v_l2[i]!r},{self.v_h1[i]!r},{self.v1_abs[i]!r},"
                f"{self.dt_used[i]!r}"
            )
        return "\n".join(lines) + "\n"

    def at_time(self, t: float, what: str = "xi_tracked") -> float:
        arr = np.asarray(self.t)
        i = int(np.argmin(np.abs(arr - t)))
        return getattr(self, what)[i]


# -- layer tracking ----------------------------------------------------------


def track_layer(u: GridFunction, xi_prev: float = 0.0) -> float:
    """Zero crossing of u nearest xi_prev by linear interpolation."""
    x = u.grid.nodes
    vals = u.values
    sgn = np.sign(vals)
    idx = np.where(sgn[:-1] * sgn[1:] < 0)[0]
    exact = np.where(vals == 0.0)[0]
    candidates = []
    for i in idx:
        xi = x[i] - vals[i] * (x[i + 1] - x[i]) / (vals[i + 1] - vals[i])
        candidates.append(xi)
    for i in exact:
        candidates.append(x[i])
    if not candidates:
        raise NoLayerError("no sign change in the field")
    candidates = sorted(candidates, key=lambda c: abs(c - xi_prev))
    return float(candidates[0])


# -- single steps ------------------------------------------------------------


def _tridiag_solve(lower, diag, upper, rhs):
    ab = np.zeros((3, len(diag)))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    return scipy.linalg.solve_banded((1, 1), ab, rhs)


def _burgers_conv(u: np.ndarray, h: float) -> np.ndarray:
    """Skew-averaged convection at interior nodes of a full-node field."""
    ux = (u[2:] - u[:-2]) / (2 * h)
    u2x = (u[2:] ** 2 - u[:-2] ** 2) / (4 * h)
    return (u[1:-1] * ux + 2.0 * u2x) / 3.0


def _burgers_F_int(u: np.ndarray, m: BurgersModel, h: float) -> np.ndarray:
    uxx = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    return m.epsilon * uxx - _burgers_conv(u, h)


def _burgers_jac_bands(u: np.ndarray, m: BurgersModel, h: float):
    """Tridiagonal bands of dF/du at interior nodes (interior columns)."""
    n = len(u) - 2
    eps = m.epsilon
    diag = np.full(n, -2 * eps / h**2)
    diag -= (u[2:] - u[:-2]) / (3 * 2 * h)
    upper = np.full(n - 1, eps / h**2)
    upper -= (u[1:-1][:-1] + 2 * u[2:-1]) / (3 * 2 * h)
    lower = np.full(n - 1, eps / h**2)
    lower += (u[1:-1][1:] + 2 * u[1:-2]) / (3 * 2 * h)
    return lower, diag, upper


def _step_burgers_implicit(u: GridFunction, dt: float, m: BurgersModel,
                           cfg: IntegratorConfig) -> GridFunction:
    """Backward Euler with damped Newton; Dirichlet boundaries held."""
    full = u.values.copy()
    h = u.grid.h
    w = full.copy()
    target = full[1:-1]
    for _ in range(cfg.newton_max_iter):
        G = w[1:-1] - target - dt * _burgers_F_int(w, m, h)
        gn = float(np.max(np.abs(G)))
        if gn < cfg.newton_tol:
            return GridFunction(u.grid, w)
        lo, di, up = _burgers_jac_bands(w, m, h)
        delta = _tridiag_solve(-dt * lo, 1.0 - dt * di, -dt * up, -G)
        lam = 1.0
        for _damp in range(8):
            wn = w.copy()
            wn[1:-1] = w[1:-1] + lam * delta
            Gn = wn[1:-1] - target - dt * _burgers_F_int(wn, m, h)
            if float(np.max(np.abs(Gn))) < gn or gn < 1e-14:
                w = wn
                break
            lam *= 0.5
        else:
            raise StepRejectedError("Newton line search stalled")
    # accept if already essentially converged
    G = w[1:-1] - target - dt * _burgers_F_int(w, m, h)
    if float(np.max(np.abs(G))) < 100 * cfg.newton_tol:
        return GridFunction(u.grid, w)
    raise StepRejectedError("Newton did not converge")


def _step_burgers_imex(u: GridFunction, dt: float, m: BurgersModel,
                       cfg: IntegratorConfig) -> GridFunction:
    """Implicit diffusion, explicit skew convection."""
    full = u.values
    h = u.grid.h
    n = u.grid.n_interior
    r = dt * m.epsilon / h**2
    rhs = full[1:-1] - dt * _burgers_conv(full, h)
    rhs[0] += r * full[0]
    rhs[-1] += r * full[-1]
    lo = np.full(n - 1, -r)
    di = np.full(n, 1.0 + 2 * r)
    w = full.copy()
    w[1:-1] = _tridiag_solve(lo, di, lo.copy(), rhs)
    return GridFunction(u.grid, w)


class _JinXinImplicitOps:
    """Grid-fixed pieces of the backward-Euler Jacobian for Jin-Xin.

    The v update is eliminated pointwise, leaving a pentadiagonal system
    for the interior u unknowns.
    """

    def __init__(self, grid: Grid1D):
        n_all = grid.n_nodes
        h = grid.h
        D1 = scipy.sparse.lil_matrix((n_all, n_all))
        for i in range(1, n_all - 1):
            D1[i, i - 1] = -1 / (2 * h)
            D1[i, i + 1] = 1 / (2 * h)
        D1[0, 0], D1[0, 1], D1[0, 2] = -3 / (2 * h), 4 / (2 * h), -1 / (2 * h)
        D1[-1, -1], D1[-1, -2], D1[-1, -3] = 3 / (2 * h), -4 / (2 * h), 1 / (2 * h)
        self.D1 = D1.tocsr()
        # interior rows of D1 acting on full-node vectors
        self.P = self.D1[1:-1, :]
        # columns of full-node operators hitting the interior unknowns
        self.interior_cols = slice(1, n_all - 1)
        self.grid = grid


def _step_jinxin_implicit(s: State, dt: float, m: JinXinModel,
                          cfg: IntegratorConfig, ops: _JinXinImplicitOps) -> State:
    grid = s.u.grid
    u0 = s.u.values
    v0 = s.v.values
    alpha = 1.0 / (1.0 + dt / m.epsilon)
    D1 = ops.D1
    P = ops.P

    def v_new(ufull):
        return alpha * (v0 - dt * m.a**2 * (D1 @ ufull)
                        + (dt / m.epsilon) * m.flux(ufull))

    w = u0.copy()
    for _ in range(cfg.newton_max_iter):
        vn = v_new(w)
        G = w[1:-1] - u0[1:-1] + dt * (P @ vn)
        gn = float(np.max(np.abs(G)))
        if gn < cfg.newton_tol:
            break
        # J = I + dt * P * dv/du restricted to interior columns
        dv_du = (-alpha * dt * m.a**2) * D1 \
            + scipy.sparse.diags(alpha * (dt / m.epsilon) * m.flux_prime(w))
        J = scipy.sparse.identity(grid.n_interior, format="csr") \
            + dt * (P @ dv_du)[:, ops.interior_cols]
        delta = scipy.sparse.linalg.spsolve(J.tocsc(), -G)
        w = w.copy()
        w[1:-1] += delta
    else:
        raise StepRejectedError("Jin-Xin Newton did not converge")
    return State(GridFunction(grid, w), GridFunction(grid, v_new(w)))


def _step_jinxin_imex(s: State, dt: float, m: JinXinModel,
                      cfg: IntegratorConfig) -> State:
    """Explicit transport, pointwise-implicit relaxation source."""
    grid = s.u.grid
    u0 = s.u.values
    v0 = s.v.values
    h = grid.h
    un = u0.copy()
    un[1:-1] = u0[1:-1] - dt * (v0[2:] - v0[:-2]) / (2 * h)
    ux = np.empty_like(un)
    ux[1:-1] = (un[2:] - un[:-2]) / (2 * h)
    ux[0] = (-3 * un[0] + 4 * un[1] - un[2]) / (2 * h)
    ux[-1] = (3 * un[-1] - 4 * un[-2] + un[-3]) / (2 * h)
    vn = (v0 + dt * (-m.a**2 * ux) + (dt / m.epsilon) * m.flux(un)) \
        / (1.0 + dt / m.epsilon)
    return State(GridFunction(grid, un), GridFunction(grid, vn))


_JX_OPS_CACHE = {}


def step(s: State, dt: float, m, cfg: Optional[IntegratorConfig] = None) -> State:
    """One time step of the semidiscrete system."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    cfg = cfg or IntegratorConfig()
    if isinstance(m, JinXinModel):
        if cfg.scheme == "imex":
            return _step_jinxin_imex(s, dt, m, cfg)
        key = (id(s.u.grid), s.u.grid.n_interior)
        ops = _JX_OPS_CACHE.get(key)
        if ops is None:
            ops = _JinXinImplicitOps(s.u.grid)
            _JX_OPS_CACHE[key] = ops
        return _step_jinxin_implicit(s, dt, m, cfg, ops)
    if cfg.scheme == "imex":
        return State(_step_burgers_imex(s.u, dt, m, cfg))
    return State(_step_burgers_implicit(s.u, dt, m, cfg))


# -- adaptive driver ----------------------------------------------------------


def _err_norm(a: State, b: State, cfg: IntegratorConfig) -> float:
    def comp(x, y):
        scale = cfg.abs_tol + cfg.rel_tol * max(float(np.max(np.abs(y))), 1.0)
        return float(np.max(np.abs(x - y))) / scale
    e = comp(a.u.values, b.u.values)
    if a.v is not None and b.v is not None:
        e = max(e, comp(a.v.values, b.v.values))
    return e


def _record(traj: Trajectory, t: float, s: State, m, dt: float,
            ctx: Optional[ReductionContext], xi_prev: float,
            keep_snapshot: bool) -> float:
    try:
        xi_tr = track_layer(s.u, xi_prev)
    except NoLayerError:
        xi_tr = math.nan
    xi_pr = math.nan
    v1 = math.nan
    vl2 = vh1 = math.nan
    if ctx is not None and math.isfinite(xi_tr):
        try:
            xi_pr = project_xi(s.u, xi_tr, ctx)
            prof = eval_profile(xi_pr, ctx.scalar, ctx.grid)
            v = GridFunction(s.u.grid, s.u.values - prof.U.values)
            vl2 = norm(v, "L2")
            vh1 = norm(v, "H1")
            v1 = abs(constraint_value(s.u, xi_pr, ctx))
        except (ProjectionFailureError, ValueError):
            traj.flags.append(f"projection failed at t={t}")
    traj.t.append(t)
    traj.xi_tracked.append(xi_tr)
    traj.xi_projected.append(xi_pr)
    traj.v_l2.append(vl2)
    traj.v_h1.append(vh1)
    traj.v1_abs.append(v1)
    traj.dt_used.append(dt)
    if keep_snapshot:
        traj.snapshots.append((t, s.copy()))
    return xi_tr if math.isfinite(xi_tr) else xi_prev


def run_adaptive(m, s0: State, T: float, cfg: Optional[IntegratorConfig] = None,
                 output_times: Optional[Sequence[float]] = None,
                 ctx: Optional[ReductionContext] = None) -> Trajectory:
    """Integrate to T with step-doubling error control.

    Output times are hit exactly by clipping dt; at each output time the
    tracked (and, when a context is supplied, projected) layer location
    and perturbation norms are recorded.
    """
    cfg = cfg or IntegratorConfig()
    outs = sorted(set(output_times or []))
    if outs and outs[-1] > T:
        raise ValueError("output times exceed the horizon")
    traj = Trajectory()
    t = 0.0
    s = s0.copy()
    xi_prev = _record(traj, t, s, m, 0.0, ctx, 0.0, keep_snapshot=True)
    dt = cfg.dt_init
    out_idx = 0
    snap_count = 0
    while t < T - 1e-14 * max(T, 1.0):
        target = outs[out_idx] if out_idx < len(outs) else T
        if target <= t + 1e-14 * max(t, 1.0):
            out_idx += 1
            continue
        dt_try = min(dt, target - t, cfg.dt_max)
        try:
            s1 = step(s, dt_try, m, cfg)
            sh = step(s, 0.5 * dt_try, m, cfg)
            s2 = step(sh, 0.5 * dt_try, m, cfg)
            err = _err_norm(s1, s2, cfg)
        except StepRejectedError:
            err = math.inf
            s2 = None
        if err <= 1.0:
            t = t + dt_try
            s = s2
            grow = 5.0 if err == 0.0 else min(5.0, 0.9 / math.sqrt(err))
            dt = min(cfg.dt_max, dt_try * max(grow, 0.2))
            hit_output = out_idx < len(outs) and abs(t - outs[out_idx]) <= 1e-12 * max(t, 1.0)
            if hit_output or t >= T - 1e-14 * max(T, 1.0):
                snap_count += 1
                keep = (snap_count % cfg.snapshot_stride) == 0 or t >= T
                xi_prev = _record(traj, t, s, m, dt_try, ctx, xi_prev, keep)
                if hit_output:
                    out_idx += 1
        else:
            dt = dt_try * 0.5
            if dt < cfg.dt_min:
                traj.aborted = True
                traj.flags.append(f"step collapse at t={t}")
                return traj
    return traj


# -- coupled layer/perturbation system ----------------------------------------


def _linearized_bands(op_matrix: np.ndarray):
    n = op_matrix.shape[0]
    lo = np.diag(op_matrix, -1)
    di = np.diag(op_matrix)
    up = np.diag(op_matrix, 1)
    return lo, di, up


def simulate_coupled(xi0: float, v0: GridFunction, T: float, mode: str,
                     ctx: ReductionContext,
                     cfg: Optional[IntegratorConfig] = None,
                     output_times: Optional[Sequence[float]] = None) -> Trajectory:
    """Integrate the coupled layer-position / perturbation system.

    mode="quasi_linear": dxi/dt = theta (1 + <dpsi1, v>),
                         dv/dt  = H + (L + M) v.
    mode="complete":     keeps the quadratic terms; the pair is advanced in
        the algebraically equivalent constraint-preserving form
            dxi/dt = <psi1, F[U + v]> / (<psi1, dU/dxi> - <dpsi1, v>),
            dv/dt  = F[U + v] - dU/dxi * dxi/dt,
        which reproduces the full PDE for u = U + v up to time-integration
        error (a quadratic-order expansion of the same pair differs from
        it only at o(|v|^2)).

    The stiff linear part L v is treated implicitly (tridiagonal solve);
    everything else is explicit.  The spectral data are refreshed whenever
    xi moves by more than half the cache spacing.
    """
    if mode not in ("quasi_linear", "complete"):
        raise ValueError(f"unknown mode {mode!r}")
    cfg = cfg or IntegratorConfig(dt_max=25.0, dt_init=1e-3)
    grid = ctx.grid
    m = ctx.scalar
    outs = sorted(set(output_times or []))

    # enforce the initial constraint by removing the slow component
    v = v0.copy()
    c0 = inner_product(ctx.psi1_at(xi0), v)
    phi1 = ctx.phik_at(xi0, 1)
    denom = inner_product(ctx.psi1_at(xi0), phi1)
    v = GridFunction(grid, v.values - (c0 / denom) * phi1.values)
    v.values[0] = v.values[-1] = 0.0
    xi = xi0

    op_xi = xi
    op = assemble_linearized(xi, m, grid)
    bands = _linearized_bands(op.matrix)

    traj = Trajectory()

    def refresh_op(x):
        nonlocal op_xi, op, bands
        if abs(x - op_xi) > ctx.cache_spacing / 2:
            op = assemble_linearized(x, m, grid)
            bands = _linearized_bands(op.matrix)
            op_xi = x

    def rates(x, vv):
        """(dxi/dt, explicit part of dv/dt without Lv)."""
        psi1 = ctx.psi1_at(x)
        dpsi1 = ctx.dpsi1_at(x)
        dxiU = ctx.dxiU_at(x)
        prof = eval_profile(x, m, grid)
        if mode == "quasi_linear":
            th = theta(x, ctx)
            xidot = th * (1.0 + inner_product(dpsi1, vv))
            FU = burgers_rhs(prof.U, m, check_bc=False)
            H = FU.values - dxiU.values * th
            Mv = -dxiU.values * th * inner_product(dpsi1, vv)
            g = H + Mv
        else:
            u_full = GridFunction(grid, prof.U.values + vv.values)
            Fu = burgers_rhs(u_full, m, check_bc=False)
            num = inner_product(psi1, Fu)
            den = inner_product(psi1, dxiU) - inner_product(dpsi1, vv)
            xidot = num / den
            Lv = op.apply(vv)
            g = Fu.values - Lv.values - dxiU.values * xidot
        g[0] = g[-1] = 0.0
        return xidot, g

    def advance(x, vv, dt):
        refresh_op(x)
        xidot, g = rates(x, vv)
        lo, di, up = bands
        rhs = vv.values[1:-1] + dt * g[1:-1]
        sol = _tridiag_solve(-dt * lo, 1.0 - dt * di, -dt * up, rhs)
        vn = np.zeros(grid.n_nodes)
        vn[1:-1] = sol
        return x + dt * xidot, GridFunction(grid, vn)

    def record(t, dt):
        psi1 = ctx.psi1_at(xi)
        v1 = abs(inner_product(psi1, v))
        traj.t.append(t)
        traj.xi_tracked.append(xi)
        traj.xi_projected.append(math.nan)
        traj.v_l2.append(norm(v, "L2"))
        traj.v_h1.append(norm(v, "H1"))
        traj.v1_abs.append(v1)
        traj.dt_used.append(dt)
        traj.snapshots.append((t, State(v.copy())))

    t = 0.0
    record(t, 0.0)
    dt = cfg.dt_init
    out_idx = 0
    while t < T - 1e-14 * max(T, 1.0):
        target = outs[out_idx] if out_idx < len(outs) else T
        if target <= t + 1e-14 * max(t, 1.0):
            out_idx += 1
            continue
        dt_try = min(dt, target - t, cfg.dt_max)
        x1, v1f = advance(xi, v, dt_try)
        xh, vh = advance(xi, v, 0.5 * dt_try)
        x2, v2f = advance(xh, vh, 0.5 * dt_try)
        scale = cfg.abs_tol + cfg.rel_tol * max(float(np.max(np.abs(v2f.values))), 1e-12)
        err = max(float(np.max(np.abs(v1f.values - v2f.values))) / scale,
                  abs(x1 - x2) / (cfg.abs_tol + cfg.rel_tol * max(abs(x2), 1e-12)))
        if err <= 1.0:
            t += dt_try
            xi, v = x2, v2f
            # keep the constraint from drifting
            psi1 = ctx.psi1_at(xi)
            c = inner_product(psi1, v)
            if abs(c) > 1e-6 * max(norm(v, "L2"), 1e-300):
                phi1 = ctx.phik_at(xi, 1)
                den = inner_product(psi1, phi1)
                v = GridFunction(grid, v.values - (c / den) * phi1.values)
                v.values[0] = v.values[-1] = 0.0
                traj.flags.append(f"re-projected at t={t}")
            grow = 5.0 if err == 0.0 else min(5.0, 0.9 / math.sqrt(err))
            dt = min(cfg.dt_max, dt_try * max(grow, 0.2))
            hit = out_idx < len(outs) and abs(t - outs[out_idx]) <= 1e-12 * max(t, 1.0)
            if hit or t >= T - 1e-14 * max(T, 1.0):
                record(t, dt_try)
                if hit:
                    out_idx += 1
        else:
            dt = dt_try * 0.5
            if dt < cfg.dt_min:
                traj.aborted = True
                traj.flags.append(f"step collapse at t={t}")
                return traj
    return traj


def z_decomposition(traj: Trajectory, m_count: int, ctx: ReductionContext
                    ) -> Tuple[List[float], List[float]]:
    """Split the stored perturbation into the fast eigen-decaying part z
    and the remainder R = v - z; returns (|z|_H1, |R|_H1) series.

    z(t) = sum_{k>=2} v_k(0) exp(int_0^t lambda_k(xi(s)) ds) phi_k(.; xi(t)),
    with the exponent accumulated by trapezoid quadrature over the stored
    (t, xi) samples.
    """
    if not traj.snapshots:
        raise ValueError("trajectory carries no snapshots")
    ts = [t for t, _ in traj.snapshots]
    xis = list(traj.xi_tracked[: len(ts)])
    v0 = traj.snapshots[0][1].u
    xi0 = xis[0]
    from .reduction import spectral_coeffs
    vk0 = spectral_coeffs(v0, xi0, m_count, ctx)

    z_h1, r_h1 = [], []
    integ = np.zeros(m_count)  # accumulated int lambda_k ds per mode
    lam_prev = ctx.lam_at(xi0)[:m_count]
    t_prev = ts[0]
    for i, (t, snap) in enumerate(traj.snapshots):
        if i > 0:
            lam_now = ctx.lam_at(xis[i])[:m_count]
            integ += 0.5 * (lam_prev + lam_now) * (t - t_prev)
            lam_prev, t_prev = lam_now, t
        zvals = np.zeros(ctx.grid.n_nodes)
        for k in range(2, m_count + 1):
            Ek = math.exp(integ[k - 1]) if integ[k - 1] > -745 else 0.0
            if Ek == 0.0 or vk0[k - 1] == 0.0:
                continue
            zvals += vk0[k - 1] * Ek * ctx.phik_at(xis[i], k).values
        z = GridFunction(ctx.grid, zvals)
        R = GridFunction(ctx.grid, snap.u.values - zvals)
        z_h1.append(norm(z, "H1"))
        r_h1.append(norm(R, "H1"))
    return z_h1, r_h1
