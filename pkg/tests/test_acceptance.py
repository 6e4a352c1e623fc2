"""Acceptance suite: the fourteen shipping criteria.

Each test prints a single PASS/FAIL line (prefixed ``criterion N``) before
asserting, so a full run yields one status line per criterion.  Expensive
trajectories and spectral caches are shared through module-scoped fixtures;
the whole suite is desk scale (minutes, not hours).
"""

import math

import numpy as np
import pytest

from slowlayers import (BurgersModel, GridFunction, IntegratorConfig,
                        JinXinModel, ReductionContext, State,
                        assemble_linearized, beta_rate, default_initial_data,
                        eigenpairs, eval_profile, lambda1_asymptotic,
                        log_travel_time, make_grid, norm, omega_asymptotic,
                        reduced_ode, run_adaptive, simulate_coupled,
                        z_decomposition)

EPS = 0.1


def report(num: int, name: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"criterion {num} ({name}): {status} [{detail}]")
    assert ok, f"criterion {num} ({name}): {detail}"


# -- shared artifacts ---------------------------------------------------------


@pytest.fixture(scope="module")
def grid399():
    return make_grid(-1, 1, 399)


@pytest.fixture(scope="module")
def ctx399(grid399):
    return ReductionContext(BurgersModel(epsilon=EPS), grid399, xi_max=0.45)


@pytest.fixture(scope="module")
def burgers_traj_799():
    m = BurgersModel(epsilon=EPS)
    g = make_grid(-1, 1, 799)
    s0 = default_initial_data(m, g)
    outs = [0.2, 1.0, 5e4]
    return g, run_adaptive(m, s0, 5e4, output_times=outs)


@pytest.fixture(scope="module")
def burgers_traj_399(grid399, ctx399):
    m = BurgersModel(epsilon=EPS)
    s0 = default_initial_data(m, grid399)
    outs = [1.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1e3, 5e3, 1e4, 5e4]
    traj = run_adaptive(m, s0, 5e4, output_times=outs, ctx=ctx399)
    return outs, traj


def at(traj, t):
    i = int(np.argmin(np.abs(np.asarray(traj.t) - t)))
    return i


# -- long-time shock-location tables ------------------------------------------


def test_criterion_01_table_eps_0_1(burgers_traj_799):
    _, traj = burgers_traj_799
    x02, x1, x5e4 = (traj.at_time(t) for t in (0.2, 1.0, 5e4))
    ok = (abs(x02 - (-0.3954)) <= 0.02 and abs(x1 - (-0.3233)) <= 0.02
          and abs(x5e4) <= 1e-3)
    report(1, "shock table, eps=0.1",
           ok, f"xi(0.2)={x02:.4f} xi(1)={x1:.4f} xi(5e4)={x5e4:.2e}")


def test_criterion_02_table_eps_0_07():
    m = BurgersModel(epsilon=0.07)
    g = make_grid(-1, 1, 799)
    traj = run_adaptive(m, default_initial_data(m, g), 5e3,
                        output_times=[5e3])
    x = traj.at_time(5e3)
    ok = abs(x - (-0.2231)) <= 0.05
    report(2, "shock table, eps=0.07", ok, f"xi(5e3)={x:.4f} vs -0.2231+-0.05")


def test_criterion_03_relaxation_table_eps_0_1():
    m = JinXinModel(epsilon=EPS)
    g = make_grid(-1, 1, 799)
    traj = run_adaptive(m, default_initial_data(m, g), 10.0,
                        output_times=[0.2, 1.0, 10.0])
    x02, x1, x10 = (traj.at_time(t) for t in (0.2, 1.0, 10.0))
    ok = (abs(x02 - (-0.4008)) <= 0.02 and abs(x1 - (-0.3314)) <= 0.02
          and abs(x10 - (-0.3070)) <= 0.03)
    report(3, "relaxation shock table, eps=0.1",
           ok, f"xi(0.2)={x02:.4f} xi(1)={x1:.4f} xi(10)={x10:.4f}")


def test_criterion_04_monotone_slowdown():
    ok = True
    details = []
    for label, factory, eps_values in (
            ("viscous", BurgersModel, (0.1, 0.07, 0.06, 0.04)),
            ("relaxation", JinXinModel, (0.1, 0.07, 0.055, 0.04, 0.02))):
        logs = [log_travel_time(factory(epsilon=e), -0.33, -0.1)
                for e in eps_values]
        ok = ok and all(b > a for a, b in zip(logs, logs[1:]))
        details.append(f"{label}: " + ",".join(f"{l:.1f}" for l in logs))
    report(4, "monotone slowdown", ok, "; ".join(details))


# -- spectral structure --------------------------------------------------------


def test_criterion_05_eigensolver_oracle():
    m = BurgersModel(epsilon=EPS, u_star=0.0)
    g = make_grid(-1, 1, 1999)
    lam = eigenpairs(assemble_linearized(0.0, m, g), 5).lam.real
    rels = [abs(lam[k - 1] - (-EPS * (k * math.pi / 2) ** 2))
            / (EPS * (k * math.pi / 2) ** 2) for k in range(1, 6)]
    ok = max(rels) <= 1e-3
    report(5, "pure-diffusion eigenvalues", ok, f"max rel err {max(rels):.2e}")


def test_criterion_06_lambda1_asymptotics():
    g = make_grid(-1, 1, 799)
    worst = 1.0
    ok = True
    for eps in (0.08, 0.1):
        m = BurgersModel(epsilon=eps)
        for xi in (-0.3, 0.0, 0.3):
            lam = eigenpairs(assemble_linearized(xi, m, g), 2).lam[0].real
            asym = lambda1_asymptotic(xi, m)
            ok = ok and lam < 0 and asym < 0
            ratio = lam / asym
            worst = max(worst, ratio, 1.0 / ratio)
    ok = ok and worst <= 2.0
    report(6, "lambda1 asymptotics within factor 2", ok,
           f"worst ratio {worst:.4f}")


def test_criterion_07_residual_eigenvalue_ratio(grid399):
    worst = 0.0
    for eps in (0.06, 0.08, 0.1):
        m = BurgersModel(epsilon=eps)
        for xi in np.linspace(-0.4, 0.4, 9):
            lam = eigenpairs(assemble_linearized(float(xi), m, grid399),
                             2).lam[0].real
            worst = max(worst, abs(omega_asymptotic(float(xi), m) / lam))
    ok = worst <= 4.5
    report(7, "Omega/lambda1 ratio bound", ok, f"max ratio {worst:.3f}")


def test_criterion_08_spectral_gap_scaling(grid399):
    cs = []
    for eps in (0.05, 0.1):
        m = BurgersModel(epsilon=eps)
        lam2 = eigenpairs(assemble_linearized(0.0, m, grid399), 3).lam[1].real
        cs.append(-lam2 * eps)
    spread = abs(cs[0] - cs[1]) / max(cs)
    ok = spread <= 0.30 and min(cs) > 0
    report(8, "gap constant stability", ok,
           f"c={cs[0]:.4f},{cs[1]:.4f} spread {spread:.1%}")


# -- projection and coupled dynamics -------------------------------------------


def test_criterion_09_projection_consistency(grid399, burgers_traj_399):
    outs, traj = burgers_traj_399
    ok = True
    worst_dx = worst_v1 = 0.0
    for t in [t for t in outs if 1.0 <= t <= 1e3]:
        i = at(traj, t)
        dx = abs(traj.xi_tracked[i] - traj.xi_projected[i])
        rel_v1 = traj.v1_abs[i] / max(traj.v_l2[i], 1e-300)
        worst_dx, worst_v1 = max(worst_dx, dx), max(worst_v1, rel_v1)
        ok = ok and dx <= 2 * grid399.h and rel_v1 <= 1e-6
    report(9, "projected vs tracked layer", ok,
           f"max |dxi| {worst_dx:.2e} (2h={2 * grid399.h:.2e}), "
           f"max |v1|/|v| {worst_v1:.1e}")


def test_criterion_10_complete_coupling_equivalence(grid399, ctx399):
    m = BurgersModel(epsilon=EPS)
    xi0 = -0.3
    v0 = GridFunction(grid399, 0.01 * ctx399.phik_at(xi0, 2).values)
    outs = [1.0, 2.0, 5.0, 10.0]
    coup = simulate_coupled(xi0, v0, 10.0, "complete", ctx399,
                            output_times=outs)
    _, s0 = coup.snapshots[0]
    u0 = GridFunction(grid399,
                      eval_profile(xi0, m, grid399).U.values + s0.u.values)
    direct = run_adaptive(m, State(u0), 10.0, IntegratorConfig(dt_max=0.5),
                          output_times=outs)
    worst = 0.0
    for t in outs:
        i, j = at(coup, t), at(direct, t)
        _, sc = coup.snapshots[i]
        rec = (eval_profile(coup.xi_tracked[i], m, grid399).U.values
               + sc.u.values)
        _, sd = direct.snapshots[j]
        worst = max(worst, norm(GridFunction(grid399,
                                             rec - sd.u.values), "L2"))
    ok = worst <= 1e-3
    report(10, "complete coupling reproduces the PDE", ok,
           f"max L2 difference {worst:.2e}")


def test_criterion_11_perturbation_envelope(grid399, ctx399):
    xi0 = -0.3
    v0 = GridFunction(grid399, 0.01 * ctx399.phik_at(xi0, 2).values)
    outs = [0.5, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
    cfg = IntegratorConfig(dt_max=100.0, rel_tol=1e-4, abs_tol=1e-8)
    traj = simulate_coupled(xi0, v0, 1e3, "quasi_linear", ctx399, cfg=cfg,
                            output_times=outs)
    mu = abs(ctx399.lam_at(xi0)[1]) / 2.0
    omega_sup = ctx399.omega_sup()
    v0_norm = traj.v_l2[0]
    C = 0.0
    for t in outs:
        i = at(traj, t)
        free = math.exp(-mu * t) * v0_norm
        C = max(C, max(traj.v_l2[i] - free, 0.0) / (omega_sup * t))
    ok = C <= 10.0
    report(11, "linear-envelope bound", ok, f"fitted C {C:.3e} (mu={mu:.2f})")


def test_criterion_12_fast_slow_decomposition():
    plateaus, rate_ok = [], True
    details = []
    for eps in (0.1, 0.08, 0.06):
        m = BurgersModel(epsilon=eps)
        g = make_grid(-1, 1, 399)
        ctx = ReductionContext(m, g, xi_max=0.45)
        xi0 = -0.3
        v0 = GridFunction(g, 0.01 * ctx.phik_at(xi0, 2).values)
        outs = [0.25, 0.5, 1, 1.5, 2, 5, 10, 20, 30, 50]
        cfg = IntegratorConfig(dt_max=100.0, rel_tol=1e-4, abs_tol=1e-8)
        traj = simulate_coupled(xi0, v0, 50.0, "quasi_linear", ctx, cfg=cfg,
                                output_times=outs)
        zs, rs = z_decomposition(traj, 8, ctx)
        ts = traj.t
        early = [(t, z) for t, z in zip(ts, zs) if 0.2 <= t <= 2 and z > 0]
        rate = -np.polyfit([a for a, _ in early],
                           np.log([b for _, b in early]), 1)[0]
        lam2 = ctx.lam_at(xi0)[1]
        rate_ok = rate_ok and rate >= abs(lam2) / 2.0
        plateau = float(np.median([r for t, r in zip(ts, rs) if t >= 20]))
        plateaus.append(plateau)
        details.append(f"eps={eps}: rate={rate:.2f} plateau={plateau:.1e}")
    slope = np.polyfit(np.log([0.1, 0.08, 0.06]), np.log(plateaus), 1)[0]
    ok = rate_ok and slope > 0 and plateaus[0] > plateaus[-1]
    report(12, "fast/remainder scaling", ok,
           "; ".join(details) + f"; exponent {slope:.2f}")


def test_criterion_13_reduced_ode_tracks_pde(ctx399, burgers_traj_399):
    outs, traj = burgers_traj_399
    i10 = at(traj, 10.0)
    xi10 = traj.xi_tracked[i10]
    eval_ts = [t for t in outs if t >= 10.0]
    _, xs = reduced_ode(xi10, 5e4 - 10.0, ctx399,
                        t_eval=[t - 10.0 for t in eval_ts])
    worst = max(abs(traj.xi_tracked[at(traj, t)] - x)
                for t, x in zip(eval_ts, xs))
    ok = worst <= 0.05
    report(13, "reduced ODE vs PDE layer path", ok,
           f"max |xi_pde - xi_reduced| {worst:.2e}")


def test_criterion_14_beta_scaling(ctx399):
    xs, ys = [], []
    for eps in (0.06, 0.08, 0.1):
        if eps == EPS:
            ctx = ctx399
        else:
            m = BurgersModel(epsilon=eps)
            ctx = ReductionContext(m, make_grid(-1, 1, 399), xi_max=0.45)
        beta = beta_rate(0.0, ctx)
        xs.append(1.0 / eps)
        ys.append(math.log(beta))
    slope, icpt = np.polyfit(xs, ys, 1)
    pred = np.polyval([slope, icpt], xs)
    ss_res = float(np.sum((np.array(ys) - pred) ** 2))
    ss_tot = float(np.sum((np.array(ys) - np.mean(ys)) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    ok = slope < 0 and r2 > 0.9
    report(14, "exponential beta scaling", ok,
           f"slope {slope:.3f}, R^2 {r2:.5f}")
