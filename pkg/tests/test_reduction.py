import math

import numpy as np
import pytest

from slowlayers import (BurgersModel, GridFunction, JinXinModel,
                        ProjectionFailureError, ReductionContext, beta_rate,
                        burgers_rhs, constraint_value, dprofile_dxi_analytic,
                        eigenpairs, assemble_linearized, eval_profile,
                        inner_product, log_time_to_reach_asymptotic,
                        log_travel_time, make_grid, project_xi, rate_bundle,
                        reduced_ode, theta, time_to_reach,
                        time_to_reach_asymptotic)

M = BurgersModel(epsilon=0.1)


@pytest.fixture(scope="module")
def ctx():
    g = make_grid(-1, 1, 399)
    return ReductionContext(M, g, xi_max=0.45)


def test_gauge_normalization(ctx):
    # <psi_1, dU/dxi> = 1 by construction at every cached node
    for node in ctx.nodes:
        ip = float(np.dot(ctx.grid.weights, node.psi[0] * node.dxiU))
        assert ip == pytest.approx(1.0, abs=1e-10)


def test_theta_matches_galerkin_pairing(ctx):
    # independent oracle: drift = <psi_1, F[U]> / <psi_1, dU/dxi> computed
    # from the discrete residual, with no point-mass shortcut
    for xi in (-0.3, -0.15, 0.2):
        prof = eval_profile(xi, M, ctx.grid)
        F = burgers_rhs(prof.U, M, check_bc=False)
        psi1 = ctx.psi1_at(xi)
        num = inner_product(psi1, F)
        den = inner_product(psi1, GridFunction(ctx.grid,
                                               ctx.dxiU_at(xi).values))
        assert theta(xi, ctx) == pytest.approx(num / den, rel=2e-2)


def test_theta_sign_and_zero(ctx):
    assert theta(-0.3, ctx) > 0  # drifts toward the center
    assert theta(0.3, ctx) < 0
    assert abs(theta(0.0, ctx)) < 1e-12


def test_beta_matches_lambda1(ctx):
    beta = beta_rate(0.0, ctx)
    lam1 = eigenpairs(assemble_linearized(0.0, M, ctx.grid), 2).lam[0].real
    assert beta > 0
    assert beta == pytest.approx(abs(lam1), rel=5e-3)


def test_rate_bundle_csv(ctx):
    rb = rate_bundle(ctx)
    row = rb.to_csv_row()
    assert len(row.split(",")) == len(rb.CSV_HEADER.split(","))
    assert rb.beta > 0


def test_reduced_ode_decays_monotonically(ctx):
    t, xs = reduced_ode(-0.3, 2e4, ctx, t_eval=[0.0, 1e3, 5e3, 2e4])
    assert xs[0] == pytest.approx(-0.3)
    assert np.all(np.diff(xs) > 0)          # monotone drift toward 0
    assert abs(xs[-1]) < 1e-4               # essentially converged


def test_time_to_reach_matches_closed_form(ctx):
    t_num = time_to_reach(-0.33, -0.1, ctx)
    t_asy = time_to_reach_asymptotic(-0.33, -0.1, M)
    assert t_num == pytest.approx(t_asy, rel=0.05)
    assert math.log(t_num) == pytest.approx(
        log_time_to_reach_asymptotic(-0.33, -0.1, M), abs=0.05)


def test_log_travel_time_is_continuous_across_methods():
    # the two evaluation branches must agree near the crossover epsilon
    m = BurgersModel(epsilon=0.06)
    via_quad = log_travel_time(m, -0.33, -0.1, eps_threshold=0.06)
    via_asym = log_travel_time(m, -0.33, -0.1, eps_threshold=0.07)
    assert via_quad == pytest.approx(via_asym, abs=0.15)


def test_time_to_reach_asymptotic_validation():
    with pytest.raises(ValueError):
        time_to_reach_asymptotic(-0.1, -0.3, M)  # target beyond start


def test_projection_recovers_exact_profile(ctx):
    prof = eval_profile(0.2, M, ctx.grid)
    xi = project_xi(prof.U, 0.15, ctx)
    assert xi == pytest.approx(0.2, abs=1e-8)
    assert abs(constraint_value(prof.U, xi, ctx)) < 1e-10


def test_projection_of_perturbed_profile(ctx):
    prof = eval_profile(-0.1, M, ctx.grid)
    bump = GridFunction.from_callable(
        ctx.grid, lambda x: 0.01 * np.sin(math.pi * x))
    u = GridFunction(ctx.grid, prof.U.values + bump.values)
    xi = project_xi(u, -0.1, ctx)
    assert xi == pytest.approx(-0.1, abs=0.02)
    # slow component of the remainder vanishes at the projected position
    assert abs(constraint_value(u, xi, ctx)) < 1e-9


def test_projection_rejects_zero_field(ctx):
    with pytest.raises(ProjectionFailureError):
        project_xi(GridFunction.zeros(ctx.grid), 0.0, ctx)


def test_jinxin_theta_close_to_scalar():
    g = make_grid(-1, 1, 299)
    mj = JinXinModel(epsilon=0.1)
    ctx_j = ReductionContext(mj, g, xi_max=0.4)
    ctx_b = ReductionContext(BurgersModel(epsilon=0.1), g, xi_max=0.4)
    tj, tb = theta(-0.3, ctx_j), theta(-0.3, ctx_b)
    assert tj == pytest.approx(tb, rel=0.02)
    assert tj > 0
