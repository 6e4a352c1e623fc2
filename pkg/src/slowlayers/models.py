"""Model definitions and semidiscrete right-hand sides.

Two problems are supported on the interval [-ell, ell]:

* viscous Burgers,  u_t + u u_x = eps u_xx,  u(+-ell) = -+ u_star;
* the Jin-Xin relaxation system,
      u_t + v_x = 0,
      v_t + a^2 u_x = (f(u) - v) / eps,
  with Dirichlet data on u only and quadratic flux f(u) = u^2/2 by default.

Convection in Burgers is discretized with the skew-symmetric split form
(average of u*u_x and (u^2/2)_x), which is energy stable for long runs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import Grid1D, GridFunction, derivative


class BoundaryViolationError(ValueError):
    """State does not carry the model's Dirichlet data."""


def quadratic_flux(u):
    return 0.5 * u * u


def quadratic_flux_prime(u):
    return u


@dataclass(frozen=True)
class BurgersModel:
    epsilon: float
    ell: float = 1.0
    u_star: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0 or self.ell <= 0 or self.u_star < 0:
            raise ValueError("need epsilon > 0, ell > 0, u_star >= 0")

    @property
    def bc_left(self) -> float:
        return self.u_star

    @property
    def bc_right(self) -> float:
        return -self.u_star


@dataclass(frozen=True)
class JinXinModel:
    epsilon: float
    ell: float = 1.0
    a: float = 1.0
    u_star: float = 1.0
    flux: Callable = quadratic_flux
    flux_prime: Callable = quadratic_flux_prime

    def __post_init__(self):
        if self.epsilon <= 0 or self.ell <= 0 or self.a <= 0:
            raise ValueError("need epsilon > 0, ell > 0, a > 0")

    @property
    def bc_left(self) -> float:
        return self.u_star

    @property
    def bc_right(self) -> float:
        return -self.u_star

    def check_subcharacteristic(self, u_range=(-1.0, 1.0)) -> bool:
        """Warn (not fail) if a^2 < max |f'(u)| over the expected range."""
        us = np.linspace(u_range[0], u_range[1], 101)
        m = float(np.max(np.abs(self.flux_prime(us))))
        ok = self.a**2 >= m - 1e-12
        if not ok:
            warnings.warn(
                f"subcharacteristic condition violated: a^2 = {self.a ** 2} "
                f"< max|f'(u)| = {m}",
                stacklevel=2,
            )
        return ok


@dataclass
class State:
    """Solution snapshot: u for Burgers, (u, v) for Jin-Xin."""

    u: GridFunction
    v: Optional[GridFunction] = None

    def copy(self) -> "State":
        return State(self.u.copy(), self.v.copy() if self.v is not None else None)


def _check_boundary(u: GridFunction, m, tol: float = 1e-12):
    if abs(u.values[0] - m.bc_left) > tol or abs(u.values[-1] - m.bc_right) > tol:
        raise BoundaryViolationError(
            f"u boundary values ({u.values[0]}, {u.values[-1]}) do not match "
            f"Dirichlet data ({m.bc_left}, {m.bc_right})"
        )


def burgers_rhs(u: GridFunction, m: BurgersModel, check_bc: bool = True) -> GridFunction:
    """eps u_xx - u u_x at interior nodes; zero at the (held) boundary nodes.

    The convection term is the skew average of the conservative and
    nonconservative forms: (1/3) u u_x + (1/3) (u^2/2)_x.
    """
    if check_bc:
        _check_boundary(u, m)
    uxx = derivative(u, 2, bc="zero")
    ux = derivative(u, 1, bc="zero")
    u2x = derivative(GridFunction(u.grid, 0.5 * u.values**2), 1, bc="zero")
    conv = (u.values * ux.values + 2.0 * u2x.values) / 3.0
    out = m.epsilon * uxx.values - conv
    out[0] = out[-1] = 0.0
    return GridFunction(u.grid, out)


def jinxin_rhs(s: State, m: JinXinModel, check_bc: bool = True) -> State:
    """Right-hand side (-v_x, -a^2 u_x + (f(u) - v)/eps).

    v has no prescribed boundary data; its equation is evaluated at the
    boundary nodes too (one-sided differences), so v evolves freely there.
    """
    if s.v is None:
        raise ValueError("Jin-Xin state needs both components")
    if check_bc:
        _check_boundary(s.u, m)
    vx = derivative(s.v, 1, bc="one_sided")
    ux = derivative(s.u, 1, bc="one_sided")
    du = -vx.values.copy()
    du[0] = du[-1] = 0.0  # u boundary held by Dirichlet data
    dv = -m.a**2 * ux.values + (m.flux(s.u.values) - s.v.values) / m.epsilon
    return State(GridFunction(s.u.grid, du), GridFunction(s.u.grid, dv))


def default_initial_data(m, grid: Grid1D) -> State:
    """Initial datum u0(x) = x^2/2 - x - 1/2 (and v0 = f(u0) for Jin-Xin)."""
    x = grid.nodes
    u0 = 0.5 * x**2 - x - 0.5
    u0[0] = m.bc_left
    u0[-1] = m.bc_right
    u = GridFunction(grid, u0)
    if isinstance(m, JinXinModel):
        return State(u, GridFunction(grid, m.flux(u0)))
    return State(u)
