"""Uniform 1D grid, finite-difference operators, and discrete inner products.

Everything downstream (profiles, spectra, time integration) works on
GridFunction fields sampled at the nodes of a Grid1D, boundary nodes
included.  Quadrature is trapezoidal and derivatives are second-order
centered stencils, so all discrete errors scale as O(h^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Invalid grid construction parameters."""


class IncompatibleGridsError(ValueError):
    """Two grid functions do not live on the same grid."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh on [a, b] with n_interior interior nodes.

    Nodes include both endpoints, so there are n_interior + 2 of them and
    the spacing is h = (b - a) / (n_interior + 1).
    """

    a: float
    b: float
    n_interior: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise GridError("grid endpoints must be finite")
        if self.b <= self.a:
            raise GridError(f"need b > a, got [{self.a}, {self.b}]")
        if self.n_interior < 3:
            raise GridError(f"need n_interior >= 3, got {self.n_interior}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_interior + 1)

    @property
    def n_nodes(self) -> int:
        return self.n_interior + 2

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n_nodes)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights, one per node."""
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


def make_grid(a: float, b: float, n_interior: int) -> Grid1D:
    return Grid1D(a, b, n_interior)


@dataclass
class GridFunction:
    """Nodal scalar field on a Grid1D (boundary values stored, not eliminated)."""

    grid: Grid1D
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(self.grid.n_nodes)
        else:
            self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise IncompatibleGridsError(
                f"expected {self.grid.n_nodes} values, got {self.values.shape}"
            )

    @classmethod
    def from_callable(cls, grid: Grid1D, f) -> "GridFunction":
        return cls(grid, np.asarray([f(x) for x in grid.nodes], dtype=float))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_nodes))

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, s: float):
        return GridFunction(self.grid, self.values * s)

    __rmul__ = __mul__


def _check_same_grid(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise IncompatibleGridsError("grid functions live on different grids")


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Trapezoidal approximation of the L2 pairing int f*g dx."""
    _check_same_grid(f, g)
    return float(np.dot(f.grid.weights, f.values * g.values))


def derivative(f: GridFunction, order: int = 1, bc: str = "one_sided") -> GridFunction:
    """Finite-difference derivative of order 1 or 2.

    Interior nodes use centered second-order stencils.  At the boundary
    nodes, bc="one_sided" uses second-order one-sided stencils, while
    bc="zero" just writes zeros there (useful for homogeneous Dirichlet
    residuals).
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    u = f.values
    h = f.grid.h
    d = np.empty_like(u)
    if order == 1:
        d[1:-1] = (u[2:] - u[:-2]) / (2 * h)
        if bc == "zero":
            d[0] = d[-1] = 0.0
        else:
            d[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
            d[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    else:
        d[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        if bc == "zero":
            d[0] = d[-1] = 0.0
        else:
            d[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
            d[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
    return GridFunction(f.grid, d)


def norm(f: GridFunction, kind: str = "L2") -> float:
    """Discrete L2, H1 or Linf norm.

    H1 uses the same centered first-derivative stencil as the PDE
    operators, for internal consistency.
    """
    if kind == "L2":
        return float(np.sqrt(max(inner_product(f, f), 0.0)))
    if kind == "H1":
        fp = derivative(f, 1)
        return float(np.sqrt(max(inner_product(f, f) + inner_product(fp, fp), 0.0)))
    if kind == "Linf":
        return float(np.max(np.abs(f.values)))
    raise ValueError(f"unknown norm kind {kind!r}")
