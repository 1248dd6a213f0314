"""Uniform radial mesh, quadrature against r*dr, and discrete radial operators.

All operators treat the axis r=0 and the outer boundary with Neumann
(ghost-node reflection) conditions.  Two axis treatments coexist:

* eps >= h/2: the coordinate is shifted to r+eps, so r=0 is an ordinary
  Neumann boundary of the shifted operator (used by time evolution);
* eps < h/2 (including 0): the symmetry limit of the 2-D radial Laplacian
  at the axis, lap f(0) = 2 f''(0) = 4 (f_1 - f_0) / h^2 (used by the
  stationary solves and by evolution runs with a vanishing shift).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NonFiniteError


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform node-centered mesh on [0, r_max]."""

    r_max: float
    n_nodes: int
    h: float
    nodes: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, RadialGrid):
            return NotImplemented
        return self.r_max == other.r_max and self.n_nodes == other.n_nodes


@dataclass
class DensityField:
    """Nodal density values with Neumann boundary metadata."""

    grid: RadialGrid
    values: np.ndarray
    bc: str = "neumann_both"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise InvalidArgumentError(
                f"field has {self.values.shape} values for a grid of "
                f"{self.grid.n_nodes} nodes"
            )
        if self.bc != "neumann_both":
            raise InvalidArgumentError(f"unsupported boundary tag {self.bc!r}")

    def check_finite(self, context="field"):
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteError(f"{context} contains non-finite values")
        return self

    def copy(self) -> "DensityField":
        return DensityField(self.grid, self.values.copy(), self.bc)


def build_grid(r_max: float, n_nodes: int) -> RadialGrid:
    """Build the uniform mesh with nodes r_i = i * r_max / (n_nodes - 1)."""
    if not (r_max > 0.0 and np.isfinite(r_max)):
        raise InvalidArgumentError(f"r_max must be positive, got {r_max}")
    if n_nodes < 8:
        raise InvalidArgumentError(f"n_nodes must be at least 8, got {n_nodes}")
    h = r_max / (n_nodes - 1)
    nodes = np.linspace(0.0, r_max, n_nodes)
    return RadialGrid(r_max=float(r_max), n_nodes=int(n_nodes), h=h, nodes=nodes)


def field_from_values(grid: RadialGrid, values) -> DensityField:
    return DensityField(grid, np.asarray(values, dtype=float))


def field_from_function(grid: RadialGrid, fn) -> DensityField:
    return DensityField(grid, np.asarray(fn(grid.nodes), dtype=float))


def radial_integral(grid: RadialGrid, f: DensityField, eps: float = 0.0) -> float:
    """Composite trapezoid of integral (r+eps) f(r) dr over [0, r_max]."""
    if f.grid != grid:
        raise InvalidArgumentError("field does not live on the given grid")
    if eps < 0.0:
        raise InvalidArgumentError("eps must be nonnegative")
    return float(np.trapezoid((grid.nodes + eps) * f.values, dx=grid.h))


def radial_laplacian(grid: RadialGrid, f: DensityField, eps: float = 0.0) -> DensityField:
    """Second-order conservative discretization of (1/(r+eps)) d/dr((r+eps) df/dr)."""
    if f.grid != grid:
        raise InvalidArgumentError("field does not live on the given grid")
    if eps < 0.0:
        raise InvalidArgumentError("eps must be nonnegative")
    v = f.values
    h = grid.h
    r = grid.nodes
    out = np.empty_like(v)
    r_face_hi = r[1:-1] + 0.5 * h + eps
    r_face_lo = r[1:-1] - 0.5 * h + eps
    out[1:-1] = (
        r_face_hi * (v[2:] - v[1:-1]) - r_face_lo * (v[1:-1] - v[:-2])
    ) / (h * h * (r[1:-1] + eps))
    if eps < 0.5 * h:
        # axis by symmetry: lap f(0) = 2 f''(0) in radial 2-D
        out[0] = 4.0 * (v[1] - v[0]) / (h * h)
    else:
        # ghost reflection of the shifted operator; face radii cancel
        out[0] = 2.0 * (v[1] - v[0]) / (h * h)
    out[-1] = 2.0 * (v[-2] - v[-1]) / (h * h)
    return DensityField(grid, out)


def face_gradient(grid: RadialGrid, f: DensityField) -> np.ndarray:
    """One-sided differences (f_{i+1} - f_i)/h at the n_nodes-1 interior faces."""
    if f.grid != grid:
        raise InvalidArgumentError("field does not live on the given grid")
    return np.diff(f.values) / grid.h


def node_gradient(grid: RadialGrid, f: DensityField) -> np.ndarray:
    """Face gradients averaged back to nodes (single face at each end)."""
    g = face_gradient(grid, f)
    out = np.empty(grid.n_nodes)
    out[0] = g[0]
    out[-1] = g[-1]
    out[1:-1] = 0.5 * (g[:-1] + g[1:])
    return out
