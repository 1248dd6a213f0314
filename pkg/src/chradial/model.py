"""Physical closures: pressure law, truncated mobility, regularized entropy,
chemical potential, and confining potentials with their integrals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import InvalidArgumentError
from .grid import DensityField, RadialGrid, radial_laplacian


@dataclass(frozen=True)
class PotentialSpec:
    """Confining potential V(r) together with its derivative.

    ``quadratic`` is V(r) = r^2.  ``zero`` (V identically 0) is accepted for
    source-driven evolution runs only; the incompressible-limit machinery
    requires a strictly increasing V.
    """

    kind: str
    v: Callable[[np.ndarray], np.ndarray]
    dv: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def quadratic() -> "PotentialSpec":
        return PotentialSpec("quadratic", lambda r: np.asarray(r) ** 2,
                             lambda r: 2.0 * np.asarray(r))

    @staticmethod
    def zero() -> "PotentialSpec":
        return PotentialSpec("zero", lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                             lambda r: np.zeros_like(np.asarray(r, dtype=float)))

    @staticmethod
    def custom(v, dv, r_probe_max: float, name: str = "custom") -> "PotentialSpec":
        """Wrap caller-supplied V, V'; V' must be positive on (0, r_probe_max]."""
        probes = np.linspace(r_probe_max / 64.0, r_probe_max, 64)
        dvals = np.asarray(dv(probes), dtype=float)
        vals = np.asarray(v(probes), dtype=float)
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(dvals))):
            raise InvalidArgumentError("custom potential is not finite on the probe range")
        if not np.all(dvals > 0.0):
            raise InvalidArgumentError(
                "custom potential must be strictly increasing (V' > 0) on the probe range"
            )
        return PotentialSpec(name, v, dv)

    def increasing(self) -> bool:
        return self.kind != "zero"


@dataclass
class Params:
    """Physical and numerical parameters of the model."""

    gamma: float
    delta: float
    eps: float = 0.0
    mass: float = 1.0
    r_b: float = 1.0
    potential: PotentialSpec = field(default_factory=PotentialSpec.quadratic)
    tol_root: float = 1e-12
    tol_newton: float = 1e-10

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise InvalidArgumentError(f"gamma must exceed 1, got {self.gamma}")
        if not self.delta > 0.0:
            raise InvalidArgumentError(f"delta must be positive, got {self.delta}")
        if self.eps < 0.0:
            raise InvalidArgumentError(f"eps must be nonnegative, got {self.eps}")
        if not self.mass > 0.0:
            raise InvalidArgumentError(f"mass must be positive, got {self.mass}")
        if not self.r_b > 0.0:
            raise InvalidArgumentError(f"r_b must be positive, got {self.r_b}")


def pressure(n, gamma: float):
    """Pressure law max(0, n)^gamma; negative densities carry zero pressure."""
    return np.maximum(0.0, n) ** gamma


def pressure_derivative(n, gamma: float):
    """d/dn of max(0, n)^gamma, zero on the inactive branch."""
    return np.where(np.asarray(n) > 0.0, gamma * np.maximum(0.0, n) ** (gamma - 1.0), 0.0)


def mobility(n, eps: float):
    """Truncated mobility: eps for n <= eps, n otherwise."""
    if not eps > 0.0:
        raise InvalidArgumentError("mobility truncation requires eps > 0")
    return np.maximum(np.asarray(n, dtype=float), eps)


def entropy_phi(x, eps: float):
    """Regularized entropy density, nonnegative for all real x.

    phi(x) = x (log eps - 1) + 1 + x^2/(2 eps) - eps/2   for x <= eps,
             x (log x - 1) + 1                           for x > eps.
    """
    if not (0.0 < eps < 1.0):
        raise InvalidArgumentError("entropy regularization requires eps in (0, 1)")
    x = np.asarray(x, dtype=float)
    below = x * (np.log(eps) - 1.0) + 1.0 + x * x / (2.0 * eps) - eps / 2.0
    xa = np.where(x > eps, x, 1.0)  # dummy positive argument on the other branch
    above = xa * (np.log(xa) - 1.0) + 1.0
    out = np.where(x > eps, above, below)
    return out if out.ndim else float(out)


def chemical_potential(grid: RadialGrid, n: DensityField, p: Params) -> DensityField:
    """mu = max(0,n)^gamma - delta * (1/(r+eps)) d/dr((r+eps) dn/dr)."""
    lap = radial_laplacian(grid, n, p.eps)
    mu = DensityField(grid, pressure(n.values, p.gamma) - p.delta * lap.values)
    return mu.check_finite("chemical potential")


def H_integral(z: float, R: float, V: PotentialSpec) -> float:
    """Integral of u V(u) du from z to R; closed form for the quadratic V."""
    if z < 0.0 or z > R:
        raise InvalidArgumentError(f"need 0 <= z <= R, got z={z}, R={R}")
    if V.kind == "quadratic":
        return (R**4 - z**4) / 4.0
    if z == R:
        return 0.0
    val, _ = quad(lambda u: u * float(V.v(u)), z, R, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val
