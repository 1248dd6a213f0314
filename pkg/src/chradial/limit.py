"""Closed-form stiff-pressure limit for the quadratic confinement V = r^2.

The limiting density is 1 on [0, R0], follows an explicit transition profile
u_c on [R0, R], and vanishes beyond; the limiting pressure drops by lambda_c
at R0.  Everything reduces to the scalar root problem f(x) = 8 delta / R^4.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (ChradialError, ConvergenceError, FeasibilityError,
                     InvalidArgumentError)
from .grid import DensityField, build_grid, radial_integral
from . import stationary
from .model import Params

XC_BRACKET_TOL = 1e-14


@dataclass
class IncompressibleProfile:
    R: float
    R0: float
    lambda_c: float
    x_c: float
    jump: float
    mass: float
    n_inc: DensityField
    p_inc: DensityField


@dataclass
class SweepRow:
    gamma: float
    R_gamma: float
    sup_err: float
    R_err: float
    p_at_R0: float
    lambda_c: float
    jump_asymptote: float
    error: Optional[str] = None


def reference_u(r: float, R: float, lambda_u: float, delta: float
                ) -> Tuple[float, float]:
    """Transition profile and slope:
    u(r) = (R^2/4d)(R^2-2L) ln(r/R) + (r^2-R^2)^2/(16d) + ((R^2-2L)/8d)(R^2-r^2),
    u'(r) = (R^2-r^2)(R^2-r^2-2L)/(4 d r).
    """
    if not (0.0 < r <= R):
        raise InvalidArgumentError(f"need 0 < r <= R, got r={r}, R={R}")
    if not (0.0 <= lambda_u <= R * R):
        raise InvalidArgumentError(f"lambda must lie in [0, R^2], got {lambda_u}")
    a = R * R - 2.0 * lambda_u
    val = (R * R / (4.0 * delta)) * a * math.log(r / R) \
        + (r * r - R * R) ** 2 / (16.0 * delta) \
        + (a / (8.0 * delta)) * (R * R - r * r)
    slope = (R * R - r * r) * (R * R - r * r - 2.0 * lambda_u) / (4.0 * delta * r)
    return val, slope


def f_xc(x):
    """f(x) = (1-x) ln(1-x) - x^2/2 + x, the mass-balance function.

    Increasing from f(0)=0 to f(1)=1/2; evaluated with log1p and a series
    near 0 to dodge cancellation (the value is ~x^3/6 there).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x >= 1.0):
        raise InvalidArgumentError("f is defined on [0, 1)")
    small = x < 1e-3
    # sum_{k>=3} x^k/(k(k-1)) truncated; error < x^8 ~ 1e-24 on this branch
    xs = np.where(small, x, 0.0)
    series = sum(xs**k / (k * (k - 1.0)) for k in range(3, 8))
    exact = (1.0 - x) * np.log1p(np.where(small, -0.5, -x)) - 0.5 * x * x + x
    out = np.where(small, series, exact)
    return out if out.ndim else float(out)


def _f_prime(x: float) -> float:
    # f'(x) = -ln(1-x) - x
    return -math.log1p(-x) - x


def solve_xc(R: float, delta: float) -> float:
    """Root of f(x) = 8 delta / R^4 in (0,1); exists iff 16 delta < R^4."""
    if not (R > 0.0 and delta > 0.0):
        raise InvalidArgumentError("R and delta must be positive")
    target = 8.0 * delta / R**4
    if not 16.0 * delta < R**4:
        raise FeasibilityError(
            f"no saturation zone: need 16 delta < R^4, got 16*{delta} vs {R**4}")
    lo, hi = 0.0, 1.0 - 1e-15
    while hi - lo > XC_BRACKET_TOL:
        mid = 0.5 * (lo + hi)
        if f_xc(mid) < target:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    fp = _f_prime(x)
    if fp > 0.0:
        x -= (f_xc(x) - target) / fp
    return min(max(x, lo - XC_BRACKET_TOL), hi + XC_BRACKET_TOL)


def mass_formula(R: float, delta: float) -> float:
    """Total mass of the limiting profile: R^6 x_c^3 / (96 delta)."""
    x = solve_xc(R, delta)
    return R**6 * x**3 / (96.0 * delta)


# Smallest invertible mass: mass_formula tends to (2/3) sqrt(delta) as the
# transition zone swallows the whole support (x_c -> 1, R^4 -> 16 delta).
def _mass_floor(delta: float) -> float:
    return (2.0 / 3.0) * math.sqrt(delta)


def radius_for_mass(m: float, delta: float) -> float:
    """Invert R -> mass_formula(R, delta), feasible for m above the floor
    (2/3) sqrt(delta) where the saturation zone disappears."""
    if not delta > 0.0:
        raise InvalidArgumentError("delta must be positive")
    if m <= _mass_floor(delta):
        raise FeasibilityError(
            f"mass {m} is at or below the invertibility floor "
            f"{_mass_floor(delta):.6g} for delta={delta}")
    lo, hi = 0.9 * math.sqrt(2.0 * m), 1.5 * math.sqrt(2.0 * m)
    floor = (16.0 * delta) ** 0.25 * (1.0 + 1e-12)
    lo = max(lo, floor)
    for _ in range(200):
        if mass_formula(lo, delta) < m:
            break
        lo = max(floor, 0.5 * (lo + floor))
    for _ in range(200):
        if mass_formula(hi, delta) > m:
            break
        hi *= 1.5
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if mass_formula(mid, delta) < m:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_profile(m: float, delta: float, r_out: float, n_nodes: int
                  ) -> IncompressibleProfile:
    """Assemble the limiting density/pressure fields for a given mass."""
    R = radius_for_mass(m, delta)
    if r_out < R:
        raise InvalidArgumentError(f"r_out={r_out} must cover the support R={R:.6g}")
    x_c = solve_xc(R, delta)
    lambda_c = 0.5 * R * R * x_c
    R0 = R * math.sqrt(1.0 - x_c)
    grid = build_grid(r_out, n_nodes)
    n_vals = np.zeros(grid.n_nodes)
    p_vals = np.zeros(grid.n_nodes)
    for i, r in enumerate(grid.nodes):
        if r <= R0:
            n_vals[i] = 1.0
            p_vals[i] = R * R - r * r - lambda_c
        elif r < R:
            n_vals[i] = reference_u(r, R, lambda_c, delta)[0]
    n_inc = DensityField(grid, n_vals)
    p_inc = DensityField(grid, p_vals)
    return IncompressibleProfile(
        R=R, R0=R0, lambda_c=lambda_c, x_c=x_c, jump=lambda_c,
        mass=radial_integral(grid, n_inc), n_inc=n_inc, p_inc=p_inc)


def jump_asymptotic(R: float, delta: float) -> float:
    """Leading-order pressure jump 6^(1/3) R^(2/3) delta^(1/3)."""
    if not (R > 0.0 and delta > 0.0):
        raise InvalidArgumentError("R and delta must be positive")
    return 6.0 ** (1.0 / 3.0) * R ** (2.0 / 3.0) * delta ** (1.0 / 3.0)


def _sweep_one(gamma: float, m: float, delta: float,
               inc: IncompressibleProfile, n_nodes: int) -> SweepRow:
    p = Params(gamma=gamma, delta=delta, mass=m, r_b=2.0 * inc.R)
    jump_as = jump_asymptotic(inc.R, delta)
    try:
        prof = stationary.find_radius_for_mass(m, p, n_nodes=n_nodes)
    except ChradialError as exc:
        return SweepRow(gamma, math.nan, math.nan, math.nan, math.nan,
                        inc.lambda_c, jump_as, error=str(exc))
    ext = stationary.extend_to_domain(prof, inc.n_inc.grid.r_max)
    n_gamma = np.interp(inc.n_inc.grid.nodes, ext.grid.nodes, ext.values)
    sup_err = float(np.max(np.abs(n_gamma - inc.n_inc.values)))
    n_at_r0 = float(np.interp(inc.R0, ext.grid.nodes, ext.values))
    p_at_r0 = max(0.0, n_at_r0) ** gamma
    return SweepRow(gamma=gamma, R_gamma=prof.R, sup_err=sup_err,
                    R_err=float(abs(prof.R - inc.R)), p_at_R0=p_at_r0,
                    lambda_c=inc.lambda_c, jump_asymptote=jump_as)


def gamma_sweep(m: float, delta: float, gammas: Sequence[float],
                n_nodes: int = 256) -> List[SweepRow]:
    """Compare finite-gamma stationary states against the limiting profile."""
    gammas = list(gammas)
    if any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise InvalidArgumentError("gammas must be strictly increasing")
    R_guess = radius_for_mass(m, delta)
    inc = build_profile(m, delta, r_out=1.6 * R_guess, n_nodes=2049)
    max_workers = max(1, int(os.environ.get("CHRADIAL_THREADS", "1")))
    if max_workers > 1 and len(gammas) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(
                lambda g: _sweep_one(g, m, delta, inc, n_nodes), gammas))
    else:
        rows = [_sweep_one(g, m, delta, inc, n_nodes) for g in gammas]
    return rows
