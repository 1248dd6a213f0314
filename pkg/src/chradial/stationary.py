"""Finite-gamma stationary states with a free boundary.

Solves n^g - (delta/r) n' - delta n'' = R^2 - r^2 - lambda on (0, R) with
n'(0) = 0 (symmetry) and n(R) = 0, then tunes lambda so that n'(R) = 0 and
tunes R so that the profile carries a prescribed mass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import (BracketError, ConvergenceError, DomainTooSmallError,
                     InvalidArgumentError)
from .grid import DensityField, RadialGrid, build_grid, radial_integral
from .model import Params, pressure, pressure_derivative

log = logging.getLogger(__name__)

REFINE = 4  # internal mesh refinement factor of the Newton solve
MAX_NEWTON = 100
MAX_HALVINGS = 30


@dataclass
class StationaryProfile:
    R: float
    lam: float
    n: DensityField
    gamma: float
    delta: float
    mass: float
    residual_neumann: float
    newton_iters: int
    bisect_iters: int


def _newton_solve(r: np.ndarray, h: float, R: float, lam: float, p: Params,
                  guess: np.ndarray) -> Tuple[np.ndarray, int]:
    """Damped Newton on the interior unknowns n_0..n_{M-2} (n_{M-1} = 0)."""
    m = r.size
    rhs = R * R - r * r - lam
    n = guess.copy()
    n[-1] = 0.0
    d = p.delta
    h2 = h * h
    r_in = r[1:-1]
    r_hi = (r_in + 0.5 * h) / r_in
    r_lo = (r_in - 0.5 * h) / r_in

    def residual(nv):
        f = np.empty(m - 1)
        f[0] = pressure(nv[0], p.gamma) - d * 4.0 * (nv[1] - nv[0]) / h2 - rhs[0]
        lap = (r_hi * (nv[2:] - nv[1:-1]) - r_lo * (nv[1:-1] - nv[:-2])) / h2
        f[1:] = pressure(nv[1:-1], p.gamma) - d * lap - rhs[1:-1]
        return f

    f = residual(n)
    res = float(np.max(np.abs(f)))
    eps_mach = float(np.finfo(float).eps)
    for it in range(1, MAX_NEWTON + 1):
        # the residual cannot be evaluated below the rounding floor of the
        # discrete laplacian, so the tolerance adapts to the mesh
        floor = 16.0 * eps_mach * d * max(1.0, float(np.max(np.abs(n)))) / h2
        tol = max(p.tol_newton, floor)
        if res < tol:
            return n, it - 1
        ab = np.zeros((3, m - 1))
        ab[1, 0] = pressure_derivative(n[0], p.gamma) + 4.0 * d / h2
        ab[0, 1] = -4.0 * d / h2
        ab[1, 1:] = pressure_derivative(n[1:-1], p.gamma) + d * (r_hi + r_lo) / h2
        ab[0, 2:] = -d * r_hi[:-1] / h2
        ab[2, :-1] = -d * r_lo / h2
        try:
            step = solve_banded((1, 1), ab, -f)
        except LinAlgError as exc:
            raise ConvergenceError("singular jacobian in stationary solve",
                                   residual=res, iterations=it) from exc
        alpha = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = n.copy()
            trial[:-1] += alpha * step
            f_trial = residual(trial)
            res_trial = float(np.max(np.abs(f_trial)))
            if res_trial < res or res_trial < tol:
                n, f, res = trial, f_trial, res_trial
                break
            alpha *= 0.5
        else:
            if res < 100.0 * tol:  # stagnation at the rounding floor
                return n, it
            raise ConvergenceError(
                "stationary Newton stagnated after 30 step halvings",
                residual=res, iterations=it)
    if res < max(p.tol_newton, floor):
        return n, MAX_NEWTON
    raise ConvergenceError(
        f"stationary Newton did not converge; last residual {res:.3e}",
        residual=res, iterations=MAX_NEWTON)


def _default_guess(r: np.ndarray, R: float, lam: float, gamma: float) -> np.ndarray:
    core = np.maximum(0.0, R * R - r * r - lam)
    return core ** (1.0 / gamma)


def solve_bvp_given_lambda(R: float, lam: float, p: Params, n_nodes: int,
                           _warm: Optional[np.ndarray] = None
                           ) -> Tuple[DensityField, float, int]:
    """Solve the profile for a prescribed multiplier.

    Solves on an internally refined mesh (factor 4) and restricts back, so
    the returned nodal values carry the refined truncation error while the
    overall order stays two.  Returns (profile, n'(R), newton iterations).
    """
    if not R > 0.0:
        raise InvalidArgumentError(f"R must be positive, got {R}")
    if n_nodes < 64:
        raise InvalidArgumentError(f"n_nodes must be at least 64, got {n_nodes}")
    grid = build_grid(R, n_nodes)
    fine = build_grid(R, REFINE * (n_nodes - 1) + 1)
    if _warm is not None and _warm.size == fine.n_nodes:
        guess = _warm
    else:
        guess = _default_guess(fine.nodes, R, lam, p.gamma)
    n_fine, iters = _newton_solve(fine.nodes, fine.h, R, lam, p, guess)
    # one-sided 3-point slope at r = R on the fine mesh (n_{M-1} = 0)
    slope = (-4.0 * n_fine[-2] + n_fine[-3]) / (2.0 * fine.h)
    field = DensityField(grid, n_fine[::REFINE].copy())
    field._fine = n_fine  # warm-start payload for lambda continuation
    return field, float(slope), iters


def find_lambda(R: float, p: Params, n_nodes: int) -> Tuple[float, StationaryProfile]:
    """Bisect the multiplier in [0, R^2] against the sign of n'(R)."""
    if not R > 0.0:
        raise InvalidArgumentError(f"R must be positive, got {R}")
    lo, hi = 0.0, R * R
    f_lo, s_lo, it_lo = solve_bvp_given_lambda(R, lo, p, n_nodes)
    f_hi, s_hi, it_hi = solve_bvp_given_lambda(R, hi, p, n_nodes)
    newton_total = it_lo + it_hi
    if not (s_lo < 0.0 < s_hi):
        raise BracketError(
            f"endpoint slopes ({s_lo:.3e}, {s_hi:.3e}) do not bracket zero; "
            "the mesh is too coarse for this (R, gamma, delta)")
    warm = f_lo._fine
    field, slope = f_lo, s_lo
    bisect_iters = 0
    lam = lo
    while bisect_iters < 200:
        mid = 0.5 * (lo + hi)
        field, slope, it = solve_bvp_given_lambda(R, mid, p, n_nodes, _warm=warm)
        warm = field._fine
        newton_total += it
        bisect_iters += 1
        if slope < 0.0:
            lo = mid
        else:
            hi = mid
        lam = mid
        if hi - lo < p.tol_root * R * R and abs(slope) < 10.0 * p.tol_newton:
            break
        if hi - lo <= 4.0 * np.finfo(float).eps * max(hi, 1.0):
            break  # bracket at machine resolution; slope is discretization-limited
    else:
        raise ConvergenceError(
            "lambda bisection exhausted 200 iterations",
            residual=abs(slope), iterations=bisect_iters)
    prof = StationaryProfile(
        R=R, lam=lam, n=field, gamma=p.gamma, delta=p.delta,
        mass=radial_integral(field.grid, field),
        residual_neumann=abs(slope), newton_iters=newton_total,
        bisect_iters=bisect_iters)
    return lam, prof


def mass_of(profile: StationaryProfile) -> float:
    """Integral of r n dr over the support."""
    return radial_integral(profile.n.grid, profile.n)


def find_radius_for_mass(m: float, p: Params, n_nodes: int = 256
                         ) -> StationaryProfile:
    """Invert R -> mass with a bracketed secant (Illinois) iteration."""
    if not m > 0.0:
        raise InvalidArgumentError(f"mass must be positive, got {m}")
    r_star = np.sqrt(2.0 * m)
    lo = 0.9 * r_star
    hi = min(1.5 * r_star, p.r_b)
    if hi <= lo:
        lo = 0.5 * hi
    # for masses far below the stiff-pressure regime the support radius can
    # sit well above sqrt(2m), so the upper widening may continue to r_b
    lo_min, hi_max = 0.45 * r_star, p.r_b

    cache = {}

    def g(R):
        if R not in cache:
            _, prof = find_lambda(R, p, n_nodes)
            cache[R] = prof
        return cache[R].mass - m

    g_lo, g_hi = g(lo), g(hi)
    while g_lo > 0.0 and lo > lo_min:
        lo = max(lo_min, 0.7 * lo)
        g_lo = g(lo)
    while g_hi < 0.0 and hi < hi_max:
        hi = min(hi_max, 1.4 * hi)
        g_hi = g(hi)
    if g_hi < 0.0 and hi >= p.r_b:
        raise DomainTooSmallError(
            f"mass {m} needs a support radius beyond the domain r_b={p.r_b}")
    if not (g_lo < 0.0 < g_hi):
        _scan_report(m, p, n_nodes, lo_min, hi_max)
        raise BracketError(
            f"could not bracket mass {m} in R in [{lo_min:.3g}, {hi_max:.3g}]")

    samples = sorted((R, gv) for R, gv in ((k, v.mass - m) for k, v in cache.items()))
    if any(b[1] < a[1] for a, b in zip(samples, samples[1:])):
        log.warning("mass(R) samples are non-monotone; falling back to a scan")
        return _scan_solve(m, p, n_nodes, lo, hi)

    side = 0
    R_best, g_best = hi, g_hi
    for _ in range(80):
        R_new = (lo * g_hi - hi * g_lo) / (g_hi - g_lo)
        g_new = g(R_new)
        if abs(g_new) < abs(g_best):
            R_best, g_best = R_new, g_new
        if abs(g_new) < 1e-8 * m:
            break
        if g_new < 0.0:
            lo, g_lo = R_new, g_new
            if side == -1:
                g_hi *= 0.5  # Illinois damping keeps the bracket moving
            side = -1
        else:
            hi, g_hi = R_new, g_new
            if side == 1:
                g_lo *= 0.5
            side = 1
    else:
        raise ConvergenceError(
            f"mass inversion stalled at |mass - m| = {abs(g_best):.3e}",
            residual=abs(g_best), iterations=80)
    return cache[R_best]


def _scan_report(m, p, n_nodes, lo, hi):
    rows = []
    for R in np.linspace(max(lo, 1e-3), hi, 9):
        try:
            _, prof = find_lambda(float(R), p, n_nodes)
            rows.append((float(R), prof.mass))
        except Exception:  # scan is best-effort diagnostics
            rows.append((float(R), float("nan")))
    log.error("mass scan: %s", ", ".join(f"R={R:.4g} m={mm:.4g}" for R, mm in rows))


def _scan_solve(m, p, n_nodes, lo, hi) -> StationaryProfile:
    radii = np.linspace(lo, hi, 25)
    best = None
    for R in radii:
        _, prof = find_lambda(float(R), p, n_nodes)
        err = abs(prof.mass - m)
        if best is None or err < best[0]:
            best = (err, float(R), prof)
    # local refinement around the best sample
    span = (hi - lo) / 24.0
    for R in np.linspace(best[1] - span, best[1] + span, 25):
        if R <= 0.0:
            continue
        _, prof = find_lambda(float(R), p, n_nodes)
        err = abs(prof.mass - m)
        if err < best[0]:
            best = (err, float(R), prof)
    return best[2]


def extend_to_domain(profile: StationaryProfile, r_b: float) -> DensityField:
    """Zero-pad the compactly supported profile out to radius r_b.

    The padded mesh keeps the profile's spacing, so the outer radius snaps
    to the nearest node at or beyond r_b.
    """
    if r_b < profile.R:
        raise InvalidArgumentError(
            f"r_b={r_b} is smaller than the support radius R={profile.R}")
    grid = profile.n.grid
    if r_b == profile.R:
        return profile.n.copy()
    extra = int(np.ceil((r_b - profile.R) / grid.h - 1e-12))
    out_grid = build_grid(profile.R + extra * grid.h, grid.n_nodes + extra)
    vals = np.zeros(out_grid.n_nodes)
    vals[:grid.n_nodes] = profile.n.values
    return DensityField(out_grid, vals)
