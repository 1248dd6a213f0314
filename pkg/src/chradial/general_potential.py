"""Stiff-pressure limit machinery for a general increasing confinement V.

Everything is driven by the potential moment H(z) = integral of u V(u) du
from z to R.  The transition-zone width is found from the scalar equation
F(tau) = 2 delta with tau = (R^2 - R0^2)/R^2, and the multiplier follows
algebraically.  The quadratic potential doubles as a consistency oracle for
the V = r^2 closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import FeasibilityError, InvalidArgumentError
from .model import PotentialSpec

TEST_POTENTIALS: Dict[str, PotentialSpec] = {
    "r2": PotentialSpec.quadratic(),
    "r4": PotentialSpec("r4", lambda r: np.asarray(r, dtype=float) ** 4,
                        lambda r: 4.0 * np.asarray(r, dtype=float) ** 3),
    "expm1": PotentialSpec("expm1", lambda r: np.expm1(np.asarray(r, dtype=float)),
                           lambda r: np.exp(np.asarray(r, dtype=float))),
}


@dataclass
class GeneralLimitProfile:
    R: float
    tau: float
    R0: float
    lam: float
    jump_asymptote: float
    potential: PotentialSpec


class JumpEstimate(NamedTuple):
    jump: float
    width: float


class HCache:
    """H(z) and K(s) = integral of H(z)/z dz from s to R, cached per (R, V).

    H comes from the antiderivative of a cubic spline of z V(z); K from the
    antiderivative of a spline of H(z)/z.  The quadratic potential keeps its
    closed forms.  Resolution is chosen so interpolation error stays below
    1e-11 relative of the H scale.
    """

    def __init__(self, R: float, V: PotentialSpec, n_cache: int = 4097):
        if not R > 0.0:
            raise InvalidArgumentError("R must be positive")
        self.R = R
        self.V = V
        self.quadratic = V.kind == "quadratic"
        if not self.quadratic:
            z = np.linspace(0.0, R, n_cache)
            g = CubicSpline(z, z * np.asarray(V.v(z), dtype=float)).antiderivative()
            g_R = float(g(R))
            self._h = lambda s: g_R - g(s)
            # H(z)/z -> R^2 V'(0)... finite at 0 only through H(0); integrand
            # H(z)/z diverges like H(0)/z, but K is only used for s > 0.
            zk = np.linspace(R * 1e-6, R, n_cache)
            kspline = CubicSpline(zk, self._h(zk) / zk).antiderivative()
            k_R = float(kspline(R))
            self._k = lambda s: k_R - kspline(s)
            self._zk_min = zk[0]

    def h(self, z: float) -> float:
        """Integral of u V(u) du over [z, R]."""
        if z < 0.0 or z > self.R * (1.0 + 1e-12):
            raise InvalidArgumentError(f"need 0 <= z <= R, got {z}")
        z = min(z, self.R)
        if self.quadratic:
            return (self.R**4 - z**4) / 4.0
        return float(self._h(z))

    def k(self, s: float) -> float:
        """Integral of H(z)/z dz over [s, R]."""
        if not 0.0 < s <= self.R * (1.0 + 1e-12):
            raise InvalidArgumentError(f"need 0 < s <= R, got {s}")
        s = min(s, self.R)
        if self.quadratic:
            R = self.R
            return (R**4 / 4.0) * math.log(R / s) - (R**4 - s**4) / 16.0
        if s < self._zk_min:
            tail, _ = quad(lambda z: self.h(z) / z, s, self._zk_min,
                           epsabs=1e-14, epsrel=1e-10, limit=200)
            return tail + float(self._k(self._zk_min))
        return float(self._k(s))


def solution_n_general(r: float, R: float, lam: float, delta: float,
                       V: PotentialSpec, cache: HCache = None
                       ) -> Tuple[float, float]:
    """Transition profile for general V:
    n(r) = (R^2/2d)(V(R)-L) log(r/R) + ((R^2-r^2)/4d)(V(R)-L) + K(r)/d,
    n'(r) = (R^2/2d)(V(R)-L)/r - (r/2d)(V(R)-L) - H(r)/(d r).
    """
    if not (0.0 < r <= R):
        raise InvalidArgumentError(f"need 0 < r <= R, got r={r}")
    if cache is None or cache.R != R or cache.V is not V:
        cache = HCache(R, V)
    vR = float(V.v(R))
    a = vR - lam
    val = (R * R / (2.0 * delta)) * a * math.log(r / R) \
        + ((R * R - r * r) / (4.0 * delta)) * a \
        + cache.k(r) / delta
    slope = (R * R / (2.0 * delta)) * a / r - (r / (2.0 * delta)) * a \
        - cache.h(r) / (delta * r)
    return val, slope


def _log_factor(tau: float) -> float:
    """log(1-tau)/tau + 1, by series below 1e-4 to avoid cancellation."""
    if tau < 1e-4:
        return -tau / 2.0 - tau * tau / 3.0 - tau**3 / 4.0
    return math.log1p(-tau) / tau + 1.0


def F_tau(tau: float, R: float, V: PotentialSpec, cache: HCache = None) -> float:
    """F(tau) = H(sqrt(1-tau) R)(log(1-tau)/tau + 1) + 2 K(sqrt(1-tau) R)."""
    if tau < 0.0 or tau >= 1.0:
        raise InvalidArgumentError(f"tau must lie in [0, 1), got {tau}")
    if tau == 0.0:
        return 0.0
    if cache is None or cache.R != R or cache.V is not V:
        cache = HCache(R, V)
    r0 = math.sqrt(1.0 - tau) * R
    return cache.h(r0) * _log_factor(tau) + 2.0 * cache.k(r0)


def _F_prime(tau: float, R: float, cache: HCache) -> float:
    """F'(tau) = (1/tau)(log(1-tau)/tau + 1)(R^2 tau V(r0)/2 - H(r0))."""
    r0 = math.sqrt(1.0 - tau) * R
    bracket = 0.5 * R * R * tau * float(cache.V.v(r0)) - cache.h(r0)
    return (_log_factor(tau) / tau) * bracket


def solve_tau(R: float, delta: float, V: PotentialSpec,
              cache: HCache = None) -> float:
    """Solve F(tau) = 2 delta on (0, 1) by bisection plus one Newton polish."""
    if not (R > 0.0 and delta > 0.0):
        raise InvalidArgumentError("R and delta must be positive")
    if cache is None or cache.R != R or cache.V is not V:
        cache = HCache(R, V)
    target = 2.0 * delta
    hi = 1.0 - 1e-12
    if F_tau(hi, R, V, cache) <= target:
        raise FeasibilityError(
            f"2 delta = {target:.3e} exceeds the range of F on (0,1) "
            f"(F(1-) = {F_tau(hi, R, V, cache):.3e})")
    lo = 0.0
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if F_tau(mid, R, V, cache) < target:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    fp = _F_prime(tau, R, cache)
    if fp > 0.0:
        polished = tau - (F_tau(tau, R, V, cache) - target) / fp
        if lo <= polished <= hi:
            tau = polished
    return tau


def lambda_general(R: float, delta: float, V: PotentialSpec
                   ) -> Tuple[float, float]:
    """Recover the multiplier from tau:
    lambda = V(R) - 2 H(R0)/(R^2 - R0^2), with R0 = R sqrt(1 - tau)."""
    cache = HCache(R, V)
    tau = solve_tau(R, delta, V, cache)
    R0 = R * math.sqrt(1.0 - tau)
    lam = float(V.v(R)) - 2.0 * cache.h(R0) / (R * R - R0 * R0)
    return lam, R0


def tau_asymptote(R: float, delta: float, V: PotentialSpec) -> float:
    """Leading order of the transition width: tau^3 = 96 delta / (R^3 V'(R))."""
    dv = float(V.dv(R))
    if not dv > 0.0:
        raise InvalidArgumentError("V'(R) must be positive")
    return 2.0 * 12.0 ** (1.0 / 3.0) * delta ** (1.0 / 3.0) / (R * dv ** (1.0 / 3.0))


def jump_general_asymptote(R: float, delta: float, V: PotentialSpec
                           ) -> JumpEstimate:
    """Leading-order pressure jump (12^(1/3)/2) delta^(1/3) V'(R)^(2/3) and
    support-width estimate R^2 - R0^2 = R^2 tau_asymptote."""
    dv = float(V.dv(R))
    if not (R > 0.0 and delta > 0.0 and dv > 0.0):
        raise InvalidArgumentError("need R, delta, V'(R) all positive")
    jump = 0.5 * 12.0 ** (1.0 / 3.0) * delta ** (1.0 / 3.0) * dv ** (2.0 / 3.0)
    width = R * R * tau_asymptote(R, delta, V)
    return JumpEstimate(jump=jump, width=width)


def build_general_profile(R: float, delta: float, V: PotentialSpec
                          ) -> GeneralLimitProfile:
    cache = HCache(R, V)
    tau = solve_tau(R, delta, V, cache)
    R0 = R * math.sqrt(1.0 - tau)
    lam = float(V.v(R)) - 2.0 * cache.h(R0) / (R * R - R0 * R0)
    return GeneralLimitProfile(
        R=R, tau=tau, R0=R0, lam=lam,
        jump_asymptote=jump_general_asymptote(R, delta, V).jump,
        potential=V)
