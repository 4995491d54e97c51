"""Stationary states of the drift-diffusion equation without interaction.

For a radial confining potential V the minimiser at exponent m is

    rho_m(x) = ((m-1)/m * (C_m - V(x))_+) ** (1/(m-1)),

with C_m fixing unit mass, and the m = infinity state is the indicator of
the sublevel set {V < C_inf} of unit volume.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy import integrate, optimize

from .measures import DiscreteDensity, Grid, unit_ball_volume
from .models import Potential, PotentialSpec

MASS_TOL = 1e-10
QUAD_TOL = 1e-14
MASS_RTOL = 1e-12  # two digits under MASS_TOL; tighter hits roundoff for m near 1


class ConfigurationError(ValueError):
    pass


def _confining(V: Union[Potential, PotentialSpec]) -> Potential:
    return V.confining if isinstance(V, PotentialSpec) else V


def _radial_weight(d: int) -> float:
    # surface measure of the unit sphere; for d = 1 this is the factor 2 of
    # an even integrand on the line
    return d * unit_ball_volume(d)


def support_radius(V: Potential, level: float) -> float:
    """Largest r with V(r) = level, for V increasing in |x| off its flat part."""
    if level <= float(V(0.0)):
        return 0.0
    hi = 1.0
    while float(V(hi)) < level:
        hi *= 2.0
        if hi > 1e12:
            raise ConfigurationError("potential does not reach the requested level")
    return optimize.brentq(lambda r: float(V(r)) - level, 0.0, hi, xtol=1e-15, rtol=1e-15)


def infinity_radius(d: int) -> float:
    return unit_ball_volume(d) ** (-1.0 / d)


def infinity_constant(V: Union[Potential, PotentialSpec], d: int) -> float:
    V = _confining(V)
    c = float(V(infinity_radius(d)))
    if c <= 0:
        raise ConfigurationError("potential vanishes on the whole unit-volume ball")
    return c


def profile_mass(V: Union[Potential, PotentialSpec], m: float, d: int, level: float) -> float:
    """Total mass of ((m-1)/m (level - V)_+)^(1/(m-1)) over R^d."""
    V = _confining(V)
    R = support_radius(V, level)
    if R == 0.0:
        return 0.0
    k = 1.0 / (m - 1.0)
    scale = (m - 1.0) / m

    def plain(r):
        return (scale * max(level - float(V(r)), 0.0)) ** k * r ** (d - 1)

    def reduced(r):
        # (level - V(r)) / (R - r) is smooth up to r = R for V'(R) > 0
        gap = R - r
        if gap <= 0:
            slope = float(V.grad(R))
        else:
            slope = (level - float(V(r))) / gap
        return (scale * max(slope, 0.0)) ** k * r ** (d - 1)

    cuts = [b for b in V.breaks if 0.0 < b < R]
    start = cuts[-1] if cuts else 0.0
    total = 0.0
    edges = [0.0] + cuts
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(plain, a, b, epsabs=QUAD_TOL, epsrel=MASS_RTOL, limit=200)[0]
    total += integrate.quad(
        reduced, start, R, weight="alg", wvar=(0.0, k),
        epsabs=QUAD_TOL, epsrel=MASS_RTOL, limit=200,
    )[0]
    return _radial_weight(d) * total


def solve_cm(V: Union[Potential, PotentialSpec], m: float, d: int) -> float:
    """Normalisation constant C_m by bisection on the monotone mass map."""
    V = _confining(V)
    if not m > 1:
        raise ValueError("m must exceed 1")
    if V.is_zero:
        raise ConfigurationError("stationary states need a confining potential")
    c_inf = infinity_constant(V, d)

    def defect(c):
        return profile_mass(V, m, d, c) - 1.0

    lo = 0.5 * c_inf
    while defect(lo) > 0:
        lo *= 0.5
        if lo < 1e-12 * c_inf:
            raise ConfigurationError("could not bracket C_m from below")
    hi = c_inf
    while defect(hi) < 0:
        hi *= 2.0
        if hi > 1e3 * c_inf:
            raise ConfigurationError(f"C_m bracket exceeded 1e3 * C_inf for m={m}")
    f_lo = defect(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = defect(mid)
        if f_mid == 0 or hi - lo <= 4e-16 * hi:
            break
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    if abs(defect(c)) > MASS_TOL:
        raise ConfigurationError(f"mass defect {defect(c):.2e} above tolerance at m={m}")
    return c


@dataclass(frozen=True)
class StationaryProfile:
    kind: str  # "finite_m" or "infinity"
    m: float
    constant: float
    support_radius: float
    potential: Potential
    dimension: int

    def __call__(self, x) -> np.ndarray:
        r = np.abs(np.asarray(x, dtype=float))
        if self.kind == "infinity":
            return (r < self.support_radius).astype(float)
        gap = np.clip(self.constant - self.potential(r), 0.0, None)
        return ((self.m - 1.0) / self.m * gap) ** (1.0 / (self.m - 1.0))

    def analytic_mass(self) -> float:
        if self.kind == "infinity":
            return unit_ball_volume(self.dimension) * self.support_radius**self.dimension
        return profile_mass(self.potential, self.m, self.dimension, self.constant)


def stationary_profile(V: Union[Potential, PotentialSpec], m: float, d: int) -> StationaryProfile:
    V = _confining(V)
    if math.isinf(m):
        return StationaryProfile("infinity", math.inf, infinity_constant(V, d),
                                 infinity_radius(d), V, d)
    c = solve_cm(V, m, d)
    return StationaryProfile("finite_m", float(m), c, support_radius(V, c), V, d)


def _ball_fraction(grid: Grid, radius: float) -> np.ndarray:
    """Fraction of every cell lying inside the centred ball of ``radius``."""
    e = grid.edges
    if not grid.is_radial:
        overlap = np.clip(np.minimum(e[1:], radius) - np.maximum(e[:-1], -radius), 0.0, None)
        return overlap / grid.h
    d = grid.dimension
    inner = np.minimum(e[:-1], radius) ** d
    outer = np.minimum(e[1:], radius) ** d
    return (outer - inner) / (e[1:] ** d - e[:-1] ** d)


def build_profile(V: Union[Potential, PotentialSpec], m: float, d: int, grid: Grid):
    """Closed-form stationary state and its unit-mass discretisation.

    Finite m is sampled at cell centres; the m = infinity indicator uses
    exact cell-volume fractions so that its support is not snapped to cells.
    """
    if grid.dimension != d:
        raise ValueError(f"grid dimension {grid.dimension} does not match d={d}")
    prof = stationary_profile(V, m, d)
    if prof.kind == "infinity":
        vals = _ball_fraction(grid, prof.support_radius)
    else:
        vals = prof(grid.centers)
    return prof, DiscreteDensity.normalized(grid, vals)


def support_threshold(d: int, tol: float = 1e-13) -> float:
    """The constant omega_d^(2/d) exp(-d int_0^1 log(1-s^2) s^(d-1) ds).

    log(1-s^2) = log(1-s) + log(1+s); the first part is integrated against
    QUADPACK's logarithmic end-point weight.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    sing = integrate.quad(lambda s: 1.0, 0.0, 1.0, weight="alg-logb",
                          wvar=(d - 1.0, 0.0), epsabs=tol, epsrel=tol)[0]
    smooth = integrate.quad(lambda s: math.log1p(s) * s ** (d - 1), 0.0, 1.0,
                            epsabs=tol, epsrel=tol)[0]
    return unit_ball_volume(d) ** (2.0 / d) * math.exp(-d * (sing + smooth))


def check_support_inclusion(V: Union[Potential, PotentialSpec], d: int,
                            m_list: Iterable[float]) -> list:
    """For V = A|x|^2: whether sqrt(C_m / A) <= omega_d^(-1/d) for each m."""
    V = _confining(V)
    if V.name != "quadratic":
        raise ValueError("support inclusion is defined for quadratic potentials")
    A = 0.5 * V.params[0]
    R0 = infinity_radius(d)
    return [math.sqrt(solve_cm(V, m, d) / A) <= R0 + 1e-10 for m in m_list]


def _dm_step(m: float) -> float:
    return max(1e-3, 1e-3 * m)


def dm_density_l1(V: Union[Potential, PotentialSpec], m: float, d: int) -> float:
    """L1 norm of the centred m-difference quotient of the stationary state.

    The two profiles are integrated in closed form rather than on a grid:
    their supports differ by far less than any affordable cell width.
    """
    V = _confining(V)
    dm = _dm_step(m)
    lo = stationary_profile(V, m - dm, d)
    hi = stationary_profile(V, m + dm, d)
    r_small, r_big = sorted((lo.support_radius, hi.support_radius))
    outer = lo if lo.support_radius > hi.support_radius else hi

    def gap(r):
        return abs(float(hi(r)) - float(lo(r))) * r ** (d - 1)

    inner = integrate.quad(gap, 0.0, r_small, epsabs=QUAD_TOL, epsrel=1e-10, limit=500)[0]
    shell = 0.0
    if r_big > r_small:
        shell = integrate.quad(lambda r: float(outer(r)) * r ** (d - 1), r_small, r_big,
                               epsabs=QUAD_TOL, epsrel=1e-10, limit=200)[0]
    return _radial_weight(d) * (inner + shell) / (2.0 * dm)


def dm_density_profile(V: Union[Potential, PotentialSpec], m: float, grid: Grid) -> np.ndarray:
    """The same difference quotient sampled at the cell centres of ``grid``."""
    V = _confining(V)
    dm = _dm_step(m)
    d = grid.dimension
    lo = stationary_profile(V, m - dm, d)
    hi = stationary_profile(V, m + dm, d)
    return (hi(grid.centers) - lo(grid.centers)) / (2.0 * dm)


def dm_density_l1_analytic(V: Union[Potential, PotentialSpec], m: float, d: int) -> float:
    """L1 norm of the closed-form m-derivative

        h_m - rho ln(rho)/(m-1) + rho/(m (m-1)^2),  h_m = rho^(2-m) C'_m / m,

    with C'_m from a centred difference of C_m. Cross-check for
    :func:`dm_density_l1`.
    """
    V = _confining(V)
    dm = _dm_step(m)
    dc = (solve_cm(V, m + dm, d) - solve_cm(V, m - dm, d)) / (2.0 * dm)
    prof = stationary_profile(V, m, d)
    R = prof.support_radius
    k = 1.0 / (m - 1.0)
    scale = (m - 1.0) / m

    def integrand(r):
        rho = float(prof(r))
        if rho <= 0:
            return 0.0
        rest = -rho * math.log(rho) / (m - 1.0) + rho / (m * (m - 1.0) ** 2)
        # rho^(2-m) = rho / (scale * (C - V))
        h = rho / (scale * (prof.constant - float(V(r)))) * dc / m
        return abs(h + rest) * r ** (d - 1)

    cut = R * (1 - 1e-6)
    body = integrate.quad(integrand, 0.0, cut, epsabs=QUAD_TOL, epsrel=1e-10, limit=500)[0]

    # on [cut, R], rho^(2-m) ~ (R-r)^(k-1): integrate the dominant h_m part
    # against the algebraic end-point weight
    def h_reduced(r):
        gap = R - r
        slope = (prof.constant - float(V(r))) / gap if gap > 0 else 0.0
        if slope <= 0:
            slope = float(V.grad(R))
        return abs(dc) / m * (scale * slope) ** (k - 1.0) * r ** (d - 1)

    with warnings.catch_warnings():
        # QUADPACK flags the end-point singularity even though the weight absorbs it
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        tail = integrate.quad(h_reduced, cut, R, weight="alg", wvar=(0.0, k - 1.0),
                              epsabs=QUAD_TOL, epsrel=1e-10)[0]
    return _radial_weight(d) * (body + tail)
