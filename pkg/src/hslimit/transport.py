"""Transport distances between densities on the same kind of grid.

In one dimension, and between radially symmetric measures, the optimal map
is the monotone rearrangement, so W2 is the L2 distance between quantile
functions (of the radial mass distribution in the radial case).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import DiscreteDensity, GridMismatchError, barycenter, mass

MASS_LEVELS = 4096


@dataclass(frozen=True, eq=False)
class QuantileFunction:
    """Piecewise-linear inverse of a piecewise-linear CDF."""

    breakpoints: np.ndarray  # cumulative mass at cell edges, from 0 to 1
    positions: np.ndarray  # cell edges (radii in radial geometry)

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        cdf, x = self.breakpoints, self.positions
        # side="left" selects the left end of flat (vacuum) stretches
        j = np.searchsorted(cdf, u, side="left")
        # u = 0 maps to the left end of the support, not of the domain
        j = np.where(u <= 0, np.searchsorted(cdf, 0.0, side="right"), j)
        j = np.clip(j, 1, len(cdf) - 1)
        c0, c1 = cdf[j - 1], cdf[j]
        width = c1 - c0
        frac = np.divide(u - c0, width, out=np.zeros_like(u), where=width > 0)
        return x[j - 1] + np.clip(frac, 0.0, 1.0) * (x[j] - x[j - 1])


def cdf_at_edges(rho: DiscreteDensity) -> np.ndarray:
    cell_mass = rho.values * rho.grid.volumes
    return np.concatenate(([0.0], np.cumsum(cell_mass)))


def quantile_of(rho: DiscreteDensity) -> QuantileFunction:
    total = mass(rho)
    if total <= 0:
        raise ValueError("quantile of a zero-mass density")
    cdf = cdf_at_edges(rho) / total
    cdf[-1] = 1.0
    return QuantileFunction(cdf, rho.grid.edges.copy())


def _mass_grid(levels: int) -> np.ndarray:
    return (np.arange(levels) + 0.5) / levels


def _check_geometry(a: DiscreteDensity, b: DiscreteDensity) -> None:
    ga, gb = a.grid, b.grid
    if ga.geometry != gb.geometry or ga.dimension != gb.dimension:
        raise GridMismatchError(
            f"cannot compare {ga.geometry} d={ga.dimension} with {gb.geometry} d={gb.dimension}"
        )


def wasserstein2(rho1: DiscreteDensity, rho2: DiscreteDensity,
                 levels: int = MASS_LEVELS) -> float:
    _check_geometry(rho1, rho2)
    u = _mass_grid(levels)
    gap = quantile_of(rho1)(u) - quantile_of(rho2)(u)
    return float(np.sqrt(np.mean(gap**2)))


def h_minus_one(rho1: DiscreteDensity, rho2: DiscreteDensity) -> float:
    """Homogeneous H^-1 norm of rho1 - rho2 on the line: the L2 norm of the
    CDF difference. The integrand is piecewise linear, so Simpson per cell
    is exact."""
    if rho1.grid.is_radial or rho2.grid.is_radial:
        raise ValueError("H^-1 distance is implemented on line grids only")
    if rho1.grid != rho2.grid:
        raise GridMismatchError("H^-1 distance needs identical grids")
    m1, m2 = mass(rho1), mass(rho2)
    if abs(m1 - m2) > 1e-8:
        raise ValueError(f"masses differ by {abs(m1 - m2):.2e}; H^-1 norm is infinite")
    diff = cdf_at_edges(rho1) - cdf_at_edges(rho2)
    a, b = diff[:-1], diff[1:]
    return float(np.sqrt(np.sum((a * a + a * b + b * b) / 3.0) * rho1.grid.h))


def barycenter_gap(rho1: DiscreteDensity, rho2: DiscreteDensity) -> float:
    return abs(barycenter(rho1) - barycenter(rho2))
