"""Grid functions on truncated line and radial domains.

Densities are piecewise constant on cells. Every integral is a midpoint
rule weighted by the exact cell volume, so a radial cell ``[r_i, r_{i+1}]``
carries the shell volume ``omega_d (r_{i+1}^d - r_i^d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

MASS_FLOOR = 1e-14


def unit_ball_volume(d: int) -> float:
    """Lebesgue measure of the unit ball in R^d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid.

    ``line`` covers ``[-L, L]`` in one dimension; ``radial`` covers the
    radius ``[0, L]`` of a radially symmetric function on R^d.
    """

    half_width: float
    cell_count: int
    dimension: int = 1
    geometry: str = "line"

    def __post_init__(self):
        if self.geometry not in ("line", "radial"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.geometry == "line" and self.dimension != 1:
            raise ValueError("line grids are one-dimensional")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.half_width > 0 or self.cell_count < 1:
            raise ValueError("grid needs L > 0 and N >= 1")

    @classmethod
    def line(cls, half_width: float, cell_count: int) -> Grid:
        return cls(float(half_width), int(cell_count), 1, "line")

    @classmethod
    def radial(cls, half_width: float, cell_count: int, dimension: int) -> Grid:
        return cls(float(half_width), int(cell_count), int(dimension), "radial")

    @property
    def is_radial(self) -> bool:
        return self.geometry == "radial"

    @property
    def h(self) -> float:
        span = self.half_width if self.is_radial else 2 * self.half_width
        return span / self.cell_count

    @cached_property
    def edges(self) -> np.ndarray:
        lo = 0.0 if self.is_radial else -self.half_width
        return lo + self.h * np.arange(self.cell_count + 1)

    @cached_property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @cached_property
    def volumes(self) -> np.ndarray:
        if not self.is_radial:
            return np.full(self.cell_count, self.h)
        e = self.edges
        return unit_ball_volume(self.dimension) * np.diff(e**self.dimension)

    @cached_property
    def face_areas(self) -> np.ndarray:
        """Measure of every cell face, outer boundaries included."""
        if not self.is_radial:
            return np.ones(self.cell_count + 1)
        d = self.dimension
        return d * unit_ball_volume(d) * self.edges ** (d - 1)

    @cached_property
    def radii(self) -> np.ndarray:
        """|x| at cell centres."""
        return np.abs(self.centers)

    def integrate(self, values) -> float:
        return float(np.dot(np.asarray(values, dtype=float), self.volumes))


@dataclass(frozen=True, eq=False)
class DiscreteDensity:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.cell_count,):
            raise ValueError(
                f"expected {self.grid.cell_count} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite")
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def normalized(cls, grid: Grid, values) -> DiscreteDensity:
        v = np.clip(np.asarray(values, dtype=float), 0.0, None)
        total = grid.integrate(v)
        if total < MASS_FLOOR:
            raise ValueError(f"cannot normalize density of mass {total:.3e}")
        return cls(grid, v / total)

    @classmethod
    def from_function(cls, grid: Grid, fn, normalize: bool = True) -> DiscreteDensity:
        """Sample ``fn`` at cell centres (radial grids pass the radius)."""
        vals = np.asarray(fn(grid.centers), dtype=float)
        return cls.normalized(grid, vals) if normalize else cls(grid, vals)

    @classmethod
    def uniform(cls, grid: Grid, a: float, b: float, height: float = 1.0) -> DiscreteDensity:
        """Cell-averaged ``height * 1_[a,b]``, exact for any interval position."""
        e = grid.edges
        overlap = np.clip(np.minimum(e[1:], b) - np.maximum(e[:-1], a), 0.0, None)
        return cls(grid, height * overlap / grid.h)

    def with_values(self, values) -> DiscreteDensity:
        return DiscreteDensity(self.grid, values)

    def to_csv(self, path) -> None:
        write_density_csv(self, path)


def mass(rho: DiscreteDensity) -> float:
    return rho.grid.integrate(rho.values)


def normalize(rho: DiscreteDensity) -> DiscreteDensity:
    return DiscreteDensity.normalized(rho.grid, rho.values)


def second_moment(rho: DiscreteDensity) -> float:
    return rho.grid.integrate(rho.grid.radii**2 * rho.values)


def barycenter(rho: DiscreteDensity) -> float:
    # radial densities are centred by symmetry
    if rho.grid.is_radial:
        return 0.0
    return rho.grid.integrate(rho.grid.centers * rho.values)


def check_same_grid(a: DiscreteDensity, b: DiscreteDensity) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")


def lp_distance(rho1: DiscreteDensity, rho2: DiscreteDensity, p: float = 1.0) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    check_same_grid(rho1, rho2)
    diff = np.abs(rho1.values - rho2.values)
    if math.isinf(p):
        return float(diff.max(initial=0.0))
    return rho1.grid.integrate(diff**p) ** (1.0 / p)


def write_density_csv(rho: DiscreteDensity, path) -> None:
    x = rho.grid.centers
    lines = ["x,value"]
    lines += [f"{xi:.15g},{vi:.15g}" for xi, vi in zip(x, rho.values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_density_csv(path, grid: Grid) -> DiscreteDensity:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if not np.allclose(data[:, 0], grid.centers, rtol=0, atol=1e-9 * grid.half_width):
        raise GridMismatchError(f"{path}: cell centres do not match {grid}")
    return DiscreteDensity(grid, data[:, 1])
