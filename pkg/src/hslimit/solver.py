"""Explicit conservative finite-volume integration of

    d/dt rho = Laplacian Q(rho) + div(rho (grad V + grad W * rho))

on line and radial grids. Diffusive fluxes are differences of Q across
faces, drift fluxes are upwinded, and the outer faces carry no flux.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .measures import DiscreteDensity, barycenter, mass, second_moment
from .models import (
    DomainError,
    ModelSpec,
    dissipation,
    energy,
    interaction_matrix,
)

log = logging.getLogger(__name__)


class StabilityError(ValueError):
    """Requested time step exceeds the explicit stability bound."""


class BlowUpError(RuntimeError):
    """Singular-law density reached the congestion value 1."""


@dataclass(frozen=True)
class SolveConfig:
    final_time: float
    cfl_safety: float = 0.5
    snapshot_times: Optional[Sequence[float]] = None
    density_floor: float = 1e-14
    dt_max: float = 1e-2

    def __post_init__(self):
        if not self.final_time >= 0:
            raise ValueError("final time must be nonnegative")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        times = self.times
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if times[0] < 0 or times[-1] > self.final_time:
            raise ValueError("snapshot times must lie in [0, T]")

    @property
    def times(self) -> np.ndarray:
        if self.snapshot_times is None:
            if self.final_time == 0:
                return np.array([0.0])
            return np.linspace(0.0, self.final_time, 41)
        return np.asarray(sorted(self.snapshot_times), dtype=float)


@dataclass
class Diagnostics:
    mass: float
    barycenter: float
    second_moment: float
    energy: float
    dissipation: float
    max_density: float

    @classmethod
    def of(cls, model: ModelSpec, rho: DiscreteDensity) -> Diagnostics:
        return cls(
            mass(rho), barycenter(rho), second_moment(rho),
            energy(model, rho), dissipation(model, rho), float(rho.values.max()),
        )


@dataclass
class Trajectory:
    model: ModelSpec
    times: list = field(default_factory=list)
    densities: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    steps: int = 0
    clipped_mass: float = 0.0

    @property
    def snapshots(self):
        return list(zip(self.times, self.densities))

    @property
    def final(self) -> DiscreteDensity:
        return self.densities[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diagnostics])

    def export(self, directory) -> None:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        rows = ["time,mass,barycenter,second_moment,energy,dissipation,max_density"]
        for k, (t, rho, dg) in enumerate(zip(self.times, self.densities, self.diagnostics)):
            rho.to_csv(out / f"snapshot_{k:04d}.csv")
            rows.append(
                f"{t:.15g},{dg.mass:.15g},{dg.barycenter:.15g},{dg.second_moment:.15g},"
                f"{dg.energy:.15g},{dg.dissipation:.15g},{dg.max_density:.15g}"
            )
        (out / "diagnostics.csv").write_text("\n".join(rows) + "\n")


class _Operator:
    """Static arrays of one model, prepared once per solve."""

    def __init__(self, model: ModelSpec):
        g = model.grid
        self.model = model
        self.h = g.h
        self.dim = float(g.dimension)
        self.vol = np.ascontiguousarray(g.volumes)
        self.area = np.ascontiguousarray(g.face_areas)
        pot = model.potentials
        self.v_static = -np.asarray(pot.confining.grad(g.edges), dtype=float)
        self.v_static[0] = self.v_static[-1] = 0.0
        if pot.interaction.is_zero:
            self.kmat = np.zeros((0, g.cell_count))
        else:
            self.kmat = np.ascontiguousarray(interaction_matrix(pot.interaction, g.edges, g))
        law = model.pressure
        self.law = K.POWER if law.is_power else K.SINGULAR
        self.param = law.parameter

    def velocity(self, rho: np.ndarray) -> np.ndarray:
        vel = np.empty((2, rho.shape[0] + 1))
        K.face_velocity(rho, self.v_static, self.kmat, vel)
        return vel

    def check_admissible(self, rho: np.ndarray) -> None:
        if self.law == K.SINGULAR and rho.max(initial=0.0) >= K.SINGULAR_CAP:
            raise BlowUpError(f"density {rho.max():.12f} reached the singular cap")


def stable_dt(model: ModelSpec, rho: DiscreteDensity, cfl: float = 0.5,
              dt_max: float = np.inf) -> float:
    op = _Operator(model)
    vals = np.ascontiguousarray(rho.values)
    return K.stable_dt(vals, op.velocity(vals), op.h, op.dim, op.law, op.param, cfl, dt_max)


def step(model: ModelSpec, rho: DiscreteDensity, dt: float, cfl: float = 0.5,
         floor: float = 1e-14) -> DiscreteDensity:
    """One explicit step; raises if ``dt`` violates the stability bound."""
    op = _Operator(model)
    vals = np.ascontiguousarray(rho.values)
    op.check_admissible(vals)
    vel = op.velocity(vals)
    limit = K.stable_dt(vals, vel, op.h, op.dim, op.law, op.param, cfl, np.inf)
    if dt > limit * (1 + 1e-12):
        raise StabilityError(f"dt={dt:.3e} exceeds stable bound {limit:.3e}")
    out = np.empty_like(vals)
    K.apply_step(vals, vel, dt, op.h, op.vol, op.area, op.law, op.param, floor, out)
    op.check_admissible(out)
    return DiscreteDensity(rho.grid, out)


def solve(model: ModelSpec, rho0: DiscreteDensity, cfg: SolveConfig) -> Trajectory:
    if rho0.grid != model.grid:
        raise ValueError("initial density lives on a different grid than the model")
    op = _Operator(model)
    cur = np.ascontiguousarray(rho0.values, dtype=float)
    try:
        op.check_admissible(cur)
    except BlowUpError as exc:
        raise DomainError(str(exc)) from None
    traj = Trajectory(model)
    t = 0.0
    for ts in cfg.times:
        if ts > t:
            cur, steps, clipped, status = K.advance(
                cur, t, float(ts), op.h, op.dim, op.vol, op.area, op.v_static,
                op.kmat, op.law, op.param, cfg.cfl_safety, cfg.density_floor,
                cfg.dt_max,
            )
            traj.steps += steps
            traj.clipped_mass += clipped
            if status == K.BLOWUP:
                raise BlowUpError(
                    f"{model.pressure}: density reached 1 before t={ts:g}"
                )
            t = float(ts)
        rho = DiscreteDensity(model.grid, cur.copy())
        traj.times.append(float(ts))
        traj.densities.append(rho)
        traj.diagnostics.append(Diagnostics.of(model, rho))
    log.debug("%s: %d steps to T=%g", model.pressure, traj.steps, cfg.final_time)
    return traj
