"""Fast sanity checks run by ``hslimit self-test``."""

from __future__ import annotations

import warnings

import numpy as np

from .measures import DiscreteDensity, Grid, barycenter, lp_distance, mass
from .models import (ModelSpec, PotentialSpec, PressureLaw, energy, flat_bottom,
                     interaction_field, quadratic, zero_potential)
from .rates import evolution_rate_power, fit_loglog
from .solver import SolveConfig, solve, stable_dt, step
from .stationary import build_profile, check_support_inclusion, dm_density_profile
from .transport import h_minus_one, quantile_of, wasserstein2


def _line(n=400, L=2.0):
    return Grid.line(L, n)


def _unit_box(grid):
    return DiscreteDensity.uniform(grid, -0.5, 0.5)


def check_mass_of_box():
    return abs(mass(_unit_box(_line())) - 1.0) <= 1e-10


def check_zero_mass():
    g = _line()
    return mass(DiscreteDensity(g, np.zeros(g.cell_count))) == 0.0


def check_even_barycenter():
    return abs(barycenter(_unit_box(_line()))) <= 1e-10


def check_self_distances():
    rho = _unit_box(_line())
    return lp_distance(rho, rho) == 0 and wasserstein2(rho, rho) == 0 and h_minus_one(rho, rho) == 0


def check_laws_at_zero():
    laws = [PressureLaw.power(3.0), PressureLaw.singular(0.5)]
    return all(float(law.q(0.0)) == 0 and float(law.pressure(0.0)) == 0 for law in laws)


def check_zero_interaction():
    g = _line()
    return not np.any(interaction_field(zero_potential(), _unit_box(g)))


def check_odd_interaction_field():
    g = _line(200)
    rho = DiscreteDensity.normalized(g, np.exp(-g.centers**2))
    f = interaction_field(quadratic(0.5), rho)
    return np.allclose(f, -f[::-1], atol=1e-8)


def check_energy_large_m():
    g = _line()
    rho = DiscreteDensity.uniform(g, -0.5, 0.5, 0.999)
    model = ModelSpec(PressureLaw.power(4000.0), PotentialSpec(quadratic(1.0)), g)
    target = g.integrate(rho.values * quadratic(1.0)(g.centers))
    return abs(energy(model, rho) - target) < 1e-3


def check_symmetric_step():
    g = _line(256)
    model = ModelSpec(PressureLaw.power(3.0), PotentialSpec(quadratic(1.0), quadratic(0.5)), g)
    rho = DiscreteDensity.normalized(g, np.exp(-4 * g.centers**2))
    out = step(model, rho, 0.5 * stable_dt(model, rho))
    return np.allclose(out.values, out.values[::-1], atol=1e-12)


def check_empty_dt_cap():
    g = _line()
    model = ModelSpec(PressureLaw.power(2.0), PotentialSpec(), g)
    rho = DiscreteDensity(g, np.zeros(g.cell_count))
    return stable_dt(model, rho, dt_max=0.01) == 0.01


def check_zero_horizon():
    g = _line(64)
    model = ModelSpec(PressureLaw.power(2.0), PotentialSpec(quadratic(1.0)), g)
    rho = _unit_box(g)
    tr = solve(model, rho, SolveConfig(0.0))
    return list(tr.times) == [0.0] and np.array_equal(tr.final.values, rho.values)


def check_mass_drift():
    g = _line(128)
    model = ModelSpec(PressureLaw.power(4.0), PotentialSpec(quadratic(1.0)), g)
    tr = solve(model, _unit_box(g), SolveConfig(0.5, snapshot_times=[0.0, 0.5]))
    return abs(tr.column("mass")[-1] - 1.0) <= 1e-8


def check_uniform_quantile():
    g = Grid.line(2.0, 400)
    q = quantile_of(DiscreteDensity.uniform(g, 0.0, 1.0))
    u = np.linspace(0.01, 0.99, 50)
    return np.max(np.abs(q(u) - u)) <= g.h


def check_translation():
    g = Grid.line(4.0, 800)
    a = DiscreteDensity.uniform(g, 0.0, 1.0)
    b = DiscreteDensity.uniform(g, 1.0, 2.0)
    return abs(wasserstein2(a, b) - 1.0) <= 1e-3


def check_positive_part():
    g = Grid.line(1.0, 1000)
    V = quadratic(1.0)
    prof, _ = build_profile(V, 10.0, 1, g)
    outside = V(g.centers) >= prof.constant
    return not np.any(prof(g.centers)[outside])


def check_inclusion_settles():
    flags = check_support_inclusion(quadratic(20.0), 2, [8, 16, 32, 64])
    return flags[-1] == flags[-2] == flags[-3]


def check_dm_profile_even():
    g = Grid.line(1.0, 1000)
    p = dm_density_profile(quadratic(1.0), 20.0, g)
    return np.allclose(p, p[::-1], atol=1e-8)


def check_exact_power_fit():
    e, _, r2 = fit_loglog([(10, 0.1), (100, 0.01), (1000, 0.001), (10000, 0.0001)])
    return abs(e + 1) < 1e-10 and abs(r2 - 1) < 1e-10


def check_constant_fit():
    e, _, _ = fit_loglog([(1, 2.0), (2, 2.0), (4, 2.0), (8, 2.0)])
    return abs(e) < 1e-12


def check_short_fit_rejected():
    try:
        fit_loglog([(1, 1.0), (2, 0.5)])
    except ValueError:
        return True
    return False


def check_degenerate_pair():
    g = _line(64)
    model = ModelSpec(PressureLaw.power(2.0), PotentialSpec(quadratic(1.0)), g)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            evolution_rate_power(model, _unit_box(g), [2, 3, 4, 5], 0.1, snapshots=3,
                                 partner=lambda m: m)
        except ValueError:
            pass  # every pair excluded leaves nothing to fit
    return len(caught) == 4


def check_flat_potential_alpha():
    return PotentialSpec(flat_bottom(1.0, 0.2)).alpha == 0.0


CHECKS = [(name[len("check_"):], fn) for name, fn in sorted(globals().items())
          if name.startswith("check_") and getattr(fn, "__module__", None) == __name__]


def run(echo=print) -> bool:
    ok_all = True
    for name, fn in CHECKS:
        try:
            ok = bool(fn())
        except Exception as exc:  # noqa: BLE001 - report and continue
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'} {name}")
    return ok_all


__all__ = ["CHECKS", "run"]
