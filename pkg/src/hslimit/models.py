"""Pressure laws, potentials and the energy/dissipation functionals.

Both pressure laws are handled through the pair (P, Q) with
``Q'(rho) = rho * P'(rho)``, so the pressure term of the equation reads
``div(rho grad P(rho)) = Laplacian Q(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .measures import DiscreteDensity, Grid

DENSITY_FLOOR = 1e-12


class DomainError(ValueError):
    """Density outside the domain of the pressure law."""


class UnsupportedConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class PressureLaw:
    variant: str
    parameter: float

    def __post_init__(self):
        if self.variant == "power":
            if not self.parameter > 1:
                raise ValueError(f"power law needs m > 1, got {self.parameter}")
        elif self.variant == "singular":
            if not self.parameter > 0:
                raise ValueError(f"singular law needs epsilon > 0, got {self.parameter}")
        else:
            raise ValueError(f"unknown pressure variant {self.variant!r}")

    @classmethod
    def power(cls, m: float) -> PressureLaw:
        return cls("power", float(m))

    @classmethod
    def singular(cls, eps: float) -> PressureLaw:
        return cls("singular", float(eps))

    @property
    def is_power(self) -> bool:
        return self.variant == "power"

    @property
    def m(self) -> float:
        if not self.is_power:
            raise AttributeError("singular law has no exponent")
        return self.parameter

    @property
    def eps(self) -> float:
        if self.is_power:
            raise AttributeError("power law has no epsilon")
        return self.parameter

    def _check(self, rho):
        r = np.asarray(rho, dtype=float)
        if np.any(r < 0):
            raise DomainError("density must be nonnegative")
        if not self.is_power and np.any(r >= 1):
            raise DomainError("singular pressure is defined only for rho < 1")
        return r

    def pressure(self, rho):
        r = self._check(rho)
        if self.is_power:
            m = self.parameter
            out = m / (m - 1) * r ** (m - 1)
        else:
            out = self.parameter * r / (1 - r)
        return out if out.ndim else float(out)

    def q(self, rho):
        """Q(rho), the function whose Laplacian is the pressure term."""
        r = self._check(rho)
        if self.is_power:
            out = r**self.parameter
        else:
            out = self.parameter * np.asarray(singular_h(r))
        return out if out.ndim else float(out)

    def q_prime(self, rho):
        r = self._check(rho)
        if self.is_power:
            m = self.parameter
            out = m * r ** (m - 1)
        else:
            out = self.parameter * r / (1 - r) ** 2
        return out if out.ndim else float(out)

    def internal_energy(self, rho):
        """Energy density e with e' = P and rho e' - e = Q, e(0) = 0."""
        r = self._check(rho)
        if self.is_power:
            m = self.parameter
            out = r**m / (m - 1)
        else:
            out = -self.parameter * (r + np.log1p(-r))
        return out if out.ndim else float(out)


def singular_h(rho):
    """H(rho) = rho/(1-rho) + ln(1-rho) on [0, 1)."""
    r = np.asarray(rho, dtype=float)
    out = r / (1 - r) + np.log1p(-r)
    return out if out.ndim else float(out)


def pressure_eval(law: PressureLaw, rho):
    return law.pressure(rho)


def diffusion_flux_potential(law: PressureLaw, rho):
    return law.q(rho)


@dataclass(frozen=True)
class Potential:
    """A scalar potential of |x| (or of x on the line) with Hessian bounds.

    ``value`` and ``grad`` take positions; on radial grids they receive the
    radius and ``grad`` is the radial derivative.
    """

    name: str
    params: tuple
    value: Callable = field(compare=False, repr=False)
    grad: Callable = field(compare=False, repr=False)
    lower: float = 0.0
    upper: float = 0.0
    is_zero: bool = False
    even: bool = True
    breaks: tuple = ()  # radii where the Hessian jumps

    def __call__(self, x):
        return self.value(x)

    def __reduce__(self):
        # rebuilt from the factory so models can cross process boundaries
        if self.name not in _FACTORIES:
            raise TypeError(f"potential {self.name!r} cannot be pickled")
        return _rebuild_potential, (self.name, self.params)

    @property
    def label(self) -> str:
        if self.is_zero:
            return "zero"
        return f"{self.name}:" + ",".join(f"{p:g}" for p in self.params)


def zero_potential() -> Potential:
    return Potential(
        "zero", (), lambda x: np.zeros_like(np.asarray(x, float)),
        lambda x: np.zeros_like(np.asarray(x, float)), 0.0, 0.0, is_zero=True,
    )


def quadratic(a: float) -> Potential:
    """(a/2)|x|^2, Hessian exactly a."""
    a = float(a)
    if a == 0:
        return zero_potential()
    return Potential(
        "quadratic", (a,), lambda x: 0.5 * a * np.asarray(x, float) ** 2,
        lambda x: a * np.asarray(x, float), a, a,
    )


def flat_bottom(a: float, width: float) -> Potential:
    """(a/2)(|x| - w)_+^2: zero on the ball of radius w, so alpha = 0."""
    a, w = float(a), float(width)

    def value(x):
        return 0.5 * a * np.clip(np.abs(np.asarray(x, float)) - w, 0.0, None) ** 2

    def grad(x):
        x = np.asarray(x, float)
        return a * np.sign(x) * np.clip(np.abs(x) - w, 0.0, None)

    return Potential("flat", (a, w), value, grad, 0.0, a, breaks=(w,))


_FACTORIES = {"zero": lambda: zero_potential(), "quadratic": lambda a: quadratic(a),
              "flat": lambda a, w: flat_bottom(a, w)}


def _rebuild_potential(name, params):
    return _FACTORIES[name](*params)


def parse_potential(text: str) -> Potential:
    """Parse ``zero``, ``quadratic:a`` or ``flat:a,w``."""
    name, _, args = text.strip().partition(":")
    name = name.strip().lower()
    try:
        vals = [float(s) for s in args.split(",")] if args.strip() else []
    except ValueError:
        raise ValueError(f"bad potential parameters in {text!r}") from None
    if name in ("zero", "none", "0") and not vals:
        return zero_potential()
    if name == "quadratic" and len(vals) == 1:
        return quadratic(vals[0])
    if name == "flat" and len(vals) == 2:
        return flat_bottom(*vals)
    raise ValueError(f"unknown potential {text!r}")


@dataclass(frozen=True)
class PotentialSpec:
    confining: Potential = field(default_factory=zero_potential)
    interaction: Potential = field(default_factory=zero_potential)

    def __post_init__(self):
        if not self.interaction.even:
            raise ValueError("interaction potential must be even")

    @property
    def alpha(self) -> float:
        return self.confining.lower

    @property
    def A(self) -> float:
        return self.confining.upper

    @property
    def beta(self) -> float:
        return self.interaction.lower

    @property
    def B(self) -> float:
        return self.interaction.upper

    @property
    def gamma(self) -> float:
        return contraction_constant(self.alpha, self.beta, self.confining.is_zero)

    @property
    def within_global_hypotheses(self) -> bool:
        """Whether the potentials satisfy the assumptions of the global-in-time rate."""
        if self.confining.is_zero:
            return self.beta > 0
        return self.alpha > 0 and self.alpha + self.beta > 0


def contraction_constant(alpha: float, beta: float, v_is_zero: bool = False) -> float:
    if v_is_zero:
        return beta
    if beta <= 0:
        return alpha + beta
    return alpha


@dataclass(frozen=True)
class ModelSpec:
    pressure: PressureLaw
    potentials: PotentialSpec
    grid: Grid

    def __post_init__(self):
        if self.grid.is_radial and not self.potentials.interaction.is_zero:
            raise UnsupportedConfiguration("interaction is only supported on line grids")

    @property
    def gamma(self) -> float:
        return self.potentials.gamma

    def with_pressure(self, law: PressureLaw) -> ModelSpec:
        return ModelSpec(law, self.potentials, self.grid)


def interaction_matrix(W: Potential, targets: np.ndarray, grid: Grid) -> np.ndarray:
    """Quadrature weights K with (grad W * rho)(targets) = K @ rho."""
    if grid.is_radial:
        raise UnsupportedConfiguration("interaction is only supported on line grids")
    diff = np.asarray(targets, float)[:, None] - grid.centers[None, :]
    return W.grad(diff) * grid.volumes[None, :]


def interaction_field(W: Potential, rho: DiscreteDensity) -> np.ndarray:
    if W.is_zero:
        return np.zeros(rho.grid.cell_count)
    if rho.grid.is_radial:
        raise UnsupportedConfiguration("interaction is only supported on line grids")
    return interaction_matrix(W, rho.grid.centers, rho.grid) @ rho.values


def energy(model: ModelSpec, rho: DiscreteDensity) -> float:
    g = rho.grid
    v = rho.values
    total = g.integrate(model.pressure.internal_energy(v))
    total += g.integrate(v * model.potentials.confining(g.centers))
    W = model.potentials.interaction
    if not W.is_zero:
        diff = g.centers[:, None] - g.centers[None, :]
        conv = W(diff) @ (v * g.volumes)
        total += 0.5 * g.integrate(v * conv)
    return total


def _pressure_gradient(law: PressureLaw, rho: np.ndarray, h: float) -> np.ndarray:
    """Centred differences of P where both neighbours are occupied, one-sided
    where only one is, zero on cells below the floor."""
    occ = rho > DENSITY_FLOOR
    p = np.where(occ, law.pressure(np.where(occ, rho, 0.0)), 0.0)
    grad = np.zeros_like(rho)
    left = np.zeros_like(occ)
    right = np.zeros_like(occ)
    left[1:] = occ[:-1]
    right[:-1] = occ[1:]
    both = occ & left & right
    grad[1:-1] = np.where(both[1:-1], (p[2:] - p[:-2]) / (2 * h), 0.0)
    only_r = occ & right & ~left
    only_l = occ & left & ~right
    grad[:-1] = np.where(only_r[:-1], (p[1:] - p[:-1]) / h, grad[:-1])
    grad[1:] = np.where(only_l[1:], (p[1:] - p[:-1]) / h, grad[1:])
    return grad


def dissipation(model: ModelSpec, rho: DiscreteDensity, pressure_term: bool = True) -> float:
    """Discrete int rho |grad P(rho) + grad V + grad W * rho|^2."""
    g = rho.grid
    v = rho.values
    vel = model.potentials.confining.grad(g.centers)
    vel = vel + interaction_field(model.potentials.interaction, rho)
    if pressure_term:
        vel = vel + _pressure_gradient(model.pressure, v, g.h)
    return g.integrate(v * vel**2)


def power_integral(rho: DiscreteDensity, exponent: float) -> float:
    return rho.grid.integrate(rho.values**exponent)


def model_from_keys(keys: dict, geometry: Optional[str] = None) -> ModelSpec:
    """Build a model from parsed key=value settings.

    Recognised keys: pressure, m, epsilon, V, W, L, N, d.
    """
    pressure = keys.get("pressure", "power")
    if pressure == "power":
        if "epsilon" in keys:
            raise ValueError("pressure=power is inconsistent with epsilon")
        law = PressureLaw.power(float(keys.get("m", 2.0)))
    elif pressure == "singular":
        if "m" in keys:
            raise ValueError("pressure=singular is inconsistent with m")
        law = PressureLaw.singular(float(keys.get("epsilon", 0.1)))
    else:
        raise ValueError(f"unknown pressure {pressure!r}")
    V = parse_potential(str(keys.get("V", "quadratic:1.0")))
    W = parse_potential(str(keys.get("W", "zero")))
    d = int(keys.get("d", 1))
    L = float(keys.get("L", 2.0))
    N = int(keys.get("N", 512))
    geometry = geometry or ("line" if d == 1 else "radial")
    grid = Grid.line(L, N) if geometry == "line" else Grid.radial(L, N, d)
    return ModelSpec(law, PotentialSpec(V, W), grid)
