"""First-order vector fields for the four dynamics.

Flat state layout is fixed: positions (n), then velocities or momenta (n),
then an optional clock column. ``n`` is 2 or 3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .model import (
    PhysicalParams,
    Potential,
    PowerLawPotential,
    TransformedPotential,
    cross,
    kepler,
    region_of_value,
)


@dataclass(frozen=True)
class ForceModel:
    """Tagged description of a dynamics law.

    kind is one of ``classical-kepler``, ``relativistic-kepler``, ``transformed``
    or ``central-force``; the remaining fields are used by the kinds that need them.
    """

    kind: str
    h: Optional[float] = None
    ell: Optional[int] = None
    ahat: Optional[float] = None
    bhat: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("classical-kepler", "relativistic-kepler", "transformed", "central-force"):
            raise ValueError(f"unknown force model {self.kind!r}")
        if self.kind == "central-force":
            if self.ell not in (4, 5):
                raise ValueError(f"ell must be 4 or 5, got {self.ell!r}")
            if not self.ahat > 0:
                raise ValueError(f"ahat must be positive, got {self.ahat!r}")


@dataclass(frozen=True)
class FlowField:
    """An autonomous vector field ``y' = eval(t, y)`` plus the diagnostics that go with it.

    ``velocity(y)`` returns the derivative of the position block with respect to
    the field's own time variable; ``energy`` and ``angular_momentum`` are the
    conserved quantities of the model; ``gamma`` is None for non-relativistic fields.
    """

    n: int
    model: ForceModel
    params: PhysicalParams
    eval: Callable[[float, np.ndarray], np.ndarray]
    velocity: Callable[[np.ndarray], np.ndarray]
    energy: Callable[[np.ndarray], float]
    angular_momentum: Callable[[np.ndarray], object]
    potential: Potential
    h: Optional[float] = None
    gamma: Optional[Callable[[np.ndarray], float]] = None
    clock: bool = False

    @property
    def dim(self):
        return 2 * self.n + (1 if self.clock else 0)

    @property
    def relativistic(self):
        return self.model.kind == "relativistic-kepler"

    def positions(self, y):
        return y[..., : self.n]

    def region(self, y, h=None):
        h = self.h if h is None else h
        if h is None:
            return None
        V = self.potential.V if isinstance(self.potential, TransformedPotential) else self.potential
        return region_of_value(V.value(y[: self.n]), h, self.params)


def _check_dim(n):
    if n not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {n}")


def relativistic_field(params: PhysicalParams, V: Optional[Potential] = None, n: int = 2,
                       h: Optional[float] = None) -> FlowField:
    """Momentum form of ``d/dt(m gamma x') = grad V``: ``x' = p/(m gamma)``, ``p' = grad V``.

    ``h`` only labels the energy level used for region diagnostics.
    """
    _check_dim(n)
    V = kepler(params) if V is None else V
    m = params.m
    inv_mc2 = 1.0 / (m * params.c) ** 2

    def velocity(y):
        p = y[n:2 * n]
        return p / (m * math.sqrt(1.0 + float(p @ p) * inv_mc2))

    def rhs(t, y):
        out = np.empty_like(y)
        p = y[n:2 * n]
        out[:n] = p / (m * math.sqrt(1.0 + float(p @ p) * inv_mc2))
        out[n:2 * n] = V.gradient(y[:n])
        return out

    def gamma(y):
        p = y[n:2 * n]
        return math.sqrt(1.0 + float(p @ p) * inv_mc2)

    def energy(y):
        p = y[n:2 * n]
        g = math.sqrt(1.0 + float(p @ p) * inv_mc2)
        return float(p @ p) / (m * (g + 1.0)) - V.value(y[:n])

    def ang(y):
        return cross(y[:n], y[n:2 * n])

    return FlowField(n, ForceModel("relativistic-kepler", h=h), params, rhs, velocity, energy, ang,
                     V, h=h, gamma=gamma)


def _newtonian_field(n, model, params, potential, h=None):
    m = params.m

    def rhs(t, y):
        out = np.empty_like(y)
        out[:n] = y[n:2 * n]
        out[n:2 * n] = potential.gradient(y[:n]) / m
        return out

    def velocity(y):
        return y[n:2 * n]

    def energy(y):
        v = y[n:2 * n]
        return 0.5 * m * float(v @ v) - potential.value(y[:n])

    def ang(y):
        return m * cross(y[:n], y[n:2 * n])

    return FlowField(n, model, params, rhs, velocity, energy, ang, potential, h=h)


def transformed_field(params: PhysicalParams, h: float, V: Optional[Potential] = None, n: int = 2) -> FlowField:
    """``m z'' = grad Z_h(z)`` with ``Z_h = V + (V + h)^2/(2mc^2)``."""
    _check_dim(n)
    V = kepler(params) if V is None else V
    return _newtonian_field(n, ForceModel("transformed", h=h), params, TransformedPotential(V, h, params), h=h)


def central_force_field(ell: int, ahat: float, bhat: float, params: PhysicalParams, n: int = 2,
                        r_min: Optional[float] = None) -> FlowField:
    """``m x'' = -ahat x/|x|^3 - bhat x/|x|^ell``."""
    _check_dim(n)
    model = ForceModel("central-force", ell=ell, ahat=ahat, bhat=bhat)
    kw = {} if r_min is None else {"r_min": r_min}
    return _newtonian_field(n, model, params, PowerLawPotential(ahat, bhat, ell, **kw))


def classical_kepler_field(params: PhysicalParams, n: int = 2) -> FlowField:
    _check_dim(n)
    model = ForceModel("classical-kepler", ahat=params.alpha, bhat=0.0)
    return _newtonian_field(n, model, params, kepler(params))


def with_clock(field: FlowField, rate: Callable[[np.ndarray], float]) -> FlowField:
    """Append a scalar clock ``c' = rate(x)`` to the state of ``field``."""
    if field.clock:
        raise ValueError("field already carries a clock")
    base = field.eval
    n = field.n

    def rhs(t, y):
        out = np.empty_like(y)
        out[:-1] = base(t, y[:-1])
        out[-1] = rate(y[:n])
        return out

    return replace(field, eval=rhs, clock=True)


def forward_clock_rate(params: PhysicalParams, h: float, V: Optional[Potential] = None):
    """``d zeta/dt = mc^2 / (V + h + mc^2)``, which lies in (0, 1] on Omega_h."""
    V = kepler(params) if V is None else V
    mc2 = params.rest_energy
    return lambda x: mc2 / (V.value(x) + h + mc2)


def inverse_clock_rate(params: PhysicalParams, h: float, V: Optional[Potential] = None, magnitude: bool = False):
    """``dt/ds = (V + h + mc^2) / mc^2``; ``magnitude=True`` takes its absolute value (Sigma_h branch)."""
    V = kepler(params) if V is None else V
    mc2 = params.rest_energy
    if magnitude:
        return lambda x: abs(V.value(x) + h + mc2) / mc2
    return lambda x: (V.value(x) + h + mc2) / mc2


def explicit_acceleration(x, v, params: PhysicalParams, V: Optional[Potential] = None):
    """Velocity-form acceleration of the relativistic equation,
    ``x'' = (grad V - (x'.grad V) x'/c^2) / (m gamma)``."""
    V = kepler(params) if V is None else V
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    g = V.gradient(x)
    gamma = 1.0 / math.sqrt(1.0 - float(v @ v) / params.c**2)
    return (g - float(v @ g) * v / params.c**2) / (params.m * gamma)
