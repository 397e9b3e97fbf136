"""Physical parameters, potentials, coefficient families and conserved quantities.

Sign convention: the potential ``V`` enters the equations of motion with a plus
sign, ``m x'' = grad V``, so the attractive Kepler potential is ``V = alpha/|x|``
and energies read ``kinetic - V``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from .errors import ConfigError, DomainError, RegionError, SpiralRegime

R_MIN_DEFAULT = 1e-8


@dataclass(frozen=True)
class PhysicalParams:
    """Masses and constants. Defaults are scaled units G = M = m = c = 1."""

    m: float = 1.0
    c: float = 1.0
    G: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        for name in ("m", "c", "G", "M"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}", field=name)

    @property
    def alpha(self) -> float:
        return self.G * self.M * self.m

    @property
    def rest_energy(self) -> float:
        return self.m * self.c**2


class Potential(Protocol):
    def value(self, x: np.ndarray) -> float: ...

    def gradient(self, x: np.ndarray) -> np.ndarray: ...


def _radius(x, r_min):
    r = math.sqrt(float(np.dot(x, x)))
    if not r > r_min:
        raise DomainError(f"|x| = {r:.3e} is inside the origin guard r_min = {r_min:.1e}")
    return r


@dataclass(frozen=True)
class PowerLawPotential:
    """``V(r) = ahat/r + bhat/((ell-2) r^(ell-2))``.

    Its gradient is the central force ``-ahat x/|x|^3 - bhat x/|x|^ell``; with
    ``bhat = 0`` this is the Kepler potential.
    """

    ahat: float
    bhat: float = 0.0
    ell: int = 4
    r_min: float = R_MIN_DEFAULT

    def value(self, x):
        r = _radius(x, self.r_min)
        v = self.ahat / r
        if self.bhat:
            v += self.bhat / ((self.ell - 2) * r ** (self.ell - 2))
        return v

    def gradient(self, x):
        r = _radius(x, self.r_min)
        coef = self.ahat / r**3
        if self.bhat:
            coef += self.bhat / r**self.ell
        return -coef * np.asarray(x, dtype=float)

    def value_and_gradient(self, x):
        return self.value(x), self.gradient(x)


def kepler(params: PhysicalParams, r_min: float = R_MIN_DEFAULT) -> PowerLawPotential:
    return PowerLawPotential(params.alpha, 0.0, 4, r_min)


def kepler_potential(x, params: PhysicalParams, r_min: float = R_MIN_DEFAULT):
    """Return ``(alpha/|x|, -alpha x/|x|^3)``."""
    x = np.asarray(x, dtype=float)
    return kepler(params, r_min).value_and_gradient(x)


@dataclass(frozen=True)
class TransformedPotential:
    """``Z_h = V + (V + h)^2 / (2 m c^2)``, constant ``h^2/(2mc^2)`` included."""

    V: Potential
    h: float
    params: PhysicalParams

    def value(self, x):
        v = self.V.value(x)
        return v + (v + self.h) ** 2 / (2.0 * self.params.rest_energy)

    def gradient(self, x):
        v = self.V.value(x)
        return self.V.gradient(x) * (1.0 + (v + self.h) / self.params.rest_energy)

    def value_and_gradient(self, x):
        v = self.V.value(x)
        g = self.V.gradient(x)
        mc2 = self.params.rest_energy
        return v + (v + self.h) ** 2 / (2.0 * mc2), g * (1.0 + (v + self.h) / mc2)


def transformed_potential(x, h: float, params: PhysicalParams, V: Optional[Potential] = None):
    x = np.asarray(x, dtype=float)
    V = kepler(params) if V is None else V
    return TransformedPotential(V, h, params).value_and_gradient(x)


class Family(str, enum.Enum):
    SCHWARZSCHILD = "schwarzschild"
    LEVI_CIVITA = "levi-civita"
    SPECIAL_RELATIVITY = "special-relativity"


def coefficients_for(family, h: float, L: Optional[float], params: PhysicalParams):
    """Force-law triple ``(ell, ahat, bhat)`` of the generalized Kepler equation.

    Schwarzschild needs the angular momentum ``L`` (frozen from the run's
    initial state); the other two families depend on the energy ``h``.
    """
    family = Family(family)
    G, M, m, c, alpha = params.G, params.M, params.m, params.c, params.alpha
    mc2 = params.rest_energy
    if family is Family.SCHWARZSCHILD:
        if L is None:
            raise ConfigError("Schwarzschild coefficients need the angular momentum L", field="L")
        ell, ahat, bhat = 5, alpha, 3.0 * G * M * L**2 / (m * c**2)
    elif family is Family.LEVI_CIVITA:
        ell, ahat, bhat = 4, alpha * (1.0 + 4.0 * h / mc2), 6.0 * G**2 * M**2 * m / c**2
    else:
        ell, ahat, bhat = 4, alpha * (1.0 + h / mc2), G**2 * M**2 * m / c**2
    if not ahat > 0:
        raise DomainError(
            f"{family.value}: h = {h} makes the effective attraction ahat = {ahat} non-positive"
        )
    return ell, ahat, bhat


@dataclass(frozen=True)
class PhaseState:
    """Position plus velocity ``v`` or relativistic momentum ``p``.

    When ``p`` is given it is authoritative: ``gamma`` is computed from it
    directly, which stays accurate for ultra-relativistic states.
    """

    t: float
    x: np.ndarray
    v: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.v is None and self.p is None:
            raise ValueError("PhaseState needs a velocity or a momentum")
        if self.v is not None:
            object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if self.p is not None:
            object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    @property
    def dim(self):
        return self.x.shape[0]


def gamma_from_momentum(p, params: PhysicalParams) -> float:
    mc = params.m * params.c
    return math.sqrt(1.0 + float(np.dot(p, p)) / mc**2)


def velocity_from_momentum(p, params: PhysicalParams) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p / (params.m * gamma_from_momentum(p, params))


def momentum_from_velocity(v, params: PhysicalParams) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    beta2 = float(np.dot(v, v)) / params.c**2
    if not beta2 < 1.0:
        raise DomainError(f"|v| = {math.sqrt(beta2) * params.c} is not below c = {params.c}")
    return params.m * v / math.sqrt(1.0 - beta2)


def gamma_of(state: PhaseState, params: PhysicalParams) -> float:
    if state.p is not None:
        return gamma_from_momentum(state.p, params)
    beta2 = float(np.dot(state.v, state.v)) / params.c**2
    if not beta2 < 1.0:
        raise DomainError(f"|v| = {math.sqrt(beta2) * params.c} is not below c = {params.c}")
    return 1.0 / math.sqrt(1.0 - beta2)


def relativistic_kinetic(state: PhaseState, params: PhysicalParams) -> float:
    """``m c^2 (gamma - 1)`` in the cancellation-free form ``m c^2 (gamma^2-1)/(gamma+1)``."""
    gamma = gamma_of(state, params)
    if state.p is not None:
        return float(np.dot(state.p, state.p)) / (params.m * (gamma + 1.0))
    return params.m * float(np.dot(state.v, state.v)) * gamma**2 / (gamma + 1.0)


def relativistic_energy(state: PhaseState, params: PhysicalParams, V: Optional[Potential] = None) -> float:
    V = kepler(params) if V is None else V
    return relativistic_kinetic(state, params) - V.value(state.x)


def classical_energy(state: PhaseState, params: PhysicalParams, Z: Potential) -> float:
    """``(m/2)|v|^2 - Z(x)``; ``Z`` is usually a :class:`TransformedPotential`."""
    return 0.5 * params.m * float(np.dot(state.v, state.v)) - Z.value(state.x)


def cross(x, v):
    """``x ^ v``: scalar for planar vectors, vector in three dimensions."""
    if len(x) == 2:
        return float(x[0] * v[1] - x[1] * v[0])
    return np.cross(x, v)


def angular_momentum(state: PhaseState, params: PhysicalParams, relativistic: bool = False):
    if relativistic:
        p = state.p if state.p is not None else momentum_from_velocity(state.v, params)
        return cross(state.x, p)
    return params.m * cross(state.x, state.v)


class Region(str, enum.Enum):
    OMEGA_H = "OmegaH"
    SIGMA_H = "SigmaH"
    FORBIDDEN = "Forbidden"


def region_of_value(v: float, h: float, params: PhysicalParams) -> Region:
    if v + h >= 0.0:
        return Region.OMEGA_H
    if v + h + 2.0 * params.rest_energy <= 0.0:
        return Region.SIGMA_H
    return Region.FORBIDDEN


def classify_region(x, h: float, params: PhysicalParams, V: Optional[Potential] = None) -> Region:
    V = kepler(params) if V is None else V
    return region_of_value(V.value(np.asarray(x, dtype=float)), h, params)


def kepler_apsides(params: PhysicalParams, h: float, L: float):
    """Radii where an energy-``h`` relativistic Kepler orbit with angular momentum ``L``
    has zero radial momentum, sorted ascending.

    With ``u = 1/r`` the radial momentum condition is the quadratic
    ``(alpha^2/c^2 - L^2) u^2 + 2 alpha (h + mc^2) u / c^2 + (h + mc^2)^2/c^2 - m^2 c^2 = 0``.
    """
    alpha, c, mc2 = params.alpha, params.c, params.rest_energy
    a = alpha**2 / c**2 - L**2
    b = 2.0 * alpha * (h + mc2) / c**2
    k = (h + mc2) ** 2 / c**2 - (params.m * c) ** 2
    if a == 0.0:
        roots = [-k / b] if b else []
    else:
        disc = b * b - 4.0 * a * k
        if disc < 0:
            return []
        sq = math.sqrt(disc)
        # stable quadratic roots
        q = -0.5 * (b + math.copysign(sq, b))
        roots = [q / a] + ([k / q] if q != 0 else [])
    return sorted(1.0 / u for u in roots if u > 0)


def relativistic_apsis_state(params: PhysicalParams, h: float, L: float, which: str = "apocenter",
                             t: float = 0.0) -> PhaseState:
    """Planar relativistic Kepler state on the x-axis at an apsis, momentum along +y.

    ``which='apocenter'`` picks the largest turning radius, ``'pericenter'`` the
    smallest. Raises :class:`SpiralRegime` when the orbit has no pericenter,
    i.e. ``L <= alpha/c`` and the particle spirals into the origin.
    """
    radii = kepler_apsides(params, h, L)
    if not radii:
        raise RegionError(f"no turning point for h = {h}, L = {L}")
    if which == "pericenter":
        if len(radii) < 2:
            raise SpiralRegime(f"L = {L} <= alpha/c = {params.alpha / params.c}: no pericenter")
        r = radii[0]
    elif which == "apocenter":
        r = radii[-1]
    else:
        raise ValueError(f"unknown apsis {which!r}")
    return PhaseState(t, np.array([r, 0.0]), p=np.array([0.0, L / r]))
