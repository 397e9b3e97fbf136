"""Closed-form Binet orbits of the ell = 4 force law and leading-order precession formulas.

With ``u = 1/r`` the ell = 4 law gives ``u'' + (1 - m bhat/L^2) u = m ahat/L^2``,
so orbits are ``r = p / (1 + e cos(k (theta - theta0)))`` with
``k = sqrt(1 - m bhat/L^2)`` and ``p = (L^2 - m bhat)/(m ahat)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AsymptoteError, SpiralRegime
from .model import PhysicalParams, cross


@dataclass(frozen=True)
class ConicOrbit:
    k: float
    p: float
    e: float = 0.0
    theta0: float = 0.0

    @property
    def bounded(self):
        return 0.0 <= self.e < 1.0

    @property
    def pericenter(self):
        return self.p / (1.0 + self.e)

    @property
    def apocenter(self):
        return self.p / (1.0 - self.e) if self.e < 1.0 else math.inf


def binet_parameters(ahat: float, bhat: float, L: float, m: float = 1.0, ell: int = 4) -> ConicOrbit:
    """Apsidal ratio ``k`` and scale ``p`` (e = 0, theta0 = 0) for the ell = 4 family."""
    if ell != 4:
        raise ValueError("closed-form Binet orbits exist only for ell = 4")
    if not L * L > m * bhat:
        raise SpiralRegime(f"L^2 = {L * L} <= m*bhat = {m * bhat}: orbit spirals into the origin")
    return ConicOrbit(k=math.sqrt(1.0 - m * bhat / (L * L)), p=(L * L - m * bhat) / (m * ahat))


def apsidal_precession(k: float) -> float:
    """Perihelion advance per orbit, ``2 pi (1/k - 1)``."""
    if not 0.0 < k <= 1.0:
        raise ValueError(f"k must lie in (0, 1], got {k}")
    return 2.0 * math.pi * (1.0 / k - 1.0)


def precession_ell4(ahat: float, bhat: float, L: float, m: float = 1.0) -> float:
    return apsidal_precession(binet_parameters(ahat, bhat, L, m).k)


def precession_schwarzschild_leading(params: PhysicalParams, L: float) -> float:
    """First-order perihelion advance ``6 pi G^2 M^2 m^2 / (c^2 L^2)`` of the ell = 5 law."""
    G, M, m, c = params.G, params.M, params.m, params.c
    return 6.0 * math.pi * (G * M * m) ** 2 / (c * c * L * L)


def precession_sr_leading(params: PhysicalParams, L: float) -> float:
    """First-order advance ``pi G^2 M^2 m^2 / (c^2 L^2)`` of the special-relativistic coefficients."""
    G, M, m, c = params.G, params.M, params.m, params.c
    return math.pi * (G * M * m) ** 2 / (c * c * L * L)


def orbit_radius(conic: ConicOrbit, theta):
    denom = 1.0 + conic.e * np.cos(conic.k * (np.asarray(theta, dtype=float) - conic.theta0))
    if np.any(denom <= 0.0):
        raise AsymptoteError("theta lies beyond the asymptote of an unbound orbit")
    r = conic.p / denom
    return float(r) if np.ndim(r) == 0 else r


def conic_from_state(x, v, ahat: float, bhat: float, m: float = 1.0) -> ConicOrbit:
    """Fit ``e`` and ``theta0`` of the ell = 4 orbit through a planar state ``(x, v)``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    L = m * cross(x, v)
    base = binet_parameters(ahat, bhat, abs(L), m)
    r = float(np.hypot(*x))
    theta = math.atan2(x[1], x[0])
    rdot = float(x @ v) / r
    # u - 1/p = A cos(k phi), du/dtheta = -rdot m / L = -A k sin(k phi)
    a_cos = 1.0 / r - 1.0 / base.p
    a_sin = rdot * m / (L * base.k)
    amp = math.hypot(a_cos, a_sin)
    theta0 = theta - math.atan2(a_sin, a_cos) / base.k
    return ConicOrbit(base.k, base.p, amp * base.p, theta0)


def state_at_pericenter(conic: ConicOrbit, ahat: float, bhat: float, m: float = 1.0):
    """Planar ``(x, v)`` at the pericenter of a prograde orbit with the given conic's ``p`` and ``e``."""
    L = math.sqrt(m * ahat * conic.p + m * bhat)
    r = conic.pericenter
    c, s = math.cos(conic.theta0), math.sin(conic.theta0)
    x = np.array([r * c, r * s])
    v = (L / (m * r)) * np.array([-s, c])
    return x, v
