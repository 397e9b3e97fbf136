"""Shared oracles and initial conditions for the test suite."""
import math

import numpy as np


def kepler_ellipse_state(a, e, alpha=1.0, m=1.0):
    """Pericenter state ``(x, v)`` on the +x axis of a Newtonian ellipse."""
    rp = a * (1.0 - e)
    vp = math.sqrt(alpha / (m * a) * (1.0 + e) / (1.0 - e))
    return np.array([rp, 0.0, 0.0, vp])


def kepler_position(t, a, e, alpha=1.0, m=1.0):
    """Position at time ``t`` after pericenter, via Kepler's equation (Newton iteration)."""
    n = math.sqrt(alpha / (m * a**3))
    M = n * t
    E = M if e < 0.8 else math.pi
    for _ in range(50):
        dE = (E - e * math.sin(E) - M) / (1.0 - e * math.cos(E))
        E -= dE
        if abs(dE) < 1e-15:
            break
    return np.array([a * (math.cos(E) - e), a * math.sqrt(1 - e * e) * math.sin(E)])


def period(a, alpha=1.0, m=1.0):
    return 2.0 * math.pi * math.sqrt(m * a**3 / alpha)
