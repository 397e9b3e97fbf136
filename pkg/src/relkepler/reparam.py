"""Energy-dependent time reparametrization between the relativistic equation
``d/dt(m gamma x') = grad V`` at energy ``h`` and the Newtonian system
``m z'' = grad Z_h(z)`` at energy ``h``.

Clocks:
    forward  d(zeta)/dt = mc^2 / (V(x) + h + mc^2)    (relativistic run -> s)
    inverse  dt/ds      = (V(z) + h + mc^2) / mc^2    (transformed run -> t)

Velocities map as ``z' = x' (V + h + mc^2)/mc^2``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .dynamics import (
    FlowField,
    forward_clock_rate,
    inverse_clock_rate,
    relativistic_field,
    transformed_field,
    with_clock,
)
from .errors import EnergyMismatch, NonMonotoneClock, RegionError
from .integrate import IntegratorConfig, Trajectory, integrate, integrate_orbits
from .model import (
    PhysicalParams,
    Potential,
    Region,
    TransformedPotential,
    kepler,
    momentum_from_velocity,
    region_of_value,
)

ENERGY_RTOL = 1e-10


@dataclass(frozen=True)
class NegatedPotential:
    """``-V``. The Sigma_h branch maps onto the relativistic equation driven by ``-grad V``."""

    V: Potential

    def value(self, x):
        return -self.V.value(x)

    def gradient(self, x):
        return -self.V.gradient(x)


@dataclass
class ClockedTrajectory:
    """A run whose last state column is the companion time variable.

    ``kind`` is ``forward`` (relativistic run carrying zeta) or ``inverse``
    (transformed run carrying physical time). ``sigma`` marks the
    magnitude-rate clock of the Sigma_h branch.
    """

    base: Trajectory
    h: float
    V: Potential
    kind: str
    sigma: bool = False

    @property
    def params(self) -> PhysicalParams:
        return self.base.field.params

    @property
    def time(self):
        return self.base.t

    @property
    def clock(self):
        return self.base.y[:, -1]

    @property
    def clock_rate(self):
        return self.base.dy[:, -1]


@dataclass
class EquivalenceReport:
    """Gaps between two runs that should be reparametrizations of each other.

    ``clock_roundtrip_gap`` is relative to the run length (``max |t' - t| / T``);
    ``residual_norm`` is relative to the largest force along the curve.
    """

    direction: str
    sup_position_gap: float
    energy_gap: float
    residual_norm: float
    clock_roundtrip_gap: float
    identity_gap: float
    target_energy: float
    T: float
    S: float
    n_samples: int
    tolerances: dict = field(default_factory=dict)
    verdict: str = "fail"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


DEFAULT_TOLERANCES = {
    "sup_position_gap": 1e-5,
    "energy_gap": 1e-8,
    "residual_norm": 1e-4,
    "clock_roundtrip_gap": 1e-8,
    "identity_gap": 1e-8,
}


def _check_energy(value, h, what):
    if abs(value - h) > ENERGY_RTOL * max(1.0, abs(h)):
        raise EnergyMismatch(f"{what} energy {value!r} differs from h = {h!r}")


def _strictly_increasing(a, what):
    if not np.all(np.diff(a) > 0):
        raise NonMonotoneClock(f"{what} is not strictly increasing")


def integrate_with_forward_clock(params: PhysicalParams, V: Optional[Potential], h: float, y0, t_span=None,
                                 cfg: Optional[IntegratorConfig] = None, revolutions: Optional[int] = None,
                                 n: int = 2) -> ClockedTrajectory:
    """Relativistic run from ``y0 = (x, p)`` with ``zeta`` co-integrated, ``zeta(0) = 0``."""
    V = kepler(params) if V is None else V
    rel = relativistic_field(params, V, n=n, h=h)
    y0 = np.asarray(y0, dtype=float)
    _check_energy(rel.energy(y0), h, "relativistic")
    if region_of_value(V.value(y0[:n]), h, params) is not Region.OMEGA_H:
        raise RegionError("initial position is not in Omega_h")
    field_ = with_clock(rel, forward_clock_rate(params, h, V))
    y0c = np.append(y0, 0.0)
    traj = _run(field_, y0c, t_span, cfg, revolutions)
    clocked = ClockedTrajectory(traj, h, V, "forward")
    _strictly_increasing(clocked.clock, "zeta")
    return clocked


def integrate_with_inverse_clock(params: PhysicalParams, V: Optional[Potential], h: float, z0, s_span=None,
                                 cfg: Optional[IntegratorConfig] = None, revolutions: Optional[int] = None,
                                 n: int = 2, sigma: bool = False) -> ClockedTrajectory:
    """Transformed run from ``z0 = (z, z')`` with physical time co-integrated, ``t(0) = 0``.

    ``sigma=True`` requires ``z0`` in Sigma_h and uses ``dt/ds = |V + h + mc^2|/mc^2``.
    """
    V = kepler(params) if V is None else V
    tf = transformed_field(params, h, V, n=n)
    z0 = np.asarray(z0, dtype=float)
    _check_energy(tf.energy(z0), h, "classical")
    region = region_of_value(V.value(z0[:n]), h, params)
    wanted = Region.SIGMA_H if sigma else Region.OMEGA_H
    if region is not wanted:
        raise RegionError(f"initial position lies in {region.value}, expected {wanted.value}")
    field_ = with_clock(tf, inverse_clock_rate(params, h, V, magnitude=sigma))
    traj = _run(field_, np.append(z0, 0.0), s_span, cfg, revolutions)
    clocked = ClockedTrajectory(traj, h, V, "inverse", sigma=sigma)
    _strictly_increasing(clocked.clock, "physical time")
    return clocked


def _run(field_: FlowField, y0, span, cfg, revolutions):
    if revolutions is not None:
        traj, _ = integrate_orbits(field_, y0, revolutions, cfg)
    else:
        traj, _ = integrate(field_, y0, span, cfg)
    return traj


def _inverse_map(times, clock, rate):
    """Cubic Hermite inverse of a strictly increasing clock, slopes ``1/rate`` taken from the run."""
    _strictly_increasing(clock, "clock")
    return CubicHermiteSpline(clock, times, 1.0 / rate)


def matched_transformed_state(params: PhysicalParams, V: Optional[Potential], h: float, y0, n: int = 2):
    """Initial data ``(z, z')`` of the transformed system matching a relativistic state ``(x, p)``."""
    V = kepler(params) if V is None else V
    rel = relativistic_field(params, V, n=n)
    y0 = np.asarray(y0, dtype=float)
    x0 = y0[:n]
    w = V.value(x0) + h + params.rest_energy
    return np.concatenate([x0, rel.velocity(y0) * w / params.rest_energy])


def matched_relativistic_state(params: PhysicalParams, V: Optional[Potential], h: float, z0, n: int = 2,
                               sigma: bool = False):
    """Initial data ``(x, p)`` matching a transformed state ``(z, z')``.

    On the Sigma_h branch the curve is driven by ``-grad V``; the matching
    state belongs to :func:`relativistic_field` with ``NegatedPotential(V)``.
    """
    V = kepler(params) if V is None else V
    z0 = np.asarray(z0, dtype=float)
    w = V.value(z0[:n]) + h + params.rest_energy
    if sigma:
        w = abs(w)
    xdot = z0[n:2 * n] * params.rest_energy / w
    return np.concatenate([z0[:n], momentum_from_velocity(xdot, params)])


def _grid(a, b, num):
    g = np.linspace(a, b, num)
    g[-1] = b
    return g


def transport_forward(clocked: ClockedTrajectory, num: Optional[int] = None) -> Trajectory:
    """Resample a relativistic run on a uniform ``s`` grid as a transformed-system trajectory.

    The returned trajectory's state is ``(z, z', t)``: the last column is the
    physical time ``chi(s)``, so the result is itself a clocked transformed run.
    """
    if clocked.kind != "forward":
        raise ValueError("transport_forward needs a forward-clocked relativistic run")
    base = clocked.base
    params, h, V = clocked.params, clocked.h, clocked.V
    n = base.n
    mc2 = params.rest_energy
    chi = _inverse_map(base.t, clocked.clock, clocked.clock_rate)
    num = len(base) if num is None else num
    s = _grid(0.0, clocked.clock[-1], num)
    t = np.clip(chi(s), base.t[0], base.t[-1])
    t[0], t[-1] = base.t[0], base.t[-1]
    states = base.interpolate(t)
    rel = base.field
    xdot = np.array([rel.velocity(y) for y in states])
    w = np.array([V.value(y[:n]) for y in states]) + h + mc2
    z = states[:, :n]
    zp = xdot * (w / mc2)[:, None]
    target = with_clock(transformed_field(params, h, V, n=n), inverse_clock_rate(params, h, V))
    return Trajectory(target, s, np.column_stack([z, zp, t]), h=h)


def transport_backward(clocked: ClockedTrajectory, num: Optional[int] = None) -> Trajectory:
    """Resample a transformed run on a uniform physical-time grid as a relativistic trajectory.

    State of the result is ``(x, p, s)``; the last column is ``eta(t)``. On the
    Sigma_h branch the target field is the relativistic one driven by ``-V``.
    """
    if clocked.kind != "inverse":
        raise ValueError("transport_backward needs an inverse-clocked transformed run")
    base = clocked.base
    params, h, V = clocked.params, clocked.h, clocked.V
    n = base.n
    mc2 = params.rest_energy
    tclock = clocked.clock
    eta = _inverse_map(base.t, tclock, clocked.clock_rate)
    num = len(base) if num is None else num
    t = _grid(0.0, tclock[-1], num)
    s = np.clip(eta(t), base.t[0], base.t[-1])
    s[0], s[-1] = base.t[0], base.t[-1]
    states = base.interpolate(s)
    x = states[:, :n]
    w = np.array([V.value(xi) for xi in x]) + h + mc2
    if clocked.sigma:
        w = np.abs(w)
    xdot = states[:, n:2 * n] * (mc2 / w)[:, None]
    p = np.array([momentum_from_velocity(v, params) for v in xdot])
    drive = NegatedPotential(V) if clocked.sigma else V
    rel_h = -h - 2.0 * mc2 if clocked.sigma else h
    target = with_clock(relativistic_field(params, drive, n=n, h=rel_h), forward_clock_rate(params, rel_h, drive))
    return Trajectory(target, t, np.column_stack([x, p, s]), h=rel_h)


def gamma_identity_gap(traj: Trajectory, V: Potential, h: float):
    """Max over samples of ``|1 - |x'|^2/c^2 - (mc^2/(V + h + mc^2))^2|``."""
    params = traj.field.params
    mc2 = params.rest_energy
    xdot = np.array([traj.field.velocity(y) for y in traj.y])
    w = np.array([V.value(xi) for xi in traj.x]) + h + mc2
    lhs = 1.0 - np.sum(xdot**2, axis=1) / params.c**2
    return float(np.max(np.abs(lhs - (mc2 / w) ** 2)))


def speed_identity_gap(traj: Trajectory, V: Potential, h: float):
    """Relative gap of ``|x'|^2 = 2 m c^4 (Z_h + h)/(V + h + mc^2)^2`` along a relativistic run."""
    params = traj.field.params
    mc2 = params.rest_energy
    Z = TransformedPotential(V, h, params)
    xdot = np.array([traj.field.velocity(y) for y in traj.y])
    lhs = np.sum(xdot**2, axis=1)
    rhs = np.array([2.0 * params.m * params.c**4 * (Z.value(xi) + h) / (V.value(xi) + h + mc2) ** 2
                    for xi in traj.x])
    return float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-300)))


def _residual(curve, force, mass, centers, delta, second_order):
    """Relative residual of a curve against its equation of motion by centered differences.

    ``second_order`` compares ``mass * (q(s+d) - 2q(s) + q(s-d))/d^2`` with
    ``force(q(s))``; otherwise ``(P(t+d) - P(t-d))/(2d)`` with ``force``.
    """
    plus, mid, minus = curve(centers + delta), curve(centers), curve(centers - delta)
    if second_order:
        lhs = mass * (plus - 2.0 * mid + minus) / delta**2
    else:
        lhs = (plus - minus) / (2.0 * delta)
    rhs = np.array([force(q) for q in mid])
    scale = float(np.max(np.linalg.norm(rhs, axis=1)))
    return float(np.max(np.linalg.norm(lhs - rhs, axis=1)) / scale)


def _residual_step(traj: Trajectory):
    """Difference step: 0.5% of the shortest local time scale ``|x|/|x'|`` of the run.

    Truncation error of the centered differences then sits near 1e-5 of the
    force scale, well above the dense-output noise.
    """
    speed = np.linalg.norm(traj.velocity, axis=1)
    return 0.005 * float(np.min(traj.r / np.maximum(speed, 1e-300)))


def verify_equivalence(params: PhysicalParams, V: Optional[Potential], h: float, y0, orbits: int = 5,
                       cfg: Optional[IntegratorConfig] = None, direction: str = "forward", n: int = 2,
                       num: Optional[int] = None, tolerances: Optional[dict] = None) -> EquivalenceReport:
    """Run both dynamics from matched data and measure how far they are from being
    reparametrizations of each other.

    ``direction='forward'`` transports the relativistic run into ``s``;
    ``'backward'`` transports the transformed run into ``t``. ``y0 = (x, p)`` is
    relativistic initial data in both cases.
    """
    V = kepler(params) if V is None else V
    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    y0 = np.asarray(y0, dtype=float)
    rel = relativistic_field(params, V, n=n, h=h)
    _check_energy(rel.energy(y0), h, "relativistic")
    z0 = matched_transformed_state(params, V, h, y0, n)
    tf = transformed_field(params, h, V, n=n)
    Z = TransformedPotential(V, h, params)

    if direction == "forward":
        fwd = integrate_with_forward_clock(params, V, h, y0, cfg=cfg, revolutions=orbits, n=n)
        T, S = float(fwd.time[-1]), float(fwd.clock[-1])
        moved = transport_forward(fwd, num)
        other = integrate_with_inverse_clock(params, V, h, z0, (0.0, S), cfg, n=n)
        pos_gap = float(np.max(np.linalg.norm(moved.x - other.base.interpolate(moved.t)[:, :n], axis=1)))
        energy_gap = float(np.max(np.abs(np.array([tf.energy(y[:2 * n]) for y in moved.y]) - h)))
        back = other.base.interpolate(fwd.clock)[:, -1]
        roundtrip = float(np.max(np.abs(back - fwd.time)) / T)
        identity = gamma_identity_gap(fwd.base, V, h)
        chi = _inverse_map(fwd.time, fwd.clock, fwd.clock_rate)

        def curve(ss):
            return fwd.base.interpolate(chi(ss))[:, :n]

        d = _residual_step(moved)
        centers = np.linspace(d, S - d, min(len(moved), 2000))
        residual = _residual(curve, Z.gradient, params.m, centers, d, True)
        n_samples = len(moved)
    elif direction == "backward":
        inv = integrate_with_inverse_clock(params, V, h, z0, cfg=cfg, revolutions=orbits, n=n)
        S, T = float(inv.time[-1]), float(inv.clock[-1])
        moved = transport_backward(inv, num)
        other = integrate_with_forward_clock(params, V, h, y0, (0.0, T), cfg, n=n)
        pos_gap = float(np.max(np.linalg.norm(moved.x - other.base.interpolate(moved.t)[:, :n], axis=1)))
        energy_gap = float(np.max(np.abs(np.array([rel.energy(y[:2 * n]) for y in moved.y]) - h)))
        back = other.base.interpolate(inv.clock)[:, -1]
        roundtrip = float(np.max(np.abs(back - inv.time)) / S)
        identity = gamma_identity_gap(moved, V, h)
        eta = _inverse_map(inv.time, inv.clock, inv.clock_rate)
        momentum = _momentum_curve(inv, eta, V, h)
        d = _residual_step(moved)
        centers = np.linspace(d, T - d, min(len(moved), 2000))
        positions = inv.base.interpolate(eta(centers))[:, :n]
        residual = _first_order_residual(momentum, positions, V, centers, d)
        n_samples = len(moved)
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")

    report = EquivalenceReport(direction, pos_gap, energy_gap, residual, roundtrip, identity, h, T, S,
                               n_samples, tol)
    report.verdict = "pass" if all(getattr(report, k) <= v for k, v in tol.items()) else "fail"
    return report


def _momentum_curve(inv: ClockedTrajectory, eta, V, h):
    """``t -> m gamma x'(t)`` of the backward-transported curve, through the velocity map."""
    params = inv.params
    n = inv.base.n
    mc2 = params.rest_energy

    def momentum(tt):
        st = inv.base.interpolate(eta(tt))
        w = np.array([V.value(q[:n]) for q in st]) + h + mc2
        if inv.sigma:
            w = np.abs(w)
        xdot = st[:, n:2 * n] * (mc2 / w)[:, None]
        return params.m * xdot / np.sqrt(1.0 - np.sum(xdot**2, axis=1) / params.c**2)[:, None]

    return momentum


def _first_order_residual(momentum, positions, V, centers, d):
    lhs = (momentum(centers + d) - momentum(centers - d)) / (2.0 * d)
    rhs = np.array([V.gradient(q) for q in positions])
    scale = float(np.max(np.linalg.norm(rhs, axis=1)))
    return float(np.max(np.linalg.norm(lhs - rhs, axis=1)) / scale)


def branch_energy(traj: Trajectory, V: Potential):
    """``-m c^2 (gamma - 1) - V(x)``: energy of the Sigma_h branch (mass sign flipped)."""
    field_ = traj.field
    n = traj.n
    m = field_.params.m
    out = []
    for y in traj.y:
        p = y[n:2 * n]
        g = field_.gamma(y)
        out.append(-float(p @ p) / (m * (g + 1.0)) - V.value(y[:n]))
    return np.array(out)


def sigma_branch_check(params: PhysicalParams, V: Optional[Potential], h: float, z0, s_span=(0.0, 5.0),
                       cfg: Optional[IntegratorConfig] = None, n: int = 2, num: Optional[int] = None,
                       tolerances: Optional[dict] = None) -> EquivalenceReport:
    """Transport a transformed-system solution supported in Sigma_h back to physical time.

    Uses the magnitude clock ``dt/ds = |V + h + mc^2|/mc^2``. The resulting curve
    solves ``d/dt(m gamma x') = -grad V``, equivalently the relativistic equation
    with mass ``-m``; its conserved energy ``-mc^2(gamma - 1) - V`` is reported
    against ``h + 2mc^2``.
    """
    V = kepler(params) if V is None else V
    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    mc2 = params.rest_energy
    target = h + 2.0 * mc2
    inv = integrate_with_inverse_clock(params, V, h, z0, s_span, cfg, n=n, sigma=True)
    S, T = float(inv.time[-1]), float(inv.clock[-1])
    moved = transport_backward(inv, num)
    energy_gap = float(np.max(np.abs(branch_energy(moved, V) - target)))
    x0 = matched_relativistic_state(params, V, h, z0, n, sigma=True)
    drive = NegatedPotential(V)
    rel_h = -h - 2.0 * mc2
    other_field = with_clock(relativistic_field(params, drive, n=n, h=rel_h), forward_clock_rate(params, rel_h, drive))
    other, _ = integrate(other_field, np.append(x0, 0.0), (0.0, T), cfg)
    roundtrip = float(np.max(np.abs(other.interpolate(inv.clock)[:, -1] - inv.time)) / S)
    pos_gap = float(np.max(np.linalg.norm(moved.x - other.interpolate(moved.t)[:, :n], axis=1)))
    identity = gamma_identity_gap(moved, V, h)
    eta = _inverse_map(inv.time, inv.clock, inv.clock_rate)
    momentum = _momentum_curve(inv, eta, V, h)

    d = _residual_step(moved)
    centers = np.linspace(d, T - d, min(len(moved), 2000))
    positions = inv.base.interpolate(eta(centers))[:, :n]
    residual = _first_order_residual(momentum, positions, drive, centers, d)
    report = EquivalenceReport("sigma", pos_gap, energy_gap, residual, roundtrip, identity, target, T, S,
                               len(moved), tol)
    report.verdict = "pass" if all(getattr(report, k) <= v for k, v in tol.items()) else "fail"
    return report
