"""Fixed-step RK4 and adaptive Dormand-Prince 5(4) integration with dense output,
event location, perihelion detection and drift diagnostics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .dynamics import FlowField
from .errors import (
    DomainError,
    DomainExit,
    InsufficientEvents,
    IntegrationError,
    MaxStepsExceeded,
    StepUnderflow,
)


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "DP45"
    dt: float = 1e-3
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 10**7
    r_min: float = 1e-8

    def __post_init__(self):
        if self.method not in ("DP45", "RK4"):
            raise ValueError(f"method must be 'DP45' or 'RK4', got {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.rtol <= 1e-3:
            raise ValueError("rtol must lie in (0, 1e-3]")
        if not self.atol > 0:
            raise ValueError("atol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class Event:
    """Zero crossing of ``fn(t, y)``.

    ``direction`` +1 catches negative-to-positive crossings, -1 the reverse,
    0 both. ``terminal = k > 0`` stops the run at the k-th accepted crossing.
    ``accept`` can veto crossings (e.g. only the positive x half-axis).
    """

    fn: Callable[[float, np.ndarray], float]
    direction: int = 1
    terminal: int = 0
    accept: Optional[Callable[[float, np.ndarray], bool]] = None
    name: str = "event"


@dataclass(frozen=True)
class EventRecord:
    kind: str
    t: float
    state: np.ndarray


@dataclass(frozen=True)
class PerihelionEvent:
    """Perihelion passage. ``angle`` is unwrapped along the trajectory, so
    successive angles differ by the full apsidal angle (about 2 pi)."""

    t: float
    angle: float
    radius: float


class Trajectory:
    """Accepted samples ``(t, y, y')`` of one run of a :class:`FlowField`.

    Between samples the solution is the Dormand-Prince continuous extension
    when ``dense`` (one ``dim x 4`` matrix per step) is available, otherwise
    the cubic Hermite interpolant of the stored states and derivatives.
    """

    def __init__(self, field: FlowField, t, y, dy=None, events=None, steps_taken=0, steps_rejected=0,
                 h=None, dense=None):
        self.field = field
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if dy is None:
            dy = np.array([field.eval(ti, yi) for ti, yi in zip(self.t, self.y)])
        self.dy = np.asarray(dy, dtype=float)
        self.events: List[EventRecord] = list(events or [])
        self.steps_taken = steps_taken
        self.steps_rejected = steps_rejected
        self._h = h
        self._diag = None
        self.dense = None if dense is None or len(dense) == 0 else np.asarray(dense, dtype=float)

    def __len__(self):
        return len(self.t)

    @property
    def n(self):
        return self.field.n

    @property
    def x(self):
        return self.y[:, : self.n]

    @property
    def r(self):
        return np.linalg.norm(self.x, axis=1)

    @property
    def velocity(self):
        """Position derivative with respect to this trajectory's time variable."""
        return self.dy[:, : self.n]

    @property
    def clock(self):
        return self.y[:, -1] if self.field.clock else None

    @property
    def span(self):
        return float(self.t[-1] - self.t[0])

    @property
    def h(self):
        """Energy level of the run: the field's own level, else the initial energy."""
        if self._h is None:
            self._h = self.field.h if self.field.h is not None else float(self.field.energy(self.y[0]))
        return self._h

    def diagnostics(self):
        """Per-sample energy, angular momentum, gamma (None if classical) and region labels."""
        if self._diag is None:
            f = self.field
            energy = np.array([f.energy(yi) for yi in self.y])
            ang = np.array([f.angular_momentum(yi) for yi in self.y])
            gamma = np.array([f.gamma(yi) for yi in self.y]) if f.gamma is not None else None
            if f.model.kind in ("relativistic-kepler", "transformed"):
                h = self.h
                region = [f.region(yi, h).value for yi in self.y]
            else:
                region = None
            self._diag = {"energy": energy, "angular_momentum": ang, "gamma": gamma, "region": region}
        return self._diag

    def _locate(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        lo, hi = self.t[0], self.t[-1]
        tol = 1e-12 * max(1.0, abs(hi), abs(lo))
        if np.any(ts < lo - tol) or np.any(ts > hi + tol):
            raise ValueError(f"interpolation outside [{lo}, {hi}]")
        idx = np.clip(np.searchsorted(self.t, ts, side="right") - 1, 0, len(self.t) - 2)
        return ts, idx

    def interpolate(self, ts):
        """Dense output at times ``ts``; returns shape (len(ts), dim)."""
        ts, i = self._locate(ts)
        t0, t1 = self.t[i], self.t[i + 1]
        dt = (t1 - t0)[:, None]
        s = ((ts - t0) / (t1 - t0))[:, None]
        if self.dense is not None:
            powers = np.cumprod(np.repeat(s, 4, axis=1), axis=1)
            return self.y[i] + dt * np.einsum("kdj,kj->kd", self.dense[i], powers)
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        return h00 * self.y[i] + h10 * dt * self.dy[i] + h01 * self.y[i + 1] + h11 * dt * self.dy[i + 1]

    def interpolate_derivative(self, ts):
        ts, i = self._locate(ts)
        t0, t1 = self.t[i], self.t[i + 1]
        dt = (t1 - t0)[:, None]
        s = ((ts - t0) / (t1 - t0))[:, None]
        s2 = s * s
        d00 = (6 * s2 - 6 * s) / dt
        d10 = 3 * s2 - 4 * s + 1
        d01 = (-6 * s2 + 6 * s) / dt
        d11 = 3 * s2 - 2 * s
        return d00 * self.y[i] + d10 * self.dy[i] + d01 * self.y[i + 1] + d11 * self.dy[i + 1]

    def state_at(self, t):
        return self.interpolate([t])[0]


def _rel_drift(q):
    q = np.asarray(q, dtype=float)
    dq = q - q[0]
    if q.ndim > 1:
        return float(np.max(np.linalg.norm(dq, axis=1)) / max(1.0, float(np.linalg.norm(q[0]))))
    return float(np.max(np.abs(dq)) / max(1.0, abs(float(q[0]))))


@dataclass
class RunReport:
    energy_drift_rel: float
    L_drift_rel: float
    steps_taken: int
    steps_rejected: int
    n_samples: int
    t_final: float
    status: str = "ok"
    events: list = field(default_factory=list)
    perihelia: int = 0
    precession_estimate: Optional[float] = None
    precession_std: Optional[float] = None
    message: str = ""

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def make_report(traj: Trajectory, status="ok", message="", with_precession=False) -> RunReport:
    diag = traj.diagnostics()
    events = [{"kind": e.kind, "t": e.t} for e in traj.events]
    report = RunReport(
        energy_drift_rel=_rel_drift(diag["energy"]),
        L_drift_rel=_rel_drift(diag["angular_momentum"]),
        steps_taken=traj.steps_taken,
        steps_rejected=traj.steps_rejected,
        n_samples=len(traj),
        t_final=float(traj.t[-1]),
        status=status,
        events=events,
        message=message,
    )
    if with_precession and traj.n == 2:
        peri = detect_perihelion(traj)
        report.perihelia = len(peri)
        report.events += [{"kind": "perihelion", "t": p.t, "angle": p.angle, "radius": p.radius} for p in peri]
        if len(peri) >= 3:
            report.precession_estimate, report.precession_std = precession_estimate(peri)
    return report


def rk4_step(field: FlowField, t: float, y, dt: float):
    f = field.eval
    y = np.asarray(y, dtype=float)
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


# continuous extension of order 4, y(t + x h) = y + h K^T P [x, x^2, x^3, x^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def dp45_step(field: FlowField, t, y, k1, h, stages=False):
    """One Dormand-Prince step. Returns ``(y_new, f(y_new), error_vector)``,
    plus the dense-output matrix ``K^T P`` when ``stages`` is set."""
    f = field.eval
    a = _A
    k2 = f(t + _C[1] * h, y + h * (a[1][0] * k1))
    k3 = f(t + _C[2] * h, y + h * (a[2][0] * k1 + a[2][1] * k2))
    k4 = f(t + _C[3] * h, y + h * (a[3][0] * k1 + a[3][1] * k2 + a[3][2] * k3))
    k5 = f(t + _C[4] * h, y + h * (a[4][0] * k1 + a[4][1] * k2 + a[4][2] * k3 + a[4][3] * k4))
    k6 = f(t + h, y + h * (a[5][0] * k1 + a[5][1] * k2 + a[5][2] * k3 + a[5][3] * k4 + a[5][4] * k5))
    y_new = y + h * (a[6][0] * k1 + a[6][2] * k3 + a[6][3] * k4 + a[6][4] * k5 + a[6][5] * k6)
    k7 = f(t + h, y_new)
    e = _E
    err = h * (e[0] * k1 + e[2] * k3 + e[3] * k4 + e[4] * k5 + e[5] * k6 + e[6] * k7)
    if stages:
        return y_new, k7, err, np.array([k1, k2, k3, k4, k5, k6, k7]).T @ _P
    return y_new, k7, err


def _initial_step(field, t0, y0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = math.sqrt(np.mean((y0 / scale) ** 2))
    d1 = math.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    try:
        f1 = field.eval(t0 + h0, y0 + h0 * f0)
    except DomainError:
        return h0 * 1e-3
    d2 = math.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def _crosses(g0, g1, direction):
    if direction >= 0 and g0 < 0.0 <= g1:
        return True
    if direction <= 0 and g0 > 0.0 >= g1:
        return True
    return False


def _hermite(t0, y0, f0, t1, y1, f1, t):
    dt = t1 - t0
    s = (t - t0) / dt
    s2, s3 = s * s, s * s * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * dt * f0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * dt * f1)


def _bisect(g, a, b, ga, tol):
    """Root of ``g`` in ``[a, b]`` given a sign change; ``ga = g(a)``."""
    while b - a > tol:
        mid = 0.5 * (a + b)
        gm = g(mid)
        if (gm < 0.0) == (ga < 0.0) and gm != 0.0:
            a, ga = mid, gm
        else:
            b = mid
    return 0.5 * (a + b)


def _dense_eval(t0, y0, h, q, t):
    x = (t - t0) / h
    return y0 + h * (q @ np.array([x, x * x, x**3, x**4]))


def integrate(field: FlowField, y0, t_span, cfg: Optional[IntegratorConfig] = None,
              events: Sequence[Event] = ()):
    """Integrate ``field`` from ``y0`` over ``t_span = (t0, t1)``.

    Returns ``(Trajectory, RunReport)``. Terminal events end the run at the
    located crossing. Raises :class:`MaxStepsExceeded`, :class:`StepUnderflow`
    or :class:`DomainExit`; each carries the partial trajectory.
    """
    cfg = IntegratorConfig() if cfg is None else cfg
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    y = np.array(y0, dtype=float)
    if y.shape != (field.dim,):
        raise ValueError(f"initial state has shape {y.shape}, field expects ({field.dim},)")
    n = field.n
    span = t1 - t0

    f = field.eval(t0, y)
    ts, ys, fs, qs = [t0], [y], [f], []
    records: List[EventRecord] = []
    counts = [0] * len(events)
    gprev = [ev.fn(t0, y) for ev in events]
    taken = rejected = 0
    adaptive = cfg.method == "DP45"

    def fail(exc_cls, msg):
        traj = Trajectory(field, ts, ys, fs, records, taken, rejected, dense=qs if adaptive else None)
        raise exc_cls(msg, t=ts[-1], last_state=ys[-1], trajectory=traj)

    h = _initial_step(field, t0, y, f, cfg.rtol, cfg.atol, span) if adaptive else cfg.dt
    t = t0
    q = None
    stop = False
    while t < t1 and not stop:
        if taken + rejected >= cfg.max_steps:
            fail(MaxStepsExceeded, f"max_steps = {cfg.max_steps} reached at t = {t}")
        # tolerances scale with the elapsed span so open-ended runs stay meaningful
        elapsed = max(t - t0, h, 1e-300)
        h_floor = 1e-14 * max(elapsed, abs(t))
        h = min(h, t1 - t)
        last = t + h >= t1 - 1e-15 * span
        if last:
            h = t1 - t
        try:
            if adaptive:
                y_new, f_new, err_vec, q = dp45_step(field, t, y, f, h, stages=True)
            else:
                y_new = rk4_step(field, t, y, h)
                f_new = field.eval(t + h, y_new)
        except DomainError as exc:
            rejected += 1
            h *= 0.25
            if h < h_floor or not adaptive:
                fail(DomainExit, f"origin approach near t = {t}: {exc}")
            continue
        if adaptive:
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
            if not math.isfinite(err):
                err = 1e10
            if err > 1.0:
                rejected += 1
                h *= max(0.2, 0.9 * err ** -0.2)
                if h < h_floor:
                    fail(StepUnderflow, f"step size {h:.3e} collapsed below {h_floor:.3e} at t = {t}")
                continue
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        t_new = t1 if last else t + h
        if math.sqrt(float(y_new[:n] @ y_new[:n])) < cfg.r_min:
            fail(DomainExit, f"|x| fell below r_min = {cfg.r_min} at t = {t_new}")
        taken += 1

        if adaptive:
            def local(tt, t=t, y=y, hh=t_new - t, q=q):
                return _dense_eval(t, y, hh, q, tt)
        else:
            def local(tt, t=t, y=y, f=f, tn=t_new, yn=y_new, fn=f_new):
                return _hermite(t, y, f, tn, yn, fn, tt)

        hit = None
        t_tol = 1e-10 * (t_new - t0)
        for k, ev in enumerate(events):
            g_new = ev.fn(t_new, y_new)
            if _crosses(gprev[k], g_new, ev.direction):
                te = _bisect(lambda tt, ev=ev: ev.fn(tt, local(tt)), t, t_new, gprev[k], t_tol)
                ye = local(te)
                if ev.accept is None or ev.accept(te, ye):
                    counts[k] += 1
                    if ev.terminal and counts[k] >= ev.terminal:
                        if hit is None or te < hit[0]:
                            hit = (te, k)
                    else:
                        records.append(EventRecord(ev.name, te, ye))
            gprev[k] = g_new
        if hit is not None:
            te, k = hit
            stop = True
            if te - t <= 1e-15 * span:
                records = [r for r in records if r.t <= t]
                records.append(EventRecord(events[k].name, t, y))
                break
            if adaptive:
                y_new, _, _, q = dp45_step(field, t, y, f, te - t, stages=True)
            else:
                y_new = rk4_step(field, t, y, te - t)
            t_new = te
            f_new = field.eval(te, y_new)
            records = [r for r in records if r.t <= t_new]
            records.append(EventRecord(events[k].name, t_new, y_new))

        t, y, f = t_new, y_new, f_new
        ts.append(t)
        ys.append(y)
        fs.append(f)
        if adaptive:
            qs.append(q)
            h *= factor

    traj = Trajectory(field, ts, ys, fs, records, taken, rejected, dense=qs if adaptive else None)
    return traj, make_report(traj)


def find_crossings(traj: Trajectory, g: Callable[[np.ndarray], float], threshold=None, direction=1):
    """Times where ``g(y)`` crosses zero in ``direction`` along ``traj``.

    ``threshold(y)`` is a per-sample dead band: samples with ``|g| <= threshold``
    count as neither sign, which suppresses chatter on degenerate motion.
    Roots are refined by bisection on the dense output to ``1e-10 * span``.
    """
    vals = np.array([g(yi) for yi in traj.y])
    thr = np.zeros_like(vals) if threshold is None else np.array([threshold(yi) for yi in traj.y])
    sign = np.where(vals > thr, 1, np.where(vals < -thr, -1, 0))
    want_from = -1 if direction >= 0 else 1
    tol = 1e-10 * traj.span
    roots = []
    prev_i = None
    for i, s in enumerate(sign):
        if s == 0:
            continue
        if prev_i is not None and sign[prev_i] == want_from and s == -want_from:
            a, b = traj.t[prev_i], traj.t[i]

            def gi(tt):
                return g(traj.state_at(tt))

            roots.append(_bisect(gi, a, b, vals[prev_i], tol))
        prev_i = i
    return roots


CIRCULAR_RTOL = 1e-7


def detect_perihelion(traj: Trajectory) -> List[PerihelionEvent]:
    """Perihelion passages of a planar run: radial velocity crossing from - to +.

    Runs whose radius varies by less than ``CIRCULAR_RTOL`` (relative) are
    treated as circular and yield no events.
    """
    if traj.n != 2:
        raise ValueError("perihelion detection needs a planar (n = 2) trajectory")
    field = traj.field
    n = 2

    def radial(y):
        return float(y[:n] @ field.velocity(y))

    def deadband(y):
        v = field.velocity(y)
        return 1e-12 * math.sqrt(float(y[:n] @ y[:n])) * math.sqrt(float(v @ v))

    r = traj.r
    # numerically circular runs only carry integrator noise in the radial velocity
    if r.max() - r.min() <= CIRCULAR_RTOL * r.mean():
        return []
    times = find_crossings(traj, radial, deadband, direction=1)
    if not times:
        return []
    theta = np.unwrap(np.arctan2(traj.y[:, 1], traj.y[:, 0]))
    out = []
    for te in times:
        ye = traj.state_at(te)
        i = max(0, int(np.searchsorted(traj.t, te, side="right")) - 1)
        raw = math.atan2(ye[1], ye[0])
        delta = (raw - theta[i] + math.pi) % (2 * math.pi) - math.pi
        out.append(PerihelionEvent(float(te), float(theta[i] + delta), float(math.hypot(ye[0], ye[1]))))
    return out


def precession_estimate(events: Sequence[PerihelionEvent]):
    """Mean and standard deviation of (successive perihelion angle gap - 2 pi), radians/orbit."""
    if len(events) < 3:
        raise InsufficientEvents(f"need at least 3 perihelion events, got {len(events)}")
    angles = np.array([e.angle for e in events])
    gaps = np.abs(np.diff(angles)) - 2.0 * math.pi
    return float(np.mean(gaps)), float(np.std(gaps, ddof=1))


def revolution_event(x0, count: int) -> Event:
    """Terminal event after ``count`` full turns about the origin, measured from the ray through ``x0``."""
    x0 = np.asarray(x0, dtype=float)[:2]
    u = x0 / np.linalg.norm(x0)

    def g(t, y):
        return u[0] * y[1] - u[1] * y[0]

    def on_ray(t, y):
        return u[0] * y[0] + u[1] * y[1] > 0.0

    return Event(g, direction=1, terminal=count, accept=on_ray, name="revolution")


def perihelion_event(field: FlowField, terminal: int = 0) -> Event:
    n = field.n

    def g(t, y):
        return float(y[:n] @ field.velocity(y))

    return Event(g, direction=1, terminal=terminal, name="perihelion")


def integrate_orbits(field: FlowField, y0, revolutions: int, cfg: Optional[IntegratorConfig] = None,
                     t_max: float = 1e6):
    """Integrate until the orbit has swept ``revolutions`` full turns (retrograde orbits not supported)."""
    traj, report = integrate(field, y0, (0.0, t_max), cfg, events=[revolution_event(y0[: field.n], revolutions)])
    if not traj.events or traj.events[-1].kind != "revolution":
        raise IntegrationError(f"orbit did not complete {revolutions} revolutions before t = {t_max}",
                               t=traj.t[-1], last_state=traj.y[-1], trajectory=traj)
    return traj, report


def measure_precession(field: FlowField, y0, orbits: int, cfg: Optional[IntegratorConfig] = None,
                       t_max: float = 1e7):
    """Integrate a planar bounded orbit over ``orbits`` radial periods past its first
    interior perihelion and return ``(mean, std, perihelia, trajectory)``."""
    traj, _ = integrate(field, y0, (0.0, t_max), cfg, events=[perihelion_event(field, terminal=orbits + 2)])
    peri = detect_perihelion(traj)
    mean, std = precession_estimate(peri)
    return mean, std, peri, traj
