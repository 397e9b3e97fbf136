"""JSON run configuration.

A config is a JSON object with ``"schema": 1`` and the sections
``params``, ``model``, ``initial``, ``t_span`` or ``orbits``, ``integrator`` and
``output``; ``precession`` and ``sweep`` sections are read by those commands.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import (
    FlowField,
    central_force_field,
    classical_kepler_field,
    relativistic_field,
    transformed_field,
)
from .errors import ConfigError, RegionError
from .integrate import IntegratorConfig
from .model import (
    Family,
    PhysicalParams,
    PowerLawPotential,
    TransformedPotential,
    coefficients_for,
    kepler,
    momentum_from_velocity,
    relativistic_apsis_state,
)

SCHEMA_VERSION = 1
MODEL_KINDS = ("classical-kepler", "relativistic-kepler", "transformed", "central-force")


def _num(section, key, where, default=None, positive=False):
    value = section.get(key, default)
    if value is None:
        raise ConfigError(f"missing {where}.{key}", field=f"{where}.{key}")
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where}.{key} must be a finite number, got {value!r}", field=f"{where}.{key}")
    if positive and not value > 0:
        raise ConfigError(f"{where}.{key} must be positive, got {value!r}", field=f"{where}.{key}")
    return float(value)


def _vec(section, key, where, n=None):
    value = section.get(key)
    if not isinstance(value, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool)
                                              for c in value):
        raise ConfigError(f"{where}.{key} must be a list of numbers", field=f"{where}.{key}")
    if len(value) not in (2, 3) or (n is not None and len(value) != n):
        raise ConfigError(f"{where}.{key} must have {n or '2 or 3'} components", field=f"{where}.{key}")
    return np.array(value, dtype=float)


@dataclass
class RunConfig:
    raw: dict
    params: PhysicalParams
    kind: str
    h: Optional[float]
    ell: Optional[int]
    ahat: Optional[float]
    bhat: Optional[float]
    family: Optional[str]
    L: Optional[float]
    n: int
    integrator: IntegratorConfig
    t_span: Optional[tuple] = None
    orbits: Optional[int] = None
    outputs: dict = field(default_factory=dict)

    def build_field(self) -> FlowField:
        p, n = self.params, self.n
        if self.kind == "classical-kepler":
            return classical_kepler_field(p, n)
        if self.kind == "relativistic-kepler":
            return relativistic_field(p, n=n, h=self.h)
        if self.kind == "transformed":
            return transformed_field(p, self.h, n=n)
        return central_force_field(self.ell, self.ahat, self.bhat, p, n=n)

    def potential(self):
        if self.kind == "central-force":
            return PowerLawPotential(self.ahat, self.bhat, self.ell)
        if self.kind == "transformed":
            return TransformedPotential(kepler(self.params), self.h, self.params)
        return kepler(self.params)

    def initial_state(self) -> np.ndarray:
        """Flat initial state in the layout of :meth:`build_field`."""
        init = self.raw.get("initial")
        if not isinstance(init, dict):
            raise ConfigError("missing initial section", field="initial")
        p = self.params
        if "apsis" in init:
            ap = init["apsis"]
            if self.kind != "relativistic-kepler":
                raise ConfigError("initial.apsis is only defined for relativistic-kepler", field="initial.apsis")
            s = relativistic_apsis_state(p, _num(ap, "h", "initial.apsis"), _num(ap, "L", "initial.apsis"),
                                         ap.get("which", "apocenter"))
            return np.concatenate([s.x, s.p])
        x = _vec(init, "x", "initial", self.n)
        if "direction" in init:
            return np.concatenate([x, self._from_energy(x, _vec(init, "direction", "initial", self.n))])
        if self.kind == "relativistic-kepler":
            if "p" in init:
                return np.concatenate([x, _vec(init, "p", "initial", self.n)])
            v = _vec(init, "v", "initial", self.n)
            try:
                return np.concatenate([x, momentum_from_velocity(v, p)])
            except ValueError as exc:
                raise ConfigError(str(exc), field="initial.v") from exc
        return np.concatenate([x, _vec(init, "v", "initial", self.n)])

    def _from_energy(self, x, direction):
        """Speed fixed by the model energy ``h`` (or ``energy``), pointing along ``direction``."""
        p = self.params
        norm = float(np.linalg.norm(direction))
        if norm == 0:
            raise ConfigError("initial.direction must be non-zero", field="initial.direction")
        u = direction / norm
        h = self.h
        if h is None:
            h = _num(self.raw.get("model", {}), "energy", "model")
        V = kepler(p).value(x) if self.kind != "central-force" else self.potential().value(x)
        if self.kind == "relativistic-kepler":
            if V + h < 0:
                raise RegionError(f"initial position with V + h = {V + h} < 0 is outside Omega_h")
            gamma = 1.0 + (V + h) / p.rest_energy
            return p.m * p.c * math.sqrt(gamma * gamma - 1.0) * u
        if self.kind == "transformed":
            kin = self.potential().value(x) + h
        else:
            kin = V + h
        if kin < 0:
            raise RegionError(f"no real speed: kinetic energy {kin} < 0 at the initial position")
        return math.sqrt(2.0 * kin / p.m) * u


def parse_config(raw: dict, rtol=None, atol=None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    schema = raw.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {schema!r}", field="schema")
    pr = raw.get("params", {})
    try:
        params = PhysicalParams(**{k: _num(pr, k, "params", 1.0, positive=True) for k in ("m", "c", "G", "M")})
    except ConfigError as exc:
        raise ConfigError(str(exc), field=exc.field if "." in (exc.field or "") else f"params.{exc.field}") from exc
    model = raw.get("model", {})
    kind = model.get("kind", "relativistic-kepler")
    family = model.get("family")
    h = L = ell = ahat = bhat = None
    if "h" in model:
        h = _num(model, "h", "model")
    if "L" in model:
        L = _num(model, "L", "model")
    if family is not None:
        try:
            Family(family)
        except ValueError:
            raise ConfigError(f"unknown family {family!r}", field="model.family") from None
        kind = "central-force"
        ell, ahat, bhat = coefficients_for(family, h if h is not None else 0.0, L, params)
    elif kind == "central-force":
        ell = model.get("ell")
        if ell not in (4, 5):
            raise ConfigError("model.ell must be 4 or 5", field="model.ell")
        ahat = _num(model, "ahat", "model", positive=True)
        bhat = _num(model, "bhat", "model", 0.0)
    elif kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}", field="model.kind")
    if kind == "transformed" and h is None:
        raise ConfigError("transformed model needs model.h", field="model.h")
    if "ell" in model and family is not None:
        ell = model["ell"]
    n = int(raw.get("dimension", 2))
    if n not in (2, 3):
        raise ConfigError("dimension must be 2 or 3", field="dimension")
    ic = dict(raw.get("integrator", {}))
    if rtol is not None:
        ic["rtol"] = rtol
    if atol is not None:
        ic["atol"] = atol
    try:
        integrator = IntegratorConfig(**ic)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}", field="integrator") from exc
    t_span = orbits = None
    if "orbits" in raw:
        orbits = raw["orbits"]
        if not isinstance(orbits, int) or orbits < 1:
            raise ConfigError("orbits must be a positive integer", field="orbits")
    elif "t_span" in raw:
        ts = raw["t_span"]
        if not (isinstance(ts, list) and len(ts) == 2 and all(isinstance(v, (int, float)) for v in ts)
                and ts[1] > ts[0]):
            raise ConfigError("t_span must be [t0, t1] with t1 > t0", field="t_span")
        t_span = (float(ts[0]), float(ts[1]))
    outputs = dict(raw.get("output", {}))
    return RunConfig(raw, params, kind, h, ell, ahat, bhat, family, L, n, integrator, t_span, orbits, outputs)


def load_config(path, rtol=None, atol=None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", field="--config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}", field="--config") from exc
    return parse_config(raw, rtol, atol)


def set_path(raw: dict, dotted: str, value):
    """Copy of ``raw`` with ``a.b.c`` set to ``value``."""
    out = copy.deepcopy(raw)
    node = out
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value
    return out
