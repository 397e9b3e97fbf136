"""Command line: ``relkepler {simulate,bridge,precession,sweep} --config PATH [--out DIR]``.

Exit codes: 0 ok, 2 config error, 3 integration error, 4 domain/region error.
Errors are also reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .analytic import precession_ell4, precession_schwarzschild_leading
from .config import RunConfig, load_config, parse_config, set_path
from .dynamics import central_force_field
from .errors import ConfigError, IntegrationError, RelKeplerError
from .integrate import integrate, integrate_orbits, make_report, measure_precession
from .model import coefficients_for
from .reparam import matched_transformed_state, sigma_branch_check, verify_equivalence

log = logging.getLogger("relkepler")


def _error_payload(exc):
    payload = {"error": type(exc).__name__, "category": {2: "config", 3: "integration", 4: "domain"}.get(
        getattr(exc, "exit_code", 1), "other"), "message": str(exc)}
    if getattr(exc, "field", None):
        payload["field"] = exc.field
    if isinstance(exc, IntegrationError) and exc.last_state is not None:
        payload["t"] = exc.t
        payload["last_state"] = np.asarray(exc.last_state).tolist()
    return payload


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_simulation(cfg: RunConfig, out: Path):
    """Integrate one config and write ``trajectory.csv`` / ``report.json`` into ``out``.

    Returns the report dict; integration errors are re-raised after the
    partial trajectory and an error report have been written.
    """
    field = cfg.build_field()
    y0 = cfg.initial_state()
    names = cfg.outputs
    traj_path = out / names.get("trajectory", "trajectory.csv")
    report_path = out / names.get("report", "report.json")
    meta = {"model": cfg.kind, "params": {"m": cfg.params.m, "c": cfg.params.c, "G": cfg.params.G,
                                          "M": cfg.params.M}}
    try:
        if cfg.orbits is not None:
            traj, _ = integrate_orbits(field, y0, cfg.orbits, cfg.integrator)
        else:
            traj, _ = integrate(field, y0, cfg.t_span or (0.0, 10.0), cfg.integrator)
    except IntegrationError as exc:
        if exc.trajectory is not None and len(exc.trajectory) > 1:
            io.write_trajectory_csv(exc.trajectory, traj_path)
            report = make_report(exc.trajectory, status=type(exc).__name__, message=str(exc)).to_dict()
        else:
            report = {"status": type(exc).__name__, "message": str(exc)}
        report.update(meta, last_state=np.asarray(exc.last_state).tolist(), t_last=exc.t)
        io.write_json(report, report_path)
        raise
    report = make_report(traj, with_precession=cfg.n == 2).to_dict()
    report.update(meta)
    io.write_trajectory_csv(traj, traj_path)
    io.write_json(report, report_path)
    if names.get("plots"):
        io.write_plot_data(traj, out, names["plots"])
    return report


def cmd_simulate(args):
    cfg = load_config(args.config, args.rtol, args.atol)
    report = run_simulation(cfg, _out_dir(args))
    print(io.dumps({"status": report["status"], "energy_drift_rel": report["energy_drift_rel"],
                    "L_drift_rel": report["L_drift_rel"], "n_samples": report["n_samples"]}), end="")
    return 0


def run_bridge(cfg: RunConfig, direction="forward", sigma=False):
    if cfg.kind != "relativistic-kepler":
        raise ConfigError("bridge needs a relativistic-kepler model", field="model.kind")
    y0 = cfg.initial_state()
    field = cfg.build_field()
    h = cfg.h if cfg.h is not None else float(field.energy(y0))
    tol = cfg.raw.get("tolerances")
    if sigma:
        init = cfg.raw.get("initial", {})
        if "z" in init:
            z0 = np.concatenate([np.asarray(init["z"], float), np.asarray(init["zp"], float)])
        else:
            z0 = matched_transformed_state(cfg.params, None, h, y0, cfg.n)
        s_span = tuple(cfg.raw.get("s_span", (0.0, 5.0)))
        report = sigma_branch_check(cfg.params, None, h, z0, s_span, cfg.integrator, n=cfg.n, tolerances=tol)
    else:
        report = verify_equivalence(cfg.params, None, h, y0, cfg.orbits or 5, cfg.integrator, direction,
                                    n=cfg.n, tolerances=tol)
    return report.to_dict()


def cmd_bridge(args):
    cfg = load_config(args.config, args.rtol, args.atol)
    report = run_bridge(cfg, args.direction, args.sigma_branch)
    io.write_json(report, _out_dir(args) / "bridge_report.json")
    print(io.dumps(report), end="")
    return 1 if args.strict and report["verdict"] != "pass" else 0


PRECESSION_COLUMNS = ("family", "h", "L", "c", "measured", "analytic", "ratio", "status")


def _precession_point(cfg: RunConfig, point: dict, orbits: int, e: float):
    params = replace(cfg.params, c=float(point.get("c", cfg.params.c)))
    family = point.get("family", "special-relativity")
    h = float(point.get("h", 0.0))
    L = float(point.get("L", 1.0))
    if family == "kepler":
        ell, ahat, bhat = 4, params.alpha, 0.0
    else:
        ell, ahat, bhat = coefficients_for(family, h, L, params)
    # pericenter of the Kepler conic with the same angular momentum
    m = params.m
    r = L * L / (m * ahat) / (1.0 + e)
    y0 = np.array([r, 0.0, 0.0, L / (m * r)])
    analytic = precession_ell4(ahat, bhat, L, m) if ell == 4 else precession_schwarzschild_leading(params, L)
    row = {"family": family, "h": h, "L": L, "c": params.c, "analytic": analytic}
    try:
        measured, _, _, _ = measure_precession(central_force_field(ell, ahat, bhat, params), y0, orbits,
                                               cfg.integrator)
        row.update(measured=measured, status="ok")
    except RelKeplerError as exc:
        row.update(measured=None, status=type(exc).__name__)
    return row


def run_precession(cfg: RunConfig):
    sec = cfg.raw.get("precession")
    if not isinstance(sec, dict) or not isinstance(sec.get("points"), list):
        raise ConfigError("precession.points must be a list", field="precession.points")
    orbits = int(sec.get("orbits", 10))
    e = float(sec.get("e", 0.3))
    rows = [_precession_point(cfg, pt, orbits, e) for pt in sec["points"]]
    # ratio against the special-relativity row at the same (h, L, c)
    for row in rows:
        ref = next((r for r in rows if r["family"] == "special-relativity" and r["status"] == "ok"
                    and (r["h"], r["L"], r["c"]) == (row["h"], row["L"], row["c"])), None)
        row["ratio"] = (row["measured"] / ref["measured"]
                        if ref is not None and row["measured"] is not None and ref["measured"] else None)
    return rows


def cmd_precession(args):
    cfg = load_config(args.config, args.rtol, args.atol)
    rows = run_precession(cfg)
    path = _out_dir(args) / "precession.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRECESSION_COLUMNS)
        for row in rows:
            w.writerow([row[k] if isinstance(row[k], str) else io.fmt(row[k]) for k in PRECESSION_COLUMNS])
    print(path.read_text(), end="")
    return 0


def _sweep_worker(task):
    index, raw, run_dir, command = task
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    io.write_json(raw, run_dir / "config.json")
    result = {"index": index, "dir": run_dir.name}
    try:
        cfg = parse_config(raw)
        if command == "bridge":
            report = run_bridge(cfg)
            io.write_json(report, run_dir / "bridge_report.json")
            result.update(status="ok", verdict=report["verdict"], energy_gap=report["energy_gap"],
                          sup_position_gap=report["sup_position_gap"])
        else:
            report = run_simulation(cfg, run_dir)
            result.update(status="ok", energy_drift_rel=report["energy_drift_rel"],
                          L_drift_rel=report["L_drift_rel"])
    except RelKeplerError as exc:
        result.update(status="failed", exit_code=exc.exit_code, error=_error_payload(exc))
    return result


def _threads():
    env = os.environ.get("RELKEPLER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("RELKEPLER_THREADS must be an integer", field="RELKEPLER_THREADS") from None
    return os.cpu_count() or 1


def run_sweep(raw: dict, out: Path, workers=None):
    sec = raw.get("sweep")
    if not isinstance(sec, dict) or not isinstance(sec.get("grid"), dict) or not sec["grid"]:
        raise ConfigError("sweep.grid must map config paths to value lists", field="sweep.grid")
    grid = sec["grid"]
    for key, values in grid.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.grid.{key} must be a non-empty list", field=f"sweep.grid.{key}")
    command = sec.get("command", "simulate")
    keys = sorted(grid)
    base = {k: v for k, v in raw.items() if k != "sweep"}
    tasks, points = [], []
    for index, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        cfg = base
        for k, v in zip(keys, combo):
            cfg = set_path(cfg, k, v)
        tasks.append((index, cfg, str(out / f"run_{index:04d}"), command))
        points.append(dict(zip(keys, combo)))
    workers = min(workers or _threads(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, tasks))
    else:
        results = [_sweep_worker(t) for t in tasks]
    for res, point in zip(results, points):
        res["point"] = point
    ok = [r for r in results if r["status"] == "ok"]
    drifts = [r["energy_drift_rel"] for r in ok if "energy_drift_rel" in r]
    summary = {"command": command, "keys": keys, "n_runs": len(results), "n_ok": len(ok),
               "n_failed": len(results) - len(ok), "max_energy_drift_rel": max(drifts) if drifts else None,
               "runs": results}
    io.write_json(summary, out / "summary.json")
    return summary


def cmd_sweep(args):
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load {args.config}: {exc}", field="--config") from exc
    if args.rtol is not None:
        raw = set_path(raw, "integrator.rtol", args.rtol)
    if args.atol is not None:
        raw = set_path(raw, "integrator.atol", args.atol)
    parse_config({k: v for k, v in raw.items() if k != "sweep"})
    summary = run_sweep(raw, _out_dir(args))
    print(io.dumps({k: summary[k] for k in ("n_runs", "n_ok", "n_failed")}), end="")
    if summary["n_ok"] == 0:
        return 3
    if args.strict and summary["n_failed"]:
        return next(r["exit_code"] for r in summary["runs"] if r["status"] != "ok")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--rtol", type=float, default=None)
    common.add_argument("--atol", type=float, default=None)
    common.add_argument("--seed", type=int, default=None, help="reserved; all runs are deterministic")
    common.add_argument("--strict", action="store_true", help="non-zero exit on any failed run or verdict")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="relkepler", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate one configuration").set_defaults(func=cmd_simulate)
    b = sub.add_parser("bridge", parents=[common], help="check the relativistic / transformed equivalence")
    b.add_argument("--direction", choices=("forward", "backward"), default="forward")
    b.add_argument("--sigma-branch", action="store_true", help="transport a Sigma_h solution instead")
    b.set_defaults(func=cmd_bridge)
    sub.add_parser("precession", parents=[common], help="measured vs analytic perihelion advance").set_defaults(
        func=cmd_precession)
    sub.add_parser("sweep", parents=[common], help="run a parameter grid").set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except RelKeplerError as exc:
        sys.stderr.write(json.dumps(_error_payload(exc)) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
