"""Energy and angular-momentum drift of a bounded relativistic orbit versus tolerance."""
import argparse
import time

import numpy as np

from relkepler import IntegratorConfig, PhysicalParams
from relkepler.dynamics import relativistic_field
from relkepler.integrate import integrate_orbits
from relkepler.model import relativistic_apsis_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=-0.3)
    ap.add_argument("--L", type=float, default=1.2)
    ap.add_argument("--orbits", type=int, default=100)
    ap.add_argument("--rtol", type=float, nargs="+", default=[1e-8, 1e-9, 1e-10, 1e-11])
    args = ap.parse_args()

    params = PhysicalParams()
    s = relativistic_apsis_state(params, args.h, args.L, "pericenter")
    y0 = np.concatenate([s.x, s.p])
    field = relativistic_field(params, h=args.h)
    print(f"{'rtol':>8} {'steps':>8} {'energy drift':>13} {'L drift':>10} {'min V+h':>9} {'sec':>6}")
    for rtol in args.rtol:
        start = time.perf_counter()
        traj, rep = integrate_orbits(field, y0, args.orbits, IntegratorConfig(rtol=rtol, atol=rtol * 1e-2))
        print(f"{rtol:8.0e} {rep.steps_taken:8d} {rep.energy_drift_rel:13.2e} {rep.L_drift_rel:10.2e} "
              f"{np.min(1 / traj.r + args.h):9.4f} {time.perf_counter() - start:6.2f}")


if __name__ == "__main__":
    main()
