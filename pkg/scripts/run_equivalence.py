"""Forward and backward equivalence gaps for a range of angular momenta at fixed energy.

    python scripts/run_equivalence.py --h -0.3 --L 1.05 1.2 1.3 --orbits 5
"""
import argparse
import json

import numpy as np

from relkepler import IntegratorConfig, PhysicalParams, RelKeplerError
from relkepler.model import relativistic_apsis_state
from relkepler.reparam import verify_equivalence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, default=-0.3)
    ap.add_argument("--L", type=float, nargs="+", default=[1.05, 1.1, 1.2, 1.3])
    ap.add_argument("--orbits", type=int, default=5)
    ap.add_argument("--rtol", type=float, default=1e-11)
    ap.add_argument("--json", action="store_true", help="print one JSON object per run")
    args = ap.parse_args()

    params = PhysicalParams()
    cfg = IntegratorConfig(rtol=args.rtol, atol=args.rtol * 1e-2)
    if not args.json:
        print(f"{'L':>6} {'dir':>9} {'pos gap':>10} {'energy':>10} {'residual':>10} {'clock':>10} verdict")
    for L in args.L:
        try:
            s = relativistic_apsis_state(params, args.h, L, "pericenter")
        except RelKeplerError as exc:
            print(f"{L:6.3f} skipped: {exc}")
            continue
        y0 = np.concatenate([s.x, s.p])
        for direction in ("forward", "backward"):
            rep = verify_equivalence(params, None, args.h, y0, args.orbits, cfg, direction)
            if args.json:
                print(json.dumps(dict(rep.to_dict(), L=L)))
            else:
                print(f"{L:6.3f} {direction:>9} {rep.sup_position_gap:10.2e} {rep.energy_gap:10.2e} "
                      f"{rep.residual_norm:10.2e} {rep.clock_roundtrip_gap:10.2e} {rep.verdict}")


if __name__ == "__main__":
    main()
