"""Measured vs closed-form perihelion advance as the speed of light grows.

Shows the O(1/c^2) decay and the fixed family ratios (Levi-Civita and
Schwarzschild against special relativity).
"""
import argparse
import math

from relkepler import IntegratorConfig, PhysicalParams
from relkepler.analytic import precession_ell4, precession_schwarzschild_leading
from relkepler.dynamics import central_force_field
from relkepler.integrate import measure_precession
from relkepler.model import coefficients_for

FAMILIES = ("special-relativity", "levi-civita", "schwarzschild")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=float, nargs="+", default=[10.0, 30.0, 100.0, 300.0, 1000.0])
    ap.add_argument("--L", type=float, default=1.0)
    ap.add_argument("--e", type=float, default=0.3, help="eccentricity of the starting Kepler conic")
    ap.add_argument("--orbits", type=int, default=10)
    args = ap.parse_args()

    cfg = IntegratorConfig(rtol=1e-12, atol=1e-14)
    print(f"{'c':>8} {'family':>20} {'measured':>12} {'analytic':>12} {'c^2 * measured':>15} {'/SR':>8}")
    for c in args.c:
        params = PhysicalParams(c=c)
        r = args.L**2 / params.alpha / (1 + args.e)
        y0 = [r, 0.0, 0.0, args.L / r]
        sr = None
        for fam in FAMILIES:
            ell, a, b = coefficients_for(fam, 0.0, args.L, params)
            mean = measure_precession(central_force_field(ell, a, b, params), y0, args.orbits, cfg)[0]
            exact = precession_ell4(a, b, args.L) if ell == 4 else precession_schwarzschild_leading(params, args.L)
            sr = mean if fam == "special-relativity" else sr
            print(f"{c:8.0f} {fam:>20} {mean:12.5e} {exact:12.5e} {c * c * mean:15.6f} {mean / sr:8.4f}")
    print(f"leading order c^2 * SR advance: pi/L^2 = {math.pi / args.L**2:.6f}")


if __name__ == "__main__":
    main()
