"""Scattering angle against angular momentum at fixed energy.

Each row is computed by quadrature; every ``--check``-th row is repeated by
direct integration and the discrepancy is printed.
"""
import argparse
import math

import numpy as np

from magneto2d.fields import FieldKind, FieldModel, radial_primitive
from magneto2d.integrator import PhaseState, integrate
from magneto2d.radial import scattering_sweep, write_sweep_csv


def ode_omega(field, v_r, v_th):
    v1 = (v_r, v_th)
    res = integrate(field, PhaseState((1.0, 0.0), v1), 100.0)
    if res.hit is None:
        return math.nan
    v2 = res.hit.v_exit
    return math.atan2(v1[0] * v2[1] - v1[1] * v2[0], v1[0] * v2[0] + v1[1] * v2[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--field", default="1 + r**2", help="B(r)")
    ap.add_argument("--H0", type=float, default=0.5)
    ap.add_argument("--count", type=int, default=41)
    ap.add_argument("--check", type=int, default=5)
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()

    field = FieldModel(FieldKind.RADIAL, args.field)
    G1 = radial_primitive(field)(1.0)
    speed = math.sqrt(2 * args.H0)
    p_thetas = G1 + np.linspace(-0.99, 0.99, args.count) * speed
    rows = scattering_sweep(field, args.H0, p_thetas)
    write_sweep_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")

    for row in rows[:: max(1, args.check)]:
        if math.isnan(row["omega"]):
            continue
        v_th = row["ptheta"] - G1
        v_r = -math.sqrt(max(speed**2 - v_th**2, 0.0))
        gap = abs(math.remainder(row["omega"] - ode_omega(field, v_r, v_th), 2 * math.pi))
        print(f"p_theta={row['ptheta']:+.4f} omega={row['omega']:+.10f} |quad-ode|={gap:.1e}")


if __name__ == "__main__":
    main()
