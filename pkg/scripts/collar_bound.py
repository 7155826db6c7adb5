"""Collar lower bound against simulated distance to the boundary.

Prints ``n_min`` from the certificate and the smallest ``n(t)`` seen along
the orbit for a few horizons.
"""
import argparse
import math

from magneto2d.fields import FieldKind, FieldModel
from magneto2d.integrator import PhaseState, integrate
from magneto2d.tubular import certify_lower_bound, named_chart


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--chart", default="ellipse", choices=["disc", "ellipse"])
    ap.add_argument("--field", default="1/n", help="B(n, s) on the collar")
    ap.add_argument("--q", type=float, nargs=2, default=[0.0, 0.85])
    ap.add_argument("--v", type=float, nargs=2, default=[0.2, 0.1])
    ap.add_argument("--horizons", type=float, nargs="*", default=[0.25, 0.5, 1.0, 2.0])
    args = ap.parse_args()

    chart = named_chart(args.chart)
    field = FieldModel(FieldKind.TUBULAR, args.field, chart=args.chart)
    init = PhaseState(tuple(args.q), tuple(args.v))
    print(f"chart {chart.constants()}")
    for T in args.horizons:
        cert = certify_lower_bound(chart, field, init, T)
        res = integrate(field, init, T, domain=chart, chart=chart)
        seen = min(chart.project(q)[0] for q in res.q)
        print(f"T={T:<5g} C={cert.C_of_T:.6f} n_min={cert.n_min!s:>22} "
              f"min n(t)={seen:.6f} [{res.termination.value}]")
        if cert.n_min is not None and math.isfinite(seen):
            assert seen > cert.n_min


if __name__ == "__main__":
    main()
