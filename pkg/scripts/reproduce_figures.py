"""Run every figure preset and write its artifacts under ``--out``."""
import argparse
import json
import time
from pathlib import Path

from magneto2d.presets import FIGURES, figure_preset
from magneto2d.scenario import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/figures")
    ap.add_argument("names", nargs="*", default=list(FIGURES))
    args = ap.parse_args()

    for name in args.names:
        start = time.perf_counter()
        report = run(figure_preset(name), Path(args.out) / name)
        summary = {k: v for k, v in report.summary.items()
                   if k in ("termination", "max_energy_drift", "min_distance_to_boundary",
                            "verdict", "eta", "t_exit", "error")}
        print(f"{name:18s} exit={report.exit_code} {time.perf_counter() - start:6.2f}s "
              f"{json.dumps(summary)}")


if __name__ == "__main__":
    main()
