"""Visibility versus absolute analyzer orientation for several windows.

Prints the orientation of the smallest visibility in each half period and
the peak-to-trough excursion per window.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from eprsim import experiments
from eprsim.experiments import ExperimentConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/visibility")
    ap.add_argument("--density", type=float, default=0.1)
    ap.add_argument("--duration", type=float, default=10.0)
    ap.add_argument("--grid", type=int, default=16)
    ap.add_argument("--tau-factors", default="0.1,0.3,1,3,10")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    l = 1e-5
    taus = tuple(float(f) * l for f in args.tau_factors.split(","))
    cfg = ExperimentConfig(
        mode="visibility-scan", rate=args.density / l, pulse_length=l,
        duration=args.duration, taus=taus, grid_w=args.grid, grid_v=args.grid,
        workers=args.workers, out=str(Path(args.out) / "vis.csv"),
    )
    paths = experiments.run(cfg)
    print(f"{'tau/l':>6} {'excursion':>9}  minima (rad / pi)")
    for tau, path in zip(sorted(taus), paths):
        w0, V = np.loadtxt(path, delimiter=",", skiprows=1, usecols=(0, 1)).T
        half = w0 < math.pi / 2
        minima = [w0[half][np.argmin(V[half])], w0[~half][np.argmin(V[~half])]]
        print(f"{tau / l:6.3g} {V.max() - V.min():9.4f}  {[round(float(m) / math.pi, 4) for m in minima]}")
    print(f"index: {paths[-1]}")


if __name__ == "__main__":
    main()
