"""Blowup sweeps for several p on the ball and on the disc with rho = |z| - 1.

Writes one CSV per (domain, p) into the output directory and prints the
fitted sqrt(m) slopes next to the predicted constants.

    python3 scripts/run_blowup.py --out results/blowup
"""

import argparse
import csv
import math
from pathlib import Path

from bergman_lab import DomainSpec, MomentTable
from bergman_lab.blowup import (
    blowup_sweep, dual_blowup_ratio, fit_blowup_slope, minimal_k, predicted_slope, sqrt_scale,
)

DOMAINS = {"ball": DomainSpec.ball(), "half-disc": DomainSpec.disc(0.5)}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/blowup")
    ap.add_argument("--p", type=float, nargs="+", default=[1.2, 1.5, 1.8])
    ap.add_argument("--m-max", type=int, default=10000)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for name, domain in DOMAINS.items():
        table = MomentTable(domain)
        for p in args.p:
            k = 8 if p == 1.5 else minimal_k(p)
            pts = blowup_sweep(table, p, k, args.m_max)
            with open(out / f"{name}-p{p:g}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["m", "sqrt_m", "log_ratio"])
                for pt in pts:
                    w.writerow([pt.m, f"{math.sqrt(pt.m):.16e}", f"{pt.log_ratio:.16e}"])
            pred = predicted_slope(p, k, sqrt_scale(domain))
            fit = fit_blowup_slope(pts, pred, (100, args.m_max))
            print(f"{name:9s} p={p:<4g} k={k:<3d} log ratio at m={pts[-1].m}: {pts[-1].log_ratio:8.4f}  "
                  f"slope {fit.slope:.5f} vs predicted {pred:.5f} ({100 * fit.rel_gap:.2f}%)")
        for j in (10, 100, 1000, 10000):
            print(f"{name:9s} dual p'=3 j={j:<6d} log ratio {dual_blowup_ratio(table, 3.0, j).log_ratio:8.4f}")


if __name__ == "__main__":
    main()
