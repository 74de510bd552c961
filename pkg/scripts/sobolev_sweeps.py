"""Sup of ||B f||_k / ||f||_k over monomials, the reverse Cauchy-Schwarz shells, and the d_gamma band."""

import argparse

from bergman_lab import DomainSpec, MomentTable
from bergman_lab.moments import fit_kappa_exponent, log_grid
from bergman_lab.sobolev import NOMINAL_Q, all_betas, dse_band, reverse_cs, shell_sup, sobolev_ratio_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-degree", type=int, nargs="+", default=[10, 20, 30, 40])
    args = ap.parse_args()
    ball = MomentTable(DomainSpec.ball())

    print("Sobolev ratio sweep (sup over non-holomorphic monomials; holomorphic ones give exactly 1)")
    for k in (0, 1, 2):
        row = []
        for n in args.max_degree:
            s = sobolev_ratio_sweep(ball, k, n)
            row.append(f"N={n}: {s.sup_non_holomorphic:.5f}")
        print(f"  k={k}: " + "  ".join(row) + f"  argsup {s.argsup_non_holomorphic}")

    print("reverse Cauchy-Schwarz: sup over |alpha| = d")
    for beta in all_betas(2, 3):
        print(f"  beta={beta}: " + "  ".join(f"d={d}: {shell_sup(ball, beta, d, reverse_cs):.4f}"
                                             for d in (10, 50, 150, 300)))

    q = fit_kappa_exponent(log_grid(1e2, 1e5, 40)).q
    for label, qq in (("q=1/3", NOMINAL_Q), (f"fitted q={q:.4f}", q)):
        print(f"d_gamma band over |gamma| in [100, 200] with {label}: span {dse_band(ball, 100, 200, qq).span:.4f}")


if __name__ == "__main__":
    main()
