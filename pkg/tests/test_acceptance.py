"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary, and
inline with ``-s``) before asserting.
"""

import itertools
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from bergman_lab import AuxiliaryDiscTable, DomainSpec, MomentTable, WeightSpec
from bergman_lab.blowup import (
    blowup_ratio, blowup_sweep, fit_blowup_slope, m_schedule, predicted_slope, sqrt_scale, unweighted_limit,
)
from bergman_lab.domains import positivity_threshold
from bergman_lab.kernel import TruncatedKernel, lift_check, verify_slice_identity
from bergman_lab.moments import fit_kappa_exponent, log_grid, phi_from_phi_n, tilde_gap
from bergman_lab.numerics import indices_of_degree, indices_up_to
from bergman_lab.sobolev import (
    NOMINAL_Q, adjoint_sides, all_betas, binom_part, dse_band, dse_band_ratio, m_beta_norm_ratio, reverse_cs,
    shell_sup, sobolev_ratio_sweep, sqrt_expr,
)
from oracles import poly_disc_kernel, unweighted_disc_phi

pytestmark = pytest.mark.acceptance

KERNEL_PAIRS = [
    (0.1 + 0.2j, 0.3 - 0.1j), (0.5, 0.5), (-0.4j, 0.2 + 0.6j), (0.0, 0.7), (0.6 + 0.3j, -0.2 - 0.5j),
    (0.33, -0.33j), (0.1 - 0.7j, 0.05 + 0.1j), (-0.55 + 0.2j, -0.45), (0.25j, 0.25j), (0.7, -0.6 + 0.1j),
]


@pytest.fixture(scope="module")
def fitted_q():
    return fit_kappa_exponent(log_grid(1e2, 1e5, 40))


def test_criterion_01_quadrature_oracles(verdict):
    plain = MomentTable(DomainSpec.disc(), WeightSpec.unweighted())
    moment_err = max(abs(plain.phi(float(x)).to_real() / unweighted_disc_phi(x) - 1) for x in range(101))
    kernel_err = 0.0
    for k in range(4):
        kern = TruncatedKernel.build(MomentTable(DomainSpec.disc(), WeightSpec.polynomial(k)), 200)
        for z, w in KERNEL_PAIRS:
            exact = poly_disc_kernel(z, w, k)
            kernel_err = max(kernel_err, abs(kern.evaluate((z,), (w,)).value - exact) / abs(exact))
    ok = moment_err <= 1e-10 and kernel_err <= 1e-8
    verdict(1, "quadrature oracles", ok,
            f"unweighted moments max rel err {moment_err:.2e} (<= 1e-10); "
            f"(1-|z|^2)^k kernels k<=3 max rel err {kernel_err:.2e} (<= 1e-8)")
    assert ok


def test_criterion_02_integration_by_parts(verdict, ball):
    worst = max(abs(math.expm1(phi_from_phi_n(ball, n, x).logmag - ball.log_phi(x)))
                for n in (1, 2) for x in (10.0, 100.0, 1000.0))
    ok = worst <= 1e-6
    verdict(2, "integration-by-parts chain", ok, f"max rel err {worst:.2e} over n in {{1,2}}, x in {{10,100,1000}}")
    assert ok


def test_criterion_03_tilde_gap(verdict, ball):
    xs = [50.0 * 2 ** i for i in range(7)]
    details, ok = [], True
    for n in (1, 2):
        a = positivity_threshold(ball.domain, n)
        gaps = [tilde_gap(ball, n, x, a) for x in xs]
        monotone = all(g1 <= g0 for g0, g1 in zip(gaps, gaps[1:]))
        ok &= monotone and gaps[-1] <= 0.05
        details.append(f"n={n} (a={a:.4f}) gaps " + ", ".join(f"{g:.1e}" for g in gaps))
    verdict(3, "truncated-strip gap", ok, "; ".join(details) + " (non-increasing, top <= 0.05)")
    assert ok


def test_criterion_04_kappa_fit(verdict, fitted_q):
    ok = 1.98 <= fitted_q.slope <= 2.02
    verdict(4, "sqrt(x) coefficient fit", ok,
            f"a = {fitted_q.slope:.6f} in [1.98, 2.02]; q = {fitted_q.q:.4f} recorded "
            f"(reference 1/3, Laplace 3/4), rms residual {fitted_q.residual:.1e}")
    assert ok


def test_criterion_05_blowup(verdict, ball, half_disc):
    details, ok = [], True
    for name, table in (("ball", ball), ("disc(1/2)", half_disc)):
        pts = blowup_sweep(table, 1.5, 8, 10000, m_min=100)
        increasing = all(b.log_ratio > a.log_ratio for a, b in zip(pts, pts[1:]))
        fit = fit_blowup_slope(pts, predicted_slope(1.5, 8, sqrt_scale(table.domain)))
        ok &= increasing and fit.rel_gap <= 0.2 and pts[-1].m == 10000
        details.append(f"{name}: increasing={increasing}, slope {fit.slope:.5f} vs {fit.predicted:.5f} "
                       f"({100 * fit.rel_gap:.2f}% gap)")
    l2 = max(blowup_ratio(t, 2.0, 8, m).log_ratio for t in (ball, half_disc) for m in m_schedule(10000))
    ok &= math.exp(l2) <= 1 + 1e-9
    plain = MomentTable(DomainSpec.disc(), WeightSpec.unweighted())
    sup_plain = max(math.exp(pt.log_ratio) for pt in blowup_sweep(plain, 1.5, 8, 10000))
    ok &= sup_plain <= unweighted_limit(1.5, 8) * (1 + 1e-9)
    details.append(f"p=2 max ratio {math.exp(l2):.6f} (<= 1+1e-9)")
    details.append(f"unweighted p=1.5 sup {sup_plain:.6f} <= limit {unweighted_limit(1.5, 8):.6f}")
    verdict(5, "L^p blowup", ok, "; ".join(details))
    assert ok


def test_criterion_06_slice_identity(verdict, ball):
    aux = AuxiliaryDiscTable(ball, "quadrature")
    k_omega, k_disc = TruncatedKernel.build(ball, 60), TruncatedKernel.build(aux, 60)
    configs = [((0.2 + 0.1j, 0.3j), 0.4), ((0.0, 0.0), 0.0), ((0.5, -0.2), 0.3 + 0.3j),
               ((-0.1j, 0.6), -0.7), ((0.4 - 0.4j, 0.1), 0.1j)]
    worst = max(verify_slice_identity(k_omega, k_disc, z, w1).rel_err for z, w1 in configs)
    ok = worst <= 1e-6
    verdict(6, "slice identity", ok, f"max rel err {worst:.2e} at 5 configurations, J=60 (<= 1e-6)")
    assert ok


def test_criterion_07_lift(verdict, ball):
    aux = AuxiliaryDiscTable(ball, "quadrature")
    checks = [lift_check(ball, aux, a, b) for a, b in [(0, 0), (1, 0), (2, 1), (3, 3), (5, 2)]]
    worst = max(c.rel_err for c in checks)
    exact = all(c.coefficients_equal for c in checks)
    ok = worst <= 1e-8 and exact
    verdict(7, "lift", ok, f"norm max rel err {worst:.2e} (<= 1e-8); projection coefficients identical: {exact}")
    assert ok


def test_criterion_08_band(verdict, ball, fitted_q):
    nominal = dse_band(ball, 100, 200, NOMINAL_Q)
    fitted = dse_band(ball, 100, 200, fitted_q.q)
    symmetric = all(dse_band_ratio(ball, (a, d - a)).log_d2 == dse_band_ratio(ball, (d - a, a)).log_d2
                    for d in range(100, 201) for a in range(d + 1))
    ok = nominal.span <= 2.0 and fitted.span <= 1.2 and symmetric
    verdict(8, "d_gamma band", ok, f"span {nominal.span:.4f} with q=1/3 (<= 2), {fitted.span:.4f} with fitted "
            f"q={fitted_q.q:.4f} (<= 1.2); exchange symmetry exact: {symmetric}")
    assert ok


def test_criterion_09_key_inequalities(verdict, ball):
    betas = all_betas(2, 3)
    lo_ok, drift = True, []
    for beta in betas:
        per_shell = [shell_sup(ball, beta, d, reverse_cs) for d in range(301)]
        mins = min(min(reverse_cs(ball, a, beta) for a in indices_of_degree(2, d)) for d in (0, 1, 50, 150, 300))
        lo_ok &= mins >= 1 - 1e-12 and all(math.isfinite(v) for v in per_shell)
        first, second = max(per_shell[:151]), max(per_shell[151:])
        drift.append((beta, first, second))
    no_drift = all(s <= 1.05 * f for _, f, s in drift)
    worst_drift = max(s / f - 1 for _, f, s in drift)

    # sqrt expression depends on |alpha| and |beta| only: every (|alpha|, |beta|) pair is covered
    A = np.arange(0, 501, dtype=float)[:, None]
    B = np.arange(1, 6, dtype=float)[None, :]
    se = -2.0 * (np.sqrt(A + 1) + np.sqrt(A + 2 * B + 1) - 2.0 * np.sqrt(A + B + 1))
    sqrt_ok = bool(np.all(se >= 0) and np.all(se <= 2 * B))
    sqrt_ok &= all(abs(sqrt_expr((a, 0), (b, 0)) - se[a, b - 1]) <= 1e-12 for a in (0, 17, 500) for b in (1, 5))

    # binomial part is a sum of per-coordinate terms; tabulate them for a <= 500, b <= 5
    table = np.array([[math.fsum(math.log((a + j) / (a + b + j)) for j in range(1, b + 1)) for b in range(6)]
                      for a in range(501)])
    binom_ok = True
    for b1, b2 in itertools.product(range(6), repeat=2):
        if b1 + b2 > 5:
            continue
        # every alpha = (a1, a2) with a1 + a2 <= 500
        grid = table[:, b1][:, None] + table[:, b2][None, :]
        mask = np.add.outer(np.arange(501), np.arange(501)) <= 500
        binom_ok &= bool(np.all(grid[mask] <= 0.0))
    binom_ok &= all(binom_part(al, (1, 2)) == pytest.approx(table[al[0], 1] + table[al[1], 2], abs=1e-13)
                    for al in [(0, 0), (3, 400), (250, 250)])

    ok = lo_ok and no_drift and sqrt_ok and binom_ok
    sups = ", ".join(f"{b}:{s:.4f}" for b, _, s in drift)
    verdict(9, "reverse Cauchy-Schwarz and companions", ok,
            f"ratio >= 1 and finite: {lo_ok}; sup over |alpha| in (150,300] vs [0,150] max growth "
            f"{100 * worst_drift:.2f}% (<= 5%) [{sups}]; sqrt expression in [0, 2|beta|]: {sqrt_ok}; "
            f"binomial log-ratio <= 0: {binom_ok}")
    assert ok


def test_criterion_10_operator(verdict, ball):
    worst = 0.0
    count = 0
    for gamma in indices_up_to(2, 12):
        for beta in indices_up_to(2, sum(gamma)):
            if any(b > g for b, g in zip(beta, gamma)) or not any(beta):
                continue
            alpha = tuple(g - b for g, b in zip(gamma, beta))
            worst = max(worst, adjoint_sides(ball, alpha, beta, gamma).rel_err)
            count += 1
    growth = []
    for beta in all_betas(2, 3):
        s1 = max(m_beta_norm_ratio(ball, a, beta) for a in indices_up_to(2, 100))
        s2 = max(s1, max(m_beta_norm_ratio(ball, a, beta) for d in range(101, 201) for a in indices_of_degree(2, d)))
        growth.append(s2 / s1 - 1)
    ok = worst <= 1e-8 and max(growth) <= 0.05
    verdict(10, "M_beta operator", ok, f"adjoint max rel err {worst:.2e} over {count} pairs (<= 1e-8); "
            f"norm-ratio sup growth |alpha| 100 -> 200 at most {100 * max(growth):.2f}% (<= 5%)")
    assert ok


def test_criterion_11_sobolev_sweep(verdict, ball):
    details, ok = [], True
    for k in (0, 1, 2):
        small, large = sobolev_ratio_sweep(ball, k, 20), sobolev_ratio_sweep(ball, k, 40)
        stable = large.sup_ratio <= 1.05 * small.sup_ratio
        stable_nh = large.sup_non_holomorphic <= 1.05 * small.sup_non_holomorphic
        ok &= stable and stable_nh
        if k == 0:
            ok &= large.sup_ratio <= 1 + 1e-9
        details.append(f"k={k}: sup {small.sup_ratio:.6f} -> {large.sup_ratio:.6f}, "
                       f"non-holomorphic {small.sup_non_holomorphic:.4f} -> {large.sup_non_holomorphic:.4f}")
    verdict(11, "Sobolev ratio sweep", ok, "; ".join(details) + " (|a+b| 20 -> 40, <= 5% growth; k=0 <= 1+1e-9)")
    assert ok


CLI_RUNS = [
    ["moment", "--x-grid", "0:100:11", "--exponents", "4,6"],
    ["kernel", "--at", "0.1,0.2j,0.3,-0.1"],
    ["project", "--monomial", "3,2:1,1"],
    ["blowup", "--p", "1.5", "--k", "8", "--m-max", "10000"],
    ["sobolev", "--check", "dse", "--max-degree", "60"],
    ["sobolev", "--check", "key", "--max-degree", "30"],
    ["sobolev", "--check", "mbeta", "--max-degree", "30"],
    ["sobolev", "--check", "adjoint"],
    ["sobolev", "--check", "ratio", "--k", "2", "--max-degree", "20"],
    ["kappa-fit", "--x-grid", "1e2:1e5:40"],
    ["slice-check", "--z", "0.3,0.2", "--w1", "0.4", "--degree", "60", "--disc-method", "reduction"],
]


def test_criterion_12_determinism(verdict, tmp_path):
    env = {k: v for k, v in os.environ.items() if k not in ("BERGMAN_CACHE_DIR", "SOURCE_DATE_EPOCH")}
    mismatched = []
    for i, args in enumerate(CLI_RUNS):
        blobs = []
        for fmt in ("csv", "json"):
            for rep in range(2):
                target = tmp_path / f"{i}-{fmt}-{rep}"
                subprocess.run([sys.executable, "-m", "bergman_lab", *args, "--out", fmt, "--output", str(target)],
                               check=True, env=env, capture_output=True)
                blobs.append(target.read_bytes())
        if blobs[0] != blobs[1] or blobs[2] != blobs[3]:
            mismatched.append(" ".join(args))
    ok = not mismatched
    verdict(12, "CLI determinism", ok, f"{len(CLI_RUNS)} command lines x csv/json run twice in fresh processes; "
            f"mismatches: {mismatched or 'none'}")
    assert ok
