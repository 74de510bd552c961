"""Command-line harness: ``bergman-lab <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .blowup import (
    blowup_sweep, fit_blowup_slope, minimal_k, predicted_slope, sqrt_scale, unweighted_limit,
)
from .domains import BoundaryError, DomainSpec, WeightSpec
from .kernel import MonomialFunction, TruncatedKernel, project_monomial, verify_slice_identity
from .moments import AuxiliaryDiscTable, FitError, MomentTable, boundary_moment, fit_kappa_exponent
from .numerics import indices_of_degree, indices_up_to
from .quadrature import QuadratureError, QuadratureSpec
from .report import (
    CacheError, ConfigError, ExperimentReport, cache_key, load_cache, load_config, save_cache,
)
from .sobolev import (
    NOMINAL_Q, adjoint_sides, all_betas, binom_part, dse_band_ratio, m_beta_coeff, m_beta_norm_ratio,
    reverse_cs, sobolev_ratio_sweep, sqrt_expr,
)

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3

LAPLACE_Q = 0.75


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default; usage errors here are 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# argument parsing helpers


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _complexes(text: str) -> tuple[complex, ...]:
    try:
        return tuple(complex(v.strip().replace("i", "j")) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers, got {text!r}") from exc


def _grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, steps = text.split(":")
        return float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {text!r}") from exc


def _monomial(text: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    try:
        a, b = text.split(":")
        return tuple(int(v) for v in a.split(",")), tuple(int(v) for v in b.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a1,a2:b1,b2, got {text!r}") from exc


def grid_points(lo: float, hi: float, steps: int) -> list[float]:
    """Log-spaced when ``lo > 0``, evenly spaced otherwise."""
    import numpy as np

    if steps < 1 or hi < lo or lo < 0:
        raise ValueError("grid needs 0 <= lo <= hi and steps >= 1")
    if steps == 1:
        return [lo]
    pts = np.geomspace(lo, hi, steps) if lo > 0 else np.linspace(lo, hi, steps)
    return [float(v) for v in pts]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("problem setup")
    g.add_argument("--config", help="flat key = value file; flags override it")
    g.add_argument("--domain", choices=["ball", "disc", "ellipsoid"])
    g.add_argument("--dimension", type=int)
    g.add_argument("--ellipsoid-exponents", type=_floats, help="a1,a2,...: rho = sum r_i^(2 a_i) - 1")
    g.add_argument("--weight", help="exp | poly:q | none")
    g.add_argument("--quad-rel-tol", type=float)
    g.add_argument("--quad-max-depth", type=int)
    g.add_argument("--out", choices=["csv", "json"], help="report format")
    g.add_argument("--output", help="write the report here instead of stdout")

    p = _Parser(prog="bergman-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bergman-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("moment", parents=[common], help="Phi(x) on a grid and optional G(s)")
    s.add_argument("--exponents", type=_floats, help="s1,s2,...: also report G(s)")
    s.add_argument("--x-grid", type=_grid, default=(0.0, 100.0, 11), help="lo:hi:steps")

    s = sub.add_parser("kernel", parents=[common], help="truncated kernel B(z, w)")
    s.add_argument("--at", type=_complexes, required=True, help="z1,...,zn,w1,...,wn")
    s.add_argument("--degree", type=int)

    s = sub.add_parser("project", parents=[common], help="projection of z^a conj(z)^b")
    s.add_argument("--monomial", type=_monomial, required=True, help="a1,a2:b1,b2")

    s = sub.add_parser("blowup", parents=[common], help="L^p ratio sweep for z^(km) conj(z)^m")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--k", default="auto", help="auto | integer")
    s.add_argument("--m-max", type=int, default=10000)
    s.add_argument("--m-min", type=int, default=1)
    s.add_argument("--fit-from", type=int, default=100, help="lower end of the sqrt(m) slope fit")

    s = sub.add_parser("sobolev", parents=[common], help="monomial-norm inequalities on the ball")
    s.add_argument("--check", choices=["dse", "key", "mbeta", "adjoint", "ratio"], required=True)
    s.add_argument("--q", choices=["nominal", "fitted"], default="nominal")
    s.add_argument("--max-degree", type=int)
    s.add_argument("--k", type=int, default=1, help="Sobolev order for --check ratio")
    s.add_argument("--beta-max", type=int, default=3)

    s = sub.add_parser("kappa-fit", parents=[common], help="fit log I(x) = -a sqrt(x) - q log x + C")
    s.add_argument("--x-grid", type=_grid, default=(1e2, 1e5, 40))

    s = sub.add_parser("slice-check", parents=[common], help="slice identity for the kernel")
    s.add_argument("--z", type=_complexes, required=True)
    s.add_argument("--w1", type=complex, required=True)
    s.add_argument("--degree", type=int, default=60)
    s.add_argument("--disc-method", choices=["reduction", "quadrature"], default="quadrature")
    return p


# setup


def effective_setup(args) -> dict[str, Any]:
    cfg: dict[str, Any] = {"domain": "ball", "dimension": 2, "ellipsoid_exponents": "", "weight": "exp",
                           "quad_rel_tol": 1e-10, "quad_max_depth": 60}
    if args.config:
        try:
            cfg.update(load_config(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for key in ("domain", "dimension", "weight", "quad_rel_tol", "quad_max_depth"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if args.ellipsoid_exponents is not None:
        cfg["ellipsoid_exponents"] = ",".join(repr(a) for a in args.ellipsoid_exponents)
    if cfg["domain"] == "disc" and args.dimension is None and "dimension" not in _config_keys(args):
        cfg["dimension"] = 1
    return cfg


def _config_keys(args) -> set[str]:
    return set(load_config(args.config)) if args.config else set()


def make_table(cfg: dict[str, Any]) -> MomentTable:
    exps = _floats(cfg["ellipsoid_exponents"]) if cfg["ellipsoid_exponents"] else None
    domain = DomainSpec.from_config(cfg["domain"], int(cfg["dimension"]), exps)
    weight = WeightSpec.parse(cfg["weight"])
    quad = QuadratureSpec(rel_tol=float(cfg["quad_rel_tol"]), max_depth=int(cfg["quad_max_depth"]))
    return MomentTable(domain, weight, quad)


class CacheSession:
    """Load/save the table's moments under ``$BERGMAN_CACHE_DIR`` when that is set."""

    def __init__(self, table: MomentTable):
        self.table = table
        root = os.environ.get("BERGMAN_CACHE_DIR")
        self.path = Path(root) / f"moments-{cache_key(table)}.json" if root else None

    def __enter__(self):
        if self.path is not None and self.path.exists():
            load_cache(self.table, self.path)
        return self

    def __exit__(self, exc_type, *_):
        if self.path is not None and exc_type is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            save_cache(self.table, self.path)
        return False


# commands


def cmd_moment(args, table: MomentTable, report: ExperimentReport) -> str:
    xs = grid_points(*args.x_grid)
    for x in xs:
        report.add_row(x, table.log_phi(x), table.phi_rel_err(x))
    if args.exponents is not None:
        g = table.moment(args.exponents)
        report.summary["G_exponents"] = list(args.exponents)
        report.summary["log_G"] = g.logmag
    report.summary["max_rel_err_est"] = max(r[2] for r in report.rows)
    return f"moment: {len(xs)} points, phi({xs[-1]:g}) = {report.rows[-1][1]:.12g}"


def cmd_kernel(args, table: MomentTable, report: ExperimentReport) -> str:
    n = table.domain.n
    if len(args.at) != 2 * n:
        raise ValueError(f"--at needs {2 * n} coordinates for a {n}-dimensional domain")
    k = TruncatedKernel.build(table, args.degree)
    v = k.evaluate(args.at[:n], args.at[n:])
    report.summary.update({"value_re": v.value.real, "value_im": v.value.imag, "log_abs": v.log_abs,
                           "tail_bound": v.tail_bound, "J": v.degree})
    return f"kernel: B = {v.value.real:.12g}{v.value.imag:+.12g}i, tail bound {v.tail_bound:.3g}, J = {v.degree}"


def cmd_project(args, table: MomentTable, report: ExperimentReport) -> str:
    a, b = args.monomial
    if len(a) != table.domain.n or len(b) != table.domain.n:
        raise ValueError(f"monomial exponents must have length {table.domain.n}")
    out = project_monomial(table, MonomialFunction(a, b))
    report.summary.update({"input_a": list(a), "input_b": list(b), "output_a": list(out.a),
                           "zero": out.is_zero, "log_coefficient": out.scale.logmag,
                           "coefficient": out.scale.to_real()})
    if out.is_zero:
        return "project: result is zero"
    return f"project: {out.scale.to_real():.12g} * z^{list(out.a)}"


def cmd_blowup(args, table: MomentTable, report: ExperimentReport) -> str:
    if args.p <= 1:
        raise ValueError("--p must exceed 1")
    k = minimal_k(args.p) if args.k == "auto" else int(args.k)
    pts = blowup_sweep(table, args.p, k, args.m_max, m_min=args.m_min)
    if not pts:
        raise QuadratureError("no sweep point met the Phi error cap")
    for pt in pts:
        report.add_row(pt.m, math.sqrt(pt.m), pt.log_ratio, *pt.components)
    report.config["k"] = k
    s = report.summary
    s["k"] = k
    s["max_log_ratio"] = max(pt.log_ratio for pt in pts)
    s["max_ratio"] = math.exp(s["max_log_ratio"])
    s["increasing"] = all(b.log_ratio > a.log_ratio for a, b in zip(pts, pts[1:]))
    s["m_last"] = pts[-1].m
    if table.weight.form == "exponential":
        scale = sqrt_scale(table.domain)
        s["predicted_c"] = predicted_slope(args.p, k)
        s["predicted_c_domain"] = predicted_slope(args.p, k, scale)
        try:
            fit = fit_blowup_slope(pts, s["predicted_c_domain"], (args.fit_from, args.m_max))
            s.update({"slope": fit.slope, "slope_rel_gap": fit.rel_gap, "fit_points": fit.points})
        except ValueError:
            pass
    elif table.weight.form == "unweighted" and 1 < args.p:
        s["unweighted_limit"] = unweighted_limit(args.p, k)
    return f"blowup: p={args.p:g} k={k} max ratio {s['max_ratio']:.6g} over {len(pts)} points"


def _q_value(args) -> float:
    if args.q == "nominal":
        return NOMINAL_Q
    return fit_kappa_exponent([x for x in grid_points(1e2, 1e5, 40)]).q


def cmd_sobolev(args, table: MomentTable, report: ExperimentReport) -> str:
    if table.domain.kind != "ball" or table.weight.form != "exponential":
        raise ValueError("the sobolev checks run on the ball with the exponential weight")
    n = table.domain.n
    check = args.check
    idx = lambda name: [f"{name}{i + 1}" for i in range(n)]  # noqa: E731
    s = report.summary
    if check == "dse":
        q = _q_value(args)
        hi = args.max_degree or 200
        lo = hi // 2
        report.columns = ["degree", "min_normalized", "max_normalized"]
        gmin, gmax = math.inf, -math.inf
        for d in range(lo, hi + 1):
            vals = [dse_band_ratio(table, g, q).normalized for g in indices_of_degree(n, d)]
            report.add_row(d, min(vals), max(vals))
            gmin, gmax = min(gmin, *vals), max(gmax, *vals)
        s.update({"q_used": q, "span": math.exp(gmax - gmin), "window": [lo, hi]})
        return f"sobolev dse: band span {s['span']:.6g} with q = {q:.6g}"
    if check == "key":
        N = args.max_degree or 60
        report.columns = idx("alpha") + idx("beta") + ["ratio", "sqrt_expr", "binom_part"]
        sup = {}
        for beta in all_betas(n, args.beta_max):
            for alpha in indices_up_to(n, N):
                r = reverse_cs(table, alpha, beta)
                report.add_row(*alpha, *beta, r, sqrt_expr(alpha, beta), binom_part(alpha, beta))
                sup[str(beta)] = max(sup.get(str(beta), 0.0), r)
        s.update({"max_degree": N, "sup_ratio_by_beta": sup, "min_ratio": min(r[2 * n] for r in report.rows)})
        return f"sobolev key: {len(report.rows)} pairs, largest ratio {max(sup.values()):.6g}"
    if check == "mbeta":
        N = args.max_degree or 60
        report.columns = idx("alpha") + idx("beta") + ["log_coefficient", "binom_part", "norm_ratio"]
        sup = {}
        for beta in all_betas(n, args.beta_max):
            for alpha in indices_up_to(n, N):
                c = m_beta_coeff(table, alpha, beta)
                r = m_beta_norm_ratio(table, alpha, beta)
                report.add_row(*alpha, *beta, c.total, c.binom_part, r)
                sup[str(beta)] = max(sup.get(str(beta), 0.0), r)
        s.update({"max_degree": N, "sup_norm_ratio_by_beta": sup})
        return f"sobolev mbeta: largest norm ratio {max(sup.values()):.6g}"
    if check == "adjoint":
        N = args.max_degree or 12
        report.columns = idx("gamma") + idx("beta") + ["log_lhs", "log_rhs", "rel_err"]
        worst = 0.0
        for gamma in indices_up_to(n, N):
            for beta in indices_up_to(n, sum(gamma)):
                if any(b > g for b, g in zip(beta, gamma)):
                    continue
                alpha = tuple(g - b for g, b in zip(gamma, beta))
                c = adjoint_sides(table, alpha, beta, gamma)
                report.add_row(*gamma, *beta, c.lhs.logmag, c.rhs.logmag, c.rel_err)
                worst = max(worst, c.rel_err)
        s.update({"max_degree": N, "max_rel_err": worst})
        return f"sobolev adjoint: {len(report.rows)} pairs, max rel err {worst:.3g}"
    # ratio
    N = args.max_degree or 40
    sweep = sobolev_ratio_sweep(table, args.k, N)
    report.columns = idx("a") + idx("b") + ["log_ratio"]
    for row in sweep.rows:
        report.add_row(*row.a, *row.b, row.log_ratio)
    s.update({"k": args.k, "max_degree": N, "sup_ratio": sweep.sup_ratio,
              "sup_non_holomorphic": sweep.sup_non_holomorphic, "zero_projections": sweep.skipped_zero})
    return f"sobolev ratio: k={args.k} sup {sweep.sup_ratio:.12g} (non-holomorphic {sweep.sup_non_holomorphic:.6g})"


def cmd_kappa_fit(args, table: MomentTable, report: ExperimentReport) -> str:
    xs = grid_points(*args.x_grid)
    fit = fit_kappa_exponent(xs, table.quad)
    for x in fit.grid:
        report.add_row(x, boundary_moment(x, table.quad).logmag)
    report.summary.update({"a": fit.slope, "q": fit.q, "C": fit.constant, "residual": fit.residual,
                           "q_reference": NOMINAL_Q, "q_laplace": LAPLACE_Q})
    return f"kappa-fit: a = {fit.slope:.6f}, q = {fit.q:.6f} (reference 1/3, Laplace 3/4)"


def cmd_slice_check(args, table: MomentTable, report: ExperimentReport) -> str:
    if table.domain.n != 2:
        raise ValueError("slice-check needs a two-dimensional domain")
    if len(args.z) != 2:
        raise ValueError("--z needs two coordinates")
    ko = TruncatedKernel.build(table, args.degree)
    kd = TruncatedKernel.build(AuxiliaryDiscTable(table, args.disc_method), args.degree)
    c = verify_slice_identity(ko, kd, args.z, args.w1)
    report.summary.update({"lhs_re": c.lhs.real, "lhs_im": c.lhs.imag, "rhs_re": c.rhs.real, "rhs_im": c.rhs.imag,
                           "rel_err": c.rel_err, "abs_err": c.abs_err, "mu": c.mu, "J": c.degree})
    return f"slice-check: rel err {c.rel_err:.3g} at J = {c.degree}"


COMMANDS = {
    "moment": (cmd_moment, ["x", "log_phi", "rel_err_est"], "csv"),
    "kernel": (cmd_kernel, [], "json"),
    "project": (cmd_project, [], "json"),
    "blowup": (cmd_blowup, ["m", "sqrt_m", "log_ratio", "phi_2km", "phi_2k1m", "phi_pk1m", "phi_pk_1m"], "csv"),
    "sobolev": (cmd_sobolev, [], "csv"),
    "kappa-fit": (cmd_kappa_fit, ["x", "log_I"], "csv"),
    "slice-check": (cmd_slice_check, [], "json"),
}

_SETUP_KEYS = {"command", "config", "domain", "dimension", "ellipsoid_exponents", "weight", "quad_rel_tol",
               "quad_max_depth", "out", "output"}


def _plain(v):
    """JSON-friendly copy of a parsed argument: tuples become lists, complex numbers ``[re, im]``."""
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    return v


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fn, columns, default_fmt = COMMANDS[args.command]
    fmt = args.out or default_fmt
    try:
        cfg = effective_setup(args)
        table = make_table(cfg)
        config = dict(cfg)
        for k, v in sorted(vars(args).items()):
            if k not in _SETUP_KEYS:
                config[k] = _plain(v)
        config["format"] = fmt
        report = ExperimentReport(args.command, config, list(columns))
        with CacheSession(table):
            line = fn(args, table, report)
        text = report.render(fmt)
    except QuadratureError as exc:
        print(f"bergman-lab: numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, BoundaryError, CacheError, ConfigError, FitError) as exc:
        print(f"bergman-lab: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.output:
        Path(args.output).write_text(text)
        print(line)
    else:
        sys.stdout.write(text)
        print(line, file=sys.stderr)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
