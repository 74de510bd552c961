"""Monomial norms on the ball and the inequalities behind Sobolev boundedness
of the weighted projection: band asymptotics, the reverse Cauchy-Schwarz
ratio, the ``M_beta`` operator and weighted Sobolev norms of monomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .kernel import MonomialFunction, project_monomial
from .numerics import (
    LogValue, MultiIndex, add, as_index, indices_of_degree, indices_up_to, leq, log_factorial, log_gamma, log_sum,
)

NOMINAL_Q = 1.0 / 3.0


def d_gamma2(table, gamma: Sequence[int]) -> LogValue:
    """``d_gamma^2 = ||z^gamma||^2 = G(2 gamma)``."""
    return table.moment(tuple(2.0 * g for g in as_index(gamma)))


def log_d2(table, gamma: Sequence[int]) -> float:
    return d_gamma2(table, gamma).logmag


def trig_moment(gamma: Sequence[int]) -> LogValue:
    """Angular factor of ``d_gamma^2`` on the ball: ``prod gamma_i! / (2^(n-1) (|gamma|+n-1)!)``.

    For ``n = 2`` this is ``int_0^{pi/2} cos^(2g1+1) sin^(2g2+1) = g1! g2! / (2 (|g|+1)!)``.
    """
    gamma = as_index(gamma)
    n = len(gamma)
    logv = sum(float(log_factorial(g)) for g in gamma) - (n - 1) * math.log(2.0) - float(log_gamma(sum(gamma) + n))
    return LogValue.from_log(logv)


@dataclass(frozen=True)
class NormalizedDGamma:
    gamma: MultiIndex
    log_d2: float
    normalized: float
    q_used: float


def dse_band_ratio(table, gamma: Sequence[int], q: float = NOMINAL_Q) -> NormalizedDGamma:
    """``log d_gamma^2`` with the exponential, polynomial and factorial factors divided out."""
    gamma = as_index(gamma)
    n = len(gamma)
    g = sum(gamma)
    ld = log_d2(table, gamma)
    norm = (ld + 2.0 * math.sqrt(g + 1) + q * math.log(g + 1) + float(log_gamma(g + n))
            - sum(float(log_factorial(x)) for x in gamma))
    return NormalizedDGamma(gamma, ld, norm, q)


@dataclass(frozen=True)
class BandSummary:
    lo: int
    hi: int
    q: float
    min_normalized: float
    max_normalized: float
    count: int

    @property
    def span(self) -> float:
        """Ratio between the largest and smallest normalized ``d_gamma^2``."""
        return math.exp(self.max_normalized - self.min_normalized)


def dse_band(table, lo: int, hi: int, q: float = NOMINAL_Q) -> BandSummary:
    vals = [dse_band_ratio(table, g, q).normalized
            for d in range(lo, hi + 1) for g in indices_of_degree(table.domain.n, d)]
    return BandSummary(lo, hi, q, min(vals), max(vals), len(vals))


def log_reverse_cs(table, alpha: Sequence[int], beta: Sequence[int]) -> float:
    alpha, beta = as_index(alpha), as_index(beta)
    return (0.5 * (log_d2(table, alpha) + log_d2(table, add(alpha, beta, 2)))
            - log_d2(table, add(alpha, beta)))


def reverse_cs(table, alpha: Sequence[int], beta: Sequence[int]) -> float:
    """``d_alpha d_(alpha+2 beta) / d_(alpha+beta)^2``; at least one by log-convexity."""
    return math.exp(log_reverse_cs(table, alpha, beta))


def sqrt_expr(alpha: Sequence[int], beta: Sequence[int]) -> float:
    """``-2 (sqrt(|a|+1) + sqrt(|a+2b|+1) - 2 sqrt(|a+b|+1))``, which lies in ``[0, 2|b|]``."""
    a, b = sum(alpha), sum(beta)
    return -2.0 * (math.sqrt(a + 1) + math.sqrt(a + 2 * b + 1) - 2.0 * math.sqrt(a + b + 1))


def binom_part(alpha: Sequence[int], beta: Sequence[int]) -> float:
    """``log( (a+b)! (a+b)! / (a! (a+2b)!) )`` as a sum of logs of factors below one."""
    return math.fsum(math.log((a + j) / (a + b + j)) for a, b in zip(alpha, beta) for j in range(1, b + 1))


@dataclass(frozen=True)
class KeyDecomposition:
    """Factors of ``reverse_cs^2`` following the asymptotic ``d_gamma^2`` model.

    ``reverse_cs^2 = exp(sqrt_expr) * polynomial * factorial * shifted_factorial * remainder``
    """

    alpha: MultiIndex
    beta: MultiIndex
    log_ratio_sq: float
    sqrt_expr: float
    polynomial: float
    factorial: float
    shifted_factorial: float
    remainder: float


def key_decomposition(table, alpha: Sequence[int], beta: Sequence[int], q: float = NOMINAL_Q) -> KeyDecomposition:
    alpha, beta = as_index(alpha), as_index(beta)
    a2b, ab = add(alpha, beta, 2), add(alpha, beta)
    A, AB, A2B = sum(alpha), sum(ab), sum(a2b)
    n = len(alpha)
    lr2 = 2.0 * log_reverse_cs(table, alpha, beta)
    se = sqrt_expr(alpha, beta)
    lpoly = q * (2.0 * math.log(AB + 1) - math.log(A + 1) - math.log(A2B + 1))
    lfact = sum(float(log_factorial(x)) for x in alpha + a2b) - 2.0 * sum(float(log_factorial(x)) for x in ab)
    lshift = (2.0 * float(log_gamma(AB + n)) - float(log_gamma(A + n)) - float(log_gamma(A2B + n)))
    rem = lr2 - se - lpoly - lfact - lshift
    return KeyDecomposition(alpha, beta, lr2, se, math.exp(lpoly), math.exp(lfact), math.exp(lshift), math.exp(rem))


@dataclass(frozen=True)
class MBetaCoefficient:
    """``M_beta z^alpha = exp(total) z^(alpha + 2 beta)``."""

    alpha: MultiIndex
    beta: MultiIndex
    binom_part: float
    moment_part: float

    @property
    def total(self) -> float:
        return self.binom_part + self.moment_part

    @property
    def target(self) -> MultiIndex:
        return add(self.alpha, self.beta, 2)


def m_beta_coeff(table, alpha: Sequence[int], beta: Sequence[int]) -> MBetaCoefficient:
    alpha, beta = as_index(alpha), as_index(beta)
    return MBetaCoefficient(alpha, beta, binom_part(alpha, beta),
                            log_d2(table, alpha) - log_d2(table, add(alpha, beta)))


def m_beta_norm_ratio(table, alpha: Sequence[int], beta: Sequence[int]) -> float:
    """``||M_beta z^alpha|| / ||z^alpha||`` = ``exp(binom_part) * reverse_cs``."""
    return math.exp(binom_part(alpha, beta) + log_reverse_cs(table, alpha, beta))


def m_beta_apply(table, f: MonomialFunction, beta: Sequence[int]) -> MonomialFunction:
    if not f.is_holomorphic:
        raise ValueError("M_beta acts on holomorphic monomials")
    c = m_beta_coeff(table, f.a, beta)
    return MonomialFunction(c.target, f.b, f.scale * LogValue.from_log(c.total))


def inner(table, f: MonomialFunction, g: MonomialFunction) -> LogValue:
    """``<f, g> = int f conj(g) lambda dV`` for monomial-type ``f``, ``g`` (rotation-invariant weight)."""
    if f.is_zero or g.is_zero:
        return LogValue.zero()
    # f conj(g) = z^(fa + gb) conj(z)^(fb + ga); the angular integral needs equal exponents
    hol, anti = add(f.a, g.b), add(f.b, g.a)
    if hol != anti:
        return LogValue.zero()
    return f.scale * g.scale * table.moment(tuple(2.0 * h for h in hol))


@dataclass(frozen=True)
class AdjointCheck:
    alpha: MultiIndex
    beta: MultiIndex
    gamma: MultiIndex
    lhs: LogValue
    rhs: LogValue

    @property
    def rel_err(self) -> float:
        if self.lhs.is_zero and self.rhs.is_zero:
            return 0.0
        if self.lhs.is_zero or self.rhs.is_zero or self.lhs.sign != self.rhs.sign:
            return math.inf
        return abs(math.expm1(self.lhs.logmag - self.rhs.logmag))


def adjoint_sides(table, alpha: Sequence[int], beta: Sequence[int], gamma: Sequence[int]) -> AdjointCheck:
    """``<z^alpha, d^beta z^gamma>`` against ``<d^beta M_beta z^alpha, z^gamma>``."""
    alpha, beta, gamma = as_index(alpha), as_index(beta), as_index(gamma)
    zeros = tuple(0 for _ in alpha)
    za, zg = MonomialFunction(alpha, zeros), MonomialFunction(gamma, zeros)
    lhs = inner(table, za, zg.derivative(beta))
    rhs = inner(table, m_beta_apply(table, za, beta).derivative(beta), zg)
    return AdjointCheck(alpha, beta, gamma, lhs, rhs)


def adjoint_closed_form(table, alpha: Sequence[int], beta: Sequence[int]) -> LogValue:
    """Both sides equal ``(alpha+beta)!/alpha! * d_alpha^2`` when ``gamma = alpha + beta``."""
    alpha, beta = as_index(alpha), as_index(beta)
    logc = sum(float(log_factorial(a + b) - log_factorial(a)) for a, b in zip(alpha, beta))
    return d_gamma2(table, alpha) * LogValue.from_log(logc)


@lru_cache(maxsize=None)
def _derivative_pairs(n: int, k: int) -> tuple[tuple[MultiIndex, MultiIndex], ...]:
    out = []
    for total in range(k + 1):
        for j in range(total + 1):
            for dz in indices_of_degree(n, j):
                for dzbar in indices_of_degree(n, total - j):
                    out.append((dz, dzbar))
    return tuple(out)


def derivative_pairs(n: int, k: int) -> Iterator[tuple[MultiIndex, MultiIndex]]:
    """``(dz, dzbar)`` with ``|dz| + |dzbar| <= k``."""
    return iter(_derivative_pairs(n, k))


def _log_falling_sq(e: MultiIndex, d: MultiIndex) -> float:
    return 2.0 * math.fsum(math.log(ei - j) for ei, di in zip(e, d) for j in range(di))


def sobolev_norm(table, f: MonomialFunction, k: int) -> LogValue:
    """``||f||_k^2 = sum_{|dz|+|dzbar| <= k} int |d^dz dbar^dzbar f|^2 lambda dV``, exactly for monomials.

    Each derivative of ``z^a conj(z)^b`` is a falling-factorial multiple of a
    monomial, whose squared norm is ``G(2(a - dz + b - dzbar))``.
    """
    if not 0 <= k <= 4:
        raise ValueError("k must lie in [0, 4]")
    if f.is_zero:
        return LogValue.zero()
    a, b = f.a, f.b
    base = 2.0 * f.scale.logmag
    terms = []
    for dz, dzbar in _derivative_pairs(f.n, k):
        if any(d > e for d, e in zip(dz, a)) or any(d > e for d, e in zip(dzbar, b)):
            continue
        s = tuple(2.0 * (ai - di + bi - ei) for ai, di, bi, ei in zip(a, dz, b, dzbar))
        g = table.moment(s)
        terms.append(LogValue(g.sign, g.logmag + base + _log_falling_sq(a, dz) + _log_falling_sq(b, dzbar)))
    return log_sum(terms)


@dataclass(frozen=True)
class RatioRow:
    a: MultiIndex
    b: MultiIndex
    log_ratio: float


@dataclass(frozen=True)
class SobolevSweep:
    k: int
    max_degree: int
    truncation: int | None
    sup_ratio: float
    argsup: tuple[MultiIndex, MultiIndex]
    rows: tuple[RatioRow, ...]
    skipped_zero: int
    sup_non_holomorphic: float = 0.0
    argsup_non_holomorphic: tuple[MultiIndex, MultiIndex] | None = None


def sobolev_ratio(table, f: MonomialFunction, k: int, truncation: int | None = None) -> float:
    """``log( ||B f||_k / ||f||_k )``; ``-inf`` when the projection vanishes."""
    bf = project_monomial(table, f, truncation)
    if bf.is_zero:
        return -math.inf
    return 0.5 * (sobolev_norm(table, bf, k).logmag - sobolev_norm(table, f, k).logmag)


def monomial_pairs(n: int, max_degree: int, projectable_only: bool = True) -> Iterator[tuple[MultiIndex, MultiIndex]]:
    """``(a, b)`` with ``|a| + |b| <= max_degree``; with ``projectable_only`` only ``a >= b``."""
    for d in range(max_degree + 1):
        for db in range(d + 1):
            for b in indices_of_degree(n, db):
                for a in indices_of_degree(n, d - db):
                    if projectable_only and not leq(b, a):
                        continue
                    yield a, b


def sobolev_ratio_sweep(table, k: int, max_degree: int, truncation: int | None = None) -> SobolevSweep:
    """Sup of ``||B f||_k / ||f||_k`` over monomials ``z^a conj(z)^b`` with ``|a + b| <= max_degree``.

    Pairs with some ``b_i > a_i`` project to zero and are only counted.  Holomorphic
    monomials give exactly one, so the sup over ``b != 0`` is reported separately.
    """
    if not 0 <= k <= 2:
        raise ValueError("k must lie in [0, 2]")
    if not 0 <= max_degree <= 40:
        raise ValueError("max_degree must lie in [0, 40]")
    n = table.domain.n
    rows = []
    best, arg = -math.inf, None
    best_nh, arg_nh = -math.inf, None
    for a, b in monomial_pairs(n, max_degree):
        lr = sobolev_ratio(table, MonomialFunction(a, b), k, truncation)
        rows.append(RatioRow(a, b, lr))
        if lr > best:
            best, arg = lr, (a, b)
        if any(b) and lr > best_nh:
            best_nh, arg_nh = lr, (a, b)
    total = sum(1 for _ in monomial_pairs(n, max_degree, projectable_only=False))
    return SobolevSweep(k, max_degree, truncation, math.exp(best), arg, tuple(rows), total - len(rows),
                        math.exp(best_nh), arg_nh)


def key_sweep(table, max_alpha: int, betas: Sequence[Sequence[int]]) -> Iterator[tuple[MultiIndex, MultiIndex, float, float, float]]:
    """``(alpha, beta, reverse_cs, sqrt_expr, binom_part)`` for ``|alpha| <= max_alpha``."""
    n = table.domain.n
    for beta in betas:
        beta = as_index(beta)
        for alpha in indices_up_to(n, max_alpha):
            yield alpha, beta, reverse_cs(table, alpha, beta), sqrt_expr(alpha, beta), binom_part(alpha, beta)


def all_betas(n: int, max_order: int, min_order: int = 1) -> list[MultiIndex]:
    return [b for d in range(min_order, max_order + 1) for b in indices_of_degree(n, d)]


def shell_sup(table, beta: Sequence[int], degree: int, fn) -> float:
    return max(fn(table, alpha, beta) for alpha in indices_of_degree(table.domain.n, degree))


__all__ = [
    "AdjointCheck", "BandSummary", "KeyDecomposition", "MBetaCoefficient", "NormalizedDGamma", "NOMINAL_Q", "RatioRow",
    "SobolevSweep", "adjoint_closed_form", "adjoint_sides", "all_betas", "binom_part", "d_gamma2",
    "derivative_pairs", "dse_band", "dse_band_ratio", "inner", "key_decomposition", "key_sweep", "log_d2",
    "log_reverse_cs", "m_beta_apply", "m_beta_coeff", "m_beta_norm_ratio", "monomial_pairs", "reverse_cs",
    "shell_sup", "sobolev_norm", "sobolev_ratio", "sobolev_ratio_sweep", "sqrt_expr", "trig_moment",
]
