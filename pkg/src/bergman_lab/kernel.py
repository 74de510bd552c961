"""Truncated Bergman kernels, projection of monomial-type functions, and the
slice-reduction and lift checks that tie the two-dimensional problem to a disc.

Every weight here is rotation-invariant in each coordinate, so monomials are
orthogonal and everything reduces to moment ratios.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import LogValue, MultiIndex, as_index, indices_up_to, log_falling, log_sum, sub
from .quadrature import integrate_1d

_LOG_2PI = math.log(2.0 * math.pi)


class KernelDivergenceWarning(RuntimeWarning):
    """The geometric tail bound exceeds 10% of the partial sum."""


@dataclass(frozen=True)
class KernelValue:
    value: complex
    log_abs: float          # log |partial sum|, valid even when `value` underflows
    tail_bound: float       # bound on |tail| relative to |partial sum|
    degree: int

    @property
    def reliable(self) -> bool:
        return self.tail_bound <= 0.1


@dataclass
class TruncatedKernel:
    """``B(z, w) = sum_{|alpha| <= J} c_alpha^2 z^alpha conj(w)^alpha`` with ``c_alpha^2 = 1/G(2 alpha)``."""

    table: object
    degree: int
    log_coeffs: dict[MultiIndex, float] = field(default_factory=dict)

    @classmethod
    def build(cls, table, degree: int | None = None) -> TruncatedKernel:
        n = table.domain.n
        if degree is None:
            degree = 200 if n == 1 else 60
        if degree < 1:
            raise ValueError("degree must be >= 1")
        coeffs = {}
        for alpha in indices_up_to(n, degree):
            g = table.moment(tuple(2.0 * a for a in alpha))
            coeffs[alpha] = -g.logmag
        return cls(table, degree, coeffs)

    @property
    def n(self) -> int:
        return self.table.domain.n

    def coefficient(self, alpha: Sequence[int]) -> LogValue:
        return LogValue.from_log(self.log_coeffs[as_index(alpha)])

    def _terms(self, z: Sequence[complex], w: Sequence[complex]):
        prods = [complex(zi) * complex(wi).conjugate() for zi, wi in zip(z, w, strict=True)]
        logs = [math.log(abs(p)) if p != 0 else -math.inf for p in prods]
        angles = [cmath.phase(p) if p != 0 else 0.0 for p in prods]
        out = []
        for alpha, lc in self.log_coeffs.items():
            lm = lc
            ang = 0.0
            for ai, li, ti in zip(alpha, logs, angles):
                if ai:
                    lm += ai * li
                    ang += ai * ti
            out.append((sum(alpha), lm, ang))
        return out

    def evaluate(self, z: Sequence[complex], w: Sequence[complex]) -> KernelValue:
        """Partial sum and a geometric tail estimate from the ratio of the last shells."""
        if len(z) != self.n or len(w) != self.n:
            raise ValueError(f"points must have {self.n} coordinates")
        if not (self.table.domain.contains(*(abs(complex(v)) for v in z))
                and self.table.domain.contains(*(abs(complex(v)) for v in w))):
            raise ValueError("kernel is evaluated at interior points only")
        terms = [t for t in self._terms(z, w) if t[1] > -math.inf]
        top = max(t[1] for t in terms)
        re = math.fsum(math.exp(lm - top) * math.cos(a) for _, lm, a in terms)
        im = math.fsum(math.exp(lm - top) * math.sin(a) for _, lm, a in terms)
        mag = math.hypot(re, im)
        log_abs = top + math.log(mag) if mag > 0 else -math.inf

        shells = np.zeros(self.degree + 1)
        for d, lm, _ in terms:
            shells[d] += math.exp(lm - top)
        last = shells[-1]
        ratios = [shells[d] / shells[d - 1] for d in range(max(1, self.degree - 4), self.degree + 1)
                  if shells[d - 1] > 0]
        q = max(ratios) if ratios else 0.0
        if last == 0.0:
            tail = 0.0
        elif q >= 1.0:
            tail = math.inf
        else:
            tail = last * q / (1.0 - q) / mag if mag > 0 else math.inf
        if tail > 0.1:
            warnings.warn(f"kernel tail bound {tail:.3g} exceeds 10% of the partial sum at J={self.degree}",
                          KernelDivergenceWarning, stacklevel=2)
        value = complex(re, im) * math.exp(top) if top < 700 else complex(math.inf, 0)
        return KernelValue(value, log_abs, tail, self.degree)


@dataclass(frozen=True)
class MonomialFunction:
    """``scale * z^a * conj(z)^b``."""

    a: MultiIndex
    b: MultiIndex
    scale: LogValue = LogValue(1, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "a", as_index(self.a))
        object.__setattr__(self, "b", as_index(self.b))
        if len(self.a) != len(self.b):
            raise ValueError("holomorphic and anti-holomorphic parts need the same length")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def is_zero(self) -> bool:
        return self.scale.is_zero

    @property
    def is_holomorphic(self) -> bool:
        return not any(self.b)

    def derivative(self, dz: Sequence[int], dzbar: Sequence[int] = None) -> MonomialFunction:
        """``d^dz/dz^dz d^dzbar/dzbar^dzbar`` applied termwise; exact falling factorials."""
        dz = as_index(dz)
        dzbar = as_index(dzbar if dzbar is not None else (0,) * self.n)
        if any(d > a for d, a in zip(dz, self.a)) or any(d > b for d, b in zip(dzbar, self.b)):
            return MonomialFunction(self.a, self.b, LogValue.zero())
        logc = math.fsum(log_falling(a, d) for a, d in zip(self.a, dz))
        logc += math.fsum(log_falling(b, d) for b, d in zip(self.b, dzbar))
        return MonomialFunction(sub(self.a, dz), sub(self.b, dzbar), self.scale * LogValue.from_log(logc))

    def __call__(self, z: Sequence[complex]) -> complex:
        val = complex(self.scale.to_real())
        for zi, ai, bi in zip(z, self.a, self.b):
            zi = complex(zi)
            val *= zi ** ai * zi.conjugate() ** bi
        return val

    def abs_exponents(self) -> tuple[int, ...]:
        return tuple(ai + bi for ai, bi in zip(self.a, self.b))


def log_norm_p(table, f: MonomialFunction, p: float = 2.0) -> float:
    """``log ||f||_p^p = p log|scale| + log G(p (a + b))``."""
    if f.is_zero:
        return -math.inf
    return p * f.scale.logmag + table.moment(tuple(p * e for e in f.abs_exponents())).logmag


def project_monomial(table, f: MonomialFunction, truncation: int | None = None) -> MonomialFunction:
    """Weighted projection of ``z^a conj(z)^b``: ``G(2a)/G(2(a-b)) z^(a-b)`` when ``a >= b``, else zero.

    With a ``truncation`` J, outputs of total degree above J are cut (the
    truncated kernel reproduces only degrees <= J).
    """
    if f.is_zero or any(bi > ai for ai, bi in zip(f.a, f.b)):
        return MonomialFunction(f.a, tuple(0 for _ in f.b), LogValue.zero())
    c = sub(f.a, f.b)
    zero_b = tuple(0 for _ in f.b)
    if truncation is not None and sum(c) > truncation:
        return MonomialFunction(c, zero_b, LogValue.zero())
    if not any(f.b):
        return f
    ratio = table.moment(tuple(2.0 * ai for ai in f.a)) / table.moment(tuple(2.0 * ci for ci in c))
    return MonomialFunction(c, zero_b, f.scale * ratio)


def reproducing_error(kernel: TruncatedKernel, gamma: Sequence[int]) -> float:
    """``|c_gamma^2 <z^gamma, z^gamma>_quad - 1|``: the reproducing property on ``z^gamma``.

    After the angular integration only the ``alpha = gamma`` term of the kernel
    survives, so reproducing ``g(z) = z^gamma`` is equivalent to the coefficient
    times a directly integrated norm being one.
    """
    gamma = as_index(gamma)
    if sum(gamma) > kernel.degree:
        raise ValueError("gamma outside the truncation")
    norm = kernel.table.moment_by_quadrature(tuple(2.0 * g for g in gamma)).value
    return abs(math.expm1(kernel.log_coeffs[gamma] + norm.logmag))


@dataclass(frozen=True)
class SliceCheck:
    lhs: complex
    rhs: complex
    rel_err: float
    abs_err: float
    mu: float
    degree: int


def verify_slice_identity(k_omega: TruncatedKernel, k_disc: TruncatedKernel,
                          z: Sequence[complex], w1: complex) -> SliceCheck:
    """Compare ``int_{S_w1} B_Omega(z, w) lambda(w) dA(w2)`` with ``mu(w1) B_D(z1, w1)``.

    The left side integrates the weight over the slice with its own quadrature
    (the angular integral in ``w2`` keeps only ``alpha_2 = 0`` terms); the right
    side uses the auxiliary weight and the disc kernel.
    """
    if k_omega.n != 2 or k_disc.n != 1:
        raise ValueError("need a two-dimensional kernel and a disc kernel")
    if k_disc.degree != k_omega.degree:
        raise ValueError("kernels must share the truncation degree")
    z1, z2 = complex(z[0]), complex(z[1])
    w1 = complex(w1)
    d, w = k_omega.table.domain, k_omega.table.weight
    r1 = abs(w1)
    if not d.contains(abs(z1), abs(z2)) or not r1 < 1.0:
        raise ValueError("points must be interior")

    s = d.slice_radius(r1)
    if s <= 0.0:
        slice_mass = LogValue.zero()
    else:
        slice_mass = integrate_1d(
            lambda r2: _LOG_2PI + np.log(np.maximum(r2, 1e-300)) + w.log_of_rho(d.rho(r1, r2)),
            0.0, s, k_omega.table.quad, transform=False).value
    p = z1 * w1.conjugate()
    terms = []
    for (a1, a2), lc in k_omega.log_coeffs.items():
        if a2 == 0:
            terms.append((lc, a1))
    lhs_series = _series(terms, p)
    disc_terms = [(lc, a[0]) for a, lc in k_disc.log_coeffs.items()]
    rhs_series = _series(disc_terms, p)

    from .moments import mu_weight  # local import: moments does not depend on kernels

    mu = mu_weight(k_omega.table, r1)
    lhs = lhs_series * slice_mass.to_real()
    rhs = rhs_series * mu.to_real()
    abs_err = abs(lhs - rhs)
    rel = abs_err / abs(rhs) if rhs != 0 else (0.0 if lhs == 0 else math.inf)
    return SliceCheck(lhs, rhs, rel, abs_err, mu.to_real(), k_omega.degree)


def _series(terms: list[tuple[float, int]], p: complex) -> complex:
    if p == 0:
        return complex(math.exp(next(lc for lc, m in terms if m == 0)))
    lp, ang = math.log(abs(p)), cmath.phase(p)
    re = math.fsum(math.exp(lc + m * lp) * math.cos(m * ang) for lc, m in terms)
    im = math.fsum(math.exp(lc + m * lp) * math.sin(m * ang) for lc, m in terms)
    return complex(re, im)


@dataclass(frozen=True)
class LiftCheck:
    a: int
    b: int
    log_norm_omega: float
    log_norm_disc: float
    rel_err: float
    projected_lift: LogValue
    lifted_projection: LogValue

    @property
    def coefficients_equal(self) -> bool:
        return self.projected_lift == self.lifted_projection


def lift_check(parent, disc, a: int, b: int, p: float = 2.0) -> LiftCheck:
    """Lift ``f(z1) = z1^a conj(z1)^b`` to ``F(z1, z2) = f(z1)`` on the two-dimensional domain.

    ``parent`` is the table on the domain, ``disc`` an auxiliary-disc table
    (ideally computed by direct quadrature of ``mu``).  Norms are compared in
    ``L^p``; projections are compared coefficientwise.
    """
    F = MonomialFunction((a, 0), (b, 0))
    f = MonomialFunction((a,), (b,))
    ln_omega = log_norm_p(parent, F, p)
    ln_disc = log_norm_p(disc, f, p)
    rel = abs(math.expm1(ln_omega - ln_disc))
    pF = project_monomial(parent, F)
    pf = project_monomial(_ReductionView(parent), f)
    return LiftCheck(a, b, ln_omega, ln_disc, rel, pF.scale, pf.scale)


class _ReductionView:
    """The disc with ``mu`` seen through ``Phi(x) = G((x, 0))`` of its parent."""

    def __init__(self, parent):
        self.parent = parent

    def moment(self, s):
        (x,) = s
        return self.parent.phi(x)


__all__ = [
    "KernelDivergenceWarning", "KernelValue", "LiftCheck", "MonomialFunction", "SliceCheck",
    "TruncatedKernel", "lift_check", "log_norm_p", "project_monomial", "reproducing_error",
    "verify_slice_identity",
]
