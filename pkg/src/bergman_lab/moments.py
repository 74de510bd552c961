"""Moment integrals: G(s), Phi(x), the boundary moment I(y), mu, Phi_n and friends.

All shipped domains reduce ``G(s) = int |z_1|^s_1 ... |z_n|^s_n lambda dV`` to a
one-dimensional radial integral (see :meth:`DomainSpec.dirichlet_log_prefactor`),
so the fast path costs one adaptive quadrature per distinct radial exponent.
The iterated 2D quadrature path is kept alongside as an independent check.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .domains import DomainSpec, WeightSpec, log_delta_n, positivity_threshold
from .numerics import LogValue
from .quadrature import QuadratureSpec, QuadResult, integrate_1d, integrate_2d_radial

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_4PI2 = math.log(4.0 * math.pi ** 2)


def _xlogy(y: float, t: np.ndarray) -> np.ndarray:
    if y == 0:
        return np.zeros_like(t)
    with np.errstate(divide="ignore"):
        return y * np.log(t)


def radial_integral(weight: WeightSpec, y: float, spec: QuadratureSpec | None = None) -> QuadResult:
    """``int_0^1 t^y h(t) dt`` where ``h`` is the weight profile in ``t = rho + 1``."""
    if y < 0:
        raise ValueError("radial exponent must be >= 0")
    spec = spec or QuadratureSpec()
    spec = replace(spec, boundary_transform=spec.boundary_transform and weight.essential_decay)
    return integrate_1d(lambda t: _xlogy(y, t) + weight.log_profile(t), 0.0, 1.0, spec)


@lru_cache(maxsize=4096)
def _boundary_moment_cached(y: float, spec: QuadratureSpec) -> QuadResult:
    return radial_integral(WeightSpec.exponential(), y, spec)


def boundary_moment(y: float, spec: QuadratureSpec | None = None) -> LogValue:
    """``I(y) = int_0^1 R^y exp(-1/(1-R)) dR``."""
    return _boundary_moment_cached(float(y), spec or QuadratureSpec()).value


class MomentTable:
    """Cached moments ``G(s)`` of one (domain, weight) pair.

    Reads are lock-free; inserts go through a lock so concurrent sweeps never
    store two different values under one key.
    """

    def __init__(self, domain: DomainSpec, weight: WeightSpec | None = None, quad: QuadratureSpec | None = None):
        self.domain = domain
        self.weight = weight or WeightSpec.exponential()
        self.quad = quad or QuadratureSpec()
        self.cache: dict[tuple[float, ...], LogValue] = {}
        self.radial: dict[float, LogValue] = {}
        self.radial_err: dict[float, float] = {}
        self._lock = threading.Lock()

    def fingerprint(self) -> dict:
        return {
            "domain": self.domain.describe(),
            "weight": self.weight.describe(),
            **self.quad.fingerprint(),
        }

    def radial_moment(self, y: float) -> LogValue:
        y = float(y)
        hit = self.radial.get(y)
        if hit is not None:
            return hit
        res = radial_integral(self.weight, y, self.quad)
        with self._lock:
            self.radial.setdefault(y, res.value)
            self.radial_err.setdefault(y, res.rel_err)
        return self.radial[y]

    def _key(self, s: Sequence[float]) -> tuple[float, ...]:
        key = tuple(float(v) for v in s)
        if len(key) != self.domain.n:
            raise ValueError(f"exponent vector of length {len(key)} for a {self.domain.n}-dimensional domain")
        if any(v < 0 for v in key):
            raise ValueError(f"exponents must be >= 0: {key}")
        return key

    def moment(self, s: Sequence[float]) -> LogValue:
        """``G(s)`` through the Dirichlet reduction; cached."""
        key = self._key(s)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        logpre, y = self.domain.dirichlet_log_prefactor(key)
        value = self.radial_moment(y) * LogValue.from_log(logpre)
        with self._lock:
            return self.cache.setdefault(key, value)

    def moment_rel_err(self, s: Sequence[float]) -> float:
        _, y = self.domain.dirichlet_log_prefactor(self._key(s))
        self.radial_moment(y)
        return self.radial_err[float(y)]

    def moment_by_quadrature(self, s: Sequence[float]) -> QuadResult:
        """``G(s)`` by direct iterated quadrature in the radii (n <= 2), no reduction."""
        key = self._key(s)
        d, w = self.domain, self.weight
        spec = replace(self.quad, boundary_transform=self.quad.boundary_transform and w.essential_decay)
        if d.n == 1:
            return integrate_1d(
                lambda r: _LOG_2PI + _xlogy(key[0] + 1.0, r) + w.log_of_rho(d.rho(r)), 0.0, 1.0, spec
            )
        if d.n == 2:
            s1, s2 = key

            def f(r1, r2):
                return (_LOG_4PI2 + _xlogy(s1 + 1.0, np.asarray(r1)) + _xlogy(s2 + 1.0, r2)
                        + w.log_of_rho(d.rho(r1, r2)))

            return integrate_2d_radial(f, d, spec)
        raise ValueError("quadrature path implemented for n <= 2")

    def phi(self, x: float) -> LogValue:
        """``Phi(x) = G((x, 0, ..., 0))``: the moment of ``|z_1|^x``."""
        return self.moment((x,) + (0.0,) * (self.domain.n - 1))

    def log_phi(self, x: float) -> float:
        return self.phi(x).logmag

    def phi_rel_err(self, x: float) -> float:
        return self.moment_rel_err((x,) + (0.0,) * (self.domain.n - 1))


def mu_weight(table: MomentTable, r1: float) -> LogValue:
    """``mu(r1) = int_{slice} lambda dA(z_2)``, the weighted area of the slice over ``|z_1| = r1``."""
    d, w = table.domain, table.weight
    if d.n != 2:
        raise ValueError("mu is defined for two-dimensional domains")
    if not 0.0 <= r1 < 1.0:
        return LogValue.zero()
    s = d.slice_radius(r1)
    spec = replace(table.quad, boundary_transform=table.quad.boundary_transform and w.essential_decay)
    res = integrate_1d(lambda r2: _LOG_2PI + _xlogy(1.0, r2) + w.log_of_rho(d.rho(r1, r2)), 0.0, s, spec)
    return res.value


class AuxiliaryDiscTable:
    """The unit disc carrying ``mu`` from a two-dimensional table.

    ``method="reduction"`` reads ``Phi(x) = G((x, 0))`` off the parent table;
    ``method="quadrature"`` integrates ``2 pi r^(x+1) mu(r)`` with ``mu`` itself
    computed by quadrature, which shares nothing with the reduction.
    """

    def __init__(self, parent: MomentTable, method: str = "reduction"):
        if parent.domain.n != 2:
            raise ValueError("auxiliary disc needs a two-dimensional parent")
        if method not in ("reduction", "quadrature"):
            raise ValueError(f"unknown method {method!r}")
        self.parent = parent
        self.method = method
        self.domain = DomainSpec.disc()
        self.quad = parent.quad
        self._mu: dict[float, LogValue] = {}
        self.cache: dict[tuple[float, ...], LogValue] = {}
        self.errors: dict[float, float] = {}

    def fingerprint(self) -> dict:
        return {**self.parent.fingerprint(), "domain": f"aux-disc[{self.parent.domain.describe()}]",
                "method": self.method}

    def mu(self, r1: float) -> LogValue:
        r1 = float(r1)
        hit = self._mu.get(r1)
        if hit is None:
            hit = self._mu[r1] = mu_weight(self.parent, r1)
        return hit

    def _phi_quadrature(self, x: float) -> QuadResult:
        spec = replace(self.quad, rel_tol=max(self.quad.rel_tol, 1e-12),
                       boundary_transform=self.quad.boundary_transform and self.parent.weight.essential_decay)
        inner = replace(spec, rel_tol=max(spec.rel_tol / 10.0, 1e-14))
        d, w = self.parent.domain, self.parent.weight

        def mu_inner(r1: float) -> LogValue:
            s = d.slice_radius(r1)
            return integrate_1d(lambda r2: _LOG_2PI + _xlogy(1.0, r2) + w.log_of_rho(d.rho(r1, r2)),
                                0.0, s, inner).value

        def f(r):
            flat = np.ravel(r)
            lm = np.full(flat.shape, -np.inf)
            sg = np.zeros(flat.shape)
            for i, ri in enumerate(flat.tolist()):
                if 0.0 < ri < 1.0:
                    m = mu_inner(ri)
                    lm[i] = _LOG_2PI + (x + 1.0) * math.log(ri) + m.logmag
                    sg[i] = m.sign
            return lm.reshape(np.shape(r)), sg.reshape(np.shape(r))

        return integrate_1d(f, 0.0, 1.0, spec)

    def phi(self, x: float) -> LogValue:
        x = float(x)
        if self.method == "reduction":
            return self.parent.phi(x)
        key = (x,)
        hit = self.cache.get(key)
        if hit is None:
            res = self._phi_quadrature(x)
            hit = self.cache[key] = res.value
            self.errors[x] = res.rel_err
        return hit

    def moment(self, s: Sequence[float]) -> LogValue:
        (x,) = s
        return self.phi(x)

    def log_phi(self, x: float) -> float:
        return self.phi(x).logmag

    def phi_rel_err(self, x: float) -> float:
        if self.method == "reduction":
            return self.parent.phi_rel_err(x)
        self.phi(x)
        return self.errors[float(x)]


# integration-by-parts chain


def phi_n(table: MomentTable, n: int, x: float, r1_range: tuple[float, float] = (0.0, 1.0)) -> QuadResult:
    """``Phi_n(x) = int_R r1^(x+n+1) delta_n dr1 dr2`` over ``R ∩ {r1 in r1_range}``; signed."""
    d = table.domain
    if d.n != 2:
        raise ValueError("Phi_n is defined on two-dimensional domains")
    if table.weight.form != "exponential":
        raise ValueError("Phi_n is defined for the exponential weight")
    if n < 1 or n > 4:
        raise ValueError("n must lie in [1, 4]")

    def f(r1, r2):
        lm, sg = log_delta_n(d, n, r1, r2)
        return _xlogy(x + n + 1.0, np.asarray(r1, dtype=float)) + lm, sg

    return integrate_2d_radial(f, d, table.quad, r1_range)


def phi_tilde_n(table: MomentTable, n: int, x: float, a: float) -> QuadResult:
    """``Phi_n`` restricted to ``a < r1 < 1``, where ``delta_n`` is positive."""
    return phi_n(table, n, x, (a, 1.0))


def ibp_denominator(n: int, x: float) -> float:
    """``log((x+2)(x+3)...(x+n+1))``."""
    return math.fsum(math.log(x + j) for j in range(2, n + 2))


def phi_from_phi_n(table: MomentTable, n: int, x: float) -> LogValue:
    """Right-hand side of the integration-by-parts identity, ``4 pi^2 Phi_n / prod(x+j)``."""
    return phi_n(table, n, x).value * LogValue.from_log(_LOG_4PI2 - ibp_denominator(n, x))


def theta_n(table: MomentTable, n: int, x: float, a: float) -> float:
    """``theta_n(x) = log(Phi~_n(x) / ((x+2)...(x+n+1)))``."""
    val = phi_tilde_n(table, n, x, a).value
    if val.sign <= 0:
        raise ArithmeticError(f"Phi~_{n}({x}) is not positive; threshold a={a} too small")
    return val.logmag - ibp_denominator(n, x)


def tilde_gap(table: MomentTable, n: int, x: float, a: float) -> float:
    """``|Phi_n(x) / Phi~_n(x) - 1|``, computed from the excluded strip ``r1 < a`` directly."""
    if a <= 0:
        return 0.0
    head = phi_n(table, n, x, (0.0, a)).value
    tail = phi_tilde_n(table, n, x, a).value
    if head.is_zero:
        return 0.0
    return math.exp(head.logmag - tail.logmag)


@dataclass(frozen=True)
class AsymptoticFit:
    slope: float          # coefficient a of -a sqrt(x)
    q: float              # polynomial exponent in x^-q
    constant: float
    residual: float       # RMS residual in log I
    grid: tuple[float, ...]


class FitError(ValueError):
    pass


def fit_kappa_exponent(grid: Sequence[float], spec: QuadratureSpec | None = None) -> AsymptoticFit:
    """Least-squares fit ``log I(x) = -a sqrt(x) - q log x + C`` on ``grid``."""
    xs = np.asarray(sorted(float(x) for x in grid))
    if xs.size < 20:
        raise FitError(f"need at least 20 grid points, got {xs.size}")
    if xs[0] <= 0 or xs[-1] / xs[0] < 100:
        raise FitError("grid must span at least two decades")
    logs = np.array([boundary_moment(x, spec).logmag for x in xs])
    A = np.column_stack([-np.sqrt(xs), -np.log(xs), np.ones_like(xs)])
    if np.linalg.cond(A) > 1e12:
        raise FitError("ill-conditioned fit")
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    resid = logs - A @ coef
    return AsymptoticFit(float(coef[0]), float(coef[1]), float(coef[2]),
                         float(np.sqrt(np.mean(resid ** 2))), tuple(xs.tolist()))


def log_grid(lo: float, hi: float, steps: int) -> list[float]:
    return np.geomspace(lo, hi, steps).tolist()


__all__ = [
    "AsymptoticFit", "AuxiliaryDiscTable", "FitError", "MomentTable", "boundary_moment",
    "fit_kappa_exponent", "ibp_denominator", "log_grid", "mu_weight", "phi_from_phi_n", "phi_n",
    "phi_tilde_n", "positivity_threshold", "radial_integral", "theta_n", "tilde_gap",
]
