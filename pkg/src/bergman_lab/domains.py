"""Complete Reinhardt domains given by multi-radial defining functions, and weights on them.

Every shipped domain is a generalized complex ellipsoid

    rho(r) = r_1^(2 a_1) + ... + r_n^(2 a_n) - 1,

which covers the unit disc (n = 1, a = 1), the unit ball (all a_i = 1) and the
complex ellipsoids ``|z1|^(2a) + |z2|^(2b) < 1``.  The separable form keeps all
radial derivatives of rho analytic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import log_gamma


class BoundaryError(ValueError):
    """A point was requested on or outside the boundary, or too close to it."""


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    exponents: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("ball", "disc", "ellipsoid"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not self.exponents or any(a <= 0 for a in self.exponents):
            raise ValueError("exponents must be positive and non-empty")
        object.__setattr__(self, "exponents", tuple(float(a) for a in self.exponents))

    @classmethod
    def ball(cls, n: int = 2) -> DomainSpec:
        if n < 1:
            raise ValueError("dimension must be >= 1")
        return cls("ball", (1.0,) * n)

    @classmethod
    def disc(cls, exponent: float = 1.0) -> DomainSpec:
        """Unit disc with ``rho = |z|^(2 exponent) - 1``; exponent 1/2 gives ``rho = |z| - 1``."""
        return cls("disc", (exponent,))

    @classmethod
    def ellipsoid(cls, *exponents: float) -> DomainSpec:
        return cls("ellipsoid", tuple(exponents))

    @classmethod
    def from_config(cls, name: str, dimension: int = 2, exponents: Sequence[float] | None = None) -> DomainSpec:
        if name == "ball":
            return cls.ball(dimension)
        if name == "disc":
            return cls.disc(exponents[0] if exponents else 1.0)
        if name == "ellipsoid":
            if not exponents:
                raise ValueError("ellipsoid needs ellipsoid_exponents")
            return cls.ellipsoid(*exponents)
        raise ValueError(f"unknown domain {name!r}")

    @property
    def n(self) -> int:
        return len(self.exponents)

    def describe(self) -> str:
        exps = ",".join(repr(a) for a in self.exponents)
        return f"{self.kind}(n={self.n};a={exps})"

    # defining function and its radial derivatives

    def rho(self, *r):
        if len(r) != self.n:
            raise ValueError(f"expected {self.n} radii, got {len(r)}")
        acc = -1.0
        for ri, a in zip(r, self.exponents):
            acc = acc + np.asarray(ri, dtype=float) ** (2.0 * a)
        return acc

    def rho_partial(self, i: int, order: int, ri):
        """``order``-th derivative of rho in the radius ``r_i`` (the others drop out)."""
        c = 2.0 * self.exponents[i]
        ri = np.asarray(ri, dtype=float)
        coeff = 1.0
        for j in range(order):
            coeff *= c - j
        if coeff == 0.0:
            return np.zeros_like(ri)
        return coeff * ri ** (c - order)

    def rho_grad(self, *r):
        return tuple(self.rho_partial(i, 1, ri) for i, ri in enumerate(r))

    def rho_hess(self, *r):
        """Second radial partials; mixed partials vanish for the separable rho."""
        n = self.n
        diag = [self.rho_partial(i, 2, ri) for i, ri in enumerate(r)]
        zero = np.zeros_like(np.asarray(diag[0], dtype=float))
        return tuple(tuple(diag[i] if i == j else zero for j in range(n)) for i in range(n))

    # geometry of the radial image

    def contains(self, *r) -> bool:
        return bool(np.all(np.asarray(self.rho(*r)) < 0))

    def slice_radius(self, r1):
        """Radius of the disc slice over a point with ``|z_1| = r1`` (n = 2)."""
        if self.n != 2:
            raise ValueError("slice_radius is defined for two-dimensional domains")
        r1 = np.asarray(r1, dtype=float)
        if np.any(r1 < 0) or np.any(r1 > 1):
            raise BoundaryError(f"r1 outside the projection [0, 1]: {r1}")
        a, b = self.exponents
        rest = np.clip(1.0 - r1 ** (2.0 * a), 0.0, None)
        out = rest ** (1.0 / (2.0 * b))
        return float(out) if out.ndim == 0 else out

    def r1_max(self, r2):
        """Largest ``r1`` in the radial image at fixed ``r2`` (n = 2)."""
        a, b = self.exponents
        rest = np.clip(1.0 - np.asarray(r2, dtype=float) ** (2.0 * b), 0.0, None)
        return rest ** (1.0 / (2.0 * a))

    def log_volume_factor(self) -> float:
        """``log`` of the Dirichlet prefactor ``pi^n / prod(a_i)``."""
        return self.n * math.log(math.pi) - sum(math.log(a) for a in self.exponents)

    def dirichlet_log_prefactor(self, s: Sequence[float]) -> tuple[float, float]:
        """Reduce ``int |z_1|^s_1 ... |z_n|^s_n lambda dV`` to a radial integral.

        With ``u_i = r_i^(2 a_i)`` and ``A_i = (s_i + 2) / (2 a_i)`` the moment equals
        ``pi^n / prod(a_i) * prod Gamma(A_i) / Gamma(sum A_i) * int_0^1 t^(sum A_i - 1) h(t) dt``,
        where ``h(t)`` is the weight as a function of ``t = rho + 1``.  Returns the log
        of the prefactor and the radial exponent ``sum A_i - 1``.
        """
        A = [(si + 2.0) / (2.0 * a) for si, a in zip(s, self.exponents)]
        logpre = self.log_volume_factor() + sum(log_gamma(Ai) for Ai in A) - log_gamma(sum(A))
        return float(logpre), float(sum(A) - 1.0)


@dataclass(frozen=True)
class WeightSpec:
    """``exponential``: exp(1/rho); ``polynomial``: (-rho)^q; ``unweighted``: 1."""

    form: str = "exponential"
    q: float = field(default=0.0)

    def __post_init__(self):
        if self.form not in ("exponential", "polynomial", "unweighted"):
            raise ValueError(f"unknown weight form {self.form!r}")
        if self.form == "polynomial" and self.q < 0:
            raise ValueError("polynomial weight needs q >= 0")

    @classmethod
    def exponential(cls) -> WeightSpec:
        return cls("exponential")

    @classmethod
    def polynomial(cls, q: float) -> WeightSpec:
        return cls("polynomial", float(q))

    @classmethod
    def unweighted(cls) -> WeightSpec:
        return cls("unweighted")

    @classmethod
    def parse(cls, text: str) -> WeightSpec:
        """``exp``, ``poly:q`` or ``none``."""
        text = text.strip()
        if text in ("exp", "exponential"):
            return cls.exponential()
        if text in ("none", "unweighted"):
            return cls.unweighted()
        if text.startswith("poly:"):
            return cls.polynomial(float(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse weight {text!r}")

    def describe(self) -> str:
        if self.form == "polynomial":
            return f"poly:{self.q!r}"
        return {"exponential": "exp", "unweighted": "none"}[self.form]

    @property
    def essential_decay(self) -> bool:
        """True when the weight vanishes faster than any power at the boundary."""
        return self.form == "exponential"

    def log_of_rho(self, rho):
        """``log lambda`` as a function of rho, ``-inf`` where ``rho >= 0``."""
        rho = np.asarray(rho, dtype=float)
        inside = rho < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.form == "exponential":
                val = 1.0 / rho
            elif self.form == "polynomial":
                val = self.q * np.log(-rho) if self.q != 0 else np.zeros_like(rho)
            else:
                val = np.zeros_like(rho)
        out = np.where(inside, val, -np.inf)
        return float(out) if out.ndim == 0 else out

    def log_profile(self, t):
        """``log h(t)`` with ``h(t) = lambda`` at ``rho = t - 1``."""
        return self.log_of_rho(np.asarray(t, dtype=float) - 1.0)


def log_weight(d: DomainSpec, w: WeightSpec, r: Sequence[float]) -> float:
    """``log lambda(r)`` at an interior point of the radial image."""
    rho = float(d.rho(*r))
    if rho >= 0:
        raise BoundaryError(f"rho = {rho} >= 0 at r = {tuple(r)}")
    return float(w.log_of_rho(rho))


def slice_radius(d: DomainSpec, r1: float) -> float:
    return d.slice_radius(r1)


# radial derivatives of r2 * exp(1/rho) in r1


def _log_delta_closed(d: DomainSpec, n: int, r1, r2):
    rho = d.rho(r1, r2)
    r1d = d.rho_partial(0, 1, r1)
    if n == 1:
        bracket = r1d
    else:
        r11 = d.rho_partial(0, 2, r1)
        bracket = r1d ** 2 + rho * (2.0 * r1d ** 2 - r11 * rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = np.log(r2) + np.log(np.abs(bracket)) - 2.0 * n * np.log(np.abs(rho)) + 1.0 / rho
    return lm, np.sign(bracket) * np.sign(r2), rho


def _log_delta_bell(d: DomainSpec, n: int, r1, r2):
    """Exact ``delta_n`` via complete Bell polynomials of the derivatives of ``u = 1/rho``."""
    rho = d.rho(r1, r2)
    rd = [rho] + [d.rho_partial(0, j, r1) for j in range(1, n + 1)]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = [1.0 / rho]
        for j in range(1, n + 1):
            acc = 0.0
            for i in range(j):
                acc = acc + math.comb(j, i) * rd[j - i] * u[i]
            u.append(-acc / rho)
        Y = [np.ones_like(rho)]
        for m in range(n):
            acc = 0.0
            for i in range(m + 1):
                acc = acc + math.comb(m, i) * Y[m - i] * u[i + 1]
            Y.append(acc)
        yn = (-1.0) ** n * Y[n]
        lm = np.log(r2) + np.log(np.abs(yn)) + u[0]
    return lm, np.sign(yn) * np.sign(r2), rho


def log_delta_n(d: DomainSpec, n: int, r1, r2):
    """``(log|delta_n|, sign)`` for ``delta_n = (-1)^n d^n/dr1^n (r2 exp(1/rho))``.

    Closed forms for n <= 2, the Bell-polynomial expansion otherwise.  Points on
    or outside the boundary (and points so close that exp(1/rho) underflows to
    nothing) come back as ``(-inf, 0)``.
    """
    if d.n != 2:
        raise ValueError("delta_n is defined on two-dimensional domains")
    if n < 1:
        raise ValueError("n must be >= 1")
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if n <= 2:
        lm, sg, rho = _log_delta_closed(d, n, r1, r2)
    else:
        lm, sg, rho = _log_delta_bell(d, n, r1, r2)
    dead = ~(rho < -1e-25) | ~np.isfinite(lm) | (sg == 0)
    lm = np.where(dead, -np.inf, lm)
    sg = np.where(dead, 0.0, sg)
    return lm, sg


def _fd_delta(d: DomainSpec, n: int, r1: float, r2: float, h: float) -> float:
    total = math.fsum(
        (-1) ** k * math.comb(n, k) * r2 * math.exp(1.0 / float(d.rho(r1 + (n / 2.0 - k) * h, r2)))
        for k in range(n + 1)
    )
    return (-1) ** n * total / h ** n


def delta_n(d: DomainSpec, n: int, r: Sequence[float], *, method: str = "auto",
            max_order: int = 4, cutoff: float = 0.05) -> float:
    """Pointwise ``delta_n(r1, r2)``.

    ``method="auto"`` uses the printed closed forms for n <= 2 and Richardson
    extrapolated central differences for n >= 3; ``"closed"``, ``"fd"`` and
    ``"exact"`` (Bell polynomials) force a path.  Finite differences refuse points
    with ``rho > -cutoff``.
    """
    r1, r2 = (float(v) for v in r)
    if n < 1 or n > max_order:
        raise ValueError(f"n must lie in [1, {max_order}]")
    rho = float(d.rho(r1, r2))
    if rho >= 0:
        raise BoundaryError(f"rho = {rho} >= 0 at r = {(r1, r2)}")
    if method == "auto":
        method = "closed" if n <= 2 else "fd"
    if method == "closed":
        if n > 2:
            raise ValueError("closed forms exist only for n <= 2")
        lm, sg = log_delta_n(d, n, r1, r2)
        return float(sg * np.exp(lm)) if sg != 0 else 0.0
    if method == "exact":
        lm, sg, _ = _log_delta_bell(d, n, np.asarray(r1), np.asarray(r2))
        return float(sg * np.exp(lm)) if sg != 0 else 0.0
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    if rho > -cutoff:
        raise BoundaryError(f"rho = {rho:.3g} within the finite-difference cutoff {cutoff}")
    dist = float(d.r1_max(r2)) - r1
    h = min(1e-3, dist / 10.0)
    coarse = _fd_delta(d, n, r1, r2, h)
    fine = _fd_delta(d, n, r1, r2, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def positivity_threshold(d: DomainSpec, n: int, grid: int = 400) -> float:
    """Smallest grid radius ``a`` with ``delta_n > 0`` on every grid point having ``r1 > a``.

    The grid is ``grid x grid`` cell centres over the radial image: ``r1`` uniform
    on (0, 1), ``r2`` uniform on each slice.  Returns 0 when no sign change occurs.
    """
    r1 = (np.arange(grid) + 0.5) / grid
    frac = (np.arange(grid) + 0.5) / grid
    s = d.slice_radius(r1)
    R1 = np.repeat(r1[:, None], grid, axis=1)
    R2 = s[:, None] * frac[None, :]
    _, sg = log_delta_n(d, n, R1, R2)
    # underflowed points carry sign 0; decide their sign from the unscaled bracket
    if n <= 2:
        _, sg_raw, _ = _log_delta_closed(d, n, R1, R2)
    else:
        _, sg_raw, _ = _log_delta_bell(d, n, R1, R2)
    sg = np.where(sg == 0, sg_raw, sg)
    bad_rows = np.nonzero(np.any(sg <= 0, axis=1))[0]
    if bad_rows.size == 0:
        return 0.0
    return float(r1[bad_rows.max()])
