"""L^p norm ratios of projected test functions ``z^(km) conj(z)^m``.

For the exponentially decaying weight the log-ratio grows like ``c sqrt(m)``
whenever ``p != 2``; for ``p = 2`` it never exceeds zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


def minimal_k(p: float) -> int:
    """Smallest integer ``k >= 2`` with ``p (k + 1) < 2 (k - 1)``."""
    if not 1.0 <= p < 2.0:
        raise ValueError("minimal k exists only for 1 <= p < 2; use the dual family for p > 2")
    k = 2
    while not p * (k + 1) < 2 * (k - 1):
        k += 1
    return k


def conjugate(p: float) -> float:
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    return p / (p - 1.0)


@dataclass(frozen=True)
class BlowupPoint:
    p: float
    k: int
    m: int
    log_ratio: float
    phi_2km: float
    phi_2k1m: float
    phi_pk1m: float
    phi_pk_1m: float
    rel_err: float = 0.0

    @property
    def components(self) -> tuple[float, float, float, float]:
        return (self.phi_2km, self.phi_2k1m, self.phi_pk1m, self.phi_pk_1m)

    @staticmethod
    def combine(p: float, phi_2km: float, phi_2k1m: float, phi_pk1m: float, phi_pk_1m: float) -> float:
        return p * (phi_2km - phi_2k1m) - (phi_pk1m - phi_pk_1m)


def blowup_ratio(table, p: float, k: int, m: int) -> BlowupPoint:
    """``log( ||B f||_p^p / ||f||_p^p )`` for ``f = z^(km) conj(z)^m`` on the disc carrying ``table``'s Phi."""
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    if k < 2 or m < 1:
        raise ValueError("need k >= 2 and m >= 1")
    xs = (2.0 * k * m, 2.0 * (k - 1) * m, p * (k + 1) * m, p * (k - 1) * m)
    phis = [table.log_phi(x) for x in xs]
    err = max(table.phi_rel_err(x) for x in xs)
    return BlowupPoint(p, k, m, BlowupPoint.combine(p, *phis), *phis, rel_err=err)


@dataclass(frozen=True)
class DualPoint:
    """Ratio for ``g = z^j |z|^((p-2) j)`` measured in ``L^p'``, with ``p`` the conjugate of ``p'``.

    ``||B g||^p' / ||g||^p' = Phi(p j)^(p'-1) Phi(p' j) / Phi(2 j)^p'``.
    """

    p_prime: float
    j: int
    log_ratio: float


def dual_blowup_ratio(table, p_prime: float, j: int) -> DualPoint:
    if p_prime <= 2.0:
        raise ValueError("the dual family is meant for p' > 2")
    p = conjugate(p_prime)
    lr = ((p_prime - 1.0) * table.log_phi(p * j) + table.log_phi(p_prime * j)
          - p_prime * table.log_phi(2.0 * j))
    return DualPoint(p_prime, j, lr)


def m_schedule(m_max: int, m_min: int = 1, per_decade: int = 24) -> list[int]:
    """Integer, strictly increasing, log-spaced m values."""
    if m_max < m_min or m_min < 1:
        raise ValueError("need 1 <= m_min <= m_max")
    steps = max(2, int(round(per_decade * math.log10(m_max / m_min))) + 1)
    ms = sorted({int(round(v)) for v in np.geomspace(m_min, m_max, steps)})
    return ms


def blowup_sweep(table, p: float, k: int, m_max: int, *, m_min: int = 1, per_decade: int = 24,
                 err_cap: float = 1e-6) -> list[BlowupPoint]:
    """Points in increasing ``m``; stops early once Phi's error estimate exceeds ``err_cap``."""
    out = []
    for m in m_schedule(m_max, m_min, per_decade):
        pt = blowup_ratio(table, p, k, m)
        if pt.rel_err > err_cap:
            break
        out.append(pt)
    return out


def predicted_slope(p: float, k: int, scale: float = 1.0) -> float:
    """``c(p, k)`` from substituting ``phi(x) ~ -2 scale sqrt(x)`` into the log-ratio."""
    c = 2.0 * math.sqrt(p) * (math.sqrt(k + 1) - math.sqrt(k - 1)) - 2.0 * math.sqrt(2.0) * p * (
        math.sqrt(k) - math.sqrt(k - 1))
    return scale * c


def sqrt_scale(domain) -> float:
    """``s`` with ``phi(x) ~ -2 s sqrt(x)`` for the exponential weight.

    ``Phi(x) = G((x, 0, ...))`` reduces to ``I(x / (2 a_1) + ...)``, where
    ``a_1`` is the exponent on ``r_1^2`` in the defining function.
    """
    return 1.0 / math.sqrt(2.0 * domain.exponents[0])


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    predicted: float
    rel_gap: float
    m_range: tuple[int, int]
    points: int


def fit_blowup_slope(points: Sequence[BlowupPoint], predicted: float, m_range: tuple[int, int] | None = None) -> SlopeFit:
    """Least-squares slope of ``log_ratio`` against ``sqrt(m)``."""
    pts = [pt for pt in points if m_range is None or m_range[0] <= pt.m <= m_range[1]]
    if len(pts) < 5:
        raise ValueError("need at least 5 points for a slope fit")
    sm = np.sqrt([pt.m for pt in pts])
    if sm[-1] / sm[0] < 2.0:
        raise ValueError("sqrt(m) range too narrow for a slope fit")
    A = np.column_stack([sm, np.ones_like(sm)])
    (slope, intercept), *_ = np.linalg.lstsq(A, np.array([pt.log_ratio for pt in pts]), rcond=None)
    gap = abs(slope - predicted) / abs(predicted) if predicted != 0 else math.inf
    return SlopeFit(float(slope), float(intercept), predicted, float(gap), (pts[0].m, pts[-1].m), len(pts))


def unweighted_limit(p: float, k: int) -> float:
    """``m -> inf`` limit of the ratio when ``Phi(x) = 2 pi / (x + 2)``."""
    return ((k - 1) / k) ** p * (k + 1) / (k - 1)


def unweighted_ratio(p: float, k: int, m: int) -> float:
    """Closed form of the ratio for ``Phi(x) = 2 pi / (x + 2)``."""
    return ((2 * (k - 1) * m + 2) / (2 * k * m + 2)) ** p * (p * (k + 1) * m + 2) / (p * (k - 1) * m + 2)


__all__ = [
    "BlowupPoint", "DualPoint", "SlopeFit", "blowup_ratio", "blowup_sweep", "conjugate", "dual_blowup_ratio",
    "fit_blowup_slope", "m_schedule", "minimal_k", "predicted_slope", "sqrt_scale", "unweighted_limit",
    "unweighted_ratio",
]
