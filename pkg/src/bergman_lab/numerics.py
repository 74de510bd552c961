"""Log-domain scalars and the special functions the rest of the package leans on.

Everything exponentially small (moments near ``exp(-2 sqrt(x))``) travels as a
:class:`LogValue`; conversion to float happens only when a report is written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Sequence

import numpy as np

MultiIndex = tuple[int, ...]

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class LogValue:
    """A real number stored as ``sign * exp(logmag)``.

    Zero is ``sign == 0`` with ``logmag == -inf``.
    """

    sign: int
    logmag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign!r}")
        if self.sign == 0 and self.logmag != _NEG_INF:
            object.__setattr__(self, "logmag", _NEG_INF)
        if self.sign != 0 and not math.isfinite(self.logmag):
            if self.logmag == _NEG_INF:
                object.__setattr__(self, "sign", 0)
            else:
                raise OverflowError(f"non-finite logmag {self.logmag!r}")

    @classmethod
    def zero(cls) -> LogValue:
        return cls(0, _NEG_INF)

    @classmethod
    def from_real(cls, x: float) -> LogValue:
        if x == 0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, logmag: float, sign: int = 1) -> LogValue:
        return cls(sign, float(logmag))

    def to_real(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.logmag)

    __float__ = to_real

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __neg__(self) -> LogValue:
        return LogValue(-self.sign, self.logmag)

    def __abs__(self) -> LogValue:
        return LogValue(abs(self.sign), self.logmag)

    def __mul__(self, other) -> LogValue:
        other = _coerce(other)
        s = self.sign * other.sign
        if s == 0:
            return LogValue.zero()
        return LogValue(s, self.logmag + other.logmag)

    __rmul__ = __mul__

    def __truediv__(self, other) -> LogValue:
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogValue")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.logmag - other.logmag)

    def __rtruediv__(self, other) -> LogValue:
        return _coerce(other) / self

    def __pow__(self, p: float) -> LogValue:
        if self.sign == 0:
            if p <= 0:
                raise ZeroDivisionError("zero to a non-positive power")
            return LogValue.zero()
        if self.sign < 0:
            if float(p).is_integer():
                return LogValue(1 if int(p) % 2 == 0 else -1, p * self.logmag)
            raise ValueError("non-integer power of a negative LogValue")
        return LogValue(1, p * self.logmag)

    def __add__(self, other) -> LogValue:
        return log_add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other) -> LogValue:
        return log_add(self, -_coerce(other))

    def __rsub__(self, other) -> LogValue:
        return log_add(_coerce(other), -self)


def _coerce(x) -> LogValue:
    if isinstance(x, LogValue):
        return x
    return LogValue.from_real(float(x))


def log_add(a: LogValue, b: LogValue) -> LogValue:
    """``a + b`` by shifting both terms by the larger magnitude."""
    if a.sign == 0:
        return b
    if b.sign == 0:
        return a
    if a.logmag < b.logmag:
        a, b = b, a
    d = b.logmag - a.logmag
    if a.sign == b.sign:
        return LogValue(a.sign, a.logmag + math.log1p(math.exp(d)))
    if d == 0.0:
        return LogValue.zero()
    return LogValue(a.sign, a.logmag + math.log1p(-math.exp(d)))


def log_sum(values: Iterable[LogValue]) -> LogValue:
    """Sum many LogValues with one max shift and compensated (fsum) accumulation."""
    vals = [v for v in values if v.sign != 0]
    if not vals:
        return LogValue.zero()
    top = max(v.logmag for v in vals)
    total = math.fsum(v.sign * math.exp(v.logmag - top) for v in vals)
    if total == 0.0:
        return LogValue.zero()
    return LogValue(1 if total > 0 else -1, top + math.log(abs(total)))


def log_sum_arrays(logmag: np.ndarray, sign: np.ndarray) -> LogValue:
    """Vectorised :func:`log_sum` over parallel arrays of log-magnitudes and signs."""
    logmag = np.asarray(logmag, dtype=float).ravel()
    sign = np.asarray(sign).ravel()
    keep = (sign != 0) & np.isfinite(logmag)
    if not np.any(keep):
        return LogValue.zero()
    lm, sg = logmag[keep], sign[keep]
    top = float(lm.max())
    total = math.fsum((sg * np.exp(lm - top)).tolist())
    if total == 0.0:
        return LogValue.zero()
    return LogValue(1 if total > 0 else -1, top + math.log(abs(total)))


# Stirling series coefficients B_{2k} / (2k (2k-1)), k = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SHIFT_TO = 15.0


def _stirling(x: np.ndarray) -> np.ndarray:
    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    for c in reversed(_STIRLING):
        series = series * inv2 + c
    return (x - 0.5) * np.log(x) - x + _HALF_LOG_2PI + series * inv


def log_gamma(x):
    """Natural log of the Gamma function for ``x > 0``.

    Stirling series for ``x >= 15``; smaller arguments are shifted up with the
    recurrence, and ``x < 0.5`` goes through the reflection formula.
    Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("log_gamma is defined here only for x > 0")
    out = np.empty_like(arr)
    flat_in = arr.ravel()
    flat = out.ravel()

    small = flat_in < 0.5
    if np.any(small):
        xs = flat_in[small]
        flat[small] = math.log(math.pi) - np.log(np.sin(math.pi * xs)) - _log_gamma_pos(1.0 - xs)
    if np.any(~small):
        flat[~small] = _log_gamma_pos(flat_in[~small])
    out = flat.reshape(arr.shape)
    if out.ndim == 0:
        return float(out)
    return out


def _log_gamma_pos(x: np.ndarray) -> np.ndarray:
    x = np.array(x, dtype=float)
    prod = np.ones_like(x)
    low = x < _SHIFT_TO
    shifted = x.copy()
    while np.any(low):
        prod[low] *= shifted[low]
        shifted[low] += 1.0
        low = shifted < _SHIFT_TO
    return _stirling(shifted) - np.log(prod)


def log_beta(a, b):
    """``log B(a, b)`` for positive ``a`` and ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise ValueError("log_beta requires positive arguments")
    res = log_gamma(a) + log_gamma(b) - log_gamma(a + b)
    return float(res) if np.ndim(res) == 0 else res


def log_factorial(n):
    return log_gamma(np.asarray(n, dtype=float) + 1.0)


def log_falling(a: int, k: int) -> float:
    """``log(a (a-1) ... (a-k+1))`` for integers ``0 <= k <= a``."""
    return math.fsum(math.log(a - j) for j in range(k))


# Multi-index helpers


def as_index(alpha: Sequence[int]) -> MultiIndex:
    idx = tuple(int(a) for a in alpha)
    if any(a < 0 for a in idx):
        raise ValueError(f"multi-index entries must be non-negative: {alpha!r}")
    return idx


def total(alpha: Sequence[float]) -> float:
    return sum(alpha)


def leq(alpha: Sequence[int], beta: Sequence[int]) -> bool:
    """Componentwise ``alpha <= beta``."""
    return all(a <= b for a, b in zip(alpha, beta, strict=True))


def add(alpha: Sequence[int], beta: Sequence[int], scale: int = 1) -> MultiIndex:
    return tuple(a + scale * b for a, b in zip(alpha, beta, strict=True))


def sub(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    return tuple(a - b for a, b in zip(alpha, beta, strict=True))


def indices_of_degree(n: int, degree: int) -> Iterator[MultiIndex]:
    """All multi-indices of length ``n`` with ``|alpha| == degree``, in a fixed order."""
    for combo in combinations_with_replacement(range(n), degree):
        idx = [0] * n
        for c in combo:
            idx[c] += 1
        yield tuple(idx)


def indices_up_to(n: int, max_degree: int) -> Iterator[MultiIndex]:
    for d in range(max_degree + 1):
        yield from indices_of_degree(n, d)
