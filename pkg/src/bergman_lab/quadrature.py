"""Adaptive Gauss-Kronrod quadrature for log-integrands.

Integrands are passed as ``logf(x) -> logmag`` or ``logf(x) -> (logmag, sign)``
over numpy arrays.  The integral is accumulated as ``exp(shift) * sum(...)``
with one global shift, so results far below the double range (``e^-2000``)
come back intact as :class:`~bergman_lab.numerics.LogValue`.

With ``boundary_transform`` on, the upper endpoint is pushed to infinity by
``v = 1 / (hi - r)``.  An integrand like ``exp(-1/(1 - r))`` becomes ``exp(-v)``
there, which turns the essential singularity into an ordinary exponential tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .numerics import LogValue

# QUADPACK qk15 abscissae and weights
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
for _j in range(15):
    _k = _j if _j < 8 else 14 - _j
    if _k % 2 == 1:
        GAUSS_WEIGHTS[_j] = _WG[(_k - 1) // 2]

# drop integrand mass more than e^-CUTOFF below the peak
CUTOFF = 80.0
_EPS = np.finfo(float).eps
_MAX_EVALS = 3_000_000


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    max_depth: int = 60
    boundary_transform: bool = True

    def __post_init__(self):
        if not (0 < self.rel_tol <= 1e-2):
            raise ValueError(f"rel_tol must lie in (0, 1e-2], got {self.rel_tol}")
        if self.max_depth < 10:
            raise ValueError(f"max_depth must be >= 10, got {self.max_depth}")

    def fingerprint(self) -> dict:
        return {"quad_rel_tol": self.rel_tol, "quad_max_depth": self.max_depth}


@dataclass(frozen=True)
class QuadResult:
    value: LogValue
    rel_err: float
    evaluations: int
    converged: bool = True
    worst_panel: tuple[float, float] | None = None


class QuadratureError(ArithmeticError):
    """Tolerance not reached; the best available estimate is attached as ``result``."""

    def __init__(self, message: str, result: QuadResult | None = None):
        super().__init__(message)
        self.result = result


LogIntegrand = Callable[[np.ndarray], "np.ndarray | tuple[np.ndarray, np.ndarray]"]


def _evaluate(logf: LogIntegrand, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    out = logf(x)
    if isinstance(out, tuple):
        lm, sg = out
        lm = np.broadcast_to(np.asarray(lm, dtype=float), x.shape).copy()
        sg = np.broadcast_to(np.asarray(sg, dtype=float), x.shape).copy()
    else:
        lm = np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()
        sg = np.ones_like(lm)
    bad = np.isnan(lm) | (lm == -np.inf) | (sg == 0)
    lm[bad] = -np.inf
    sg[bad] = 0.0
    return lm, sg


class _Variable:
    """Map between the integration variable and the original coordinate."""

    def __init__(self, logf: LogIntegrand, lo: float, hi: float, transform: bool):
        self.lo, self.hi, self.transform = lo, hi, transform
        self.logf = logf
        if transform:
            self.a, self.b = 1.0 / (hi - lo), math.inf
        else:
            self.a, self.b = lo, hi

    def to_original(self, v):
        if self.transform:
            return self.hi - 1.0 / v
        return v

    def __call__(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if not self.transform:
            return _evaluate(self.logf, v)
        r = np.clip(self.hi - 1.0 / v, self.lo, self.hi)
        lm, sg = _evaluate(self.logf, r)
        return lm - 2.0 * np.log(v), sg


def _first_last_above(lm: np.ndarray, threshold: float) -> tuple[int, int]:
    above = np.nonzero(lm > threshold)[0]
    return int(above[0]), int(above[-1])


def _refine_peak(var: _Variable, xs: np.ndarray, lm: np.ndarray) -> tuple[float, float, int]:
    i = int(np.argmax(lm))
    left = xs[max(i - 1, 0)]
    right = xs[min(i + 1, len(xs) - 1)]
    fine = np.linspace(left, right, 65)
    flm, _ = var(fine)
    j = int(np.argmax(flm))
    if flm[j] > lm[i]:
        return float(fine[j]), float(flm[j]), 65
    return float(xs[i]), float(lm[i]), 65


def _locate(var: _Variable) -> tuple[float, float, float, float, int] | None:
    """Find the peak and a window holding all mass above ``peak - CUTOFF``.

    Returns ``(window_lo, window_hi, peak_x, peak_logmag, evaluations)`` or None
    when the integrand vanishes identically.
    """
    a, b = var.a, var.b
    evals = 0
    if math.isinf(b):
        xs_all, lm_all = [], []
        k = np.arange(64)
        start = a
        while True:
            xs = start * 2.0 ** (k / 4.0)
            lm, _ = var(xs)
            evals += len(xs)
            xs_all.append(xs)
            lm_all.append(lm)
            top = max(float(np.max(l)) for l in lm_all)
            tail = lm[-16:]
            if top > -np.inf and np.all(tail < top - CUTOFF - 5.0) and np.all(np.diff(tail) <= 0):
                break
            if xs[-1] > 1e18:
                if top == -np.inf:
                    return None
                raise QuadratureError("integrand does not decay under the boundary transform")
            start = xs[-1] * 2.0 ** 0.25
        xs = np.concatenate(xs_all)
        lm = np.concatenate(lm_all)
    else:
        t = np.linspace(0.0, 1.0, 129)
        xs = a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * t))
        xs[0], xs[-1] = a, b
        lm, _ = var(xs)
        evals += len(xs)
    if not np.any(np.isfinite(lm)):
        return None
    peak_x, peak_lm, extra = _refine_peak(var, xs, lm)
    evals += extra
    # the refined peak may exceed every grid value; anchor the window on the grid maximum
    i0, i1 = _first_last_above(lm, min(peak_lm, float(np.max(lm))) - CUTOFF)
    w_lo = xs[i0 - 1] if i0 > 0 else a
    w_hi = xs[i1 + 1] if i1 + 1 < len(xs) else xs[-1]
    if not math.isinf(b) and i1 + 1 >= len(xs):
        w_hi = b
    peak_x = min(max(peak_x, w_lo), w_hi)
    return float(w_lo), float(w_hi), peak_x, peak_lm, evals


def _initial_panels(w_lo: float, w_hi: float, peak: float, per_side: int = 8) -> list[tuple[float, float]]:
    edges = []
    if peak - w_lo > 0:
        edges.extend(np.linspace(w_lo, peak, per_side + 1)[:-1].tolist())
    edges.append(peak)
    if w_hi - peak > 0:
        edges.extend(np.linspace(peak, w_hi, per_side + 1)[1:].tolist())
    if len(edges) < 2:
        edges = [w_lo, w_hi]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1) if edges[i + 1] > edges[i]]


def _gk(var: _Variable, lo: np.ndarray, hi: np.ndarray, shift: float):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    lm, sg = var(x)
    return lm, sg, half


def integrate_1d(logf: LogIntegrand, lo: float, hi: float, spec: QuadratureSpec | None = None,
                 *, transform: bool | None = None, raise_on_failure: bool = True) -> QuadResult:
    """Integrate ``exp(logf)`` (optionally signed) over ``(lo, hi)``.

    The adaptive loop bisects the panels carrying the largest Kronrod-Gauss
    error until the total error is below ``rel_tol * |I|``.  For signed
    integrands the target is floored at ``50 eps * int |f|``, since cancellation
    makes anything tighter meaningless; the achieved relative error is reported.
    """
    spec = spec or QuadratureSpec()
    if not hi > lo:
        return QuadResult(LogValue.zero(), 0.0, 0)
    use_transform = spec.boundary_transform if transform is None else transform
    var = _Variable(logf, float(lo), float(hi), use_transform)

    located = _locate(var)
    if located is None:
        return QuadResult(LogValue.zero(), 0.0, 129)
    w_lo, w_hi, peak, shift, evals = located

    los, his, depths, kvals, errs, absvals = [], [], [], [], [], []

    def add_panels(plo, phi_, pdepth):
        nonlocal shift, evals
        plo = np.asarray(plo, dtype=float)
        phi_ = np.asarray(phi_, dtype=float)
        lm, sg, half = _gk(var, plo, phi_, shift)
        evals += lm.size
        top = float(np.max(lm)) if lm.size else -np.inf
        if top > shift + 30.0:
            scale = math.exp(shift - top)
            for lst in (kvals, errs, absvals):
                lst[:] = [v * scale for v in lst]
            shift = top
        vals = np.where(sg != 0, sg * np.exp(lm - shift), 0.0)
        k = half * (vals @ KRONROD_WEIGHTS)
        g = half * (vals @ GAUSS_WEIGHTS)
        av = half * (np.abs(vals) @ KRONROD_WEIGHTS)
        los.extend(plo.tolist())
        his.extend(phi_.tolist())
        depths.extend(pdepth)
        kvals.extend(k.tolist())
        errs.extend(np.abs(k - g).tolist())
        absvals.extend(av.tolist())

    init = _initial_panels(w_lo, w_hi, peak)
    add_panels([p[0] for p in init], [p[1] for p in init], [0] * len(init))

    converged = False
    while True:
        total = math.fsum(kvals)
        err_total = math.fsum(errs)
        abs_total = math.fsum(absvals)
        tol = max(spec.rel_tol * abs(total), 50.0 * _EPS * abs_total)
        if err_total <= tol:
            converged = True
            break
        if evals > _MAX_EVALS:
            break
        order = np.argsort(errs)[::-1]
        remaining = err_total
        chosen = []
        for idx in order:
            if remaining <= 0.5 * tol:
                break
            if depths[idx] >= spec.max_depth:
                continue
            chosen.append(int(idx))
            remaining -= errs[idx]
        if not chosen:
            break
        chosen_set = set(chosen)
        new_lo, new_hi, new_d = [], [], []
        for idx in chosen:
            a, b, d = los[idx], his[idx], depths[idx]
            m = 0.5 * (a + b)
            new_lo += [a, m]
            new_hi += [m, b]
            new_d += [d + 1, d + 1]
        keep = [i for i in range(len(los)) if i not in chosen_set]
        for lst in (los, his, depths, kvals, errs, absvals):
            lst[:] = [lst[i] for i in keep]
        add_panels(new_lo, new_hi, new_d)

    total = math.fsum(kvals)
    err_total = math.fsum(errs)
    if total == 0.0:
        value = LogValue.zero()
        rel = 0.0 if err_total == 0.0 else math.inf
    else:
        value = LogValue(1 if total > 0 else -1, shift + math.log(abs(total)))
        rel = err_total / abs(total)
    worst = None
    if errs:
        w = int(np.argmax(errs))
        ends = sorted((float(var.to_original(los[w])), float(var.to_original(his[w]))))
        worst = (ends[0], ends[1])
    result = QuadResult(value, rel, evals, converged, worst)
    if not converged and raise_on_failure:
        raise QuadratureError(
            f"quadrature did not reach rel_tol={spec.rel_tol:g} (estimate {rel:.3g}); worst panel {worst}",
            result,
        )
    return result


def integrate_2d_radial(logf: Callable[[float, np.ndarray], "np.ndarray | tuple[np.ndarray, np.ndarray]"],
                        domain, spec: QuadratureSpec | None = None, r1_range: tuple[float, float] | None = None,
                        *, raise_on_failure: bool = True) -> QuadResult:
    """Iterated integral over the radial image of a two-dimensional domain.

    The outer variable is ``r1``; the inner one runs over ``0 < r2 < slice_radius(r1)``
    at one tenth of the outer tolerance.  ``logf(r1, r2)`` receives a scalar ``r1``
    and an array of ``r2``.  No Jacobian is added: pass ``r1 r2`` factors explicitly.
    """
    spec = spec or QuadratureSpec()
    if domain.n != 2:
        raise ValueError("integrate_2d_radial needs a two-dimensional domain")
    lo1, hi1 = r1_range if r1_range is not None else (0.0, 1.0)
    inner_spec = replace(spec, rel_tol=max(spec.rel_tol / 10.0, 1e-15))
    outer_transform = spec.boundary_transform and hi1 >= 1.0
    worst_inner: list = []
    inner_evals = 0

    def outer(r1s: np.ndarray):
        nonlocal inner_evals
        flat = np.ravel(r1s)
        lm = np.full(flat.shape, -np.inf)
        sg = np.zeros(flat.shape)
        for i, r1 in enumerate(flat.tolist()):
            if not (0.0 <= r1 < 1.0):
                continue
            s = domain.slice_radius(r1)
            if s <= 0.0:
                continue
            res = integrate_1d(lambda r2, r1=r1: logf(r1, r2), 0.0, s, inner_spec, raise_on_failure=False)
            inner_evals += res.evaluations
            if not res.converged:
                worst_inner.append((r1, res.worst_panel, res.rel_err, res.value.logmag))
            lm[i] = res.value.logmag
            sg[i] = res.value.sign
        return lm.reshape(np.shape(r1s)), sg.reshape(np.shape(r1s))

    res = integrate_1d(outer, lo1, hi1, spec, transform=outer_transform, raise_on_failure=False)
    # an inner failure matters only if its absolute error could reach the outer tolerance
    if res.value.is_zero:
        floor = -math.inf
    else:
        floor = res.value.logmag + math.log(spec.rel_tol) - math.log(10.0)
    worst_inner = [t for t in worst_inner
                   if not math.isfinite(t[2]) or t[3] + math.log(max(t[2], 1e-300)) > floor]
    converged = res.converged and not worst_inner
    rel = res.rel_err
    worst = res.worst_panel
    if worst_inner:
        bad = max(worst_inner, key=lambda t: t[2])
        rel = max(rel, bad[2])
        worst = (bad[0], bad[1])
    result = QuadResult(res.value, rel, res.evaluations + inner_evals, converged, worst)
    if not converged and raise_on_failure:
        raise QuadratureError(f"2D radial quadrature did not converge (estimate {rel:.3g}); worst {worst}", result)
    return result
