"""Adaptive Gauss-Kronrod quadrature for the coverage integrals.

Integrands are vectorized: ``f(x)`` receives a 1-D array of abscissae and
returns an array whose *last* axis matches ``x``. Any leading axes are treated
as independent components that are integrated simultaneously over a shared
subdivision; a component converges when its summed panel error is below
``max(abs_tol, rel_tol * |value|)`` and the integration stops when all do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# 15-point Kronrod rule with its embedded 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
K_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
for _k, _w in zip((1, 3, 5), _WG[:3]):
    G_WEIGHTS[_k] = _w
    G_WEIGHTS[14 - _k] = _w
G_WEIGHTS[7] = _WG[3]


class QuadratureError(ArithmeticError):
    pass


class MaxSubdivisionsExceeded(QuadratureError):
    def __init__(self, result: "QuadResult"):
        self.result = result
        super().__init__(
            f"adaptive quadrature stopped after {result.subdivisions} panels "
            f"with error estimate {np.max(result.error):.3g}"
        )


class NonFiniteIntegrand(QuadratureError):
    pass


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")

    def tighter(self, factor: float = 10.0) -> "QuadratureSettings":
        return QuadratureSettings(self.rel_tol / factor, self.abs_tol / factor, self.max_subdivisions)


DEFAULT_SETTINGS = QuadratureSettings()


@dataclass(frozen=True)
class QuadResult:
    """Integral estimate; ``value`` and ``error`` share the integrand's component shape."""

    value: np.ndarray | float
    error: np.ndarray | float
    converged: bool
    subdivisions: int

    def check(self) -> "QuadResult":
        if not self.converged:
            raise MaxSubdivisionsExceeded(self)
        return self

    def __float__(self):
        return float(self.value)


def _panels(f, lo, hi):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = centre[:, None] + half[:, None] * NODES[None, :]
    y = np.asarray(f(x.ravel()), dtype=float)
    if y.shape[-1] != x.size:
        raise ValueError(f"integrand returned trailing axis {y.shape[-1]}, expected {x.size}")
    y = y.reshape(y.shape[:-1] + x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[np.any(~np.isfinite(y.reshape(-1, *x.shape)), axis=0)]
        raise NonFiniteIntegrand(f"integrand is not finite at x={bad[:3]}")
    kron = (y @ K_WEIGHTS) * half
    gauss = (y @ G_WEIGHTS) * half
    return kron, np.abs(kron - gauss)


def integrate(f, a: float, b: float, settings: QuadratureSettings = DEFAULT_SETTINGS, initial_panels: int = 1) -> QuadResult:
    """Globally adaptive integration of ``f`` over the finite interval [a, b].

    Panels are bisected in batches: each round splits the fewest
    highest-error panels whose removal would bring the remaining error under a
    quarter of the tolerance. The returned error is the sum of per-panel
    ``|K15 - G7|`` differences, which bounds the K15 error for smooth
    integrands. Hitting ``max_subdivisions`` returns the best estimate with
    ``converged=False``.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integrate() needs a finite interval; use integrate_semi_infinite")
    if a == b:
        probe = np.asarray(f(np.array([a])), dtype=float)
        zero = np.zeros(probe.shape[:-1])
        return QuadResult(zero if zero.ndim else 0.0, zero if zero.ndim else 0.0, True, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    est, err = _panels(f, lo, hi)
    converged = False
    while True:
        total = est.sum(axis=-1)
        total_err = err.sum(axis=-1)
        tol = np.maximum(settings.abs_tol, settings.rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            converged = True
            break
        n = lo.size
        if n >= settings.max_subdivisions:
            break
        score = (err / tol[..., None]).reshape(-1, n).max(axis=0)
        order = np.argsort(-score, kind="stable")
        remaining = score.sum() - np.cumsum(score[order])
        k = int(np.searchsorted(-remaining, -0.25)) + 1
        k = max(1, min(k, n, settings.max_subdivisions - n))
        split = order[:k]
        mid = 0.5 * (lo[split] + hi[split])
        if np.any((mid <= lo[split]) | (mid >= hi[split])):
            break  # panels at floating-point resolution
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_est, new_err = _panels(f, new_lo, new_hi)
        keep = np.ones(n, dtype=bool)
        keep[split] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        est = np.concatenate([est[..., keep], new_est], axis=-1)
        err = np.concatenate([err[..., keep], new_err], axis=-1)
    value = sign * est.sum(axis=-1)
    error = err.sum(axis=-1)
    if np.ndim(value) == 0:
        value, error = float(value), float(error)
    return QuadResult(value, error, converged, int(lo.size))


def integrate_semi_infinite(f, a: float = 0.0, settings: QuadratureSettings = DEFAULT_SETTINGS, scale: float = 1.0) -> QuadResult:
    """Integrate ``f`` over [a, inf) via x = a + scale * t / (1 - t), t in (0, 1).

    ``scale`` should be the length over which the integrand varies (e.g. the
    mean nearest-BS distance); it only affects efficiency.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")

    def mapped(t):
        # nodes that round to t == 1 sit at x = inf, where a convergent integrand vanishes
        one_minus = np.maximum(1.0 - t, np.finfo(float).tiny)
        x = a + scale * t / one_minus
        with np.errstate(all="ignore"):
            jac = scale / one_minus**2
            y = np.asarray(f(x), dtype=float)
            out = y * jac
        return np.where(np.isinf(jac) | (y == 0), 0.0, out)

    return integrate(mapped, 0.0, 1.0, settings, initial_panels=4)


@dataclass(frozen=True)
class CompRegion:
    """{(r1, r2): r1 >= 0, c_lower * r1**exponent < r2 < c_upper * r1**exponent}.

    ``c_lower=0, c_upper=inf`` is the whole open quadrant.
    """

    c_lower: float
    c_upper: float
    exponent: float

    def __post_init__(self):
        if not (0 <= self.c_lower <= self.c_upper and self.exponent > 0):
            raise ValueError(f"malformed region {self}")

    @property
    def empty(self) -> bool:
        return self.c_lower == self.c_upper

    def contains(self, r1, r2):
        base = np.asarray(r1, dtype=float) ** self.exponent
        return (np.asarray(r1) >= 0) & (self.c_lower * base < r2) & (r2 < self.c_upper * base)


def _combine(outer: QuadResult, inner_settings: QuadratureSettings, inner_ok: list) -> QuadResult:
    error = np.abs(outer.error) + inner_settings.rel_tol * np.abs(outer.value) + inner_settings.abs_tol
    if np.ndim(error) == 0:
        error = float(error)
    return QuadResult(outer.value, error, outer.converged and all(inner_ok), outer.subdivisions)


def integrate_comp_region(g, region: CompRegion, settings: QuadratureSettings = DEFAULT_SETTINGS, scale: float = 1.0) -> QuadResult:
    """Iterated integral of ``g(r1, r2)`` over a CompRegion.

    The inner integral runs in v = r2 / r1**exponent, so its limits
    (c_lower, c_upper) do not depend on r1. ``g`` must broadcast over
    ``r1`` and ``r2`` arrays and may prepend component axes.
    ``scale`` is the characteristic r1 length for the outer transform.
    """
    inner_settings = settings.tighter()
    if region.empty:
        probe = np.asarray(g(np.ones((1, 1)), np.ones((1, 1))))
        zero = np.zeros(probe.shape[:-2])
        z = zero if zero.ndim else 0.0
        return QuadResult(z, z, True, 0)
    inner_ok = []
    e = region.exponent

    def outer(r1):
        base = r1**e

        def inner(v):
            return np.asarray(g(r1[:, None], v[None, :] * base[:, None])) * base[:, None]

        if math.isinf(region.c_upper):
            res = integrate_semi_infinite(inner, region.c_lower, inner_settings)
        else:
            res = integrate(inner, region.c_lower, region.c_upper, inner_settings, initial_panels=2)
        inner_ok.append(res.converged)
        return res.value

    res = integrate_semi_infinite(outer, 0.0, settings, scale=scale)
    return _combine(res, inner_settings, inner_ok)


def integrate_first_quadrant(g, settings: QuadratureSettings = DEFAULT_SETTINGS, scale: tuple[float, float] = (1.0, 1.0)) -> QuadResult:
    """Iterated integral of ``g(r1, r2)`` over the open quadrant (0, inf)^2."""
    inner_settings = settings.tighter()
    inner_ok = []

    def outer(r1):
        def inner(r2):
            return np.asarray(g(r1[:, None], r2[None, :]))

        res = integrate_semi_infinite(inner, 0.0, inner_settings, scale=scale[1])
        inner_ok.append(res.converged)
        return res.value

    res = integrate_semi_infinite(outer, 0.0, settings, scale=scale[0])
    return _combine(res, inner_settings, inner_ok)


def integrate_rate(coverage, settings: QuadratureSettings = DEFAULT_SETTINGS, t_max: float = 600.0) -> QuadResult:
    """Integral over t in [0, inf) of a nonincreasing coverage curve ``coverage(t)``.

    The t-axis is cut at the first T (doubling from 4) where every component
    of the coverage is below ``abs_tol``. The neglected tail is estimated by
    extrapolating the decay rate between T/2 and T and added to the error.
    """
    T = 4.0
    while True:
        c_T = np.asarray(coverage(np.array([T, 0.5 * T])), dtype=float)
        if np.all(np.abs(c_T[..., 0]) < settings.abs_tol) or T >= t_max:
            break
        T = min(2.0 * T, t_max)
    tail_c, half_c = c_T[..., 0], c_T[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.log(half_c / tail_c) / (0.5 * T)
        tail = np.where(tail_c > 0, tail_c / np.where(rate > 0, rate, np.nan), 0.0)
    tail = np.where(np.isfinite(tail), tail, tail_c * T)  # no usable decay: flat-tail bound over another T
    body = integrate(coverage, 0.0, T, settings, initial_panels=4)
    error = np.abs(body.error) + tail
    if np.ndim(error) == 0:
        error = float(error)
    ok = body.converged and bool(np.all(tail_c < settings.abs_tol) or np.all(tail <= settings.abs_tol + settings.rel_tol * np.abs(body.value)))
    return QuadResult(body.value, error, ok, body.subdivisions)

ComppRegion = CompRegion
