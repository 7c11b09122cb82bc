"""Closed-integral evaluation of association, outage, rate and load metrics.

Conventions
-----------
* Tier 1 is the macro tier, tier 2 the pico tier.
* ``a`` is the association bias seen by the *other* tier: a BS of tier j is
  admissible as an interferer to a user served by tier i only if its average
  received power is at most ``P_i r^-alpha_i / a``.
* Coverage functions accept an array of SINR thresholds and return one
  coverage value per threshold, so that sweeps over tau and the rate integral
  reuse a single quadrature subdivision.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .model import (
    ALL_SCHEMES,
    MetricsReport,
    Mode,
    ModeProbabilities,
    NetworkConfig,
    Scheme,
    validate,
)
from .quadrature import (
    DEFAULT_SETTINGS,
    CompRegion,
    QuadratureSettings,
    integrate,
    integrate_comp_region,
    integrate_first_quadrant,
    integrate_rate,
    integrate_semi_infinite,
)


class ModeEmptyError(ValueError):
    """The requested association mode has probability zero for this config."""


class CompModeEmpty(ModeEmptyError):
    pass


class ZeroIntensity(ValueError):
    pass


class DegenerateTier(ZeroDivisionError):
    pass


# ---------------------------------------------------------------------------
# interference tail integral


def f_interference(y, alpha: float):
    """Integral of u / (1 + u**alpha) over [y, inf).

    alpha = 4 uses the arctan closed form; other exponents use the
    regularized incomplete beta function, which is the same integral after
    the substitution t = 1 / (1 + u**alpha).
    """
    if not alpha > 2:
        raise ValueError(f"AlphaTooSmall: alpha={alpha} must exceed 2")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("F(y, alpha) needs y >= 0")
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if alpha == 4.0:
            # arctan(1/y^2)/2 == (pi/2 - arctan(y^2))/2 without the cancellation at large y
            out = 0.5 * np.arctan2(1.0, y * y)
        else:
            delta = 2.0 / alpha
            total = (math.pi / alpha) / math.sin(math.pi * delta)
            out = total * special.betainc(1.0 - delta, delta, 1.0 / (1.0 + y**alpha))
    return float(out) if out.ndim == 0 else out


def f_interference_total(alpha: float) -> float:
    """F(0, alpha) = (pi / alpha) / sin(2 pi / alpha)."""
    return (math.pi / alpha) / math.sin(2.0 * math.pi / alpha)


_F_QUAD_SETTINGS = QuadratureSettings(rel_tol=1e-13, abs_tol=1e-15, max_subdivisions=4000)


def _f_tail_series(y: float, alpha: float) -> float:
    """F(y, alpha) for large y from u / (1 + u^alpha) = sum_k (-1)^k u^(1 - alpha (k + 1))."""
    total, k = 0.0, 0
    while True:
        p = alpha * (k + 1) - 2.0
        term = (-1) ** k * y ** (-p) / p
        total += term
        if abs(term) <= 1e-17 * abs(total) or k > 200:
            return total
        k += 1


_TAIL_START = 1e3


def f_interference_quad(y, alpha: float, settings: QuadratureSettings = _F_QUAD_SETTINGS):
    """Numerical quadrature of F(y, alpha); slow, used as a cross-check.

    [y, 1000] is integrated adaptively and the rest comes from the
    convergent power series in 1/u, since heavy tails (alpha near 2) are
    poorly resolved by a map to a finite interval.
    """
    if not alpha > 2:
        raise ValueError(f"AlphaTooSmall: alpha={alpha} must exceed 2")

    def integrand(u):
        return u / (1.0 + u**alpha)

    def one(v):
        if v >= _TAIL_START:
            return _f_tail_series(v, alpha)
        body = integrate(integrand, v, _TAIL_START, settings, initial_panels=8).check().value
        return body + _f_tail_series(_TAIL_START, alpha)

    ys = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.array([one(float(v)) for v in ys])
    return float(out[0]) if np.ndim(y) == 0 else out.reshape(np.shape(y))


# ---------------------------------------------------------------------------
# Laplace transforms of the interference


def bias(i: int, j: int, beta: float) -> float:
    """a_ij for the cooperation scheme: beta for a macro user's pico interferers, else 1."""
    return beta if (i, j) == (1, 2) else 1.0


def _noncomp_log_laplace(j, i, tau, r, config, a):
    tj, ti = config.tier(j), config.tier(i)
    alpha_j = tj.pathloss_exponent
    tau = np.asarray(tau, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = (a / tau) ** (1.0 / alpha_j)
        coef = (tau * tj.power / ti.power) ** (2.0 / alpha_j)
        out = -2.0 * math.pi * tj.intensity * coef * np.asarray(r, dtype=float) ** (2.0 * ti.pathloss_exponent / alpha_j) * f_interference(y, alpha_j)
    return np.where(tau > 0, out, 0.0)


def laplace_noncomp(j: int, i: int, tau, r, config: NetworkConfig, a: float | None = None):
    """Laplace transform of tier-j interference at s = tau r^alpha_i / P_i.

    The user is served by tier i at distance r; tier-j interferers are
    restricted by the bias ``a`` (defaults to a_ij of the cooperation
    scheme).
    """
    if a is None:
        a = bias(i, j, config.beta)
    out = np.exp(_noncomp_log_laplace(j, i, tau, r, config, a))
    return float(out) if np.ndim(out) == 0 else out


def _comp_log_laplace(j, s, guard, config):
    tj = config.tier(j)
    alpha_j = tj.pathloss_exponent
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        sp = s * tj.power
        y = np.asarray(guard, dtype=float) * sp ** (-1.0 / alpha_j)
        out = -2.0 * math.pi * tj.intensity * sp ** (2.0 / alpha_j) * f_interference(np.where(sp > 0, y, np.inf), alpha_j)
    return np.where(sp > 0, out, 0.0)


def laplace_comp(j: int, s, guard_radius, config: NetworkConfig):
    """Laplace transform of tier-j interference with no tier-j BS closer than ``guard_radius``."""
    out = np.exp(_comp_log_laplace(j, s, guard_radius, config))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# distance distributions and association


def _other(i: int) -> int:
    return 2 if i == 1 else 1


def _exclusion_coef(i: int, a: float, config: NetworkConfig) -> tuple[float, float]:
    """(c, e) such that other-tier BSs lie beyond c * r**e from a tier-i user at distance r."""
    j = _other(i)
    ti, tj = config.tier(i), config.tier(j)
    return (a * tj.power / ti.power) ** (1.0 / tj.pathloss_exponent), ti.pathloss_exponent / tj.pathloss_exponent


def _association_log_density(i: int, r, a: float, config: NetworkConfig):
    """log of 2 pi lambda_i r exp(-pi lambda_i r^2 - pi lambda_j d0(r)^2), unnormalized."""
    ti, tj = config.tier(i), config.tier(_other(i))
    c, e = _exclusion_coef(i, a, config)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(2.0 * math.pi * ti.intensity * r) - math.pi * ti.intensity * r**2 - math.pi * tj.intensity * (c * r**e) ** 2


def _scale(intensity: float) -> float:
    return 1.0 / math.sqrt(math.pi * intensity)


def association_probability(i: int, a: float, config: NetworkConfig, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """P[tier-i BS is at least ``a`` times stronger than the best other-tier BS ... ]

    precisely: P[P_i R_i^-alpha_i >= a P_j R_j^-alpha_j], by quadrature.
    """
    ti = config.tier(i)
    if ti.intensity == 0:
        return 0.0
    res = integrate_semi_infinite(lambda r: np.exp(_association_log_density(i, r, a, config)), 0.0, settings, scale=_scale(ti.intensity))
    return float(res.check().value)


def _association_closed_form(i: int, a: float, config: NetworkConfig) -> float:
    ti, tj = config.tier(i), config.tier(_other(i))
    alpha = ti.pathloss_exponent
    own = ti.intensity * ti.power ** (2.0 / alpha)
    other = tj.intensity * (a * tj.power) ** (2.0 / alpha)
    return own / (own + other) if own > 0 else 0.0


def mode_probabilities(config: NetworkConfig, method: str = "auto", settings: QuadratureSettings = DEFAULT_SETTINGS) -> ModeProbabilities:
    """(q_macro, q_pico, q_comp) of the cooperation scheme.

    ``method``: "quadrature", "closed_form" (equal path-loss exponents only),
    or "auto" (closed form when available).
    """
    same_alpha = config.macro.pathloss_exponent == config.pico.pathloss_exponent
    if method == "auto":
        method = "closed_form" if same_alpha else "quadrature"
    if method == "closed_form":
        if not same_alpha:
            raise ValueError("closed-form mode probabilities need equal path-loss exponents")
        q_m = _association_closed_form(1, config.beta, config)
        q_p = _association_closed_form(2, 1.0, config)
    elif method == "quadrature":
        q_m = association_probability(1, config.beta, config, settings)
        q_p = association_probability(2, 1.0, config, settings)
    else:
        raise ValueError(f"unknown method {method!r}")
    q_c = 1.0 - q_m - q_p
    if config.beta == 1.0 or abs(q_c) < 1e-15:
        q_c = 0.0
        q_p = 1.0 - q_m
    return ModeProbabilities(q_m, q_p, q_c)


def scheme_mode_probabilities(scheme: Scheme, config: NetworkConfig, settings: QuadratureSettings = DEFAULT_SETTINGS) -> ModeProbabilities:
    """Association-mode distribution under each scheme.

    Range expansion folds the cooperation band into the pico tier, full
    cooperation puts every user in CoMP, and the traditional scheme is the
    cooperation scheme with beta = 1.
    """
    if scheme is Scheme.FULL_COOPERATION:
        return ModeProbabilities(0.0, 0.0, 1.0)
    if scheme is Scheme.TRADITIONAL:
        return mode_probabilities(config.with_(beta=1.0), settings=settings)
    q = mode_probabilities(config, settings=settings)
    if scheme is Scheme.RANGE_EXPANSION:
        return ModeProbabilities(q.q_macro, 1.0 - q.q_macro, 0.0)
    return q


def distance_pdf_macro(r, config: NetworkConfig, q_macro: float | None = None):
    """PDF of the serving distance of a non-CoMP macro user."""
    if q_macro is None:
        q_macro = mode_probabilities(config).q_macro
    out = np.exp(_association_log_density(1, r, config.beta, config)) / q_macro
    return float(out) if np.ndim(out) == 0 else out


def distance_pdf_pico(r, config: NetworkConfig, q_pico: float | None = None, a: float = 1.0):
    """PDF of the serving distance of a non-CoMP pico user (``a=1/beta`` gives the biased RE version)."""
    if q_pico is None:
        q_pico = association_probability(2, a, config)
    out = np.exp(_association_log_density(2, r, a, config)) / q_pico
    return float(out) if np.ndim(out) == 0 else out


def comp_region(config: NetworkConfig) -> CompRegion:
    """Set of (r1, r2) for which a user operates in CoMP mode."""
    a2 = config.pico.pathloss_exponent
    ratio = config.pico.power / config.macro.power
    return CompRegion(ratio ** (1.0 / a2), (config.beta * ratio) ** (1.0 / a2), config.macro.pathloss_exponent / a2)


def _pair_log_density(r1, r2, config):
    l1, l2 = config.macro.intensity, config.pico.intensity
    with np.errstate(divide="ignore"):
        return np.log(4.0 * math.pi**2 * l1 * l2 * r1 * r2) - math.pi * (l1 * r1**2 + l2 * r2**2)


def distance_pdf_comp(r1, r2, config: NetworkConfig, q_comp: float | None = None):
    """Joint PDF of (macro, pico) serving distances of a CoMP user; zero outside the CoMP region."""
    region = comp_region(config)
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    inside = region.contains(r1, r2)
    if region.empty:
        out = np.zeros(np.broadcast(r1, r2).shape)
    else:
        if q_comp is None:
            q_comp = mode_probabilities(config).q_comp
        out = np.where(inside, np.exp(_pair_log_density(r1, r2, config)) / q_comp, 0.0)
    return float(out) if out.ndim == 0 else out


def nearest_distance_pdf(r, intensity: float):
    """PDF of the distance to the nearest point of a homogeneous PPP."""
    r = np.asarray(r, dtype=float)
    out = 2.0 * math.pi * intensity * r * np.exp(-math.pi * intensity * r**2)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# coverage / outage


def _noncomp_coverage(i: int, a: float, taus, config: NetworkConfig, settings: QuadratureSettings):
    """Coverage P[SINR > tau | served by tier i alone] for each tau, and the mode probability."""
    ti, tj = config.tier(i), config.tier(_other(i))
    if ti.intensity == 0:
        raise ModeEmptyError(f"tier {i} has zero intensity")
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    t = np.concatenate([[0.0], taus])[:, None]
    c, e = _exclusion_coef(i, a, config)
    alpha_i = ti.pathloss_exponent
    with np.errstate(divide="ignore", invalid="ignore"):
        same = 2.0 * math.pi * ti.intensity * t ** (2.0 / alpha_i) * f_interference(np.where(t > 0, t ** (-1.0 / alpha_i), np.inf), alpha_i)
    same = np.where(t > 0, same, 0.0)
    noise = t * config.noise / ti.power

    def integrand(r):
        log_pdf = _association_log_density(i, r, a, config)
        with np.errstate(over="ignore"):
            log_cov = -same * r**2 - noise * r**alpha_i + _noncomp_log_laplace(_other(i), i, t, r, config, a)
        return np.exp(log_pdf + log_cov)

    res = integrate_semi_infinite(integrand, 0.0, settings, scale=_scale(ti.intensity)).check()
    q = res.value[0]
    if q <= 0:
        raise ModeEmptyError(f"tier-{i} association probability is zero")
    return np.clip(res.value[1:] / q, 0.0, 1.0), q


def _sinr_terms(r1, r2, t, config):
    """Combined average received power and log-coverage for a user served by both nearest BSs."""
    p1, p2 = config.macro, config.pico
    with np.errstate(divide="ignore", over="ignore"):
        signal = p1.power * r1 ** (-p1.pathloss_exponent) + p2.power * r2 ** (-p2.pathloss_exponent)
        s = t / signal
        log_cov = -s * config.noise + _comp_log_laplace(1, s, r1, config) + _comp_log_laplace(2, s, r2, config)
    return log_cov


def _comp_coverage(taus, config: NetworkConfig, settings: QuadratureSettings):
    region = comp_region(config)
    if region.empty or config.macro.intensity == 0 or config.pico.intensity == 0:
        raise CompModeEmpty("CoMP mode is empty (beta == 1 or a tier has zero intensity)")
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    t = np.concatenate([[0.0], taus])[:, None, None]

    def integrand(r1, r2):
        return np.exp(_pair_log_density(r1, r2, config)[None] + _sinr_terms(r1[None], r2[None], t, config))

    res = integrate_comp_region(integrand, region, settings, scale=_scale(config.macro.intensity)).check()
    q = res.value[0]
    if q <= 0:
        raise CompModeEmpty("CoMP mode probability is zero")
    return np.clip(res.value[1:] / q, 0.0, 1.0), q


def _full_coop_coverage(taus, config: NetworkConfig, settings: QuadratureSettings):
    if config.macro.intensity == 0 or config.pico.intensity == 0:
        raise ModeEmptyError("full cooperation needs both tiers")
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    t = np.concatenate([[0.0], taus])[:, None, None]

    def integrand(r1, r2):
        return np.exp(_pair_log_density(r1, r2, config)[None] + _sinr_terms(r1[None], r2[None], t, config))

    scales = (_scale(config.macro.intensity), _scale(config.pico.intensity))
    res = integrate_first_quadrant(integrand, settings, scale=scales).check()
    return np.clip(res.value[1:] / res.value[0], 0.0, 1.0), res.value[0]


def coverage(scheme: Scheme, mode: Mode, taus, config: NetworkConfig, settings: QuadratureSettings = DEFAULT_SETTINGS):
    """P[SINR > tau | mode] for each threshold in ``taus`` under ``scheme``."""
    if scheme is Scheme.TRADITIONAL:
        config = config.with_(beta=1.0)
    if scheme is Scheme.FULL_COOPERATION:
        if mode is not Mode.COMP:
            raise ModeEmptyError("full cooperation only has the CoMP mode")
        return _full_coop_coverage(taus, config, settings)[0]
    if mode is Mode.NON_COMP_MACRO:
        return _noncomp_coverage(1, config.beta, taus, config, settings)[0]
    if mode is Mode.NON_COMP_PICO:
        a = 1.0 / config.beta if scheme is Scheme.RANGE_EXPANSION else 1.0
        return _noncomp_coverage(2, a, taus, config, settings)[0]
    if scheme is not Scheme.LA_CTC:
        raise ModeEmptyError(f"{scheme.value} has no CoMP mode")
    return _comp_coverage(taus, config, settings)[0]


def _outage(scheme, mode, config, taus, settings):
    taus_arr = config.tau if taus is None else taus
    out = 1.0 - coverage(scheme, mode, taus_arr, config, settings)
    return float(out[0]) if np.ndim(taus_arr) == 0 else out


def outage_macro(config: NetworkConfig, taus=None, settings: QuadratureSettings = DEFAULT_SETTINGS):
    """Outage of a non-CoMP macro user (cooperation scheme)."""
    return _outage(Scheme.LA_CTC, Mode.NON_COMP_MACRO, config, taus, settings)


def outage_pico(config: NetworkConfig, taus=None, settings: QuadratureSettings = DEFAULT_SETTINGS):
    """Outage of a non-CoMP pico user (cooperation scheme)."""
    return _outage(Scheme.LA_CTC, Mode.NON_COMP_PICO, config, taus, settings)


def outage_pico_re(config: NetworkConfig, taus=None, settings: QuadratureSettings = DEFAULT_SETTINGS):
    """Outage of a pico user under range expansion with bias beta."""
    return _outage(Scheme.RANGE_EXPANSION, Mode.NON_COMP_PICO, config, taus, settings)


def outage_comp(config: NetworkConfig, taus=None, settings: QuadratureSettings = DEFAULT_SETTINGS):
    """Outage of a CoMP user; raises CompModeEmpty when beta == 1."""
    return _outage(Scheme.LA_CTC, Mode.COMP, config, taus, settings)


def outage_full_cooperation(config: NetworkConfig, taus=None, settings: QuadratureSettings = DEFAULT_SETTINGS):
    return _outage(Scheme.FULL_COOPERATION, Mode.COMP, config, taus, settings)


def outage_traditional_closed_form(tau, alpha: float):
    """Interference-limited outage of strongest-BS association with a common exponent."""
    tau = np.asarray(tau, dtype=float)
    out = 1.0 - 1.0 / (1.0 + 2.0 * tau ** (2.0 / alpha) * f_interference(tau ** (-1.0 / alpha), alpha))
    return float(out) if out.ndim == 0 else out


def _active_modes(q: ModeProbabilities):
    return [m for m in Mode if q[m] > 0]


def outage_overall(scheme: Scheme, config: NetworkConfig, taus=None, settings: QuadratureSettings = DEFAULT_SETTINGS):
    """Mode-weighted outage (law of total probability) of ``scheme``."""
    validate(config)
    q = scheme_mode_probabilities(scheme, config, settings)
    taus_arr = config.tau if taus is None else taus
    total = 0.0
    for mode in _active_modes(q):
        total = total + q[mode] * (1.0 - coverage(scheme, mode, taus_arr, config, settings))
    total = np.clip(total, 0.0, 1.0)
    return float(np.ravel(total)[0]) if np.ndim(taus_arr) == 0 else total


# ---------------------------------------------------------------------------
# ergodic rate


def rate_mode(mode: Mode, config: NetworkConfig, scheme: Scheme = Scheme.LA_CTC, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Ergodic rate E[ln(1 + SINR) | mode] in nats/s/Hz.

    Integrates the mode's coverage at tau = e^t - 1 over t >= 0.
    """

    def cov(t):
        return coverage(scheme, mode, np.expm1(t), config, settings)

    return float(integrate_rate(cov, settings).check().value)


def rate_overall(scheme: Scheme, config: NetworkConfig, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    validate(config)
    q = scheme_mode_probabilities(scheme, config, settings)
    return float(sum(q[m] * rate_mode(m, config, scheme, settings) for m in _active_modes(q)))


# ---------------------------------------------------------------------------
# load and minimum rate


def _loads_from_modes(q: ModeProbabilities, config: NetworkConfig) -> tuple[float, float]:
    l1, l2 = config.macro.intensity, config.pico.intensity
    if l1 == 0 or l2 == 0:
        raise ZeroIntensity("load per BS needs both tier intensities to be positive")
    lu = config.user_intensity
    return lu / l1 * (q.q_macro + q.q_comp), lu / l2 * (q.q_pico + q.q_comp)


def load_per_bs(scheme: Scheme, config: NetworkConfig, settings: QuadratureSettings = DEFAULT_SETTINGS) -> tuple[float, float]:
    """Average users per macro BS and per pico BS.

    Every scheme's load is lambda_u / lambda_i times the probability that a
    tier-i BS serves the typical user (alone or jointly).
    """
    validate(config)
    return _loads_from_modes(scheme_mode_probabilities(scheme, config, settings), config)


def _min_rate_from_modes(q: ModeProbabilities, rates: dict, config: NetworkConfig) -> float:
    lu = config.user_intensity
    if lu == 0:
        raise DegenerateTier("user intensity is zero")

    def tier_rate(q_own, r_own, intensity):
        served = q_own + q.q_comp
        if served <= 0:
            raise DegenerateTier("a tier serves no users")
        return (q_own * r_own + q.q_comp * rates.get(Mode.COMP, 0.0)) / served**2 * intensity / lu

    return float(min(
        tier_rate(q.q_macro, rates.get(Mode.NON_COMP_MACRO, 0.0), config.macro.intensity),
        tier_rate(q.q_pico, rates.get(Mode.NON_COMP_PICO, 0.0), config.pico.intensity),
    ))


def min_user_rate(scheme: Scheme, config: NetworkConfig, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Smaller of the per-BS average user rates of the two tiers (nats/s/Hz)."""
    validate(config)
    q = scheme_mode_probabilities(scheme, config, settings)
    rates = {m: rate_mode(m, config, scheme, settings) for m in _active_modes(q)}
    return _min_rate_from_modes(q, rates, config)


# ---------------------------------------------------------------------------
# full report

METRIC_GROUPS = ("modes", "outage", "rate", "load", "min_rate")


def analyze(scheme: Scheme, config: NetworkConfig, metrics=METRIC_GROUPS, settings: QuadratureSettings = DEFAULT_SETTINGS) -> MetricsReport:
    """Evaluate the requested metric groups for one scheme."""
    validate(config)
    metrics = set(metrics)
    unknown = metrics - set(METRIC_GROUPS)
    if unknown:
        raise ValueError(f"unknown metric groups {sorted(unknown)}")
    q = scheme_mode_probabilities(scheme, config, settings)
    active = _active_modes(q)
    rep = MetricsReport(scheme=scheme, engine="analytic")
    rep.q_macro, rep.q_pico, rep.q_comp = q.q_macro, q.q_pico, q.q_comp
    suffix = {Mode.NON_COMP_MACRO: "macro", Mode.NON_COMP_PICO: "pico", Mode.COMP: "comp"}
    if "outage" in metrics:
        total = 0.0
        for m in active:
            o = float(1.0 - coverage(scheme, m, config.tau, config, settings)[0])
            setattr(rep, f"outage_{suffix[m]}", o)
            total += q[m] * o
        rep.outage = min(max(total, 0.0), 1.0)
    rates = {}
    if metrics & {"rate", "min_rate"}:
        rates = {m: rate_mode(m, config, scheme, settings) for m in active}
        if "rate" in metrics:
            for m, v in rates.items():
                setattr(rep, f"rate_{suffix[m]}", v)
            rep.rate = float(sum(q[m] * rates[m] for m in active))
    if "load" in metrics:
        rep.macro_load, rep.pico_load = _loads_from_modes(q, config)
    if "min_rate" in metrics:
        rep.min_user_rate = _min_rate_from_modes(q, rates, config)
    return rep.check()


def analyze_all(config: NetworkConfig, metrics=METRIC_GROUPS, settings: QuadratureSettings = DEFAULT_SETTINGS) -> dict:
    return {s: analyze(s, config, metrics, settings) for s in ALL_SCHEMES}
