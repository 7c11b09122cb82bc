"""Monte Carlo estimates for the typical user at the origin.

Each iteration draws a fresh two-tier PPP deployment in a square window and
one CN(0, 1) fading coefficient per BS, then evaluates the SINR of every
requested scheme on that same draw. Iteration ``k`` always uses the Philox
stream keyed by ``(seed, k)``, so results do not depend on how iterations are
split across worker processes.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from .model import (
    ALL_SCHEMES,
    MetricsReport,
    Mode,
    NetworkConfig,
    Scheme,
    validate,
)

Z95 = 1.959963984540054
MIN_MODE_SAMPLES = 100
MAX_RESAMPLES = 10_000

MODE_CODES = {Mode.NON_COMP_MACRO: 0, Mode.NON_COMP_PICO: 1, Mode.COMP: 2}
CODE_MODES = {v: k for k, v in MODE_CODES.items()}


class EmptyTier(RuntimeError):
    pass


class InterferenceModel(enum.Enum):
    INDEPENDENT = "independent"
    COHERENT_PAIRS = "coherent-pairs"


@dataclass(frozen=True)
class SimSettings:
    window_half_width: float = 5000.0  # m
    iterations: int = 1_000_000
    seed: int = 0
    workers: int = 1
    interference_model: InterferenceModel = InterferenceModel.INDEPENDENT

    def __post_init__(self):
        if not self.window_half_width > 0:
            raise ValueError("window_half_width must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def replace(self, **changes) -> "SimSettings":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class NetworkRealization:
    macro_points: np.ndarray  # (n1, 2) metres
    pico_points: np.ndarray  # (n2, 2) metres


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with a 95% normal-approximation half-width.

    ``estimate`` is None when fewer than MIN_MODE_SAMPLES samples were
    available (``insufficient`` is then True).
    """

    estimate: float | None
    half_width: float | None
    n: int
    insufficient: bool = False
    proportion: bool = False

    @property
    def sigma(self) -> float | None:
        return None if self.half_width is None else self.half_width / Z95

    @property
    def interval(self) -> tuple[float, float] | None:
        if self.estimate is None:
            return None
        lo, hi = self.estimate - self.half_width, self.estimate + self.half_width
        if self.proportion:
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        return lo, hi


def iteration_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(index << 64) | seed))


def sample_ppp(intensity: float, half_width: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on the square [-half_width, half_width]^2."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    n = rng.poisson(intensity * (2.0 * half_width) ** 2)
    return rng.uniform(-half_width, half_width, size=(n, 2))


def sample_realization(config: NetworkConfig, half_width: float, rng: np.random.Generator) -> tuple[NetworkRealization, int]:
    """Draw both tiers, redrawing while either tier is empty. Returns the resample count too."""
    for resamples in range(MAX_RESAMPLES):
        macro = sample_ppp(config.macro.intensity, half_width, rng)
        pico = sample_ppp(config.pico.intensity, half_width, rng)
        if len(macro) and len(pico):
            return NetworkRealization(macro, pico), resamples
    raise EmptyTier(f"a tier stayed empty after {MAX_RESAMPLES} draws")


def mode_from_ratio(ratio, beta: float):
    """Mode codes from the macro/pico average received-power ratio.

    ratio >= beta is macro, ratio <= 1 pico, otherwise CoMP; the macro test
    goes first so beta = 1 never yields CoMP.
    """
    ratio = np.asarray(ratio, dtype=float)
    return np.where(ratio >= beta, 0, np.where(ratio <= 1.0, 1, 2)).astype(np.int8)


def _gains(points, tier):
    d2 = np.einsum("ij,ij->i", points, points)
    return tier.power * d2 ** (-0.5 * tier.pathloss_exponent), d2


def select_mode(realization: NetworkRealization, config: NetworkConfig) -> tuple[Mode, float, float]:
    """Cooperation-scheme mode and the nearest macro / pico distances (m)."""
    if not (len(realization.macro_points) and len(realization.pico_points)):
        raise EmptyTier("both tiers need at least one BS")
    g1, d1 = _gains(realization.macro_points, config.macro)
    g2, d2 = _gains(realization.pico_points, config.pico)
    k1, k2 = int(np.argmax(g1)), int(np.argmax(g2))
    mode = CODE_MODES[int(mode_from_ratio(g1[k1] / g2[k2], config.beta))]
    return mode, math.sqrt(d1[k1]), math.sqrt(d2[k2])


def _serving(scheme: Scheme, ratio: float, beta: float) -> tuple[int, bool, bool]:
    """(mode code, macro serves, pico serves) for one user."""
    if scheme is Scheme.FULL_COOPERATION:
        return 2, True, True
    if scheme is Scheme.TRADITIONAL:
        return (0, True, False) if ratio >= 1.0 else (1, False, True)
    if scheme is Scheme.RANGE_EXPANSION:
        return (0, True, False) if ratio >= beta else (1, False, True)
    code = int(mode_from_ratio(ratio, beta))
    return code, code != 1, code != 0


def _coherent_interference(macro_pts, pico_pts, a1, a2, use1, use2):
    """Interference power when each interfering pico is paired with its nearest interfering macro.

    ``a1``/``a2`` are complex received amplitudes. A macro claimed by several
    picos keeps only the closest one; everyone else interferes on its own.
    """
    m_idx = np.flatnonzero(use1)
    p_idx = np.flatnonzero(use2)
    if m_idx.size == 0 or p_idx.size == 0:
        return float(np.sum(np.abs(a1[m_idx]) ** 2) + np.sum(np.abs(a2[p_idx]) ** 2))
    dist, nearest = cKDTree(macro_pts[m_idx]).query(pico_pts[p_idx])
    order = np.lexsort((dist, nearest))  # by macro, then by pico-macro distance
    first = np.ones(order.size, dtype=bool)
    first[1:] = nearest[order][1:] != nearest[order][:-1]
    paired_p = order[first]
    paired_m = nearest[paired_p]
    total = np.abs(a1[m_idx[paired_m]] + a2[p_idx[paired_p]]) ** 2
    lone_m = np.ones(m_idx.size, dtype=bool)
    lone_m[paired_m] = False
    lone_p = np.ones(p_idx.size, dtype=bool)
    lone_p[paired_p] = False
    return float(total.sum() + np.sum(np.abs(a1[m_idx[lone_m]]) ** 2) + np.sum(np.abs(a2[p_idx[lone_p]]) ** 2))


def _draw_fading(rng, n):
    z = rng.standard_normal((n, 2))
    return (z[:, 0] + 1j * z[:, 1]) * math.sqrt(0.5)


def _sinrs(realization, fading, schemes, config, model):
    g1, d1 = _gains(realization.macro_points, config.macro)
    g2, d2 = _gains(realization.pico_points, config.pico)
    h1, h2 = fading
    k1, k2 = int(np.argmax(g1)), int(np.argmax(g2))
    ratio = g1[k1] / g2[k2]
    a1 = np.sqrt(g1) * h1
    a2 = np.sqrt(g2) * h2
    e1 = np.abs(a1) ** 2
    e2 = np.abs(a2) ** 2
    near1, near2 = e1[k1], e2[k2]
    e1[k1] = 0.0
    e2[k2] = 0.0
    rest = float(e1.sum()) + float(e2.sum())
    out = []
    coherent_cache = {}
    for scheme in schemes:
        code, s1, s2 = _serving(scheme, ratio, config.beta)
        signal = abs((a1[k1] if s1 else 0.0) + (a2[k2] if s2 else 0.0)) ** 2
        if model is InterferenceModel.COHERENT_PAIRS:
            key = (s1, s2)
            if key not in coherent_cache:
                use1 = np.ones(a1.size, dtype=bool)
                use2 = np.ones(a2.size, dtype=bool)
                use1[k1] = not s1
                use2[k2] = not s2
                coherent_cache[key] = _coherent_interference(
                    realization.macro_points, realization.pico_points, a1, a2, use1, use2
                )
            interference = coherent_cache[key]
        else:
            interference = rest + (0.0 if s1 else near1) + (0.0 if s2 else near2)
        out.append((signal / (interference + config.noise), code))
    return out, math.sqrt(d1[k1]), math.sqrt(d2[k2])


def sample_sinr(
    realization: NetworkRealization,
    scheme: Scheme,
    config: NetworkConfig,
    rng: np.random.Generator,
    interference_model: InterferenceModel = InterferenceModel.INDEPENDENT,
) -> float:
    """Draw fading for ``realization`` and return the typical user's linear SINR under ``scheme``."""
    if not (len(realization.macro_points) and len(realization.pico_points)):
        raise EmptyTier("both tiers need at least one BS")
    fading = (_draw_fading(rng, len(realization.macro_points)), _draw_fading(rng, len(realization.pico_points)))
    results, _, _ = _sinrs(realization, fading, [scheme], config, interference_model)
    return results[0][0]


@dataclass
class SimulationSamples:
    """Per-iteration raw samples; ``sinr`` and ``mode`` are keyed by scheme."""

    config: NetworkConfig
    settings: SimSettings
    schemes: tuple
    sinr: dict
    mode: dict
    r1: np.ndarray
    r2: np.ndarray
    resamples: int = 0
    notes: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return self.r1.size


def _run_chunk(args):
    config, settings, schemes, start, stop = args
    n = stop - start
    sinr = np.empty((len(schemes), n))
    mode = np.empty((len(schemes), n), dtype=np.int8)
    r1 = np.empty(n)
    r2 = np.empty(n)
    resamples = 0
    for k in range(n):
        rng = iteration_rng(settings.seed, start + k)
        real, extra = sample_realization(config, settings.window_half_width, rng)
        resamples += extra
        fading = (_draw_fading(rng, len(real.macro_points)), _draw_fading(rng, len(real.pico_points)))
        results, r1[k], r2[k] = _sinrs(real, fading, schemes, config, settings.interference_model)
        for s, (value, code) in enumerate(results):
            sinr[s, k] = value
            mode[s, k] = code
    return sinr, mode, r1, r2, resamples


def simulate(config: NetworkConfig, settings: SimSettings, schemes=ALL_SCHEMES) -> SimulationSamples:
    """Run ``settings.iterations`` independent draws and keep every per-iteration sample."""
    validate(config)
    schemes = tuple(schemes)
    n = settings.iterations
    n_chunks = 1 if settings.workers == 1 else min(n, settings.workers * 4)
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    jobs = [(config, settings, schemes, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if settings.workers == 1:
        parts = [_run_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    sinr = np.concatenate([p[0] for p in parts], axis=1)
    mode = np.concatenate([p[1] for p in parts], axis=1)
    return SimulationSamples(
        config=config,
        settings=settings,
        schemes=schemes,
        sinr={s: sinr[i] for i, s in enumerate(schemes)},
        mode={s: mode[i] for i, s in enumerate(schemes)},
        r1=np.concatenate([p[2] for p in parts]),
        r2=np.concatenate([p[3] for p in parts]),
        resamples=int(sum(p[4] for p in parts)),
    )


@lru_cache(maxsize=4)
def _cached(config: NetworkConfig, settings: SimSettings, schemes: tuple) -> SimulationSamples:
    return simulate(config, settings, schemes)


def cached_simulation(config: NetworkConfig, settings: SimSettings, schemes=ALL_SCHEMES) -> SimulationSamples:
    """Like simulate(), but reuses samples across calls that differ only in tau or user intensity.

    Neither tau nor the user intensity changes the SINR samples.
    """
    key_cfg = config.with_(tau=1.0, user_intensity=0.0)
    samples = _cached(key_cfg, settings, tuple(schemes))
    return SimulationSamples(
        config=config,
        settings=settings,
        schemes=samples.schemes,
        sinr=samples.sinr,
        mode=samples.mode,
        r1=samples.r1,
        r2=samples.r2,
        resamples=samples.resamples,
    )


# ---------------------------------------------------------------------------
# estimators


def proportion_estimate(indicator: np.ndarray, min_samples: int = 1) -> EstimateWithCI:
    n = int(indicator.size)
    if n < min_samples or n == 0:
        return EstimateWithCI(None, None, n, insufficient=True, proportion=True)
    p = float(np.mean(indicator))
    return EstimateWithCI(p, Z95 * math.sqrt(max(p * (1.0 - p), 0.0) / n), n, proportion=True)


def mean_estimate(values: np.ndarray, min_samples: int = 1) -> EstimateWithCI:
    n = int(values.size)
    if n < min_samples or n == 0:
        return EstimateWithCI(None, None, n, insufficient=True)
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return EstimateWithCI(mean, Z95 * sd / math.sqrt(n), n)


def _scaled(est: EstimateWithCI, factor: float) -> EstimateWithCI:
    if est.estimate is None:
        return est
    return EstimateWithCI(est.estimate * factor, est.half_width * factor, est.n, est.insufficient)


def mode_fractions(samples: SimulationSamples, scheme: Scheme) -> dict:
    codes = samples.mode[scheme]
    return {m: proportion_estimate(codes == c) for m, c in MODE_CODES.items()}


def outage_estimates(samples: SimulationSamples, scheme: Scheme, tau: float | None = None) -> dict:
    """Outage per mode (conditional on the mode) and overall (key None)."""
    tau = samples.config.tau if tau is None else tau
    sinr, codes = samples.sinr[scheme], samples.mode[scheme]
    out = {None: proportion_estimate(sinr <= tau)}
    for m, c in MODE_CODES.items():
        sel = codes == c
        if sel.any():
            out[m] = proportion_estimate(sinr[sel] <= tau, MIN_MODE_SAMPLES)
    return out


def rate_estimates(samples: SimulationSamples, scheme: Scheme) -> dict:
    """Mean ln(1 + SINR) per mode and overall (key None), in nats/s/Hz."""
    rate = np.log1p(samples.sinr[scheme])
    codes = samples.mode[scheme]
    out = {None: mean_estimate(rate)}
    for m, c in MODE_CODES.items():
        sel = codes == c
        if sel.any():
            out[m] = mean_estimate(rate[sel], MIN_MODE_SAMPLES)
    return out


def load_estimates(samples: SimulationSamples, scheme: Scheme) -> tuple[EstimateWithCI, EstimateWithCI]:
    """Users per macro / pico BS from the fraction of users each tier serves."""
    cfg = samples.config
    codes = samples.mode[scheme]
    macro = proportion_estimate(codes != MODE_CODES[Mode.NON_COMP_PICO])
    pico = proportion_estimate(codes != MODE_CODES[Mode.NON_COMP_MACRO])
    return (
        _scaled(macro, cfg.user_intensity / cfg.macro.intensity),
        _scaled(pico, cfg.user_intensity / cfg.pico.intensity),
    )


def estimate_outage(scheme: Scheme, config: NetworkConfig, settings: SimSettings) -> dict:
    return outage_estimates(cached_simulation(config, settings), scheme)


def estimate_rate(scheme: Scheme, config: NetworkConfig, settings: SimSettings) -> dict:
    return rate_estimates(cached_simulation(config, settings), scheme)


def estimate_mode_fractions(scheme: Scheme, config: NetworkConfig, settings: SimSettings) -> dict:
    return mode_fractions(cached_simulation(config, settings), scheme)


def estimate_loads(scheme: Scheme, config: NetworkConfig, settings: SimSettings) -> tuple[EstimateWithCI, EstimateWithCI]:
    return load_estimates(cached_simulation(config, settings), scheme)


_SUFFIX = {Mode.NON_COMP_MACRO: "macro", Mode.NON_COMP_PICO: "pico", Mode.COMP: "comp"}


def report(samples: SimulationSamples, scheme: Scheme) -> MetricsReport:
    """Every MetricsReport field the samples support, with 95% half-widths in ``ci``."""
    cfg = samples.config
    rep = MetricsReport(scheme=scheme, engine="simulation")

    def put(name, est: EstimateWithCI):
        if est.insufficient:
            rep.notes.append(f"InsufficientModeSamples: {name} has {est.n} samples (< {MIN_MODE_SAMPLES})")
            return
        setattr(rep, name, est.estimate)
        rep.ci[name] = est.half_width

    fractions = mode_fractions(samples, scheme)
    for m, est in fractions.items():
        put(f"q_{_SUFFIX[m]}", est)
    for m, est in outage_estimates(samples, scheme).items():
        put("outage" if m is None else f"outage_{_SUFFIX[m]}", est)
    rates = rate_estimates(samples, scheme)
    for m, est in rates.items():
        put("rate" if m is None else f"rate_{_SUFFIX[m]}", est)
    if cfg.macro.intensity > 0 and cfg.pico.intensity > 0:
        macro, pico = load_estimates(samples, scheme)
        put("macro_load", macro)
        put("pico_load", pico)
        if cfg.user_intensity > 0:
            rep.min_user_rate = _min_rate(fractions, rates, cfg)
    if samples.resamples:
        rep.notes.append(f"resampled {samples.resamples} realizations with an empty tier")
    return rep.check()


def _min_rate(fractions, rates, cfg) -> float | None:
    q = {m: est.estimate for m, est in fractions.items()}
    r = {m: (rates[m].estimate if m in rates and rates[m].estimate is not None else 0.0) for m in Mode}
    values = []
    for own, intensity in ((Mode.NON_COMP_MACRO, cfg.macro.intensity), (Mode.NON_COMP_PICO, cfg.pico.intensity)):
        served = q[own] + q[Mode.COMP]
        if served <= 0:
            return None
        values.append((q[own] * r[own] + q[Mode.COMP] * r[Mode.COMP]) / served**2 * intensity / cfg.user_intensity)
    return min(values)


def estimate_report(scheme: Scheme, config: NetworkConfig, settings: SimSettings) -> MetricsReport:
    return report(cached_simulation(config, settings), scheme)


def default_workers() -> int:
    return os.cpu_count() or 1
