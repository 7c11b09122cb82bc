"""Domain types and unit conventions shared by the analytic and simulation engines.

Everything here is in linear units (watts, BS per square meter, linear
ratios). dB/dBm only appear in constructors and at the I/O boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


def dbm_to_watts(x):
    """Convert a power in dBm to watts."""
    w = 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)
    return float(w) if w.ndim == 0 else w


def watts_to_dbm(w):
    x = 10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0
    return float(x) if x.ndim == 0 else x


def db_to_linear(x):
    return 10.0 ** (x / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``errors`` holds every violation, not only the first one found.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class ConfigViolation(str, enum.Enum):
    ALPHA_TOO_SMALL = "AlphaTooSmall"
    BETA_BELOW_ONE = "BetaBelowOne"
    NON_POSITIVE_TAU = "NonPositiveTau"
    NEGATIVE_INTENSITY = "NegativeIntensity"
    NON_FINITE_POWER = "NonFinitePower"
    NEGATIVE_NOISE = "NegativeNoise"


@dataclass(frozen=True)
class Violation:
    kind: ConfigViolation
    detail: str

    def __str__(self):
        return f"{self.kind.value}: {self.detail}"


class Mode(enum.Enum):
    NON_COMP_MACRO = "macro"
    NON_COMP_PICO = "pico"
    COMP = "comp"


class Scheme(enum.Enum):
    LA_CTC = "lactc"
    RANGE_EXPANSION = "re"
    FULL_COOPERATION = "fc"
    TRADITIONAL = "tr"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        key = name.strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "lactc": cls.LA_CTC,
            "re": cls.RANGE_EXPANSION,
            "rangeexpansion": cls.RANGE_EXPANSION,
            "fc": cls.FULL_COOPERATION,
            "fullcooperation": cls.FULL_COOPERATION,
            "tr": cls.TRADITIONAL,
            "traditional": cls.TRADITIONAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown scheme {name!r}") from None


ALL_SCHEMES = (Scheme.LA_CTC, Scheme.RANGE_EXPANSION, Scheme.FULL_COOPERATION, Scheme.TRADITIONAL)


@dataclass(frozen=True)
class TierParams:
    """Transmit power, BS intensity and path-loss exponent of one tier."""

    power_dbm: float
    intensity: float  # BS per m^2
    pathloss_exponent: float
    power: float = field(init=False)  # watts

    def __post_init__(self):
        power = dbm_to_watts(self.power_dbm) if math.isfinite(self.power_dbm) else float("nan")
        object.__setattr__(self, "power", float(power))


@dataclass(frozen=True)
class NetworkConfig:
    macro: TierParams
    pico: TierParams
    noise_dbm: float
    beta: float  # linear
    tau: float  # linear
    user_intensity: float  # users per m^2
    noise: float = field(init=False)  # watts

    def __post_init__(self):
        noise = 0.0 if self.noise_dbm == -math.inf else dbm_to_watts(self.noise_dbm)
        object.__setattr__(self, "noise", float(noise))

    def tier(self, i: int) -> TierParams:
        if i == 1:
            return self.macro
        if i == 2:
            return self.pico
        raise ValueError(f"tier index must be 1 or 2, got {i}")

    def with_(self, **changes) -> "NetworkConfig":
        """Return a copy with top-level fields replaced (``noise`` is recomputed)."""
        return replace(self, **changes)

    def with_tier(self, i: int, **changes) -> "NetworkConfig":
        tier = replace(self.tier(i), **changes)
        return replace(self, **{"macro" if i == 1 else "pico": tier})

    def to_flat(self) -> dict:
        """Flat key/value view using the config-file key names."""
        return {
            "macro.power_dbm": self.macro.power_dbm,
            "macro.intensity_per_m2": self.macro.intensity,
            "macro.alpha": self.macro.pathloss_exponent,
            "pico.power_dbm": self.pico.power_dbm,
            "pico.intensity_per_m2": self.pico.intensity,
            "pico.alpha": self.pico.pathloss_exponent,
            "noise_dbm": self.noise_dbm,
            "beta_db": linear_to_db(self.beta) if self.beta > 0 else -math.inf,
            "beta_linear": self.beta,
            "tau_db": linear_to_db(self.tau) if self.tau > 0 else -math.inf,
            "tau_linear": self.tau,
            "user_intensity_per_m2": self.user_intensity,
        }


MACRO_INTENSITY = 1.0 / (500.0**2 * math.pi)


def default_config(**overrides) -> NetworkConfig:
    """Baseline two-tier deployment used throughout the numerical study."""
    cfg = NetworkConfig(
        macro=TierParams(37.0, MACRO_INTENSITY, 4.0),
        pico=TierParams(20.0, 5.0 * MACRO_INTENSITY, 4.0),
        noise_dbm=-104.0,
        beta=db_to_linear(4.0),
        tau=1.0,
        user_intensity=10.0 * MACRO_INTENSITY,
    )
    return cfg.with_(**overrides) if overrides else cfg


def violations(config: NetworkConfig) -> list[Violation]:
    out = []
    for name, tier in (("macro", config.macro), ("pico", config.pico)):
        if not tier.pathloss_exponent > 2:
            out.append(Violation(ConfigViolation.ALPHA_TOO_SMALL, f"{name}.alpha={tier.pathloss_exponent} must exceed 2"))
        if not tier.intensity >= 0:
            out.append(Violation(ConfigViolation.NEGATIVE_INTENSITY, f"{name}.intensity={tier.intensity}"))
        if not (math.isfinite(tier.power_dbm) and tier.power > 0):
            out.append(Violation(ConfigViolation.NON_FINITE_POWER, f"{name}.power_dbm={tier.power_dbm}"))
    if not config.beta >= 1:
        out.append(Violation(ConfigViolation.BETA_BELOW_ONE, f"beta={config.beta}"))
    if not config.tau > 0:
        out.append(Violation(ConfigViolation.NON_POSITIVE_TAU, f"tau={config.tau}"))
    if not config.noise >= 0:
        out.append(Violation(ConfigViolation.NEGATIVE_NOISE, f"noise_dbm={config.noise_dbm}"))
    if not config.user_intensity >= 0:
        out.append(Violation(ConfigViolation.NEGATIVE_INTENSITY, f"user_intensity={config.user_intensity}"))
    return out


def validate(config: NetworkConfig) -> NetworkConfig:
    """Return ``config`` unchanged, or raise ConfigError listing every violation."""
    errs = violations(config)
    if errs:
        raise ConfigError(errs)
    return config


@dataclass(frozen=True)
class ModeProbabilities:
    q_macro: float
    q_pico: float
    q_comp: float

    def __post_init__(self):
        total = self.q_macro + self.q_pico + self.q_comp
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mode probabilities sum to {total!r}, not 1")

    def __getitem__(self, mode: Mode) -> float:
        return {Mode.NON_COMP_MACRO: self.q_macro, Mode.NON_COMP_PICO: self.q_pico, Mode.COMP: self.q_comp}[mode]


METRIC_FIELDS = (
    "q_macro",
    "q_pico",
    "q_comp",
    "outage_macro",
    "outage_pico",
    "outage_comp",
    "outage",
    "rate_macro",
    "rate_pico",
    "rate_comp",
    "rate",
    "macro_load",
    "pico_load",
    "min_user_rate",
)

PROBABILITY_FIELDS = ("q_macro", "q_pico", "q_comp", "outage_macro", "outage_pico", "outage_comp", "outage")


@dataclass
class MetricsReport:
    """Per-mode and overall metrics for one scheme.

    Fields that do not apply (a mode the scheme never uses, or a metric that
    was not requested) are ``None``. Rates are in nats/s/Hz. ``ci`` maps a
    field name to a 95% confidence half-width and is only filled by the
    simulator.
    """

    scheme: Scheme
    engine: str
    q_macro: float | None = None
    q_pico: float | None = None
    q_comp: float | None = None
    outage_macro: float | None = None
    outage_pico: float | None = None
    outage_comp: float | None = None
    outage: float | None = None
    rate_macro: float | None = None
    rate_pico: float | None = None
    rate_comp: float | None = None
    rate: float | None = None
    macro_load: float | None = None
    pico_load: float | None = None
    min_user_rate: float | None = None
    ci: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def check(self):
        """Raise ValueError if any filled field breaks its range invariant."""
        for name in METRIC_FIELDS:
            v = getattr(self, name)
            if v is None:
                continue
            if name in PROBABILITY_FIELDS:
                if not -1e-9 <= v <= 1 + 1e-9:
                    raise ValueError(f"{name}={v} outside [0, 1]")
            elif not v >= -1e-12:
                raise ValueError(f"{name}={v} is negative")
        return self

    def to_dict(self) -> dict:
        out = {"scheme": self.scheme.value, "engine": self.engine}
        for name in METRIC_FIELDS:
            out[name] = getattr(self, name)
        out["ci_half_width"] = dict(self.ci)
        if self.notes:
            out["notes"] = list(self.notes)
        return out
