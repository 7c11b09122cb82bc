"""Command-line front end: ``tiercomp analyze | simulate | validate | sweep``.

Config files are JSON objects with flat dotted keys, e.g.::

    {"macro.power_dbm": 37, "macro.intensity_per_m2": 1.2732e-06, "macro.alpha": 4,
     "pico.power_dbm": 20, "pico.intensity_per_m2": 6.3662e-06, "pico.alpha": 4,
     "noise_dbm": -104, "beta_db": 4, "tau_db": 0, "user_intensity_per_m2": 1.2732e-05}

Exit codes: 0 success, 1 I/O, 2 invalid input or failed validation, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from contextlib import contextmanager

import numpy as np

from . import analytic, simulator
from .model import (
    METRIC_FIELDS,
    ConfigError,
    NetworkConfig,
    Scheme,
    TierParams,
    db_to_linear,
    validate,
)
from .quadrature import QuadratureError

log = logging.getLogger("tiercomp")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3

REQUIRED_KEYS = (
    "macro.power_dbm",
    "macro.intensity_per_m2",
    "macro.alpha",
    "pico.power_dbm",
    "pico.intensity_per_m2",
    "pico.alpha",
    "noise_dbm",
    "user_intensity_per_m2",
)
OPTIONAL_KEYS = ("beta_db", "beta_linear", "tau_db", "tau_linear")

SWEEP_VARIABLES = ("beta_db", "tau_db", "pico_intensity_ratio", "alpha1", "alpha2")
CSV_HEADER = ("variable", "scheme", "metric", "value", "ci_half_width")
VALIDATE_HEADER = ("variable", "scheme", "metric", "analytic", "simulated", "ci_half_width", "z", "verdict")

# Schemes ordered from lowest to highest expected outage.
OUTAGE_ORDER = (Scheme.FULL_COOPERATION, Scheme.LA_CTC, Scheme.TRADITIONAL, Scheme.RANGE_EXPANSION)


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _number(doc, key):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CliError(f"config key {key!r} must be a number, got {value!r}", EXIT_INVALID)
    return float(value)


def _linear_or_db(doc, stem, default_db=None):
    has_db, has_lin = f"{stem}_db" in doc, f"{stem}_linear" in doc
    if has_db and has_lin:
        raise CliError(f"config gives both {stem}_db and {stem}_linear; use exactly one", EXIT_INVALID)
    if has_db:
        return db_to_linear(_number(doc, f"{stem}_db"))
    if has_lin:
        return _number(doc, f"{stem}_linear")
    if default_db is None:
        raise CliError(f"config needs {stem}_db or {stem}_linear", EXIT_INVALID)
    return db_to_linear(default_db)


def config_from_mapping(doc: dict) -> NetworkConfig:
    """Build a NetworkConfig from the flat key/value schema (no validation)."""
    if not isinstance(doc, dict):
        raise CliError("config file must hold a JSON object", EXIT_INVALID)
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise CliError(f"config is missing keys: {', '.join(missing)}", EXIT_INVALID)
    unknown = sorted(set(doc) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise CliError(f"config has unknown keys: {', '.join(unknown)}", EXIT_INVALID)
    return NetworkConfig(
        macro=TierParams(_number(doc, "macro.power_dbm"), _number(doc, "macro.intensity_per_m2"), _number(doc, "macro.alpha")),
        pico=TierParams(_number(doc, "pico.power_dbm"), _number(doc, "pico.intensity_per_m2"), _number(doc, "pico.alpha")),
        noise_dbm=_number(doc, "noise_dbm"),
        beta=_linear_or_db(doc, "beta"),
        tau=_linear_or_db(doc, "tau", default_db=0.0),
        user_intensity=_number(doc, "user_intensity_per_m2"),
    )


def load_config(path: str) -> NetworkConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path!r}: {exc.strerror or exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path!r} is not valid JSON: {exc}", EXIT_IO) from exc
    return config_from_mapping(doc)


def config_to_mapping(config: NetworkConfig) -> dict:
    flat = config.to_flat()
    return {k: flat[k] for k in REQUIRED_KEYS[:7] + ("beta_db", "tau_db", "user_intensity_per_m2")}


def _resolve(args) -> NetworkConfig:
    config = load_config(args.config)
    if getattr(args, "beta_db", None) is not None:
        config = config.with_(beta=db_to_linear(args.beta_db))
    if getattr(args, "tau_db", None) is not None:
        config = config.with_(tau=db_to_linear(args.tau_db))
    validate(config)
    log.info("resolved config: %s", json.dumps(config.to_flat(), sort_keys=True))
    return config


def _sim_settings(args) -> simulator.SimSettings:
    settings = simulator.SimSettings(
        window_half_width=args.window_km * 500.0,
        iterations=args.iterations,
        seed=args.seed,
        workers=args.workers,
        interference_model=simulator.InterferenceModel(args.interference_model),
    )
    log.info(
        "simulation settings: window=%g km, iterations=%d, seed=%d, workers=%d, interference=%s",
        args.window_km,
        settings.iterations,
        settings.seed,
        settings.workers,
        settings.interference_model.value,
    )
    return settings


def _settings_doc(settings: simulator.SimSettings) -> dict:
    # worker count is left out on purpose: it never changes results
    return {
        "window_half_width_m": settings.window_half_width,
        "iterations": settings.iterations,
        "seed": settings.seed,
        "interference_model": settings.interference_model.value,
    }


def _schemes(text: str) -> list[Scheme]:
    if text.strip().lower() == "all":
        return list(OUTAGE_ORDER)
    return [Scheme.parse(part) for part in text.split(",") if part.strip()]


def _grid(args) -> list[float]:
    if args.values is not None:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    else:
        try:
            start, stop, count = args.grid.split(":")
            values = list(np.linspace(float(start), float(stop), int(count)))
        except ValueError as exc:
            raise CliError(f"--grid must be start:stop:count, got {args.grid!r}", EXIT_INVALID) from exc
    if not values:
        raise CliError("sweep needs at least one value", EXIT_INVALID)
    return [float(v) for v in values]


def apply_variable(config: NetworkConfig, variable: str, value: float) -> NetworkConfig:
    """Config with one sweep variable set; every point is validated."""
    if variable == "beta_db":
        out = config.with_(beta=db_to_linear(value))
    elif variable == "tau_db":
        out = config.with_(tau=db_to_linear(value))
    elif variable == "pico_intensity_ratio":
        out = config.with_tier(2, intensity=value * config.macro.intensity)
    elif variable == "alpha1":
        out = config.with_tier(1, pathloss_exponent=value)
    elif variable == "alpha2":
        out = config.with_tier(2, pathloss_exponent=value)
    else:
        raise CliError(f"unknown sweep variable {variable!r}", EXIT_INVALID)
    return validate(out)


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path!r}: {exc.strerror or exc}", EXIT_IO) from exc


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"


def fmt(x) -> str:
    """Six significant digits, locale independent; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".6g")


METRIC_GROUP = {
    "q_macro": "modes",
    "q_pico": "modes",
    "q_comp": "modes",
    "outage_macro": "outage",
    "outage_pico": "outage",
    "outage_comp": "outage",
    "outage": "outage",
    "rate_macro": "rate",
    "rate_pico": "rate",
    "rate_comp": "rate",
    "rate": "rate",
    "macro_load": "load",
    "pico_load": "load",
    "min_user_rate": "min_rate",
}


def _metric_list(text: str) -> list[str]:
    names = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in METRIC_FIELDS]
    if bad:
        raise CliError(f"unknown metrics {bad}; choose from {', '.join(METRIC_FIELDS)}", EXIT_INVALID)
    return names


def _group_list(text: str) -> list[str]:
    groups = [m.strip() for m in text.split(",") if m.strip()]
    if groups == ["all"]:
        return list(analytic.METRIC_GROUPS)
    bad = [g for g in groups if g not in analytic.METRIC_GROUPS]
    if bad:
        raise CliError(f"unknown metric groups {bad}; choose from {', '.join(analytic.METRIC_GROUPS)}", EXIT_INVALID)
    return groups


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args) -> int:
    config = _resolve(args)
    groups = _group_list(args.metrics)
    reports = [analytic.analyze(s, config, groups).to_dict() for s in _schemes(args.scheme)]
    _write(_json({"config": config_to_mapping(config), "reports": reports}), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _resolve(args)
    settings = _sim_settings(args)
    schemes = _schemes(args.scheme)
    samples = simulator.simulate(config, settings, schemes)
    reports = [simulator.report(samples, s).to_dict() for s in schemes]
    doc = {"config": config_to_mapping(config), "settings": _settings_doc(settings), "reports": reports}
    _write(_json(doc), args.output)
    return EXIT_OK


def _analytic_values(scheme, config, metrics):
    groups = sorted({METRIC_GROUP[m] for m in metrics})
    if not groups:
        return {}
    rep = analytic.analyze(scheme, config, groups)
    return {m: getattr(rep, m) for m in metrics}


def _simulated_values(scheme, config, settings, metrics):
    samples = simulator.cached_simulation(config, settings)
    rep = simulator.report(samples, scheme)
    return {m: (getattr(rep, m), rep.ci.get(m)) for m in metrics}


def cmd_sweep(args) -> int:
    base = _resolve(args)
    values = _grid(args)
    schemes = _schemes(args.schemes)
    metrics = _metric_list(args.metrics)
    settings = _sim_settings(args) if args.engine == "simulation" else None
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for value in values:
        config = apply_variable(base, args.variable, value)
        for scheme in schemes:
            if settings is None:
                rows = {m: (v, None) for m, v in _analytic_values(scheme, config, metrics).items()}
            else:
                rows = _simulated_values(scheme, config, settings, metrics)
            for m in metrics:
                v, ci = rows[m]
                writer.writerow((fmt(value), scheme.value, m, fmt(v), fmt(ci)))
    _write(buf.getvalue(), args.output)
    return EXIT_OK


def _ordering_ok(values: dict, tol: float) -> bool:
    present = [values[s] for s in OUTAGE_ORDER if s in values and values[s] is not None]
    return all(a <= b + tol for a, b in zip(present, present[1:]))


def cmd_validate(args) -> int:
    base = _resolve(args)
    values = _grid(args)
    schemes = _schemes(args.schemes)
    settings = _sim_settings(args)
    metric = args.metric
    if metric not in METRIC_FIELDS:
        raise CliError(f"unknown metric {metric!r}", EXIT_INVALID)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(VALIDATE_HEADER)
    failures = 0
    for value in values:
        config = apply_variable(base, args.variable, value)
        analytic_at_point = {}
        for scheme in schemes:
            a = _analytic_values(scheme, config, [metric])[metric]
            s, ci = _simulated_values(scheme, config, settings, [metric])[metric]
            analytic_at_point[scheme] = a
            if a is None or s is None:
                verdict, z = ("pass", None) if a is None and s is None else ("fail", None)
            else:
                sigma = (ci or 0.0) / simulator.Z95
                diff = abs(a - s)
                z = diff / sigma if sigma > 0 else (0.0 if diff <= 1e-12 else math.inf)
                verdict = "pass" if diff <= args.tolerance_sigma * sigma + 1e-12 else "fail"
            failures += verdict == "fail"
            writer.writerow((fmt(value), scheme.value, metric, fmt(a), fmt(s), fmt(ci), fmt(z), verdict))
        if metric == "outage" and len([s for s in OUTAGE_ORDER if s in schemes]) > 1 and config.beta > 1:
            ok = _ordering_ok(analytic_at_point, 1e-9)
            failures += not ok
            writer.writerow((fmt(value), "ordering", metric, "", "", "", "", "pass" if ok else "fail"))
    _write(buf.getvalue(), args.output)
    if failures:
        log.warning("%d validation check(s) failed", failures)
        return EXIT_INVALID
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_config_args(p):
    p.add_argument("config", help="JSON config file with the flat key schema")
    p.add_argument("--beta-db", type=float, help="override the cooperation threshold / bias (dB)")
    p.add_argument("--tau-db", type=float, help="override the SINR threshold (dB)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.add_argument("-q", "--quiet", action="store_true", help="only log warnings")


def _add_sim_args(p):
    p.add_argument("--iterations", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--window-km", type=float, default=10.0, help="side of the square simulation window")
    p.add_argument(
        "--interference-model",
        choices=[m.value for m in simulator.InterferenceModel],
        default=simulator.InterferenceModel.INDEPENDENT.value,
    )


def _add_sweep_args(p):
    p.add_argument("--variable", required=True, choices=SWEEP_VARIABLES)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--values", help="comma-separated values; write --values=-5,0 when the first is negative")
    grid.add_argument("--grid", help="linear grid start:stop:count")
    p.add_argument("--schemes", default="lactc", help="comma-separated schemes or 'all'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiercomp", description="Two-tier cross-tier CoMP outage/rate/load toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="evaluate metrics with the analytic engine (JSON)")
    _add_config_args(p)
    p.add_argument("--scheme", default="lactc", help="scheme(s): lactc, re, fc, tr, comma list or 'all'")
    p.add_argument("--metrics", default="all", help="metric groups: modes,outage,rate,load,min_rate or 'all'")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo estimates with 95%% CIs (JSON)")
    _add_config_args(p)
    p.add_argument("--scheme", default="lactc", help="scheme(s): lactc, re, fc, tr, comma list or 'all'")
    _add_sim_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="check analytic values against simulation CIs (CSV)")
    _add_config_args(p)
    _add_sweep_args(p)
    p.add_argument("--metric", default="outage", help="metric compared at every point")
    p.add_argument("--tolerance-sigma", type=float, default=3.0)
    _add_sim_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="metric table over one variable (CSV)")
    _add_config_args(p)
    _add_sweep_args(p)
    p.add_argument("--metrics", default="outage", help=f"comma list from: {', '.join(METRIC_FIELDS)}")
    p.add_argument("--engine", choices=("analytic", "simulation"), default="analytic")
    _add_sim_args(p)
    p.set_defaults(func=cmd_sweep)
    return parser


@contextmanager
def _logging(quiet: bool):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING if quiet else logging.INFO)
    try:
        yield
    finally:
        log.removeHandler(handler)


NUMERICAL_ERRORS = (
    QuadratureError,
    analytic.ModeEmptyError,
    analytic.ZeroIntensity,
    analytic.DegenerateTier,
    simulator.EmptyTier,
    ZeroDivisionError,
    FloatingPointError,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    with _logging(args.quiet):
        try:
            return args.func(args)
        except CliError as exc:
            log.error("%s", exc)
            return exc.code
        except ConfigError as exc:
            log.error("invalid config: %s", exc)
            return EXIT_INVALID
        except NUMERICAL_ERRORS as exc:
            log.error("numerical failure: %s", exc)
            return EXIT_NUMERICAL
        except ValueError as exc:
            log.error("%s", exc)
            return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
