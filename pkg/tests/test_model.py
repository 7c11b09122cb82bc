import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiercomp.model import (
    MACRO_INTENSITY,
    ConfigError,
    ConfigViolation,
    MetricsReport,
    Mode,
    ModeProbabilities,
    Scheme,
    db_to_linear,
    dbm_to_watts,
    default_config,
    linear_to_db,
    validate,
    watts_to_dbm,
)


def test_dbm_reference_points():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert dbm_to_watts(37.0) == pytest.approx(5.011872336, rel=1e-9)
    assert dbm_to_watts(-104.0) == pytest.approx(3.981071705534969e-14, rel=1e-12)


@given(st.floats(-200, 100))
def test_dbm_round_trip(x):
    assert watts_to_dbm(dbm_to_watts(x)) == pytest.approx(x, abs=1e-9)


@given(st.floats(-60, 60))
def test_db_round_trip(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-9)


def test_default_config():
    cfg = default_config()
    assert cfg.macro.intensity == pytest.approx(1 / (math.pi * 500**2))
    assert cfg.pico.intensity == pytest.approx(5 * MACRO_INTENSITY)
    assert cfg.macro.power == pytest.approx(dbm_to_watts(37.0))
    assert cfg.pico.power == pytest.approx(0.1)
    assert cfg.beta == pytest.approx(10**0.4)
    assert cfg.tau == 1.0
    assert cfg.user_intensity == pytest.approx(10 * MACRO_INTENSITY)
    assert validate(cfg) is cfg


def test_noise_minus_infinity_is_zero():
    assert default_config(noise_dbm=-math.inf).noise == 0.0


def test_with_tier_and_flat_view():
    cfg = default_config().with_tier(2, pathloss_exponent=3.5)
    assert cfg.pico.pathloss_exponent == 3.5
    flat = cfg.to_flat()
    assert flat["pico.alpha"] == 3.5
    assert flat["beta_db"] == pytest.approx(4.0)
    with pytest.raises(ValueError):
        cfg.tier(3)


def test_validate_reports_every_violation():
    cfg = default_config(beta=0.5, tau=0.0).with_tier(1, pathloss_exponent=2.0).with_tier(2, intensity=-1.0)
    with pytest.raises(ConfigError) as info:
        validate(cfg)
    kinds = {e.kind for e in info.value.errors}
    assert kinds == {
        ConfigViolation.ALPHA_TOO_SMALL,
        ConfigViolation.BETA_BELOW_ONE,
        ConfigViolation.NON_POSITIVE_TAU,
        ConfigViolation.NEGATIVE_INTENSITY,
    }


def test_non_finite_power_rejected():
    cfg = default_config().with_tier(1, power_dbm=math.inf)
    with pytest.raises(ConfigError, match="NonFinitePower"):
        validate(cfg)


@pytest.mark.parametrize(
    "name, scheme",
    [("lactc", Scheme.LA_CTC), ("LA-CTC", Scheme.LA_CTC), ("re", Scheme.RANGE_EXPANSION), ("FC", Scheme.FULL_COOPERATION), ("traditional", Scheme.TRADITIONAL)],
)
def test_scheme_parse(name, scheme):
    assert Scheme.parse(name) is scheme


def test_scheme_parse_unknown():
    with pytest.raises(ValueError):
        Scheme.parse("comp")


def test_mode_probabilities():
    q = ModeProbabilities(0.5, 0.3, 0.2)
    assert q[Mode.COMP] == 0.2
    with pytest.raises(ValueError):
        ModeProbabilities(0.5, 0.5, 0.5)


def test_report_check_and_dict():
    rep = MetricsReport(Scheme.TRADITIONAL, "analytic", outage=0.4, rate=1.5)
    d = rep.check().to_dict()
    assert d["scheme"] == "tr" and d["outage"] == 0.4 and d["q_comp"] is None
    assert d["ci_half_width"] == {}
    with pytest.raises(ValueError):
        MetricsReport(Scheme.TRADITIONAL, "analytic", outage=1.2).check()
    with pytest.raises(ValueError):
        MetricsReport(Scheme.TRADITIONAL, "analytic", rate=-0.1).check()
