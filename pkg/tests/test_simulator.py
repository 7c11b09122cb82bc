import math

import numpy as np
import pytest
from scipy import stats

from tiercomp import analytic, simulator
from tiercomp.model import Mode, Scheme, db_to_linear, default_config
from tiercomp.simulator import (
    EmptyTier,
    EstimateWithCI,
    InterferenceModel,
    NetworkRealization,
    SimSettings,
    iteration_rng,
    mode_from_ratio,
    sample_ppp,
    sample_sinr,
    select_mode,
    simulate,
)

FAST = SimSettings(iterations=1500, seed=11)


@pytest.fixture(scope="module")
def default_samples():
    return simulate(default_config(), FAST)


def test_iteration_streams_are_reproducible_and_distinct():
    a = iteration_rng(3, 7).standard_normal(4)
    assert np.array_equal(a, iteration_rng(3, 7).standard_normal(4))
    assert not np.array_equal(a, iteration_rng(3, 8).standard_normal(4))
    assert not np.array_equal(a, iteration_rng(4, 7).standard_normal(4))


def test_sample_ppp_counts_are_poisson():
    rng = np.random.default_rng(0)
    lam, hw = 2e-5, 250.0
    counts = np.array([len(sample_ppp(lam, hw, rng)) for _ in range(4000)])
    mean = lam * (2 * hw) ** 2
    assert counts.mean() == pytest.approx(mean, rel=0.03)
    # index of dispersion of a Poisson count is 1
    assert counts.var() / counts.mean() == pytest.approx(1.0, abs=0.08)
    pts = sample_ppp(lam, hw, rng)
    assert np.all(np.abs(pts) <= hw)


def test_sample_ppp_rejects_negative_intensity():
    with pytest.raises(ValueError):
        sample_ppp(-1.0, 10.0, np.random.default_rng(0))


def test_mode_from_ratio_edges():
    beta = 2.0
    assert list(mode_from_ratio([0.5, 1.0, 1.5, 2.0, 3.0], beta)) == [1, 1, 2, 0, 0]
    assert set(mode_from_ratio(np.linspace(0.1, 10, 200), 1.0)) <= {0, 1}


@pytest.mark.parametrize(
    "macro, pico, expected",
    [
        ((500.0, 0.0), (100.0, 0.0), Mode.NON_COMP_PICO),
        ((100.0, 0.0), (0.0, 100.0), Mode.NON_COMP_MACRO),
        ((1000.0, 0.0), (0.0, 420.0), Mode.COMP),
    ],
)
def test_select_mode_examples(macro, pico, expected):
    real = NetworkRealization(np.array([macro, (4000.0, 4000.0)]), np.array([pico, (-4000.0, 4000.0)]))
    mode, r1, r2 = select_mode(real, default_config())
    assert mode is expected
    assert r1 == pytest.approx(math.hypot(*macro))
    assert r2 == pytest.approx(math.hypot(*pico))


def test_select_mode_needs_both_tiers():
    with pytest.raises(EmptyTier):
        select_mode(NetworkRealization(np.zeros((0, 2)), np.ones((1, 2))), default_config())


def _noise_limited():
    # pico tier practically silent so only the serving links matter
    return default_config().with_tier(2, power_dbm=-300.0)


def test_single_link_sinr_is_exponential():
    cfg = _noise_limited()
    real = NetworkRealization(np.array([[300.0, 0.0]]), np.array([[0.0, 4000.0]]))
    rng = np.random.default_rng(1)
    x = np.array([sample_sinr(real, Scheme.TRADITIONAL, cfg, rng) for _ in range(3000)])
    mean = cfg.macro.power * 300.0**-4 / cfg.noise
    assert stats.kstest(x / mean, "expon").pvalue > 1e-3


def test_comp_numerator_adds_coherently():
    cfg = _noise_limited().with_tier(2, power_dbm=20.0)
    cfg = cfg.with_(noise_dbm=-80.0)
    real = NetworkRealization(np.array([[300.0, 0.0]]), np.array([[0.0, 150.0]]))
    rng = np.random.default_rng(2)
    x = np.array([sample_sinr(real, Scheme.FULL_COOPERATION, cfg, rng) for _ in range(3000)])
    mean = (cfg.macro.power * 300.0**-4 + cfg.pico.power * 150.0**-4) / cfg.noise
    # sum of two independent CN terms is CN with the summed variance
    assert x.mean() == pytest.approx(mean, rel=0.06)
    assert stats.kstest(x / mean, "expon").pvalue > 1e-3


def test_nearest_macro_distance_distribution(default_samples):
    lam = default_config().macro.intensity
    cdf = lambda r: 1 - np.exp(-math.pi * lam * r**2)  # noqa: E731
    assert stats.kstest(default_samples.r1, cdf).pvalue > 1e-3


def test_comp_users_lie_in_the_band(default_samples):
    cfg = default_config()
    codes = default_samples.mode[Scheme.LA_CTC]
    ratio = cfg.macro.power * default_samples.r1**-4 / (cfg.pico.power * default_samples.r2**-4)
    comp = codes == 2
    assert comp.any()
    assert np.all((ratio[comp] > 1) & (ratio[comp] < cfg.beta))
    assert np.all(ratio[codes == 0] >= cfg.beta)
    assert np.all(ratio[codes == 1] <= 1)


def test_scheme_modes_are_consistent(default_samples):
    s = default_samples
    assert np.all(s.mode[Scheme.FULL_COOPERATION] == 2)
    assert not np.any(s.mode[Scheme.TRADITIONAL] == 2)
    assert not np.any(s.mode[Scheme.RANGE_EXPANSION] == 2)
    # outside the CoMP band the cooperation scheme serves exactly like the traditional one
    direct = s.mode[Scheme.LA_CTC] != 2
    assert np.array_equal(s.sinr[Scheme.LA_CTC][direct], s.sinr[Scheme.TRADITIONAL][direct])


def test_cross_engine_at_small_sample(default_samples):
    cfg = default_config()
    for scheme in Scheme:
        rep = simulator.report(default_samples, scheme)
        exact = analytic.outage_overall(scheme, cfg)
        assert abs(rep.outage - exact) <= 4 * rep.ci["outage"] / simulator.Z95


@pytest.mark.parametrize("workers", [4, 16])
def test_results_independent_of_worker_count(workers):
    base = SimSettings(iterations=200, seed=5)
    a = simulate(default_config(), base)
    b = simulate(default_config(), base.replace(workers=workers))
    for s in a.schemes:
        assert np.array_equal(a.sinr[s], b.sinr[s])
        assert np.array_equal(a.mode[s], b.mode[s])
    assert np.array_equal(a.r1, b.r1)


def test_guard_zone_doubling_changes_nothing_material():
    cfg = default_config()
    small = simulate(cfg, SimSettings(window_half_width=2500.0, iterations=1500, seed=9), [Scheme.LA_CTC])
    large = simulate(cfg, SimSettings(window_half_width=5000.0, iterations=1500, seed=9), [Scheme.LA_CTC])
    a = simulator.outage_estimates(small, Scheme.LA_CTC)[None]
    b = simulator.outage_estimates(large, Scheme.LA_CTC)[None]
    assert abs(a.estimate - b.estimate) <= 3 * math.hypot(a.sigma, b.sigma)


def test_insufficient_mode_samples_are_flagged():
    cfg = default_config(beta=db_to_linear(0.3))
    samples = simulate(cfg, SimSettings(iterations=300, seed=1), [Scheme.LA_CTC])
    rep = simulator.report(samples, Scheme.LA_CTC)
    assert 0 < np.count_nonzero(samples.mode[Scheme.LA_CTC] == 2) < simulator.MIN_MODE_SAMPLES
    assert rep.outage_comp is None
    assert any("InsufficientModeSamples" in n for n in rep.notes)
    assert rep.outage is not None


def test_empty_tier_raises():
    cfg = default_config().with_tier(1, intensity=0.0)
    with pytest.raises(EmptyTier):
        simulate(cfg, SimSettings(iterations=1, seed=0))


def test_estimate_interval_clamps_proportions():
    est = EstimateWithCI(0.01, 0.05, 100, proportion=True)
    assert est.interval == (0.0, pytest.approx(0.06))
    assert est.sigma == pytest.approx(0.05 / simulator.Z95)
    assert EstimateWithCI(None, None, 3, insufficient=True).interval is None


def test_coherent_pairing_rule():
    macro = np.array([[0.0, 0.0], [100.0, 0.0]])
    pico = np.array([[1.0, 0.0], [3.0, 0.0], [100.0, 2.0]])
    a1 = np.array([1.0, 2.0j])
    a2 = np.array([1.0, 5.0, 1.0j])
    use1 = np.ones(2, bool)
    use2 = np.ones(3, bool)
    # pico 0 and pico 1 both pick macro 0; the closer pico 0 wins, pico 1 stays alone
    total = simulator._coherent_interference(macro, pico, a1, a2, use1, use2)
    assert total == pytest.approx(abs(1 + 1) ** 2 + 25 + abs(2j + 1j) ** 2)
    # with no pico interferers everything adds in power
    assert simulator._coherent_interference(macro, pico, a1, a2, use1, np.zeros(3, bool)) == pytest.approx(5.0)


def test_coherent_model_runs_and_agrees_roughly():
    cfg = default_config()
    st = SimSettings(iterations=600, seed=4)
    ind = simulate(cfg, st, [Scheme.TRADITIONAL])
    coh = simulate(cfg, st.replace(interference_model=InterferenceModel.COHERENT_PAIRS), [Scheme.TRADITIONAL])
    a = simulator.outage_estimates(ind, Scheme.TRADITIONAL)[None]
    b = simulator.outage_estimates(coh, Scheme.TRADITIONAL)[None]
    assert np.array_equal(ind.mode[Scheme.TRADITIONAL], coh.mode[Scheme.TRADITIONAL])
    assert abs(a.estimate - b.estimate) < 0.05


def test_cached_simulation_is_shared_across_tau():
    st = SimSettings(iterations=100, seed=2)
    a = simulator.cached_simulation(default_config(tau=1.0), st)
    b = simulator.cached_simulation(default_config(tau=10.0), st)
    assert a.sinr[Scheme.LA_CTC] is b.sinr[Scheme.LA_CTC]
    assert b.config.tau == 10.0
    lo = simulator.outage_estimates(a, Scheme.LA_CTC)[None].estimate
    hi = simulator.outage_estimates(b, Scheme.LA_CTC)[None].estimate
    assert hi >= lo
