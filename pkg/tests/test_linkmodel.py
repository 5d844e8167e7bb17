import math
from dataclasses import replace

import numpy as np
import pytest

from services.errors import ConfigError, LinkModelError
from services.linkmodel.link_model import (
    ChannelConfig, LinkBudget, ReceiverConfig, SourceConfig, analytic_qber, analytic_rates,
    build_link_budget, calibrate_epsilon_sys, calibrate_visibility, click_probability, detection_rates,
    photons_per_cycle, predict_link, sideband_photons_per_cycle, transmittance,
)


@pytest.fixture
def long_line_budget():
    return build_link_budget(SourceConfig(), ChannelConfig(), ReceiverConfig())


def test_photons_per_cycle_defaults():
    assert photons_per_cycle(SourceConfig()) == pytest.approx(6.1877, rel=1e-3)


def test_photons_per_cycle_zero_and_linear():
    assert photons_per_cycle(SourceConfig(output_power=0.0)) == 0.0
    doubled = photons_per_cycle(SourceConfig(output_power=2 * 79.3e-12))
    assert doubled == pytest.approx(2 * photons_per_cycle(SourceConfig()), rel=1e-15)


def test_sideband_photon_budget():
    mu = sideband_photons_per_cycle(SourceConfig())
    assert 0.195 <= mu <= 0.213
    assert 0.19 <= mu <= 0.21
    assert sideband_photons_per_cycle(SourceConfig(modulation_index=0.0)) == 0.0
    assert sideband_photons_per_cycle(SourceConfig(modulation_index=1.0)) == photons_per_cycle(SourceConfig())


@pytest.mark.parametrize("loss_db, expected", [(0.0, 1.0), (37.0, 1.9953e-4), (7.0, 0.19953)])
def test_transmittance(loss_db, expected):
    assert transmittance(loss_db) == pytest.approx(expected, rel=1e-4)


def test_transmittance_rejects_negative():
    with pytest.raises(LinkModelError):
        transmittance(-1.0)


def test_transmittance_is_multiplicative():
    rng = np.random.default_rng(3)
    for a, b in rng.uniform(0, 60, size=(50, 2)):
        assert transmittance(a + b) == pytest.approx(transmittance(a) * transmittance(b), rel=1e-12)


def test_long_line_budget(long_line_budget):
    assert long_line_budget.mu_sideband == pytest.approx(0.204, abs=1e-3)
    assert long_line_budget.transmittance == pytest.approx(1.995e-4, rel=1e-3)
    assert long_line_budget.mu_detected == pytest.approx(1.02e-5, rel=5e-3)
    assert long_line_budget.p_dark == pytest.approx(5.0e-9)


def test_identity_chain_keeps_mu():
    receiver = ReceiverConfig(sideband_selection_loss_db=0.0, detector_efficiency=1.0)
    budget = build_link_budget(SourceConfig(), ChannelConfig(loss_db=0.0), receiver)
    assert budget.mu_detected == pytest.approx(budget.mu_sideband, rel=1e-15)


def test_zero_dark_rate():
    budget = build_link_budget(SourceConfig(), ChannelConfig(), ReceiverConfig(dark_count_rate=0.0))
    assert budget.p_dark == 0.0


def test_dark_probability_must_stay_below_one():
    with pytest.raises(ConfigError):
        build_link_budget(SourceConfig(), ChannelConfig(), ReceiverConfig(dark_count_rate=2e8))


@pytest.mark.parametrize("kwargs, field", [
    ({'modulation_index': 1.5}, 'source.modulation_index'),
    ({'pulse_width': 2e-8}, 'source.pulse_width'),
    ({'repetition_rate': 0.0}, 'source.repetition_rate'),
])
def test_source_validation(kwargs, field):
    with pytest.raises(ConfigError) as excinfo:
        SourceConfig(**kwargs)
    assert excinfo.value.field == field


def test_receiver_and_channel_validation():
    with pytest.raises(ConfigError):
        ReceiverConfig(visibility=1.2)
    with pytest.raises(ConfigError):
        ReceiverConfig(detector_efficiency=-0.1)
    with pytest.raises(ConfigError):
        ChannelConfig(loss_db=-3.0)


def test_click_probability_examples(long_line_budget):
    perfect = LinkBudget(0.2, 1.0, 0.1, 0.0, 1.0)
    assert click_probability(perfect, math.pi) == pytest.approx(0.0, abs=1e-18)
    for v in (0.0, 0.5, 1.0):
        budget = replace(long_line_budget, visibility=v)
        assert click_probability(budget, math.pi / 2) == pytest.approx(budget.p_dark + budget.mu_detected / 2)
    assert click_probability(long_line_budget, 0.0) == pytest.approx(1.0003e-5, rel=5e-3)


def test_click_probability_monotone_and_averaged(long_line_budget):
    phases = np.linspace(0, math.pi, 50)
    values = [click_probability(long_line_budget, phi) for phi in phases]
    assert all(a >= b for a, b in zip(values, values[1:]))
    average = sum(click_probability(long_line_budget, k * math.pi / 2) for k in range(4)) / 4
    assert average == pytest.approx(long_line_budget.average_click_probability, rel=1e-12)


def test_click_probability_clamps_with_warning(caplog):
    budget = LinkBudget(5.0, 1.0, 3.0, 0.0, 1.0)
    assert click_probability(budget, 0.0) == 1.0
    assert 'clamped' in caplog.text


def test_analytic_qber_examples(long_line_budget):
    assert analytic_qber(LinkBudget(0.2, 1.0, 1e-5, 0.0, 1.0)) == 0.0
    assert analytic_qber(LinkBudget(0.0, 1.0, 0.0, 1e-6, 0.96)) == pytest.approx(0.5)
    assert 0.018 <= analytic_qber(long_line_budget) <= 0.023
    assert analytic_qber(long_line_budget) == pytest.approx(0.0205, abs=2e-4)
    with pytest.raises(LinkModelError):
        analytic_qber(LinkBudget(0.0, 1.0, 0.0, 0.0, 1.0))


def test_analytic_qber_monotone_over_grid():
    rng = np.random.default_rng(11)
    for _ in range(100):
        mu, p_dark, v = rng.uniform(1e-6, 1e-3), rng.uniform(0, 1e-5), rng.uniform(0.5, 0.99)
        base = LinkBudget(mu, 1.0, mu, p_dark, v)
        assert analytic_qber(replace(base, visibility=min(1.0, v + 0.01))) <= analytic_qber(base)
        assert analytic_qber(replace(base, p_dark=p_dark * 1.5 + 1e-9)) >= analytic_qber(base)


def test_analytic_rates_long_line_values(long_line_budget):
    sift, secret = analytic_rates(long_line_budget, 1e8, f_ec=1.15, epsilon_sys=1.0)
    assert sift == pytest.approx(255, rel=0.01)
    assert secret == pytest.approx(176, rel=0.01)
    assert secret >= 12.0
    _, calibrated = analytic_rates(long_line_budget, 1e8, f_ec=1.15, epsilon_sys=0.068)
    assert calibrated == pytest.approx(12.0, rel=0.02)


def test_analytic_rates_zero_budget_and_validation(long_line_budget):
    assert analytic_rates(LinkBudget(0.0, 1.0, 0.0, 0.0, 1.0), 1e8) == (0.0, 0.0)
    with pytest.raises(LinkModelError):
        analytic_rates(long_line_budget, 1e8, f_ec=0.9)
    with pytest.raises(LinkModelError):
        analytic_rates(long_line_budget, 1e8, epsilon_sys=0.0)


def test_full_efficiency_dominates(long_line_budget):
    full = analytic_rates(long_line_budget, 1e8, epsilon_sys=1.0)
    for eps in (0.01, 0.5, 0.99):
        part = analytic_rates(long_line_budget, 1e8, epsilon_sys=eps)
        assert full[0] >= part[0] and full[1] >= part[1]


def test_detection_rates(long_line_budget):
    rates = detection_rates(long_line_budget, 1e8)
    assert rates.click_rate == pytest.approx(1e8 * (5e-9 + long_line_budget.mu_detected / 2))
    assert rates.sift_rate == pytest.approx(rates.click_rate / 2)
    assert rates.dark_rate == pytest.approx(0.5)


def test_predict_link_matches_closed_form(long_line_budget):
    prediction = predict_link(SourceConfig(), ChannelConfig(), ReceiverConfig(), 1.15, 0.068)
    sift, secret = analytic_rates(long_line_budget, 1e8, 1.15, 0.068)
    assert prediction.loss_db == 37.0
    assert prediction.sift_rate_bps == sift
    assert prediction.secret_rate_bps == secret
    assert prediction.qber == analytic_qber(long_line_budget)


def test_predict_link_without_photons():
    source = SourceConfig(output_power=0.0)
    prediction = predict_link(source, ChannelConfig(), ReceiverConfig(dark_count_rate=0.0))
    assert prediction.qber is None
    assert prediction.secret_rate_bps == 0.0


def test_calibrations_invert_the_closed_forms(long_line_budget):
    visibility = calibrate_visibility(long_line_budget, 0.04)
    assert analytic_qber(replace(long_line_budget, visibility=visibility)) == pytest.approx(0.04, rel=1e-12)
    epsilon = calibrate_epsilon_sys(long_line_budget, 1e8, 1.15, 12.0)
    assert analytic_rates(long_line_budget, 1e8, 1.15, epsilon)[1] == pytest.approx(12.0, rel=1e-12)
    with pytest.raises(LinkModelError):
        calibrate_epsilon_sys(long_line_budget, 1e8, 1.15, 1e6)
