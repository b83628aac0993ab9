import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrsurface.frontend import (BPF_HALF_BW, EnvelopeSampler, LinkBudget, ReceiverConfig, adc_sample,
                                analytic_envelope, band_suppression_db, design_filters, filter_response,
                                interferer_band, noise_variance, nr_adjacent_interferer, receive)
from nrsurface.waveform import BAND_CENTER, BASE_RATE, QPSK_PHASES, BasebandSignal, modulate_symbol

phase_vectors = st.lists(st.sampled_from(list(QPSK_PHASES)), min_size=12, max_size=12)


@given(phase_vectors)
def test_closed_form_harmonics_match_fft(phases):
    env = np.abs(modulate_symbol(phases)) ** 2
    spec = np.fft.fft(env) / len(env)
    h = analytic_envelope(phases)
    assert np.allclose(h.phasors(), spec[1:12], atol=1e-9)
    assert spec[0].real == pytest.approx(12)


@given(phase_vectors)
def test_harmonic_power_reconstructs_envelope(phases):
    x = modulate_symbol(phases)
    t = np.arange(256) / BASE_RATE
    assert np.allclose(analytic_envelope(phases).power(t), np.abs(x) ** 2, atol=1e-8)


def test_bpf_minus_3db_at_design_edge():
    bpf, _ = design_filters()
    g = filter_response(bpf, [BAND_CENTER, BAND_CENTER + BPF_HALF_BW, BAND_CENTER - BPF_HALF_BW], BASE_RATE)
    assert 20 * np.log10(g[1] / g[0]) == pytest.approx(-3, abs=0.01)
    assert 20 * np.log10(g[2] / g[0]) == pytest.approx(-3, abs=0.01)


def test_nr_carrier_suppressed_by_bpf():
    bpf, _ = design_filters()
    intf = nr_adjacent_interferer()
    lo, hi, frac = interferer_band(intf, BASE_RATE)
    assert 0 < frac < 1
    assert band_suppression_db(bpf, BASE_RATE, lo, hi) > 18


def test_default_interferer_sinr():
    # 4.5 MHz NR carrier at a PSD 6 dB below the 180 kHz NB-IoT carrier
    assert nr_adjacent_interferer().power_db == pytest.approx(10 * np.log10(25) - 6)
    assert nr_adjacent_interferer(-10).power_db == 10


def test_noise_variance_in_band():
    # in-band share of white noise over fs is 180 kHz / fs
    v = noise_variance(12.0, 10.0, BASE_RATE)
    assert v * 180e3 / BASE_RATE == pytest.approx(1.2)
    assert noise_variance(12.0, np.inf, BASE_RATE) == 0


def test_link_budget_decreases_with_distance():
    lb = LinkBudget()
    assert lb.snr_db(1) > lb.snr_db(10) > lb.snr_db(100)
    assert lb.snr_db(1) - lb.snr_db(10) == pytest.approx(20)


def test_adc_on_grid_and_gain_limits():
    x = BasebandSignal(np.arange(10.0) + 0j, 1.0, 0.0)
    assert adc_sample(x, [3.0], gain_db=40)[0] == pytest.approx(300)
    assert adc_sample(x, [3.5], gain_db=40)[0] == pytest.approx(350)
    with pytest.raises(ValueError):
        adc_sample(x, [1.0], gain_db=80)
    with pytest.raises(ValueError):
        adc_sample(x, [20.0], gain_db=40)


def test_sampler_noiseless_equals_receive():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(600) + 1j * rng.standard_normal(600)
    s = EnvelopeSampler(0.0)
    c = np.array([250, 300, 347])
    det, _ = s.signal_terms(s.windows_at(x, c))
    full = receive(BasebandSignal(x, BASE_RATE)).samples.real
    assert np.allclose(det, full[c], rtol=1e-9)


@settings(max_examples=3, deadline=None)
@given(st.integers(0, 1000))
def test_sampler_moments_match_brute_force(seed):
    """Sampler mean/variance against full-chain Monte Carlo with explicit white noise."""
    rng = np.random.default_rng(seed)
    var = 2.0
    s = EnvelopeSampler(var)
    x = modulate_symbol(QPSK_PHASES[rng.integers(0, 4, 12)], n_periods=3)
    c = 384
    det, g = s.signal_terms(s.windows_at(x, [c]))
    mean, v = s.moments(det, g)
    n = 4000
    noise = (rng.standard_normal((n, len(x))) + 1j * rng.standard_normal((n, len(x)))) * np.sqrt(var / 2)
    w = (x + noise)[:, c - s.half:c + s.half + 1]
    e = np.real(np.einsum("ni,ij,nj->n", w.conj(), s.M, w))
    assert np.mean(e) == pytest.approx(mean[0], rel=0.03)
    assert np.var(e) == pytest.approx(v[0], rel=0.1)
    d = s.draw(np.repeat(det, n), np.repeat(g, n, axis=0), rng)
    assert np.mean(d) == pytest.approx(mean[0], rel=0.03)
    assert np.var(d) == pytest.approx(v[0], rel=0.1)


def test_filters_cached_and_unit_dc():
    bpf, lpf = design_filters(ReceiverConfig())
    assert design_filters(ReceiverConfig())[0] is bpf
    assert lpf.sum() == pytest.approx(1)
