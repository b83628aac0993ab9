import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrsurface.metasurface import (CARRIER, MAX_STEER_DEG, SurfaceConfig, VaractorModel, array_factor, codebook,
                                   ideal_gain, phase_difference_deg, reconfig_cost, reflection_coefficient,
                                   steer_codebook, steered_pattern, steered_pattern_3d, write_codebook_csv,
                                   write_pattern_csv)

bit_rows = st.lists(st.integers(0, 1), min_size=4, max_size=24)


def direct_af_power(bits, angles, amp=0.6, incident=0.0):
    """Phasor sum over half-wavelength-spaced columns."""
    out = []
    for a in angles:
        u = np.sin(np.radians(a)) + np.sin(np.radians(incident))
        out.append(abs(sum(amp * (-1) ** b * np.exp(1j * np.pi * n * u) for n, b in enumerate(bits))) ** 2)
    return np.array(out)


# -- unit cell ---------------------------------------------------------------

def test_circuit_fit_frozen():
    L, cg, rl = VaractorModel().fitted
    assert L == pytest.approx(1.041, abs=0.002)
    assert cg == pytest.approx(0.0598, abs=0.0005)
    assert rl == pytest.approx(0.994, abs=0.005)


def test_two_states_opposite_at_carrier():
    g0, g1 = reflection_coefficient(0.0), reflection_coefficient(3.3)
    assert abs(g0) == pytest.approx(0.6, abs=1e-6) and abs(g1) == pytest.approx(0.6, abs=1e-6)
    assert phase_difference_deg() == pytest.approx(180, abs=1e-4)


def test_phase_difference_across_channel():
    f = CARRIER + np.linspace(-100e6, 100e6, 21)
    d = phase_difference_deg(f)
    assert d.min() > 179 and d.max() <= 180 + 1e-9


def test_non_gpio_bias_rejected():
    with pytest.raises(ValueError):
        reflection_coefficient(15.0)


def test_reconfig_cost_frozen():
    lat, e = reconfig_cost(256)
    assert lat == pytest.approx(7e-9 + 13 * 0.22e-12)
    assert lat < 10e-9
    assert e == pytest.approx(256 * 12e-12)
    assert reconfig_cost(0) == (0.0, 0.0)


# -- array factor ------------------------------------------------------------

@given(bit_rows)
def test_array_factor_matches_phasor_sum(bits):
    cfg = SurfaceConfig(columns=len(bits))
    ang = np.array([-60.0, -10.0, 0.0, 25.0, 70.0])
    pat = array_factor(cfg, bits, ang)
    ref = direct_af_power(bits, ang)
    assert np.allclose(pat.peak_power * 10 ** (pat.gain_db / 10), ref, rtol=1e-9, atol=1e-12)


@given(bit_rows)
def test_one_bit_pattern_is_mirror_symmetric_and_complement_invariant(bits):
    cfg = SurfaceConfig(columns=len(bits))
    ang = np.linspace(-80, 80, 33)
    p = direct_af_power(bits, ang)
    assert np.allclose(p, p[::-1], atol=1e-9)
    q = array_factor(cfg, 1 - np.array(bits), ang)
    assert np.allclose(q.peak_power * 10 ** (q.gain_db / 10), p, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(5, MAX_STEER_DEG))
def test_codebook_lobe_near_target(target):
    pat = steered_pattern(target)
    assert abs(pat.main_lobe - target) <= 2.0
    assert pat.peak_power <= ideal_gain(target) + 1e-9


def test_codebook_frozen_and_negative_mirror():
    assert "".join(map(str, steer_codebook(30.0))) == "0011001100110011"
    assert np.array_equal(steer_codebook(-30.0), steer_codebook(30.0)[::-1])
    assert steered_pattern(-30.0).main_lobe == pytest.approx(-steered_pattern(30.0).main_lobe, abs=0.02)


def test_beamwidths():
    assert steered_pattern(30.0).hpbw == pytest.approx(6.3, abs=1.0)
    assert steered_pattern(30.0, SurfaceConfig(columns=80)).hpbw == pytest.approx(1.3, abs=0.3)
    # broadening away from broadside
    assert steered_pattern(60.0).hpbw > steered_pattern(10.0).hpbw


@pytest.mark.parametrize("az,el", [(10, 0), (40, 0), (60, 0), (0, 20), (0, 45), (30, 30), (60, 45)])
def test_3d_lobes(az, el):
    pat = steered_pattern_3d(az, el)
    assert np.hypot(pat.main_lobe[0] - az, pat.main_lobe[1] - el) <= 5.0


def test_csv_writers(tmp_path):
    write_pattern_csv(steered_pattern(20.0), tmp_path / "p.csv")
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "angle_deg,gain_db"
    book = codebook([10.0, 20.0])
    write_codebook_csv([10.0, 20.0], book, tmp_path / "b.csv")
    rows = (tmp_path / "b.csv").read_text().splitlines()
    assert rows[0] == "target_deg,bits" and len(rows[1].split(",")[1]) == 16
