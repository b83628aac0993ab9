import numpy as np
import pytest
from hypothesis import given, strategies as st

from nrsurface.link import (INFO_SYMBOLS, OFF_PHASES, ON_OFF_MIN_DB, ON_PHASES, SYNC_SYMBOLS, ReconfigInfo,
                            ber_point, ber_sweep, bits_to_int, demodulate_ook, int_to_bits, nbpu_grid,
                            ook_threshold, on_off_ratio_db, write_ber_csv)
from nrsurface.frontend import analytic_envelope
from nrsurface.waveform import NRS_PHASE


@given(st.integers(0, 31))
def test_info_bits_round_trip(v):
    assert bits_to_int(int_to_bits(v)) == v


def test_info_range():
    with pytest.raises(ValueError):
        int_to_bits(32)


def test_on_symbol_peaks_and_off_symbol_vanishes_at_centre():
    t_mid = 0.5 / 15e3
    on = analytic_envelope(ON_PHASES).power(t_mid)
    off = analytic_envelope(OFF_PHASES).power(t_mid)
    assert on == pytest.approx(144)
    assert off == pytest.approx(0, abs=1e-9)


def test_nbpu_grid_carries_sync_and_info():
    g = nbpu_grid(0b10110)
    for s in SYNC_SYMBOLS:
        assert np.allclose(np.exp(1j * g.phase[s]), np.exp(1j * ON_PHASES))
    for s, b in zip(INFO_SYMBOLS, int_to_bits(0b10110)):
        ref = ON_PHASES if b else OFF_PHASES
        assert np.allclose(np.exp(1j * g.phase[s]), np.exp(1j * ref))
    assert np.allclose(g.phase[g.nrs_mask], NRS_PHASE)


def test_on_off_ratio_through_chain():
    assert on_off_ratio_db() >= ON_OFF_MIN_DB


def test_reconfig_info():
    assert list(ReconfigInfo(((0.005, 3),)).to_bits()) == [0, 0, 0, 1, 1]
    assert list(ReconfigInfo(((0.005, 3), (0.01, 4)), table_index=7).to_bits()) == [0, 0, 1, 1, 1]
    with pytest.raises(ValueError):
        ReconfigInfo(((0.01, 3), (0.005, 4)))
    with pytest.raises(ValueError):
        ReconfigInfo(((0.005, 3), (0.01, 4))).to_bits()


def test_ook_threshold_and_demod():
    thr = ook_threshold([10, 12], [0, 2])
    assert thr == 6
    assert list(demodulate_ook(np.array([[7, 5]]), thr)[0]) == [1, 0]
    assert list(demodulate_ook(np.array([[7, 5], [7, 5]]), np.array([8, 4]))[1]) == [1, 1]


def test_ber_high_snr_error_free_and_falls_with_snr():
    pts = ber_sweep([2.0, 6.0, 20.0], symbols=5000, seed=3)
    assert pts[0].ber > pts[1].ber > 0
    assert pts[2].errors == 0


def test_ber_deterministic_and_csv(tmp_path):
    a = ber_point(4.0, 2000, seed=9)
    b = ber_point(4.0, 2000, seed=9)
    assert a.errors == b.errors
    write_ber_csv([a], tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text().splitlines()[0] == "snr_db,symbols,errors,ber"
