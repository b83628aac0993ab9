import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrsurface.waveform import (BASE_RATE, DATA_SYMBOLS, N_SUBCARRIERS, N_SYMBOLS, NRS_SYMBOLS, QPSK_PHASES,
                                ResourceGrid, bits_to_phases, build_frame_schedule, demodulate_subframe,
                                empty_grid, modulate_subframe, modulate_symbol, nrs_mask, phases_to_bits,
                                qpsk_phase, read_iq, snap_qpsk, symbol_layout, write_grid_csv, write_iq)


def random_grid(seed):
    rng = np.random.default_rng(seed)
    g = empty_grid()
    data = ~g.nrs_mask
    g.phase[data] = QPSK_PHASES[rng.integers(0, 4, data.sum())]
    return g


@given(st.lists(st.integers(0, 1), min_size=2, max_size=64).filter(lambda b: len(b) % 2 == 0))
def test_qpsk_bits_round_trip(bits):
    assert np.array_equal(phases_to_bits(bits_to_phases(bits)), bits)


def test_qpsk_gray_map():
    assert qpsk_phase(0, 0) == pytest.approx(np.pi / 4)
    assert qpsk_phase(1, 0) == pytest.approx(3 * np.pi / 4)
    assert qpsk_phase(1, 1) == pytest.approx(5 * np.pi / 4)
    assert qpsk_phase(0, 1) == pytest.approx(7 * np.pi / 4)
    with pytest.raises(ValueError):
        qpsk_phase(2, 0)


@given(st.floats(-10, 10))
def test_snap_is_idempotent(phi):
    once = snap_qpsk([phi])
    assert np.allclose(snap_qpsk(once), once)


def test_layout_at_base_rate():
    lay = symbol_layout(BASE_RATE)
    assert lay.n_fft == 256
    assert lay.cp[0] == lay.cp[7] == 20 and lay.cp[1] == 18
    # 2 long CPs + 12 short CPs + 14 useful parts = one 1 ms subframe
    assert lay.length == 2 * 20 + 12 * 18 + 14 * 256 == 3840
    with pytest.raises(ValueError):
        symbol_layout(1e6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([3.84e6, 7.68e6, 1.92e6]))
def test_modulate_demodulate_round_trip(seed, rate):
    g = random_grid(seed)
    sig = modulate_subframe(g, rate)
    assert np.allclose(demodulate_subframe(sig), g.values(), atol=1e-9)


def test_cyclic_prefix_copies_symbol_tail():
    sig = modulate_subframe(random_grid(3))
    lay = symbol_layout()
    for s in range(N_SYMBOLS):
        cp = sig.samples[lay.start[s]:lay.useful_start[s]]
        tail = sig.samples[lay.useful_start[s] + lay.n_fft - lay.cp[s]:lay.useful_start[s] + lay.n_fft]
        assert np.allclose(cp, tail)


def test_symbol_power_is_twelve():
    x = modulate_symbol(QPSK_PHASES[np.arange(12) % 4])
    assert np.mean(np.abs(x) ** 2) == pytest.approx(N_SUBCARRIERS)


def test_default_nrs_layout():
    m = nrs_mask()
    assert set(np.flatnonzero(m.any(axis=1))) == set(NRS_SYMBOLS)
    assert m.sum() == 8
    assert len(DATA_SYMBOLS) == 10
    empty_grid().validate()


def test_grid_validation():
    g = empty_grid()
    g.phase[0, 0] = 0.1
    with pytest.raises(ValueError):
        g.validate()
    with pytest.raises(ValueError):
        ResourceGrid(np.zeros((13, 12)), np.zeros((14, 12)))


def test_iq_file_is_little_endian_float32(tmp_path):
    sig = modulate_subframe(random_grid(1))
    p = tmp_path / "x.iq"
    write_iq(p, sig)
    raw = p.read_bytes()
    assert len(raw) == 8 * len(sig.samples)
    assert np.frombuffer(raw[:4], "<f4")[0] == np.float32(sig.samples[0].real)
    back = read_iq(p, sig.sample_rate)
    assert np.allclose(back.samples, sig.samples, atol=1e-4)


def test_grid_csv(tmp_path):
    p = tmp_path / "g.csv"
    write_grid_csv(p, empty_grid())
    lines = p.read_text().splitlines()
    assert lines[0] == "symbol,subcarrier,phase,is_nrs"
    assert len(lines) == 1 + N_SYMBOLS * N_SUBCARRIERS
    assert sum(int(l.split(",")[3]) for l in lines[1:]) == 8


def test_frame_schedule():
    fs = build_frame_schedule((19, 0))
    assert fs.nbpu_subframes == (0, 19)
    assert np.allclose(fs.nbpu_start_times(2), [0, 19e-3, 20e-3, 39e-3])
    with pytest.raises(ValueError):
        build_frame_schedule((20,))
    with pytest.raises(ValueError):
        build_frame_schedule((1, 1))
