import numpy as np
import pytest
from hypothesis import given, strategies as st

from nrsurface.sync import (FR2_SYMBOL_CP_NS, PEAK_SLOT, SLOT_NS, SLOTS, EtsConfig, SyncExperiment, TrackerConfig,
                            analytic_template, chain_template, covered_after, frame_slots, free_run_errors,
                            matched_filter_window, minimal_cover_frames, run_sync_trials, timing_budget_ok,
                            window_energy_fraction, write_sync_csv)


def brute_force_cover(stride, per_frame=5, slots=256):
    """Smallest N by residue enumeration: slot r is hit once (stride*n + i) = r mod slots for some n < N."""
    first_hit = {}
    for n in range(4 * slots):
        for i in range(per_frame):
            first_hit.setdefault((stride * n + i) % slots, n)
        if len(first_hit) == slots:
            return max(first_hit.values()) + 1


def test_slot_is_one_sample_at_base_rate():
    assert SLOT_NS == pytest.approx(1e9 / 3.84e6)


@pytest.mark.parametrize("stride,expected", [(13, 59), (23, 78)])
def test_cover_frames_frozen(stride, expected):
    assert minimal_cover_frames(stride) == expected == brute_force_cover(stride)
    assert len(covered_after(expected, stride)) == SLOTS
    assert len(covered_after(expected - 1, stride)) < SLOTS


@given(st.integers(1, 255).filter(lambda s: s % 2 == 1))
def test_odd_strides_cover(stride):
    assert minimal_cover_frames(stride) == brute_force_cover(stride)


def test_even_stride_rejected():
    with pytest.raises(ValueError):
        EtsConfig(stride=2)


def test_frame_slots():
    assert list(frame_slots(2)) == [26, 27, 28, 29, 30]
    assert list(frame_slots(20)) == [(260 + i) % 256 for i in range(5)]


def test_template_peak_and_window_energy():
    t = analytic_template()
    assert np.argmax(t) == PEAK_SLOT and t[PEAK_SLOT] == pytest.approx(144)
    f = [window_energy_fraction(w) for w in (1, 3, 5)]
    assert 0 < f[0] < f[1] < f[2] < 1


def test_chain_template_peaks_mid_symbol():
    tmpl = chain_template()
    q, m = 16, 160
    for row in tmpl:
        # the useful part of each sync symbol has its maximum near slot 128
        useful = row[m * q:(m + SLOTS) * q]
        assert abs(np.argmax(useful) / q - PEAK_SLOT) < 2
        assert useful.max() == pytest.approx(row.max(), rel=0.02)


def test_matched_filter_finds_shift():
    t = analytic_template()
    x = t[PEAK_SLOT - 3:PEAK_SLOT + 2]      # peak lands one slot after the window centre
    score, off = matched_filter_window(x, t, PEAK_SLOT, 3, 1)
    assert off == 1 and score == pytest.approx(1)


def test_free_run_and_budget():
    assert list(free_run_errors(10, 20, 3)) == [10, 30, 50, 70]
    assert timing_budget_ok(574)
    assert not timing_budget_ok(575)
    assert timing_budget_ok(835, cp_ns=1106, penalty_ns=260)
    assert not timing_budget_ok(836, cp_ns=1106, penalty_ns=260)
    assert FR2_SYMBOL_CP_NS == 585


def test_tracking_converges_at_high_snr_and_is_deterministic():
    exp = SyncExperiment(trials=24, track_periods=30)
    a = run_sync_trials(30.0, exp, seed=4)
    b = run_sync_trials(30.0, exp, seed=4)
    assert np.array_equal(a.errors_ns, b.errors_ns)
    assert a.frames_bootstrap == 59
    assert a.max_ns < 60


def test_analytic_template_option_runs():
    exp = SyncExperiment(trials=8, track_periods=10, tracker=TrackerConfig(template="analytic"))
    r = run_sync_trials(20.0, exp, seed=1)
    assert np.all(np.isfinite(r.errors_ns))


def test_sync_csv(tmp_path):
    r = run_sync_trials(20.0, SyncExperiment(trials=4, track_periods=5), seed=0)
    write_sync_csv([r], tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "snr_db,mean_error_ns,p95_error_ns" and len(lines) == 2
