from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrsurface import beam_mgmt as bm
from nrsurface.power import average_power

TC = Fraction(1, 480_000 * 4096)


def oracle_symbol_starts(n):
    """Integer-Tc walk over 120 kHz symbols: 16384 Tc useful, 1152 Tc CP, +1024 Tc every 56th."""
    t, out = 0, []
    for l in range(n):
        out.append(float(t * TC))
        t += 16384 + 1152 + (1024 if l % 56 == 0 else 0)
    return np.array(out)


def test_symbol_grid_matches_integer_oracle():
    ref = oracle_symbol_starts(300)
    assert np.allclose(bm.symbol_start(np.arange(300)), ref, atol=1e-13)
    assert bm.symbol_start(56) == pytest.approx(0.5e-3)


def test_ssb_times_case_d():
    starts = oracle_symbol_starts(19 * 28)
    groups = [n for n in range(19) if n not in (4, 9, 14)]
    first = sorted(b + 28 * n for n in groups for b in (4, 8, 16, 20))
    t = bm.ssb_start_times()
    assert len(t) == 64 and np.all(np.diff(t) > 0)
    assert np.allclose(t, starts[first], atol=1e-13)
    assert t[-1] < bm.SWEEP


@settings(max_examples=60)
@given(st.floats(0, 0.2))
def test_snap_lands_on_cp(t):
    s = bm.snap_to_cp(t)
    assert s >= t - 1e-12
    assert bm.cp_offset(s) < 1e-12
    assert s - t < bm.NR_CP_LONG + bm.NR_USEFUL


@given(st.floats(0, 0.1))
def test_half_subframe_mode(t):
    s = bm.snap_to_cp(t, "half_subframe")
    assert abs(s / 0.5e-3 - round(s / 0.5e-3)) < 1e-6


def test_unknown_cp_mode():
    with pytest.raises(ValueError):
        bm.cp_starts(0, 1e-3, "slot")
    with pytest.raises(ValueError):
        bm.PeriodLayout(cp_mode="slot")


def test_layout_assignments():
    lay = bm.PeriodLayout()
    assert list(lay.surface_ssbs(0)) == [0, 8, 16, 24, 32, 40, 48, 56]
    assert list(lay.surface_ssbs(3)) == [3, 11, 19, 27, 35, 43, 51, 59]
    with pytest.raises(ValueError):
        lay.surface_ssbs(8)
    assert lay.nbpu_time(0) == pytest.approx(19e-3)
    assert lay.nbpu_time(2) == pytest.approx(17e-3)
    assert lay.data_window == pytest.approx(15e-3)


def test_schedule_multi_equal_split():
    lay = bm.PeriodLayout()
    s = bm.schedule_multi({4: 2, 1: 5, 9: 0}, lay, surface_id=3)
    assert [e[2] for e in s.entries] == [5, 2, 0]
    assert all(e[1] == 3 for e in s.entries)
    for (t, _, _), w in zip(s.entries, (5e-3, 10e-3, 15e-3)):
        assert 0 <= t - w < 1e-5 and bm.cp_offset(t) < 1e-12
    assert s.beam_at(4e-3, 3) is None and s.beam_at(12e-3, 3) == 2 and s.beam_at(12e-3, 0) is None


def test_misaligned_entry_rejected():
    with pytest.raises(ValueError):
        bm.BeamSchedule(((5.0001e-3, 0, 1),))
    with pytest.raises(ValueError):
        bm.BeamSchedule(((6e-3, 0, 1), (5e-3, 0, 2)))


def test_schedule_table():
    tab = bm.ScheduleTable(size=2)
    assert tab.index((1, 2)) == 0 and tab.index((3, 4)) == 1 and tab.index([1, 2]) == 0
    assert tab.lookup(1) == (3, 4)
    with pytest.raises(ValueError):
        tab.index((5, 6))


def test_duty_cycle_timeline_bursts():
    tl = bm.duty_cycle_timeline()
    assert tl.bursts("reconfig_active") == 9
    assert tl.bursts("nbpu_active") == 1
    assert average_power(tl) * 1e6 == pytest.approx(243.3, abs=0.5)


def test_ue_motion():
    ue = bm.UE(0, ((0.0, 0.0), (3.0, 4.0), (3.0, 10.0)), speed=2.0)
    assert np.allclose(ue.position(0.0), (0, 0))
    assert np.allclose(ue.position(1.25), (1.5, 2.0))
    assert np.allclose(ue.position(4.0), (3.0, 7.0))
    assert np.allclose(ue.position(100.0), (3.0, 10.0))


def test_bearing_sign():
    s = bm.Surface(0)
    assert s.bearing((0.0, 5.0)) == pytest.approx(0.0)
    assert s.bearing((5.0, 5.0)) == pytest.approx(45.0)
    assert s.bearing((-5.0, 5.0)) == pytest.approx(-45.0)


def test_period_event_order():
    env = bm.Environment(ues=[bm.UE(0, ((3.0, 4.0),), 0.0)])
    ev, tr = bm.simulate(env, 3, seed=5)
    kinds = [e.event for e in ev if e.t < 0.02]
    assert kinds[:2] == ["reconfig_sweep", "ssb_measure"]
    assert kinds.count("reconfig_sweep") == 8
    i_rep = kinds.index("report_tx")
    assert "nbpu_rx" not in kinds        # report arrives after this period's NBPU
    later = [e for e in ev if 0.02 <= e.t < 0.04]
    names = [e.event for e in later]
    assert "report_rx" in names and "nbpu_rx" in names
    assert names.index("report_rx") < names.index("nbpu_rx")
    # data from period 2 on uses the reported beam
    data = [e for e in ev if e.event == "data"]
    assert data and all(e.t >= 0.04 for e in data)
    assert tr[2].served_snr[0] == pytest.approx(tr[2].optimum_snr[0])
    assert kinds[i_rep - 1] != "report_tx"


def test_report_delay_window():
    env = bm.Environment(ues=[bm.UE(0, ((3.0, 4.0),), 0.0)])
    arrivals = [e.t for e in bm.simulate(env, 20, seed=0)[0] if e.event == "report_rx"]
    assert len(arrivals) >= 15
    for a in arrivals:
        sweep_end = (int(a // 0.02) - 1) * 0.02 + 0.005
        assert 25e-3 - 1e-9 <= a - sweep_end <= 29e-3 + 1e-9


def test_nbpu_miss_keeps_old_schedule():
    env = bm.Environment(ues=[bm.UE(0, ((3.0, 4.0),), 0.0)])
    ev, tr = bm.simulate(env, 6, seed=0, nbpu_error_rate=1.0)
    assert not any(e.event == "nbpu_rx" for e in ev)
    assert any(e.event == "nbpu_miss" for e in ev)
    assert all(t.served_snr[0] == -np.inf for t in tr)


def test_recovery_time_definition():
    lay = bm.PeriodLayout()
    mk = lambda p, good: bm.PeriodTrace(p, {0: 10.0 if good else 0.0}, {0: 10.0}, {})
    traces = [mk(0, True), mk(1, False), mk(2, True), mk(3, False), mk(4, True), mk(5, True)]
    assert bm.recovery_time(traces, 0, 0.021, lay) == pytest.approx(4 * 0.02 + 0.005 - 0.021)
    assert bm.recovery_time(traces[:4], 0, 0.0, lay) == np.inf


def test_mirror_gain_positive():
    pts, g = bm.mirror_gain_grid(bm.corner_grid())
    # points steeper than the steering limit are dropped
    ang = [abs(bm.Surface(0).bearing(p)) for p in bm.corner_grid()]
    assert len(pts) == sum(a <= 70 for a in ang) == 17
    assert np.all(g > 10)


def test_csv_writers(tmp_path):
    env = bm.Environment(ues=[bm.UE(0, ((3.0, 4.0),), 0.0)])
    ev, tr = bm.simulate(env, 3)
    bm.write_events_csv(ev, tmp_path / "e.csv")
    bm.write_trace_csv(tr, tmp_path / "t.csv")
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "t,event,surface,beam,ue,snr_db"
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert rows[0] == "period,ue,surface,beam,served_snr_db,optimum_snr_db" and len(rows) == 4
