import numpy as np
import pytest
from hypothesis import given, strategies as st

from nrsurface.power import (STATES, PowerTable, PowerTimeline, Segment, average_power, battery_life,
                             reduction_factor, state_energy, write_power_csv)


def test_component_sums_checked():
    with pytest.raises(ValueError):
        PowerTable(nbpu_active=3.0e-3)
    with pytest.raises(ValueError):
        PowerTable(idle_components=(("standby", 1e-6),))


def test_unknown_state():
    with pytest.raises(ValueError):
        PowerTable().power("sleep")


def test_empty_timeline_is_idle():
    assert average_power(PowerTimeline()) == pytest.approx(6.4e-6)


def test_hand_computed_average():
    tl = PowerTimeline([Segment("nbpu_active", 1e-3, 1e-3), Segment("reconfig_active", 5e-3, 2e-3)], 20e-3)
    exp = (2.4e-3 * 1e-3 + 1.67e-3 * 2e-3 + 6.4e-6 * 17e-3) / 20e-3
    assert average_power(tl) == pytest.approx(exp)
    assert sum(state_energy(tl).values()) == pytest.approx(exp * 20e-3)
    assert reduction_factor(tl, "nbpu_active") == pytest.approx(20.0)


def test_battery_life():
    assert battery_life(243.3e-6) == pytest.approx(4.5 / 243.3e-6 / 8766)
    assert battery_life(243.3e-6) == pytest.approx(2.11, abs=0.01)
    with pytest.raises(ValueError):
        battery_life(0.0)


def test_overlap_and_span_rejected():
    with pytest.raises(ValueError):
        PowerTimeline([Segment("idle", 0, 2e-3), Segment("nbpu_active", 1e-3, 1e-3)]).validate()
    with pytest.raises(ValueError):
        PowerTimeline([Segment("nbpu_active", 19.5e-3, 1e-3)]).validate()


@given(st.lists(st.tuples(st.sampled_from(STATES), st.floats(0, 1.0)), max_size=8))
def test_average_between_state_extremes(parts):
    # lay segments back to back, scaled to fit one period
    tot = sum(d for _, d in parts) or 1.0
    scale = 20e-3 / max(tot, 1.0)
    t, segs = 0.0, []
    for s, d in parts:
        segs.append(Segment(s, t, d * scale))
        t += d * scale
    tl = PowerTimeline(segs)
    tl.validate()
    p = [PowerTable().power(s) for s in STATES]
    assert min(p) - 1e-12 <= average_power(tl) <= max(p) + 1e-12


def test_csv(tmp_path):
    tl = PowerTimeline([Segment("nbpu_active", 0, 1e-3)])
    write_power_csv(tl, tmp_path / "p.csv")
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "state,duration_ms,energy_uj,avg_uw" and rows[-1].startswith("total,")
    assert float(rows[-1].split(",")[3]) == pytest.approx(average_power(tl) * 1e6, abs=1e-5)
