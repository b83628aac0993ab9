"""State-based power accounting and battery life."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PERIOD = 20e-3
HOURS_PER_YEAR = 8766.0
AA_CAPACITY_WH = 4.5
STATES = ("nbpu_active", "reconfig_active", "idle")


@dataclass(frozen=True)
class PowerTable:
    """Per-state draw in watts, with the component breakdown it is built from."""

    nbpu_components: tuple = (("amplifier", 655e-6), ("adc", 294e-6), ("sync_timer", 111e-6),
                              ("sync_decode_logic", 1.36e-3))
    nbpu_active: float = 2.4e-3
    reconfig_active: float = 1.67e-3
    idle_components: tuple = (("standby", 5.9e-6), ("timer", 0.5e-6), ("cell_leakage", 0.072e-6))
    idle: float = 6.4e-6
    # duty-cycled averages and reduction factors quoted for the prototype
    duty_cycled_nbpu: float = 119.3e-6
    duty_cycled_reconfig: float = 117e-6
    nbpu_reduction: float = 20.4
    reconfig_reduction: float = 13.9

    def __post_init__(self):
        for total, parts in ((self.nbpu_active, self.nbpu_components), (self.idle, self.idle_components)):
            s = sum(p for _, p in parts)
            if abs(s - total) > 0.02 * total:
                raise ValueError(f"components sum to {s:.4g} W, total is {total:.4g} W")

    def power(self, state: str) -> float:
        if state not in STATES:
            raise ValueError(f"unknown state {state!r}")
        return getattr(self, state)


@dataclass(frozen=True)
class Segment:
    state: str
    start: float        # seconds from the period start
    duration: float
    wake: bool = False  # MCU wake-up lead, drawn at the power of ``state``


@dataclass
class PowerTimeline:
    """Labelled segments covering ``n_periods`` whole periods (gaps count as idle)."""

    segments: list = field(default_factory=list)
    period: float = PERIOD
    n_periods: int = 1

    @property
    def span(self) -> float:
        return self.period * self.n_periods

    def durations(self) -> dict:
        """Total seconds spent in each state, idle filling whatever is not covered."""
        out = {s: 0.0 for s in STATES}
        for seg in self.segments:
            out[seg.state] += seg.duration
        out["idle"] += self.span - sum(seg.duration for seg in self.segments)
        return out

    def active_fraction(self) -> float:
        d = self.durations()
        return (d["nbpu_active"] + d["reconfig_active"]) / self.span

    def validate(self) -> None:
        segs = sorted(self.segments, key=lambda s: s.start)
        for a, b in zip(segs, segs[1:]):
            if b.start < a.start + a.duration - 1e-12:
                raise ValueError(f"segments overlap at {b.start:.6g} s")
        if segs and (segs[0].start < 0 or segs[-1].start + segs[-1].duration > self.span + 1e-12):
            raise ValueError("segments extend past the timeline span")

    def bursts(self, state: str) -> int:
        """Number of separate active bursts (a wake lead and its segment count once)."""
        return sum(1 for s in self.segments if s.state == state and not s.wake)


def average_power(timeline: PowerTimeline, table: PowerTable = PowerTable()) -> float:
    """Mean draw in watts: sum(power * duration) / span."""
    if timeline.span <= 0:
        raise ValueError("timeline must span at least one whole period")
    energy = sum(table.power(s) * d for s, d in timeline.durations().items())
    return energy / timeline.span


def state_energy(timeline: PowerTimeline, table: PowerTable = PowerTable()) -> dict:
    """Joules per state over the whole timeline."""
    return {s: table.power(s) * d for s, d in timeline.durations().items()}


def battery_life(avg_watts: float, capacity_wh: float = AA_CAPACITY_WH) -> float:
    """Years of operation from ``capacity_wh`` at a constant ``avg_watts`` draw."""
    if avg_watts <= 0 or capacity_wh <= 0:
        raise ValueError("power and capacity must be positive")
    return capacity_wh / avg_watts / HOURS_PER_YEAR


def reduction_factor(timeline: PowerTimeline, state: str) -> float:
    """Active draw over duty-cycled contribution, i.e. span / time spent in ``state``."""
    d = timeline.durations()[state]
    return timeline.span / d if d > 0 else np.inf


def write_power_csv(timeline: PowerTimeline, path, table: PowerTable = PowerTable()) -> None:
    """One row per state: state, duration_ms, energy_uj, avg_uw (contribution to the mean)."""
    d = timeline.durations()
    with open(path, "w") as f:
        f.write("state,duration_ms,energy_uj,avg_uw\n")
        for s in STATES:
            e = table.power(s) * d[s]
            f.write(f"{s},{d[s] * 1e3:.6f},{e * 1e6:.6f},{e / timeline.span * 1e6:.6f}\n")
        tot = average_power(timeline, table)
        f.write(f"total,{timeline.span * 1e3:.6f},{tot * timeline.span * 1e6:.6f},{tot * 1e6:.6f}\n")
