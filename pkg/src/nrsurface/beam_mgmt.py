"""Discrete-event simulation of the 20 ms beam-management loop with surface reconfiguration.

Per period n (times relative to the period start):

* 0-5 ms: SSB sweep.  Each surface switches to codeword i at the CP start of
  its i-th SSB; every UE measures all surface SSBs and picks the best one.
* end of sweep + report delay (25-29 ms): the report reaches the BS, i.e.
  inside period n+1.
* data window 5-20 ms: the schedule decoded from the previous NBPU is
  executed at its CP-aligned entry times.
* NBPU subframe (default the last one, 19-20 ms): the BS packs the newest
  reports into 5 info bits per surface; the surface applies them in period
  n+1.  A missed NBPU keeps the previous schedule.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .metasurface import C_LIGHT, SurfaceConfig, _af_1d, steer_codebook
from .power import PowerTimeline, Segment

PERIOD = 20e-3
SWEEP = 5e-3
SUBFRAME = 1e-3
NR_SCS = 120e3
NR_USEFUL = 1 / NR_SCS
NR_CP = 585.9375e-9                   # 144 * 64 Tc / 8 at 120 kHz
NR_CP_LONG = NR_CP + 520.83333e-9     # extra 16 * 64 Tc at every half subframe
HALF_SUBFRAME = 0.5e-3
SYMBOLS_PER_HALF = 56
CP_MODES = {"symbol": NR_CP, "half_subframe": NR_CP_LONG}
# first symbols of the 64 SSBs in a 120 kHz (case D) burst
_CASE_D_GROUPS = [n for n in range(19) if n not in (4, 9, 14)]


# -- NR timing grid --------------------------------------------------------

def symbol_start(index) -> np.ndarray:
    """Start time (CP start) of FR2 symbol ``index`` counted from the period start."""
    index = np.asarray(index)
    half, k = np.divmod(index, SYMBOLS_PER_HALF)
    return half * HALF_SUBFRAME + np.where(k > 0, NR_CP_LONG + NR_USEFUL + (k - 1) * (NR_CP + NR_USEFUL), 0.0)


def cp_starts(t0: float, t1: float, mode: str = "symbol") -> np.ndarray:
    """CP start instants in [t0, t1) for the alignment mode."""
    if mode not in CP_MODES:
        raise ValueError(f"unknown CP mode {mode!r}")
    if mode == "half_subframe":
        k = np.arange(math.ceil(t0 / HALF_SUBFRAME - 1e-9), math.ceil(t1 / HALF_SUBFRAME - 1e-9))
        return k * HALF_SUBFRAME
    sym_len = (HALF_SUBFRAME - NR_CP_LONG + NR_CP) / SYMBOLS_PER_HALF
    first = max(int(t0 / sym_len) - 2, 0)
    idx = np.arange(first, int(t1 / sym_len) + 2)
    t = symbol_start(idx)
    return t[(t >= t0 - 1e-12) & (t < t1)]


def snap_to_cp(t: float, mode: str = "symbol") -> float:
    """Earliest CP start at or after ``t``."""
    period_start = math.floor(t / PERIOD + 1e-12) * PERIOD
    cands = cp_starts(t - period_start - 1e-12, t - period_start + 2 * HALF_SUBFRAME, mode)
    return float(period_start + cands[0])


def cp_offset(t: float, mode: str = "symbol") -> float:
    """Distance from ``t`` to the most recent CP start (0 when aligned)."""
    period_start = math.floor(t / PERIOD + 1e-12) * PERIOD
    rel = t - period_start
    c = cp_starts(max(rel - 2 * HALF_SUBFRAME, 0.0), rel + 1e-12, mode)
    return float(rel - c[-1])


def ssb_start_times(count: int = 64) -> np.ndarray:
    """CP start of the first symbol of each SSB of a 120 kHz burst."""
    first = [base + 28 * n for n in _CASE_D_GROUPS for base in (4, 8, 16, 20)]
    return symbol_start(np.array(first[:count]))


# -- layout, geometry ------------------------------------------------------

@dataclass(frozen=True)
class PeriodLayout:
    period: float = PERIOD
    sweep_window: float = SWEEP
    ssb_count: int = 64
    surface_ssb_count: int = 8
    report_delay: tuple = (25e-3, 29e-3)
    nbpu_subframe: int = 19
    wake_lead: float = 10e-6
    reconfig_hold: float = 145e-6
    nbpu_duration: float = SUBFRAME
    cp_mode: str = "symbol"

    def __post_init__(self):
        if self.surface_ssb_count > self.ssb_count:
            raise ValueError("surface_ssb_count exceeds ssb_count")
        if not 0 < self.sweep_window < self.period:
            raise ValueError("sweep window must lie inside the period")
        lo, hi = self.report_delay
        if not 0 <= lo <= hi:
            raise ValueError("report delay range must be ordered and non-negative")
        if self.cp_mode not in CP_MODES:
            raise ValueError(f"unknown CP mode {self.cp_mode!r}")

    @property
    def data_window(self) -> float:
        return self.period - self.sweep_window

    def surface_ssbs(self, surface_index: int = 0) -> np.ndarray:
        """SSB indices given to a surface: spread through the burst, offset per surface."""
        step = self.ssb_count // self.surface_ssb_count
        idx = surface_index + step * np.arange(self.surface_ssb_count)
        if idx.max() >= self.ssb_count:
            raise ValueError("not enough SSBs for this surface")
        return idx

    def nbpu_time(self, surface_index: int = 0) -> float:
        return (self.nbpu_subframe - surface_index) * SUBFRAME


@dataclass(frozen=True)
class LinkParams:
    tx_power_dbm: float = 20.0
    tx_gain_dbi: float = 20.0
    rx_gain_dbi: float = 10.0
    noise_dbm: float = -90.0          # 50 MHz, 7 dB noise figure
    carrier: float = 24.125e9
    path_exponent: float = 2.0

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.carrier

    def path_loss_db(self, d: float) -> float:
        return 20 * np.log10(4 * np.pi / self.wavelength) + 10 * self.path_exponent * np.log10(max(d, 1e-3))


@dataclass(frozen=True)
class Surface:
    surface_id: int
    position: tuple = (0.0, 0.0)
    normal_deg: float = 90.0          # world bearing of the surface normal
    cfg: SurfaceConfig = SurfaceConfig()
    codebook_deg: tuple = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0)
    mirror: bool = False              # flat metal plate instead of a reconfigurable surface

    def bearing(self, point) -> float:
        """Angle of ``point`` from the surface normal, degrees in (-180, 180]; positive is clockwise."""
        dx, dy = point[0] - self.position[0], point[1] - self.position[1]
        world = np.degrees(np.arctan2(dy, dx))
        return float((self.normal_deg - world + 180) % 360 - 180)

    def distance(self, point) -> float:
        return float(np.hypot(point[0] - self.position[0], point[1] - self.position[1]))


@dataclass
class UE:
    ue_id: int
    waypoints: tuple = ((5.0, 5.0),)
    speed: float = 1.0
    antennas: tuple = ((0.0, 0.0),)   # receive points relative to the UE (distinct arrival paths)

    def position(self, t: float) -> np.ndarray:
        pts = np.asarray(self.waypoints, dtype=float)
        if len(pts) == 1 or self.speed <= 0:
            return pts[0]
        seg = np.hypot(*np.diff(pts, axis=0).T)
        s = min(self.speed * t, seg.sum())
        k = int(np.searchsorted(np.cumsum(seg), s, side="right"))
        if k >= len(seg):
            return pts[-1]
        done = s - (np.cumsum(seg)[k - 1] if k else 0.0)
        return pts[k] + (pts[k + 1] - pts[k]) * done / seg[k]


@dataclass(frozen=True)
class Blockage:
    start: float
    end: float
    ue_id: int
    antenna: int | None = None        # None blocks every antenna of the UE
    attenuation_db: float = 30.0

    def active(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass
class Environment:
    bs_position: tuple = (0.0, 13.0)
    surfaces: list = field(default_factory=lambda: [Surface(0)])
    ues: list = field(default_factory=lambda: [UE(0)])
    blockages: list = field(default_factory=list)
    link: LinkParams = LinkParams()

    def surface(self, surface_id: int) -> Surface:
        for s in self.surfaces:
            if s.surface_id == surface_id:
                return s
        raise KeyError(surface_id)

    def ue(self, ue_id: int) -> UE:
        for u in self.ues:
            if u.ue_id == ue_id:
                return u
        raise KeyError(ue_id)

    def blockage_db(self, ue_id: int, antenna: int, t: float) -> float:
        return sum(b.attenuation_db for b in self.blockages
                   if b.ue_id == ue_id and b.active(t) and b.antenna in (None, antenna))


_CODEBOOKS: dict = {}


def surface_codebook(surface: Surface, incident_deg: float) -> np.ndarray:
    """Bit patterns (beam_id x columns) for the surface's codebook targets."""
    key = (surface.cfg, surface.codebook_deg, round(incident_deg, 6))
    if key not in _CODEBOOKS:
        _CODEBOOKS[key] = np.stack([steer_codebook(t, incident_deg, surface.cfg) for t in surface.codebook_deg])
    return _CODEBOOKS[key]


def reflection_gain_db(surface: Surface, bits, incident_deg: float, out_deg: float) -> float:
    """Bistatic gain of the whole aperture towards ``out_deg``: rows * |column AF| and per-cell aperture."""
    if abs(out_deg) >= 90 or abs(incident_deg) >= 90:
        return -np.inf
    cfg = surface.cfg
    if surface.mirror:
        cfg = replace(cfg, amplitude=1.0)
        bits = np.zeros(cfg.columns, dtype=np.uint8)
    af = abs(_af_1d(cfg, bits, np.array([out_deg]), incident_deg)[0]) * cfg.rows
    cell_gain = 4 * np.pi * cfg.d * cfg.d / cfg.wavelength ** 2
    return float(20 * np.log10(max(af, 1e-30)) + 20 * np.log10(cell_gain))


def ue_snr(env: Environment, surface_id: int, bits, ue_id: int, t: float = 0.0) -> float:
    """SNR (dB) at a UE served via one surface; the direct BS-UE path is blocked.

    BS -> surface and surface -> UE are log-distance legs; the surface adds
    its array gain towards the UE.  The best unblocked UE antenna is used.
    """
    s = env.surface(surface_id)
    ue = env.ue(ue_id)
    lk = env.link
    inc = s.bearing(env.bs_position)
    d1 = s.distance(env.bs_position)
    best = -np.inf
    for a, off in enumerate(ue.antennas):
        p = ue.position(t) + np.asarray(off)
        g = reflection_gain_db(s, bits, inc, s.bearing(p))
        snr = (lk.tx_power_dbm + lk.tx_gain_dbi + lk.rx_gain_dbi - lk.path_loss_db(d1) - lk.path_loss_db(s.distance(p))
               + g - lk.noise_dbm - env.blockage_db(ue_id, a, t))
        best = max(best, snr)
    return float(best)


def beam_snrs(env: Environment, surface_id: int, ue_id: int, t: float = 0.0) -> np.ndarray:
    """SNR of every codebook beam of a surface at one UE."""
    s = env.surface(surface_id)
    book = surface_codebook(s, s.bearing(env.bs_position))
    return np.array([ue_snr(env, surface_id, b, ue_id, t) for b in book])


# -- schedules -------------------------------------------------------------

@dataclass(frozen=True)
class BeamSchedule:
    """Reconfiguration entries (time within the period, surface_id, beam_id), CP-aligned."""

    entries: tuple = ()
    alignment: str = "symbol"

    def __post_init__(self):
        times = [e[0] for e in self.entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("entry times must be strictly increasing")
        for t in times:
            if cp_offset(t, self.alignment) > 1e-12:
                raise ValueError(f"entry at {t * 1e3:.6f} ms is not on a {self.alignment} CP boundary")

    def beam_at(self, t: float, surface_id: int):
        """Beam in force at time ``t`` (None before the first entry)."""
        beam = None
        for te, sid, b in self.entries:
            if sid == surface_id and te <= t + 1e-12:
                beam = b
        return beam


class ScheduleTable:
    """Pre-shared table mapping multi-entry schedules to 5-bit indices."""

    def __init__(self, size: int = 32):
        self.size = size
        self.rows: list = []

    def index(self, beams: tuple) -> int:
        beams = tuple(int(b) for b in beams)
        if beams not in self.rows:
            if len(self.rows) == self.size:
                raise ValueError("schedule table full")
            self.rows.append(beams)
        return self.rows.index(beams)

    def lookup(self, index: int) -> tuple:
        return self.rows[index]


def schedule_multi(reports: dict, layout: PeriodLayout = PeriodLayout(), surface_id: int = 0) -> BeamSchedule:
    """Split the data window equally among the reporting UEs (ascending UE id).

    ``reports`` maps ue_id -> beam_id.  One entry per UE at the CP-aligned
    start of its share.
    """
    if not reports:
        return BeamSchedule((), layout.cp_mode)
    ues = sorted(reports)
    share = layout.data_window / len(ues)
    entries = []
    for i, u in enumerate(ues):
        t = snap_to_cp(layout.sweep_window + i * share, layout.cp_mode)
        entries.append((t, surface_id, int(reports[u])))
    return BeamSchedule(tuple(entries), layout.cp_mode)


def ue_windows(reports: dict, layout: PeriodLayout = PeriodLayout()) -> dict:
    """Data window (start, end) of each UE under the equal split."""
    ues = sorted(reports)
    if not ues:
        return {}
    share = layout.data_window / len(ues)
    return {u: (layout.sweep_window + i * share, layout.sweep_window + (i + 1) * share) for i, u in enumerate(ues)}


# -- simulation ------------------------------------------------------------

@dataclass
class Report:
    arrival: float
    ue_id: int
    ssb: int
    surface_id: int
    beam_id: int
    snr_db: float


@dataclass
class SimState:
    period: int = 0
    schedules: dict = field(default_factory=dict)     # surface_id -> (BeamSchedule, ue order)
    reports: list = field(default_factory=list)
    latest: dict = field(default_factory=dict)        # ue_id -> newest Report known to the BS
    tables: dict = field(default_factory=dict)        # surface_id -> ScheduleTable
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))


@dataclass
class Event:
    t: float
    event: str
    surface: int | None = None
    beam: int | None = None
    ue: int | None = None
    snr_db: float | None = None


@dataclass
class PeriodTrace:
    period: int
    served_snr: dict          # ue_id -> SNR during its data window
    optimum_snr: dict         # ue_id -> best achievable over all surfaces/beams
    beams: dict               # ue_id -> (surface, beam) applied in its window


def _ssb_owner(env: Environment, layout: PeriodLayout):
    """SSB index -> (surface_id, beam_id) for every surface SSB."""
    out = {}
    for k, s in enumerate(env.surfaces):
        for beam, ssb in enumerate(layout.surface_ssbs(k)):
            if beam < len(s.codebook_deg):
                out[int(ssb)] = (s.surface_id, beam)
    return out


def run_period(state: SimState, env: Environment, layout: PeriodLayout = PeriodLayout(),
               nbpu_error_rate: float = 0.0):
    """Simulate one period; returns (events, trace, next state)."""
    T0 = state.period * layout.period
    ev: list = []
    owner = _ssb_owner(env, layout)
    ssb_t = ssb_start_times(layout.ssb_count)

    # sweep: surfaces cycle their codewords, UEs measure
    meas = {u.ue_id: [] for u in env.ues}
    for ssb, (sid, beam) in sorted(owner.items(), key=lambda kv: ssb_t[kv[0]]):
        t = T0 + ssb_t[ssb]
        ev.append(Event(t, "reconfig_sweep", sid, beam))
        s = env.surface(sid)
        bits = surface_codebook(s, s.bearing(env.bs_position))[beam]
        for u in env.ues:
            snr = ue_snr(env, sid, bits, u.ue_id, t)
            meas[u.ue_id].append((snr, ssb, sid, beam))
            ev.append(Event(t, "ssb_measure", sid, beam, u.ue_id, snr))
    for u in env.ues:
        snr, ssb, sid, beam = max(meas[u.ue_id], key=lambda m: (m[0], -m[1]))
        delay = state.rng.uniform(*layout.report_delay)
        arr = T0 + layout.sweep_window + delay
        state.reports.append(Report(arr, u.ue_id, ssb, sid, beam, snr))
        ev.append(Event(T0 + layout.sweep_window, "report_tx", sid, beam, u.ue_id, snr))

    # data window: execute the decoded schedules
    served, optimum, applied = {}, {}, {}
    for sid, (sched, order) in state.schedules.items():
        for te, _, beam in sched.entries:
            ev.append(Event(T0 + te, "reconfig_data", sid, beam))
        for u, (w0, w1) in ue_windows({o: 0 for o in order}, layout).items():
            beam = sched.beam_at(w0, sid)
            s = env.surface(sid)
            bits = surface_codebook(s, s.bearing(env.bs_position))[beam]
            tm = T0 + 0.5 * (w0 + w1)
            served[u] = ue_snr(env, sid, bits, u, tm)
            applied[u] = (sid, beam)
            ev.append(Event(T0 + w0, "data", sid, beam, u, served[u]))
    for u in env.ues:
        w = ue_windows({o: 0 for o in _order_for(state, u.ue_id)}, layout).get(u.ue_id,
                                                                              (layout.sweep_window, layout.period))
        tm = T0 + 0.5 * (w[0] + w[1])
        optimum[u.ue_id] = max(beam_snrs(env, s.surface_id, u.ue_id, tm).max() for s in env.surfaces)
        served.setdefault(u.ue_id, -np.inf)

    # reports reaching the BS before each NBPU, then NBPU delivery
    new_sched = dict(state.schedules)
    for k, s in enumerate(env.surfaces):
        t_nbpu = T0 + layout.nbpu_time(k)
        for r in state.reports:
            if r.arrival <= t_nbpu and (r.ue_id not in state.latest or state.latest[r.ue_id].arrival < r.arrival):
                state.latest[r.ue_id] = r
                ev.append(Event(r.arrival, "report_rx", r.surface_id, r.beam_id, r.ue_id, r.snr_db))
        mine = {u: r.beam_id for u, r in state.latest.items() if r.surface_id == s.surface_id}
        if not mine:
            continue
        sched = schedule_multi(mine, layout, s.surface_id)
        table = state.tables.setdefault(s.surface_id, ScheduleTable())
        info = sched.entries[0][2] if len(sched.entries) == 1 else table.index([e[2] for e in sched.entries])
        if state.rng.random() < nbpu_error_rate:
            ev.append(Event(t_nbpu, "nbpu_miss", s.surface_id))
            continue
        ev.append(Event(t_nbpu, "nbpu_rx", s.surface_id, int(info)))
        new_sched[s.surface_id] = (sched, tuple(sorted(mine)))
    state.reports = [r for r in state.reports if r.arrival > T0 + layout.period]
    ev.sort(key=lambda e: e.t)
    trace = PeriodTrace(state.period, served, optimum, applied)
    nxt = SimState(state.period + 1, new_sched, state.reports, state.latest, state.tables, state.rng)
    return ev, trace, nxt


def _order_for(state: SimState, ue_id: int) -> tuple:
    for sched, order in state.schedules.values():
        if ue_id in order:
            return order
    return (ue_id,)


def simulate(env: Environment, n_periods: int, layout: PeriodLayout = PeriodLayout(), seed: int = 0,
             nbpu_error_rate: float = 0.0):
    """Run ``n_periods`` periods; returns (events, traces)."""
    state = SimState(rng=np.random.default_rng(seed))
    events, traces = [], []
    for _ in range(n_periods):
        ev, tr, state = run_period(state, env, layout, nbpu_error_rate)
        events.extend(ev)
        traces.append(tr)
    return events, traces


def recovery_time(traces, ue_id: int, t_change: float, layout: PeriodLayout = PeriodLayout(),
                  tol_db: float = 1.0) -> float:
    """Seconds from ``t_change`` until the served SNR is within ``tol_db`` of the optimum for good."""
    ok_from = None
    for tr in traces:
        t_data = tr.period * layout.period + layout.sweep_window
        if t_data < t_change:
            continue
        good = tr.served_snr.get(ue_id, -np.inf) >= tr.optimum_snr[ue_id] - tol_db
        if good and ok_from is None:
            ok_from = t_data
        elif not good:
            ok_from = None
    return np.inf if ok_from is None else ok_from - t_change


def duty_cycle_timeline(layout: PeriodLayout = PeriodLayout(), schedule: BeamSchedule = None,
                        surface_index: int = 0) -> PowerTimeline:
    """One period of surface states: NBPU reception, reconfiguration bursts, idle in between.

    Every active segment is preceded by a wake segment of ``layout.wake_lead``.
    Reconfiguration happens at each of the surface's SSBs and at each schedule
    entry (default: a single data-beam entry at the start of the data window).
    """
    if schedule is None:
        schedule = BeamSchedule(((layout.sweep_window, 0, 0),), layout.cp_mode)
    segs = []
    t_ssb = ssb_start_times(layout.ssb_count)[layout.surface_ssbs(surface_index)]
    for t in list(t_ssb) + [e[0] for e in schedule.entries]:
        segs.append(Segment("reconfig_active", t - layout.wake_lead, layout.wake_lead, wake=True))
        segs.append(Segment("reconfig_active", t, layout.reconfig_hold))
    tn = layout.nbpu_time(surface_index)
    segs.append(Segment("nbpu_active", tn - layout.wake_lead, layout.wake_lead, wake=True))
    segs.append(Segment("nbpu_active", tn, layout.nbpu_duration))
    tl = PowerTimeline(sorted(segs, key=lambda s: s.start), layout.period, 1)
    tl.validate()
    return tl


def write_events_csv(events, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "event", "surface", "beam", "ue", "snr_db"])
        for e in events:
            w.writerow([f"{e.t:.9f}", e.event, "" if e.surface is None else e.surface,
                        "" if e.beam is None else e.beam, "" if e.ue is None else e.ue,
                        "" if e.snr_db is None else f"{e.snr_db:.3f}"])


def write_trace_csv(traces, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["period", "ue", "surface", "beam", "served_snr_db", "optimum_snr_db"])
        for tr in traces:
            for u in sorted(tr.optimum_snr):
                sid, beam = tr.beams.get(u, ("", ""))
                w.writerow([tr.period, u, sid, beam, f"{tr.served_snr[u]:.3f}", f"{tr.optimum_snr[u]:.3f}"])


# -- around-the-corner comparison ------------------------------------------

def corner_grid(nx: int = 4, ny: int = 5, spacing: float = 1.0, origin=(2.0, 1.0)) -> np.ndarray:
    """UE grid points (x, y) in metres relative to a surface at the origin."""
    xs = origin[0] + spacing * np.arange(nx)
    ys = origin[1] + spacing * np.arange(ny)
    return np.array([(x, y) for x in xs for y in ys])


def mirror_gain_grid(points, surface: Surface = Surface(0), bs_position=(0.0, 13.0),
                     link: LinkParams = LinkParams(), max_steer: float = 70.0):
    """SNR gain of the best steered codeword over a same-size flat metal plate.

    Returns (points within +-max_steer, gain_db) with the surface steering
    straight at each point.
    """
    mirror = replace(surface, mirror=True, surface_id=surface.surface_id + 1000)
    env = Environment(bs_position, [surface, mirror], [], [], link)
    inc = surface.bearing(bs_position)
    keep, gains = [], []
    for i, p in enumerate(np.asarray(points, dtype=float)):
        ang = surface.bearing(p)
        if abs(ang) > max_steer:
            continue
        env.ues = [UE(i, (tuple(p),))]
        bits = steer_codebook(ang, inc, surface.cfg)
        g = ue_snr(env, surface.surface_id, bits, i) - ue_snr(env, mirror.surface_id, bits, i)
        keep.append(p)
        gains.append(g)
    return np.array(keep), np.array(gains)
