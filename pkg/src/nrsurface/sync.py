"""Equivalent-time sampling synchronisation to the NBPU sync symbols.

Timing convention: the receiver keeps a reference ``R`` (its idea of the NBPU
subframe start).  ETS slot j of sync symbol i is sampled at
``R + useful_start_i + j * slot``, so the sample sees the true symbol
envelope at ``j + o`` slots past its useful start, with ``o = R - t0_true``.
With o = 0 the ON-symbol envelope peaks at slot 128.  The tracker estimates
o in fine units of slot / oversample; the receiver's timing estimate is
``R - o_hat`` and the sync error is ``o - o_hat``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import gcd

import numpy as np

from .envbank import EnvelopeBank, expected_chain_output
from .frontend import ReceiverConfig, adc_sample, analytic_envelope
from .link import ON_PHASES, SYNC_SYMBOLS, nbpu_bank
from .waveform import (DELTA_F, N_SUBCARRIERS, N_SYMBOLS, NRS_PHASE, BasebandSignal, ResourceGrid,
                       modulate_subframe, nrs_mask, symbol_layout)

T_USEFUL = 1 / DELTA_F
SLOTS = 256
SLOT = T_USEFUL / SLOTS          # 260.42 ns, one sample period at 3.84 Msps
SLOT_NS = SLOT * 1e9
PEAK_SLOT = SLOTS // 2

FR2_SYMBOL_CP_NS = 585.0
HALF_SUBFRAME_CP_NS = 1106.0
RECONFIG_LATENCY_NS = 10.0
NON_COLOCATED_PENALTY_NS = 260.0


@dataclass(frozen=True)
class EtsConfig:
    slot: float = SLOT
    slots_per_symbol: int = SLOTS
    sync_symbols: int = len(SYNC_SYMBOLS)
    stride: int = 13
    window_slots: int = 3
    search: int = 1

    def __post_init__(self):
        if abs(self.slot * self.slots_per_symbol - T_USEFUL) > self.slot:
            raise ValueError("slot grid must span one useful symbol to within a slot")
        if gcd(self.stride, self.slots_per_symbol) != 1:
            raise ValueError("stride must be coprime with the number of slots")

    @property
    def window_ns(self) -> float:
        return self.window_slots * self.slot * 1e9


def frame_slots(n: int, cfg: EtsConfig = EtsConfig(), base: int = 0) -> np.ndarray:
    """ETS slot of each sync symbol in frame n: (stride*n + base + i) mod slots."""
    return (cfg.stride * n + base + np.arange(cfg.sync_symbols)) % cfg.slots_per_symbol


def covered_after(n_frames: int, stride: int, per_frame: int = 5, slots: int = SLOTS) -> set:
    return {(stride * n + j) % slots for n in range(n_frames) for j in range(per_frame)}


def minimal_cover_frames(stride: int, per_frame: int = 5, slots: int = SLOTS, limit: int = 4096) -> int:
    """Smallest N whose frames jointly visit every slot."""
    seen = np.zeros(slots, dtype=bool)
    for n in range(limit):
        seen[(stride * n + np.arange(per_frame)) % slots] = True
        if seen.all():
            return n + 1
    raise ValueError(f"stride {stride} never covers all {slots} slots")


def equivalent_time_sample(rx: BasebandSignal, symbol_starts, base_offset: int, cfg: EtsConfig = EtsConfig(),
                           gain_db: float = 40.0) -> np.ndarray:
    """One ADC sample per sync symbol at symbol_start[i] + (base_offset + i) slots, gain removed."""
    starts = np.asarray(symbol_starts, dtype=float)
    times = starts + (base_offset + np.arange(len(starts))) * cfg.slot
    return adc_sample(rx, times, gain_db=gain_db) / 10 ** (gain_db / 20)


# -- templates -------------------------------------------------------------

def analytic_template(cfg: EtsConfig = EtsConfig()) -> np.ndarray:
    """|s|^2 of the max-power symbol on the slot grid (peak 144 at slot 128)."""
    t = np.arange(cfg.slots_per_symbol) * cfg.slot
    return analytic_envelope(ON_PHASES).power(t)


def window_energy_fraction(window_slots: int = 3, cfg: EtsConfig = EtsConfig()) -> float:
    """Share of one symbol's envelope energy inside the central window."""
    tmpl = analytic_template(cfg)
    half = window_slots // 2
    return float(tmpl[PEAK_SLOT - half:PEAK_SLOT + half + 1].sum() / tmpl.sum())


def matched_filter_window(samples, template, center_slot: int = PEAK_SLOT, window_slots: int = 3,
                          search: int = 1, baseline: tuple = (0.0, 0.0)):
    """Correlate consecutive-slot samples against the template window around ``center_slot``.

    ``samples`` holds window_slots + 2*search consecutive slots centred on
    ``center_slot``.  With baseline (x0, t0) the score is
    <x - x0, t - t0> / <t - t0, t - t0> clipped to [-1, 1]; the offset is the
    shift in slots of the best match.  Ties resolve to the earliest shift.
    """
    x = np.asarray(samples, dtype=float) - baseline[0]
    template = np.asarray(template, dtype=float)
    half = window_slots // 2
    mid = len(x) // 2
    if mid - half - search < 0 or mid + half + search >= len(x):
        raise ValueError("sample vector too short for window and search range")
    t = template[(center_slot + np.arange(-half, half + 1)) % len(template)] - baseline[1]
    best, best_off = -np.inf, 0
    for off in range(-search, search + 1):
        c = float(x[mid + off - half:mid + off + half + 1] @ t / (t @ t))
        if c > best + 1e-12:
            best, best_off = c, off
    return float(np.clip(best, -1.0, 1.0)), best_off


_TEMPLATE_CACHE: dict = {}


def chain_template(oversample: int = 16, margin: int = 160, rx: ReceiverConfig = ReceiverConfig()) -> np.ndarray:
    """Expected receiver output around each sync symbol, shape (5, (256 + 2*margin)*oversample).

    The receiver knows the ON sync symbols and the NRS pilots; every other RE
    of the neighbouring symbols is unknown data and enters through its mean
    power.  Row i is indexed by fine offset + margin*oversample from the
    useful start of sync symbol i.
    """
    key = ("chain", oversample, margin, rx)
    if key not in _TEMPLATE_CACHE:
        fs = rx.sample_rate * oversample
        mask = nrs_mask()
        zeros = np.zeros((N_SYMBOLS, N_SUBCARRIERS))
        # previous data subframe, NBPU subframe, next data subframe
        amp = [mask.astype(float) for _ in range(3)]
        phase = [np.full((N_SYMBOLS, N_SUBCARRIERS), NRS_PHASE) for _ in range(3)]
        for s in SYNC_SYMBOLS:
            amp[1][s] = 1.0
            phase[1][s] = ON_PHASES
        known = np.concatenate([modulate_subframe(ResourceGrid(phase[k], mask, amp[k]), fs).samples
                                for k in range(3)])
        n_sf = len(known) // 3
        last = SYNC_SYMBOLS[-1]
        unknown = [(0, s) for s in range(N_SYMBOLS - 4, N_SYMBOLS)] + [(1, s) for s in range(last + 1, last + 5)]
        random_res = []
        for sf, s in unknown:
            for c in np.flatnonzero(~mask[s]):
                a = zeros.copy()
                a[s, c] = 1.0
                w = np.zeros(len(known), dtype=complex)
                w[sf * n_sf:(sf + 1) * n_sf] = modulate_subframe(ResourceGrid(zeros, mask, a), fs).samples
                random_res.append(w)
        env = expected_chain_output(BasebandSignal(known, fs), random_res, rx, oversample)
        lay = symbol_layout(rx.sample_rate)
        offs = np.arange(-margin * oversample, (SLOTS + margin) * oversample)
        _TEMPLATE_CACHE[key] = np.stack([env[n_sf + lay.useful_start[s] * oversample + offs]
                                         for s in SYNC_SYMBOLS])
    return _TEMPLATE_CACHE[key]


def analytic_fine_template(oversample: int = 16, margin: int = 160) -> np.ndarray:
    """|s(t)|^2 of the max-power symbol, periodic in the useful duration, on the fine grid."""
    key = ("analytic", oversample, margin)
    if key not in _TEMPLATE_CACHE:
        offs = np.arange(-margin * oversample, (SLOTS + margin) * oversample)
        row = analytic_envelope(ON_PHASES).power(offs * SLOT / oversample)
        _TEMPLATE_CACHE[key] = np.tile(row, (len(SYNC_SYMBOLS), 1))
    return _TEMPLATE_CACHE[key]


# -- tracker ---------------------------------------------------------------

@dataclass(frozen=True)
class TrackerConfig:
    """Sliding-window timing estimator settings.

    ``history`` frames of ETS samples are kept.  The estimate is the argmax
    of the zero-mean correlation between samples and template over a
    hypothesis grid: +-``coarse_span`` whole slots while acquiring, then
    +-``span`` slots in steps of ``step`` fine units.
    """

    template: str = "chain"        # "chain" (expected receiver output) or "analytic"
    oversample: int = 16
    margin: int = 160
    history: int = 240
    span: int = 10
    step: int = 2
    coarse_span: int = 136
    lock_threshold: float = 0.5
    lock_patience: int = 3


class SyncTracker:
    """Batched timing tracker; row b is an independent receiver."""

    def __init__(self, batch: int = 1, cfg: TrackerConfig = TrackerConfig()):
        self.cfg = cfg
        self.q = cfg.oversample
        if cfg.template == "chain":
            self.tmpl = chain_template(cfg.oversample, cfg.margin)
        elif cfg.template == "analytic":
            self.tmpl = analytic_fine_template(cfg.oversample, cfg.margin)
        else:
            raise ValueError(f"unknown template {cfg.template!r}")
        self.batch = batch
        self.frames: list = []
        self.center = np.zeros(batch, dtype=int)
        self.slot_sum = np.zeros((batch, SLOTS))
        self.slot_cnt = np.zeros((batch, SLOTS))
        self.coarse = True
        self._reset_sums(self._coarse_grid())

    def _coarse_grid(self):
        return np.arange(-self.cfg.coarse_span, self.cfg.coarse_span + 1) * self.q

    def _reset_sums(self, rel_hyp):
        self.rel_hyp = np.asarray(rel_hyp, dtype=int)
        shape = (self.batch, len(self.rel_hyp))
        self.A = np.zeros(shape)      # sum x * mu
        self.B = np.zeros(shape)      # sum mu
        self.C = np.zeros(shape)      # sum mu^2
        self.sx = np.zeros(self.batch)
        self.sxx = np.zeros(self.batch)
        self.n = 0

    def _mu(self, slots):
        h = self.center[:, None] + self.rel_hyp[None, :]
        slots = np.broadcast_to(slots, (self.batch, np.shape(slots)[-1]))
        k = h[:, :, None] + slots[:, None, :] * self.q + self.cfg.margin * self.q
        k = np.clip(k, 0, self.tmpl.shape[1] - 1)
        sym = np.arange(k.shape[2]) % self.tmpl.shape[0]
        return self.tmpl[sym[None, None, :], k]

    def _add(self, slots, x, sign=1):
        mu = self._mu(slots)
        self.A += sign * np.einsum("bhk,bk->bh", mu, x)
        self.B += sign * mu.sum(axis=2)
        self.C += sign * np.einsum("bhk,bhk->bh", mu, mu)
        self.sx += sign * x.sum(axis=1)
        self.sxx += sign * (x ** 2).sum(axis=1)
        self.n += sign * x.shape[1]

    def _bin(self, slots, x, sign):
        sl = np.broadcast_to(slots, x.shape) % SLOTS
        rows = np.repeat(np.arange(self.batch), x.shape[1])
        np.add.at(self.slot_sum, (rows, sl.ravel()), sign * x.ravel())
        np.add.at(self.slot_cnt, (rows, sl.ravel()), sign)

    def ingest(self, slots, x):
        """Add one frame of samples x (batch, k) taken at ``slots`` (k,) or (batch, k).

        Slots count from the tracker's fixed reference, so a receiver that
        has re-centred its sweep by r slots passes j + r.
        """
        slots = np.asarray(slots, dtype=int)
        x = np.asarray(x, dtype=float).reshape(self.batch, -1)
        self.frames.append((slots, x))
        self._add(slots, x)
        self._bin(slots, x, 1)
        if len(self.frames) > self.cfg.history:
            old_slots, old_x = self.frames.pop(0)
            self._add(old_slots, old_x, -1)
            self._bin(old_slots, old_x, -1)

    def _cov(self):
        """Sample/template covariance and template variance (times n) per hypothesis."""
        n = max(self.n, 1)
        return self.A - self.sx[:, None] * self.B / n, self.C - self.B ** 2 / n

    def scores(self) -> np.ndarray:
        """Covariance over template spread, i.e. the least-squares fit of x = a + b mu_h.

        Normalising by the template spread matters because the sliding window
        does not cover every slot equally often; a raw correlation would then
        favour hypotheses that happen to see more template energy.
        """
        cov, vm = self._cov()
        return cov / np.sqrt(np.maximum(vm, 1e-30))

    def correlation(self) -> np.ndarray:
        """Correlation coefficient between samples and template at the best hypothesis."""
        s = self.scores()
        i = np.argmax(s, axis=1)
        r = np.arange(self.batch)
        vx = self.sxx - self.sx ** 2 / max(self.n, 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.nan_to_num(s[r, i] / np.sqrt(vx))

    def estimate(self) -> np.ndarray:
        """Offset estimate in fine units; ties go to the earliest hypothesis."""
        return self.center + self.rel_hyp[np.argmax(self.scores(), axis=1)]

    def refocus(self, centers=None):
        """Switch to the fine grid around ``centers`` (default: current estimate) and rebuild sums."""
        centers = self.estimate() if centers is None else centers
        self.center = np.broadcast_to(np.asarray(centers, dtype=int), (self.batch,)).copy()
        c = self.cfg
        self._reset_sums(np.arange(-c.span * self.q, c.span * self.q + 1, c.step))
        self.coarse = False
        self._replay()

    def reacquire(self):
        """Return to the wide whole-slot hypothesis grid over the retained frames."""
        self.center = np.zeros(self.batch, dtype=int)
        self._reset_sums(self._coarse_grid())
        self.coarse = True
        self._replay()

    def _replay(self):
        for slots, x in self.frames:
            self._add(slots, x)

    def at_edge(self) -> np.ndarray:
        i = np.argmax(self.scores(), axis=1)
        return (i == 0) | (i == len(self.rel_hyp) - 1)

    def profile(self) -> np.ndarray:
        """Per-slot mean of retained samples in the fixed reference (batch, 256); NaN if unvisited."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.slot_cnt > 0, self.slot_sum / np.maximum(self.slot_cnt, 1), np.nan)

    def covered(self) -> np.ndarray:
        return (self.slot_cnt > 0).all(axis=1)

    def lock_scores(self, ets: EtsConfig = EtsConfig()) -> np.ndarray:
        """Central-window matched-filter score on the retained profile, one per receiver.

        Both profile and template are taken relative to their mean over the
        symbol, so a missing NBPU scores near zero and a locked one near one.
        """
        prof = self.profile()
        tmpl = analytic_template(ets)
        peak = np.rint(PEAK_SLOT - self.estimate() / self.q).astype(int)
        half = ets.window_slots // 2 + ets.search
        out = np.zeros(self.batch)
        for b in range(self.batch):
            x = prof[b, (peak[b] + np.arange(-half, half + 1)) % SLOTS]
            if np.any(np.isnan(x)):
                continue
            base = (np.nanmean(prof[b]), tmpl.mean())
            out[b], _ = matched_filter_window(x, tmpl, PEAK_SLOT, ets.window_slots, ets.search, base)
        return out


# -- receiver state and frame sources --------------------------------------

@dataclass
class SyncState:
    t0_estimate: float = 0.0          # seconds, relative to the receiver reference R
    window_center_slot: int = PEAK_SLOT
    locked: bool = False
    drift_model: float = 0.0          # seconds per period the receiver compensates
    misses: int = 0
    score: float = 0.0
    period: int = 0
    errors: list = field(default_factory=list)


class BankSource:
    """ETS frames drawn from an :class:`EnvelopeBank` with hidden true offsets.

    ``true_offset`` (fine units, one per receiver) is o at frame 0.  The true
    clock slips by ``drift`` seconds per frame and the receiver removes
    ``drift_model`` of it.
    """

    def __init__(self, bank: EnvelopeBank, true_offset, drift: float = 0.0, drift_model: float = 0.0, rng=None):
        self.bank = bank
        self.q = bank.q
        self.o0 = np.atleast_1d(np.asarray(true_offset, dtype=float))
        self.drift = drift
        self.drift_model = drift_model
        self.rng = np.random.default_rng(rng)

    def true_offset(self, n: int) -> np.ndarray:
        return self.o0 + (self.drift - self.drift_model) * n / (SLOT / self.q)

    def frame(self, n: int, slots) -> np.ndarray:
        slots = np.broadcast_to(np.asarray(slots, dtype=int), (len(self.o0), len(SYNC_SYMBOLS)))
        pos = np.rint(slots * self.q + self.true_offset(n)[:, None]).astype(int)
        x = np.empty(pos.shape)
        for i, s in enumerate(SYNC_SYMBOLS):
            x[:, i] = self.bank.draw(s, pos[:, i], self.rng)
        return x


class WaveformSource:
    """ETS frames sampled from a full received waveform (one receiver).

    ``rx`` holds the receiver output; ``nbpu_starts[n]`` is the reference R
    of period n in the time base of ``rx``.
    """

    def __init__(self, rx: BasebandSignal, nbpu_starts, gain_db: float = 40.0):
        self.rx = rx
        self.starts = np.asarray(nbpu_starts, dtype=float)
        self.gain_db = gain_db
        self.lay = symbol_layout(rx.sample_rate)
        self.o0 = np.zeros(1)

    def frame(self, n: int, slots) -> np.ndarray:
        slots = np.asarray(slots).reshape(-1)
        useful = self.starts[n] + np.array([self.lay.useful_start[s] for s in SYNC_SYMBOLS]) / self.rx.sample_rate
        times = useful + slots * SLOT
        return (adc_sample(self.rx, times, gain_db=self.gain_db) / 10 ** (self.gain_db / 20))[None, :]


def bootstrap_sweep(source, cfg: EtsConfig = EtsConfig(), tracker: SyncTracker | None = None,
                    min_correlation: float = 0.05):
    """Sweep ETS slots until all 256 are covered, then locate the envelope peak.

    Returns (window_center_slot, frames_used, tracker); the centre slot is
    for receiver 0, the tracker holds every receiver.  Raises RuntimeError if
    no NBPU is detected.
    """
    n_frames = minimal_cover_frames(cfg.stride, cfg.sync_symbols, cfg.slots_per_symbol)
    tracker = tracker or SyncTracker(len(source.o0))
    for n in range(n_frames):
        sl = frame_slots(n, cfg)
        tracker.ingest(sl, source.frame(n, sl))
    if not tracker.covered().all():
        raise RuntimeError("bootstrap did not cover every slot")
    rho = tracker.correlation()
    if np.all(rho < min_correlation):
        raise RuntimeError(f"no NBPU detected (correlation {rho.max():.3f})")
    centre = int(np.rint(PEAK_SLOT - tracker.estimate()[0] / tracker.q)) % SLOTS
    return centre, n_frames, tracker


def synchronize(tracker: SyncTracker, state: SyncState, slots, samples, true_t0: float | None = None,
                ets: EtsConfig = EtsConfig()) -> SyncState:
    """Fold one period's ETS samples into the tracker and return the updated state of receiver 0.

    ``true_t0`` (seconds, relative to R) is only used to record the
    residual error.  Lock is lost after ``lock_patience`` consecutive periods
    with a central-window score below threshold; the tracker then goes back
    to acquisition.
    """
    tracker.ingest(slots, samples)
    if tracker.coarse:
        if tracker.covered().all():
            tracker.refocus()
    elif tracker.at_edge().any():
        tracker.refocus()
    o_hat = tracker.estimate()[0] / tracker.q * SLOT
    score = float(tracker.lock_scores(ets)[0])
    misses = state.misses + 1 if score < tracker.cfg.lock_threshold else 0
    locked = misses < tracker.cfg.lock_patience
    if not locked:
        tracker.reacquire()
        misses = 0
    new = replace(state, t0_estimate=-o_hat, score=score, misses=misses, locked=locked,
                  window_center_slot=int(np.rint(PEAK_SLOT - o_hat / SLOT)) % SLOTS,
                  period=state.period + 1, errors=list(state.errors))
    if true_t0 is not None:
        new.errors.append(new.t0_estimate - true_t0)
    return new


def free_run_errors(initial_error: float, drift: float, periods: int) -> np.ndarray:
    """Error of a receiver that stops updating: it grows by the clock slip each period."""
    return initial_error + drift * np.arange(periods + 1)


def timing_budget_ok(sync_error_ns, cp_ns: float = FR2_SYMBOL_CP_NS, latency_ns: float = RECONFIG_LATENCY_NS,
                     penalty_ns: float = 0.0) -> np.ndarray:
    """Whether |sync error| + reconfiguration latency (+ non-colocated penalty) fits in the CP."""
    return np.abs(np.asarray(sync_error_ns)) + latency_ns + penalty_ns < cp_ns


# -- Monte-Carlo -----------------------------------------------------------

@dataclass
class SyncResult:
    snr_db: float
    errors_ns: np.ndarray           # |error| per trial at the final period
    bootstrap_errors_ns: np.ndarray
    trace_mean_ns: np.ndarray       # mean |error| per tracked period
    trace_max_ns: np.ndarray
    lock_losses: int
    frames_bootstrap: int

    @property
    def mean_ns(self) -> float:
        return float(np.mean(self.errors_ns))

    @property
    def p95_ns(self) -> float:
        return float(np.percentile(self.errors_ns, 95))

    @property
    def max_ns(self) -> float:
        return float(np.max(self.errors_ns))


@dataclass(frozen=True)
class SyncExperiment:
    trials: int = 400
    track_periods: int = 240
    max_coarse_offset: int = 128      # slots; initial o drawn uniformly in +-this
    drift_ns: float = 20.0            # true clock slip per period
    drift_residual_ns: float = 0.0    # left over after the receiver's drift model
    info_value: int = 21
    tracker: TrackerConfig = TrackerConfig()
    ets: EtsConfig = EtsConfig()


def run_sync_trials(snr_db: float, exp: SyncExperiment = SyncExperiment(), seed: int = 0) -> SyncResult:
    """Independent receivers: bootstrap sweep, then ``track_periods`` periods of tracking.

    After bootstrap each receiver re-centres its sweep on its estimate in
    whole slots so the envelope peak stays mid-sweep; sampling continues at
    five ETS samples per period.  The per-trial error is the one at the final
    period.
    """
    rng = np.random.default_rng(seed)
    q = exp.tracker.oversample
    # re-centred sweeps of badly mis-estimated receivers reach up to two coarse ranges from the peak
    margin = max(exp.tracker.margin, 2 * exp.max_coarse_offset + 32)
    bank = nbpu_bank(exp.info_value, snr_db, oversample=q, margin=margin)
    o0 = rng.integers(-exp.max_coarse_offset * q, exp.max_coarse_offset * q, exp.trials)
    drift = exp.drift_ns * 1e-9
    src = BankSource(bank, o0, drift=drift, drift_model=drift - exp.drift_residual_ns * 1e-9, rng=rng)
    tr = SyncTracker(exp.trials, exp.tracker)
    _, n_boot, tr = bootstrap_sweep(src, exp.ets, tr, min_correlation=-np.inf)
    boot_err = (src.true_offset(n_boot - 1) - tr.estimate()) / q * SLOT_NS
    tr.refocus()
    lim = exp.max_coarse_offset
    shift = np.clip(-np.rint(tr.estimate() / q), -lim, lim).astype(int)
    means, maxes = [], []
    misses = np.zeros(exp.trials, dtype=int)
    losses = 0
    err = boot_err
    for k in range(exp.track_periods):
        n = n_boot + k
        sl = frame_slots(n, exp.ets)[None, :] + shift[:, None]
        tr.ingest(sl, src.frame(n, sl))
        if tr.at_edge().any():
            tr.refocus()
        est = tr.estimate()
        shift = np.clip(-np.rint(est / q), -lim, lim).astype(int)
        err = (src.true_offset(n) - est) / q * SLOT_NS
        means.append(np.mean(np.abs(err)))
        maxes.append(np.max(np.abs(err)))
        if k % 20 == 19:
            low = tr.lock_scores(exp.ets) < exp.tracker.lock_threshold
            misses = np.where(low, misses + 1, 0)
            losses += int(np.sum(misses >= exp.tracker.lock_patience))
    return SyncResult(snr_db=snr_db, errors_ns=np.abs(err), bootstrap_errors_ns=np.abs(boot_err),
                      trace_mean_ns=np.array(means), trace_max_ns=np.array(maxes), lock_losses=losses,
                      frames_bootstrap=n_boot)


def sync_sweep(snr_list, exp: SyncExperiment = SyncExperiment(), seed: int = 0) -> list:
    return [run_sync_trials(float(s), exp, seed + i) for i, s in enumerate(snr_list)]


def write_sync_csv(results, path) -> None:
    with open(path, "w") as f:
        f.write("snr_db,mean_error_ns,p95_error_ns\n")
        for r in results:
            f.write(f"{r.snr_db:g},{r.mean_ns:.3f},{r.p95_ns:.3f}\n")
