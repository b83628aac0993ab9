"""NBPU frames: assembly, transmit waveform, OOK demodulation and BER sweeps."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .envbank import EnvelopeBank
from .emulation import CodingPipeline, PhaseTargets, PipelineConfig, build_affine_model, encode_pipeline, solve_payload
from .waveform import (BASE_RATE, N_SUBCARRIERS, N_SYMBOLS, NRS_PHASE, NRS_SYMBOLS, SUBFRAME, BasebandSignal,
                       ResourceGrid, bits_to_phases, modulate_subframe, nrs_mask)

SYNC_SYMBOLS = (0, 1, 2, 3, 4)
INFO_SYMBOLS = (7, 8, 9, 10, 11)
INFO_BITS = len(INFO_SYMBOLS)

# max-power symbol: every other subcarrier pi/4, the rest 5pi/4 (c even <-> 1st, 3rd, ... subcarrier)
ON_PHASES = np.where(np.arange(N_SUBCARRIERS) % 2 == 0, np.pi / 4, 5 * np.pi / 4)
# symbol whose envelope vanishes at the symbol centre
OFF_PHASES = np.array([1, 1, 5, 5, 5, 5, 1, 1, 1, 1, 5, 5]) * np.pi / 4


@dataclass(frozen=True)
class ReconfigInfo:
    """Reconfiguration entries for one period; packed into 5 bits as a beam or table index."""

    entries: tuple = ()           # ((time_s, beam_id), ...)
    surface_id: int = 0
    table_index: int | None = None

    def __post_init__(self):
        times = [t for t, _ in self.entries]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("entry times must be strictly increasing")

    def to_bits(self) -> np.ndarray:
        if self.table_index is not None:
            value = self.table_index
        elif len(self.entries) == 1:
            value = self.entries[0][1]
        else:
            raise ValueError("multi-entry schedules must be sent as a table index")
        return int_to_bits(value)


def int_to_bits(value: int, n: int = INFO_BITS) -> np.ndarray:
    if not 0 <= int(value) < 2 ** n:
        raise ValueError(f"value {value} does not fit in {n} bits")
    return np.array([(int(value) >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


@dataclass(frozen=True)
class NbpuFrame:
    info_bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.info_bits)
        if len(bits) != INFO_BITS or any(b not in (0, 1) for b in bits):
            raise ValueError(f"need {INFO_BITS} info bits")
        object.__setattr__(self, "info_bits", bits)

    @property
    def sync_symbols(self):
        return SYNC_SYMBOLS

    @property
    def info_symbols(self):
        return INFO_SYMBOLS

    @property
    def nrs_slots(self):
        return NRS_SYMBOLS

    def symbol_phases(self) -> dict:
        out = {s: ON_PHASES.copy() for s in SYNC_SYMBOLS}
        for s, b in zip(INFO_SYMBOLS, self.info_bits):
            out[s] = (ON_PHASES if b else OFF_PHASES).copy()
        return out


def assemble_frame(info) -> PhaseTargets:
    """Phase targets for the 10 controllable symbols.  ``info`` is 5 bits, an int or a ReconfigInfo."""
    if isinstance(info, ReconfigInfo):
        bits = info.to_bits()
    elif np.isscalar(info):
        bits = int_to_bits(int(info))
    else:
        bits = np.asarray(info)
        if bits.size > INFO_BITS:
            raise ValueError(f"info has {bits.size} bits, frame carries {INFO_BITS}")
    return PhaseTargets.from_symbols(NbpuFrame(tuple(bits)).symbol_phases())


@lru_cache(maxsize=4)
def default_model(cfg: PipelineConfig = PipelineConfig()) -> CodingPipeline:
    return build_affine_model(cfg)


@lru_cache(maxsize=128)
def nbpu_grid(info_value: int, cfg: PipelineConfig = PipelineConfig()) -> ResourceGrid:
    """Grid actually transmitted for an info value: solved payload pushed through the encoder."""
    model = default_model(cfg)
    payload = solve_payload(assemble_frame(info_value), model)
    return encode_pipeline(payload, cfg).grid(cfg.nbpu_subframe)


def filler_grid(seed: int = 7) -> ResourceGrid:
    """Ordinary NB-IoT traffic: random QPSK data with NRS."""
    rng = np.random.default_rng(seed)
    mask = nrs_mask()
    phase = bits_to_phases(rng.integers(0, 2, 2 * N_SYMBOLS * N_SUBCARRIERS)).reshape(N_SYMBOLS, N_SUBCARRIERS)
    phase[mask] = NRS_PHASE
    return ResourceGrid(phase=phase, nrs_mask=mask)


def nbpu_transmission(info_value: int = 0, sample_rate: float = BASE_RATE, cfg: PipelineConfig = PipelineConfig(),
                      ideal: bool = False) -> BasebandSignal:
    """Previous data subframe + NBPU subframe + next data subframe; t0 = NBPU subframe start.

    With ``ideal`` the NBPU grid is built directly from the target phases
    instead of through the emulated coding chain (NRS-symbol data REs then
    repeat the filler).
    """
    if ideal:
        g = filler_grid(11)
        phase = g.phase.copy()
        for s, ph in NbpuFrame(tuple(int_to_bits(info_value))).symbol_phases().items():
            phase[s] = ph
        grid = ResourceGrid(phase=phase, nrs_mask=g.nrs_mask)
    else:
        grid = nbpu_grid(int(info_value), cfg)
    parts = [modulate_subframe(filler_grid(7), sample_rate), modulate_subframe(grid, sample_rate),
             modulate_subframe(filler_grid(8), sample_rate)]
    x = np.concatenate([p.samples for p in parts])
    return BasebandSignal(x, sample_rate, t0=-SUBFRAME)


@lru_cache(maxsize=64)
def _fine_transmission(info_value: int, sample_rate: float, ideal: bool) -> BasebandSignal:
    return nbpu_transmission(info_value, sample_rate, ideal=ideal)


def nbpu_bank(info_value: int = 21, snr_db: float = 0.0, interference=(), oversample: int = 16, margin: int = 160,
              ideal: bool = False, amplitude: float = 1.0) -> EnvelopeBank:
    """Envelope sample bank for the NBPU carrying ``info_value`` (addresses NBPU subframe symbols)."""
    tx = _fine_transmission(int(info_value), BASE_RATE * oversample, bool(ideal))
    return EnvelopeBank(tx, snr_db, interference, oversample=oversample, margin=margin, amplitude=amplitude,
                        cache_key=("nbpu", int(info_value), bool(ideal)))


# -- OOK demodulation ------------------------------------------------------

CENTER_SLOT = 128
ON_OFF_MIN_DB = 13.0


def ook_threshold(on_samples, floor_samples) -> float:
    """Mid-point between the mean ON (sync-symbol) level and the noise-floor level."""
    return 0.5 * (float(np.mean(on_samples)) + float(np.mean(floor_samples)))


def demodulate_ook(center_samples, threshold) -> np.ndarray:
    """One bit per info-symbol centre sample: 1 if above threshold."""
    x = np.asarray(center_samples, dtype=float)
    thr = np.asarray(threshold, dtype=float)
    return (x > (thr[..., None] if thr.ndim else thr)).astype(np.uint8)


def on_off_ratio_db(info_value: int = 0b10101, ideal: bool = False) -> float:
    """Noiseless centre-sample ratio between the weakest ON and strongest OFF info symbol."""
    bank = nbpu_bank(info_value, snr_db=np.inf, ideal=ideal)
    bits = int_to_bits(info_value)
    centre = {s: float(bank.mean_var(s, [CENTER_SLOT * bank.q])[0][0]) for s in INFO_SYMBOLS}
    on = [centre[s] for s, b in zip(INFO_SYMBOLS, bits) if b]
    off = [centre[s] for s, b in zip(INFO_SYMBOLS, bits) if not b]
    return 10 * np.log10(min(on) / max(off))


def link_snr_db(distance_m: float, budget=None) -> float:
    from .frontend import LinkBudget
    return (budget or LinkBudget()).snr_db(distance_m)


@dataclass
class BerPoint:
    snr_db: float
    symbols: int
    errors: int
    sinr_db: float | None = None

    @property
    def ber(self) -> float:
        return self.errors / self.symbols if self.symbols else float("nan")


def ber_point(snr_db: float, symbols: int = 200_000, sinr_db: float | None = None, seed: int = 0,
              timing_error_ns: float = 0.0, history: int = 20, ideal: bool = False) -> BerPoint:
    """OOK bit errors over ``symbols`` info symbols with exact receiver-output samples.

    Every frame carries a random 5-bit info value.  The receiver samples the
    centre of each sync and info symbol (shifted by ``timing_error_ns``) and
    thresholds the info samples half-way between the running mean of the
    sync (ON) samples and of noise-only samples over ``history`` frames.
    ``sinr_db`` adds the adjacent NR carrier at that pre-filter SINR.
    """
    from .frontend import nr_adjacent_interferer
    rng = np.random.default_rng(seed)
    interference = () if sinr_db is None else (nr_adjacent_interferer(sinr_db),)
    n_frames = -(-symbols // INFO_BITS)
    values = rng.integers(0, 2 ** INFO_BITS, n_frames)
    slot = 1 / 15e3 / 256
    q = 16
    offset = int(round((CENTER_SLOT + timing_error_ns * 1e-9 / slot) * q))
    on = np.empty((n_frames, len(SYNC_SYMBOLS)))
    info = np.empty((n_frames, INFO_BITS))
    floor = None
    for v in np.unique(values):
        rows = np.flatnonzero(values == v)
        bank = nbpu_bank(int(v), snr_db, interference, oversample=q, ideal=ideal)
        for i, s in enumerate(SYNC_SYMBOLS):
            on[rows, i] = bank.draw(s, np.full(len(rows), offset), rng)
        for i, s in enumerate(INFO_SYMBOLS):
            info[rows, i] = bank.draw(s, np.full(len(rows), offset), rng)
        if floor is None:
            floor = bank.draw_floor(n_frames * len(SYNC_SYMBOLS), rng).reshape(n_frames, -1)
    # running means over the last ``history`` frames (inclusive)
    def running(x):
        c = np.concatenate([[0.0], np.cumsum(x.mean(axis=1))])
        n = np.arange(1, len(x) + 1)
        lo = np.maximum(n - history, 0)
        return (c[n] - c[lo]) / (n - lo)
    thr = 0.5 * (running(on) + running(floor))
    bits = demodulate_ook(info, thr)
    truth = np.array([int_to_bits(v) for v in range(2 ** INFO_BITS)])[values]
    errors = int(np.sum(bits.ravel()[:symbols] != truth.ravel()[:symbols]))
    return BerPoint(snr_db=float(snr_db), symbols=int(symbols), errors=errors, sinr_db=sinr_db)


def ber_sweep(snr_list, symbols: int = 200_000, sinr_db: float | None = None, seed: int = 0, **kw) -> list:
    if symbols < 1:
        raise ValueError("need at least one symbol per point")
    return [ber_point(float(s), symbols, sinr_db, seed + i, **kw) for i, s in enumerate(snr_list)]


def write_ber_csv(points, path) -> None:
    import csv
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["snr_db", "symbols", "errors", "ber"])
        for p in points:
            w.writerow([p.snr_db, p.symbols, p.errors, f"{p.ber:.6g}"])
