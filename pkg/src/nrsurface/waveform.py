"""NB-IoT downlink subframe synthesis.

Conventions:
- one subframe = 14 OFDM symbols x 12 subcarriers, LTE normal CP (7 symbols/slot)
- subcarrier c (0-based) sits at (c + 1) * 15 kHz, i.e. 15..180 kHz above the
  complex-baseband reference; the NB-IoT band centre is therefore 97.5 kHz
- unit amplitude per resource element, no IFFT scaling (mean useful-part power
  of a fully loaded symbol is 12)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DELTA_F = 15e3
N_SUBCARRIERS = 12
N_SYMBOLS = 14
SUBFRAME = 1e-3
PERIOD = 20e-3
SUBFRAMES_PER_PERIOD = 20
SYMBOLS_PER_PERIOD = SUBFRAMES_PER_PERIOD * N_SYMBOLS
BASE_RATE = 3.84e6
BAND_CENTER = 6.5 * DELTA_F
NB_BANDWIDTH = N_SUBCARRIERS * DELTA_F

NRS_SYMBOLS = (5, 6, 12, 13)
DATA_SYMBOLS = tuple(s for s in range(N_SYMBOLS) if s not in NRS_SYMBOLS)
# two NRS subcarriers per NRS-bearing symbol, spaced by 6 like the LTE/NB-IoT pilot grid
DEFAULT_NRS_SUBCARRIERS = {5: (0, 6), 6: (3, 9), 12: (0, 6), 13: (3, 9)}
NRS_PHASE = np.pi / 4

QPSK_PHASES = np.array([np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4])


def qpsk_phase(b0: int, b1: int) -> float:
    """Gray-mapped QPSK: (1 - 2*b0, 1 - 2*b1) / sqrt(2), returned as a phase in [0, 2pi)."""
    if b0 not in (0, 1) or b1 not in (0, 1):
        raise ValueError(f"bits must be 0/1, got {(b0, b1)}")
    return float(np.mod(np.arctan2(1 - 2 * b1, 1 - 2 * b0), 2 * np.pi))


def bits_to_phases(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int8).reshape(-1, 2)
    i = 1 - 2 * bits[:, 0].astype(float)
    q = 1 - 2 * bits[:, 1].astype(float)
    return np.mod(np.arctan2(q, i), 2 * np.pi)


def phases_to_bits(phases) -> np.ndarray:
    """Nearest-constellation-point inverse of :func:`bits_to_phases`."""
    z = np.exp(1j * np.asarray(phases, dtype=float).ravel())
    out = np.empty((z.size, 2), dtype=np.uint8)
    out[:, 0] = z.real < 0
    out[:, 1] = z.imag < 0
    return out.ravel()


def snap_qpsk(phases) -> np.ndarray:
    return bits_to_phases(phases_to_bits(phases))


@dataclass
class ResourceGrid:
    """One NB-IoT subframe: phase[s, c] and nrs_mask[s, c] for 14 symbols x 12 subcarriers.

    ``amplitude`` defaults to all ones; zeroing an entry switches that RE off.
    """

    phase: np.ndarray
    nrs_mask: np.ndarray
    amplitude: np.ndarray = field(default=None)

    def __post_init__(self):
        self.phase = np.asarray(self.phase, dtype=float)
        self.nrs_mask = np.asarray(self.nrs_mask, dtype=bool)
        if self.amplitude is None:
            self.amplitude = np.ones((N_SYMBOLS, N_SUBCARRIERS))
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        shape = (N_SYMBOLS, N_SUBCARRIERS)
        for name in ("phase", "nrs_mask", "amplitude"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {getattr(self, name).shape}")

    @property
    def symbols(self) -> int:
        return self.phase.shape[0]

    @property
    def subcarriers(self) -> int:
        return self.phase.shape[1]

    def values(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.phase)

    def validate(self) -> None:
        rows = np.flatnonzero(self.nrs_mask.any(axis=1))
        if not set(rows.tolist()) <= set(NRS_SYMBOLS):
            raise ValueError(f"NRS found outside symbols {NRS_SYMBOLS}: {rows.tolist()}")
        counts = self.nrs_mask.sum(axis=1)
        if np.any(counts[list(NRS_SYMBOLS)] != 2):
            raise ValueError("each NRS-bearing symbol needs exactly 2 NRS subcarriers")
        data = ~self.nrs_mask & (self.amplitude > 0)
        snapped = snap_qpsk(self.phase[data])
        if not np.allclose(np.exp(1j * snapped), np.exp(1j * self.phase[data]), atol=1e-9):
            raise ValueError("non-NRS phases must be QPSK constellation phases")


def nrs_mask(positions: dict | None = None) -> np.ndarray:
    positions = DEFAULT_NRS_SUBCARRIERS if positions is None else positions
    mask = np.zeros((N_SYMBOLS, N_SUBCARRIERS), dtype=bool)
    for sym, scs in positions.items():
        mask[sym, list(scs)] = True
    return mask


def empty_grid(nrs_positions: dict | None = None, fill_phase: float = np.pi / 4) -> ResourceGrid:
    mask = nrs_mask(nrs_positions)
    phase = np.full((N_SYMBOLS, N_SUBCARRIERS), fill_phase)
    phase[mask] = NRS_PHASE
    return ResourceGrid(phase=phase, nrs_mask=mask)


def data_positions(mask: np.ndarray) -> list[tuple[int, int]]:
    """RE order used for bit mapping: symbol-major, subcarrier-minor, NRS skipped."""
    return [(s, c) for s in range(N_SYMBOLS) for c in range(N_SUBCARRIERS) if not mask[s, c]]


@dataclass
class BasebandSignal:
    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.samples)) / self.sample_rate


@dataclass(frozen=True)
class SymbolLayout:
    """Sample-index layout of one subframe at a given rate."""

    sample_rate: float
    n_fft: int
    cp: tuple
    start: tuple          # first sample of each symbol (CP included)
    useful_start: tuple   # first sample after the CP

    @property
    def length(self) -> int:
        return self.useful_start[-1] + self.n_fft


def symbol_layout(sample_rate: float = BASE_RATE) -> SymbolLayout:
    n_fft = sample_rate / DELTA_F
    if abs(n_fft - round(n_fft)) > 1e-9 or round(n_fft) % 128:
        raise ValueError(f"sample rate must be a multiple of 1.92 MHz, got {sample_rate}")
    n_fft = int(round(n_fft))
    # LTE normal CP: 160/144 samples per 2048
    cp_long, cp_short = 160 * n_fft // 2048, 144 * n_fft // 2048
    cp = tuple(cp_long if s % 7 == 0 else cp_short for s in range(N_SYMBOLS))
    starts, useful = [], []
    pos = 0
    for c in cp:
        starts.append(pos)
        useful.append(pos + c)
        pos += c + n_fft
    return SymbolLayout(sample_rate, n_fft, cp, tuple(starts), tuple(useful))


def modulate_subframe(grid: ResourceGrid, sample_rate: float = BASE_RATE, t0: float = 0.0) -> BasebandSignal:
    if grid.phase.shape != (N_SYMBOLS, N_SUBCARRIERS):
        raise ValueError("grid must be 14 x 12")
    lay = symbol_layout(sample_rate)
    spectrum = np.zeros((N_SYMBOLS, lay.n_fft), dtype=complex)
    spectrum[:, 1:N_SUBCARRIERS + 1] = grid.values()
    useful = np.fft.ifft(spectrum, axis=1) * lay.n_fft
    out = np.empty(lay.length, dtype=complex)
    for s in range(N_SYMBOLS):
        cp = lay.cp[s]
        out[lay.start[s]:lay.useful_start[s]] = useful[s, -cp:]
        out[lay.useful_start[s]:lay.useful_start[s] + lay.n_fft] = useful[s]
    return BasebandSignal(out, sample_rate, t0)


def demodulate_subframe(sig: BasebandSignal) -> np.ndarray:
    """Complex RE values (14 x 12) recovered by an FFT over each useful part."""
    lay = symbol_layout(sig.sample_rate)
    if len(sig.samples) < lay.length:
        raise ValueError("signal shorter than one subframe")
    blocks = np.stack([sig.samples[u:u + lay.n_fft] for u in lay.useful_start])
    return np.fft.fft(blocks, axis=1)[:, 1:N_SUBCARRIERS + 1] / lay.n_fft


def modulate_symbol(phases, sample_rate: float = BASE_RATE, n_periods: int = 1) -> np.ndarray:
    """Useful part of one symbol (no CP), optionally repeated back-to-back (steady state)."""
    lay = symbol_layout(sample_rate)
    spectrum = np.zeros(lay.n_fft, dtype=complex)
    spectrum[1:N_SUBCARRIERS + 1] = np.exp(1j * np.asarray(phases, dtype=float))
    x = np.fft.ifft(spectrum) * lay.n_fft
    return np.tile(x, n_periods)


@dataclass(frozen=True)
class FrameSchedule:
    period: float = PERIOD
    nbpu_subframes: tuple = (0,)
    symbols_per_period: int = SYMBOLS_PER_PERIOD

    @property
    def nbpu_subframe_index(self) -> int:
        return self.nbpu_subframes[0]

    def nbpu_start_times(self, n_periods: int) -> np.ndarray:
        """Absolute start time of every NBPU subframe over ``n_periods`` periods, sorted."""
        k = np.arange(n_periods)[:, None] * self.period
        return np.sort((k + np.array(self.nbpu_subframes) * SUBFRAME).ravel())

    def symbol_start_times(self, n_periods: int, sample_rate: float = BASE_RATE) -> np.ndarray:
        lay = symbol_layout(sample_rate)
        within = np.array(lay.start) / sample_rate
        sub = np.arange(n_periods * SUBFRAMES_PER_PERIOD) * SUBFRAME
        return (sub[:, None] + within[None, :]).ravel()


def build_frame_schedule(nbpu_subframes=(0,), period: float = PERIOD) -> FrameSchedule:
    subs = tuple(sorted(int(i) for i in np.atleast_1d(nbpu_subframes)))
    if not subs or any(not 0 <= i < SUBFRAMES_PER_PERIOD for i in subs) or len(set(subs)) != len(subs):
        raise ValueError(f"NBPU subframe indices must be distinct values in 0..19, got {subs}")
    n_sub = period / SUBFRAME
    if abs(n_sub - SUBFRAMES_PER_PERIOD) > 1e-9:
        raise ValueError("period must hold exactly 20 subframes")
    return FrameSchedule(period=period, nbpu_subframes=subs, symbols_per_period=SUBFRAMES_PER_PERIOD * N_SYMBOLS)


def write_iq(path, sig: BasebandSignal) -> None:
    """Interleaved little-endian float32 I/Q."""
    iq = np.empty(2 * len(sig.samples), dtype="<f4")
    iq[0::2] = sig.samples.real
    iq[1::2] = sig.samples.imag
    Path(path).write_bytes(iq.tobytes())


def read_iq(path, sample_rate: float, t0: float = 0.0) -> BasebandSignal:
    iq = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    return BasebandSignal(iq[0::2] + 1j * iq[1::2], sample_rate, t0)


def write_grid_csv(path, grid: ResourceGrid) -> None:
    lines = ["symbol,subcarrier,phase,is_nrs"]
    for s in range(N_SYMBOLS):
        for c in range(N_SUBCARRIERS):
            lines.append(f"{s},{c},{grid.phase[s, c]:.12f},{int(grid.nrs_mask[s, c])}")
    Path(path).write_text("\n".join(lines) + "\n")
