"""Channel and envelope-detector receiver chain.

The chain is: complex baseband -> bandpass FIR centred on the NB-IoT band ->
square-law detector -> low-pass FIR -> amplifier -> slow ADC.  The carrier is
never synthesised; the detector only sees subcarrier differences so the
baseband offset of the band is irrelevant to the envelope.

``EnvelopeSampler`` draws exact single-instant samples of the same chain
without synthesising full noisy waveforms.  For one output instant the chain
output is the Hermitian form e = x^H M x over the window of input samples it
depends on; with Gaussian noise n = L w the noise contribution splits into a
linear term and a weighted chi-square, both sampled directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps
from scipy.interpolate import CubicSpline
from scipy.linalg import cholesky, eigh, solve_triangular, toeplitz
from scipy.optimize import brentq

from .waveform import BAND_CENTER, BASE_RATE, DELTA_F, NB_BANDWIDTH, N_SUBCARRIERS, BasebandSignal

BPF_HALF_BW = 160e3          # -3 dB half bandwidth (320 kHz total)
NR_GAP = 70e3                # guard between the NB-IoT band edge and the NR carrier
NR_OCCUPIED = 4.5e6          # occupied width of a 5 MHz NR carrier
NB_PSD_BOOST_DB = 6.0        # NB-IoT guard-band carrier runs 6 dB above NR PSD
ADC_GAIN_RANGE = (40.0, 68.0)
SLOW_ADC_RATE = 14e3


# -- harmonic model --------------------------------------------------------

@dataclass
class HarmonicSet:
    """First-order envelope harmonics: env(t) = sum_k amp_k cos(2 pi k df t + phase_k).

    The square-law output of a 12-tone symbol is 12 + 2 env(t) for unit tones.
    """

    orders: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    delta_f: float = DELTA_F

    @property
    def frequencies(self) -> np.ndarray:
        return self.orders * self.delta_f

    @property
    def components(self):
        return list(zip(self.frequencies, self.amplitudes, self.phases))

    def phasors(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        arg = 2 * np.pi * np.multiply.outer(t, self.frequencies) + self.phases
        return (self.amplitudes * np.cos(arg)).sum(axis=-1)

    def power(self, t, dc: float = N_SUBCARRIERS) -> np.ndarray:
        """|s(t)|^2 of the underlying symbol."""
        return dc + 2 * self.evaluate(t)


def analytic_envelope(phases, amplitudes=None) -> HarmonicSet:
    """Phasor sum over subcarrier pairs at each spacing k = 1..11."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (N_SUBCARRIERS,):
        raise ValueError(f"need {N_SUBCARRIERS} phases, got shape {phases.shape}")
    a = np.ones(N_SUBCARRIERS) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    z = a * np.exp(1j * phases)
    orders = np.arange(1, N_SUBCARRIERS)
    comp = np.array([np.sum(z[k:] * np.conj(z[:-k])) for k in orders])
    return HarmonicSet(orders=orders.astype(float), amplitudes=np.abs(comp), phases=np.angle(comp))


# -- channel ---------------------------------------------------------------

@dataclass
class Interferer:
    """Band-limited Gaussian interferer.

    offset_hz is the centre frequency relative to the NB-IoT band centre and
    power_db its total power relative to the NB-IoT signal power.
    """

    offset_hz: float
    bandwidth_hz: float
    power_db: float


def nr_adjacent_interferer(sinr_db: float = None) -> Interferer:
    """Adjacent 5 MHz NR carrier 70 kHz above the NB-IoT band edge.

    By default its PSD is 6 dB below the NB-IoT PSD, which fixes the
    pre-filter SINR at about -8 dB.  Passing ``sinr_db`` rescales it.
    """
    if sinr_db is None:
        power_db = 10 * np.log10(NR_OCCUPIED / NB_BANDWIDTH) - NB_PSD_BOOST_DB
    else:
        power_db = -sinr_db
    offset = NB_BANDWIDTH / 2 + NR_GAP + NR_OCCUPIED / 2
    return Interferer(offset_hz=offset, bandwidth_hz=NR_OCCUPIED, power_db=power_db)


@dataclass
class LinkBudget:
    """Downlink budget for the 915 MHz NBPU carrier at the surface."""

    tx_power_dbm: float = 16.0
    tx_gain_dbi: float = 3.0
    rx_gain_dbi: float = 11.0
    matching_loss_db: float = 4.0
    carrier_hz: float = 915e6
    path_exponent: float = 2.0
    noise_floor_dbm: float = -55.0   # effective detector-referred floor over 180 kHz

    def path_loss_db(self, distance_m: float) -> float:
        lam = 299792458.0 / self.carrier_hz
        d = max(distance_m, 1e-3)
        # free space at 1 m then log-distance
        return 20 * np.log10(4 * np.pi / lam) + 10 * self.path_exponent * np.log10(d)

    def rx_power_dbm(self, distance_m: float) -> float:
        return (self.tx_power_dbm + self.tx_gain_dbi + self.rx_gain_dbi
                - self.matching_loss_db - self.path_loss_db(distance_m))

    def snr_db(self, distance_m: float) -> float:
        return self.rx_power_dbm(distance_m) - self.noise_floor_dbm


@dataclass
class ChannelConfig:
    snr_db: float | None = None
    distance_m: float = 10.0
    budget: LinkBudget = field(default_factory=LinkBudget)
    blockage_db: float = 0.0
    blockage_active: bool = False
    interference: list = field(default_factory=list)

    def effective_snr_db(self) -> float:
        snr = self.budget.snr_db(self.distance_m) if self.snr_db is None else self.snr_db
        if self.blockage_active:
            snr -= self.blockage_db
        return snr

    def amplitude(self) -> float:
        return 10 ** (-self.blockage_db / 20) if self.blockage_active else 1.0


def signal_power(sig: BasebandSignal) -> float:
    return float(np.mean(np.abs(sig.samples) ** 2))


def noise_variance(p_signal: float, snr_db: float, sample_rate: float) -> float:
    """Total complex noise variance giving ``snr_db`` inside the 180 kHz NB-IoT band."""
    if not np.isfinite(snr_db):
        return 0.0
    return p_signal * (sample_rate / NB_BANDWIDTH) / 10 ** (snr_db / 10)


def band_noise(n: int, sample_rate: float, f_lo: float, f_hi: float, power: float, rng) -> np.ndarray:
    """Complex Gaussian noise flat over [f_lo, f_hi] (baseband Hz, clipped to Nyquist)."""
    f = np.fft.fftfreq(n, 1 / sample_rate)
    mask = (f >= f_lo) & (f < f_hi)
    if not mask.any() or power <= 0:
        return np.zeros(n, dtype=complex)
    spec = np.zeros(n, dtype=complex)
    spec[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    x = np.fft.ifft(spec) * n / np.sqrt(2 * mask.sum())
    return x * np.sqrt(power)


def interferer_band(intf: Interferer, sample_rate: float):
    """(lo, hi, fraction) of an interferer band that falls inside Nyquist; only that part is synthesised."""
    c = BAND_CENTER + intf.offset_hz
    lo, hi = c - intf.bandwidth_hz / 2, c + intf.bandwidth_hz / 2
    lo_c, hi_c = max(lo, -sample_rate / 2), min(hi, sample_rate / 2)
    frac = max(hi_c - lo_c, 0.0) / intf.bandwidth_hz
    return lo_c, hi_c, frac


def apply_channel(sig: BasebandSignal, ch: ChannelConfig, rng=None, p_ref: float | None = None) -> BasebandSignal:
    """Attenuate, add interference bands and white noise at the configured in-band SNR.

    Noise and interference levels are referenced to the unattenuated signal
    power ``p_ref`` (defaults to the input's mean power) so that blockage
    lowers the effective SNR.
    """
    rng = np.random.default_rng(rng)
    fs = sig.sample_rate
    p_ref = signal_power(sig) if p_ref is None else p_ref
    snr = ch.budget.snr_db(ch.distance_m) if ch.snr_db is None else ch.snr_db
    out = sig.samples * ch.amplitude()
    var = noise_variance(p_ref, snr, fs)
    if var > 0:
        n = len(out)
        out = out + (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(var / 2)
    for intf in ch.interference:
        lo, hi, frac = interferer_band(intf, fs)
        p = p_ref * 10 ** (intf.power_db / 10) * frac
        out = out + band_noise(len(out), fs, lo, hi, p, rng)
    return BasebandSignal(out, fs, sig.t0)


# -- filters ---------------------------------------------------------------

@dataclass(frozen=True)
class ReceiverConfig:
    sample_rate: float = BASE_RATE
    bpf_taps: int = 107
    bpf_half_bw: float = BPF_HALF_BW
    bpf_beta: float = 3.4
    lpf_taps: int = 67
    lpf_pass: float = 170e3
    lpf_stop: float = 300e3


def _kaiser_lowpass(numtaps: int, cutoff: float, beta: float, fs: float) -> np.ndarray:
    return sps.firwin(numtaps, cutoff, window=("kaiser", beta), fs=fs)


def _gain_at(h: np.ndarray, f: float, fs: float) -> float:
    n = np.arange(len(h)) - (len(h) - 1) / 2
    return float(np.abs(np.sum(h * np.exp(-2j * np.pi * f * n / fs))))


_FILTER_CACHE: dict = {}


def design_filters(cfg: ReceiverConfig = ReceiverConfig()):
    """(bpf, lpf) taps.  The BPF prototype cutoff is solved so the -3 dB point is exactly at half_bw."""
    if cfg in _FILTER_CACHE:
        return _FILTER_CACHE[cfg]
    fs = cfg.sample_rate
    target = 10 ** (-3 / 20)

    def err(fc):
        h = _kaiser_lowpass(cfg.bpf_taps, fc, cfg.bpf_beta, fs)
        return _gain_at(h, cfg.bpf_half_bw, fs) / _gain_at(h, 0.0, fs) - target

    fc = brentq(err, 0.6 * cfg.bpf_half_bw, 1.6 * cfg.bpf_half_bw, xtol=1e-3)
    proto = _kaiser_lowpass(cfg.bpf_taps, fc, cfg.bpf_beta, fs)
    proto /= proto.sum()
    n = np.arange(cfg.bpf_taps) - (cfg.bpf_taps - 1) / 2
    bpf = proto * np.exp(2j * np.pi * BAND_CENTER * n / fs)
    lpf = sps.remez(cfg.lpf_taps, [0, cfg.lpf_pass, cfg.lpf_stop, fs / 2], [1, 0], weight=[10, 1], fs=fs)
    lpf /= lpf.sum()
    _FILTER_CACHE[cfg] = (bpf, lpf)
    return bpf, lpf


def filter_response(h: np.ndarray, freqs, fs: float, center: float = 0.0) -> np.ndarray:
    """Linear-phase magnitude response at baseband frequencies (Hz)."""
    n = np.arange(len(h)) - (len(h) - 1) / 2
    f = np.atleast_1d(np.asarray(freqs, dtype=float)) - center
    return np.abs(np.exp(-2j * np.pi * np.outer(f, n) / fs) @ h)


def bandpass_filter(sig: BasebandSignal, cfg: ReceiverConfig = ReceiverConfig()) -> BasebandSignal:
    bpf, _ = design_filters(_with_rate(cfg, sig.sample_rate))
    return BasebandSignal(np.convolve(sig.samples, bpf, mode="same"), sig.sample_rate, sig.t0)


def envelope_detect(sig: BasebandSignal, cfg: ReceiverConfig = ReceiverConfig()) -> BasebandSignal:
    """Square-law detection followed by the post-detection low-pass; returns a real signal."""
    _, lpf = design_filters(_with_rate(cfg, sig.sample_rate))
    env = np.convolve(np.abs(sig.samples) ** 2, lpf, mode="same")
    return BasebandSignal(env, sig.sample_rate, sig.t0)


def receive(sig: BasebandSignal, cfg: ReceiverConfig = ReceiverConfig()) -> BasebandSignal:
    return envelope_detect(bandpass_filter(sig, cfg), cfg)


def _with_rate(cfg: ReceiverConfig, fs: float) -> ReceiverConfig:
    if fs == cfg.sample_rate:
        return cfg
    scale = fs / cfg.sample_rate
    odd = lambda n: int(round(n * scale)) | 1
    return ReceiverConfig(fs, odd(cfg.bpf_taps), cfg.bpf_half_bw, cfg.bpf_beta,
                          odd(cfg.lpf_taps), cfg.lpf_pass, cfg.lpf_stop)


def band_suppression_db(h: np.ndarray, fs: float, f_lo: float, f_hi: float, n: int = 4001) -> float:
    """Power-integrated suppression of a flat band [f_lo, f_hi] relative to the band-centre gain.

    Only the part of the band below Nyquist is integrated; that is the part
    the simulation synthesises.
    """
    f = np.linspace(f_lo, min(f_hi, fs / 2), n)
    g = filter_response(h, f, fs) ** 2
    peak = filter_response(h, [BAND_CENTER], fs)[0] ** 2
    return float(-10 * np.log10(np.mean(g) / peak))


# -- ADC -------------------------------------------------------------------

def adc_sample(envelope: BasebandSignal, times, gain_db: float = 68.0, bits: int | None = None,
               full_scale: float | None = None) -> np.ndarray:
    """Amplify and sample ``envelope`` at absolute ``times`` (cubic interpolation off-grid)."""
    if not ADC_GAIN_RANGE[0] <= gain_db <= ADC_GAIN_RANGE[1]:
        raise ValueError(f"gain {gain_db} dB outside {ADC_GAIN_RANGE}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    x = np.real(envelope.samples)
    pos = (times - envelope.t0) * envelope.sample_rate
    if np.any(pos < -1e-9) or np.any(pos > len(x) - 1 + 1e-9):
        raise ValueError("sample time outside signal")
    idx = np.rint(pos)
    if np.allclose(pos, idx, atol=1e-9):
        v = x[idx.astype(int)]
    else:
        v = CubicSpline(np.arange(len(x)), x)(pos)
    v = v * 10 ** (gain_db / 20)
    if bits is not None:
        fs_ = full_scale if full_scale is not None else np.max(np.abs(v))
        step = 2 * fs_ / 2 ** bits
        v = np.clip(np.round(v / step) * step, -fs_, fs_ - step)
    return v


def adc_power_ratio(fast_rate: float = BASE_RATE, slow_rate: float = SLOW_ADC_RATE) -> float:
    """Sample-rate ratio used as a proxy for ADC power saving."""
    return fast_rate / slow_rate


# -- exact fast sampler ----------------------------------------------------

def interference_covariance(n: int, fs: float, interference, p_ref: float) -> np.ndarray:
    """Toeplitz covariance of the synthesised interference bands over an n-sample window."""
    lags = np.arange(n) / fs
    r = np.zeros(n, dtype=complex)
    for intf in interference:
        lo, hi, frac = interferer_band(intf, fs)
        if frac <= 0:
            continue
        p = p_ref * 10 ** (intf.power_db / 10) * frac
        bw = hi - lo
        r += p * np.exp(2j * np.pi * (lo + hi) / 2 * lags) * np.sinc(bw * lags)
    return toeplitz(r)


class EnvelopeSampler:
    """Exact samples of ``receive(apply_channel(x))`` at individual output instants.

    The window of input samples feeding one output instant has length
    len(bpf) + len(lpf) - 1.  ``M`` is the Hermitian kernel with
    e = x^H M x for that window.  ``noise_var`` is the total white variance
    and ``r_int`` an optional interference covariance over the window.
    Eigenvalues below ``tol`` (relative) are dropped from the quadratic term.
    """

    def __init__(self, noise_var: float, r_int: np.ndarray | None = None,
                 cfg: ReceiverConfig = ReceiverConfig(), tol: float = 1e-7):
        bpf, lpf = design_filters(cfg)
        nb, nl = len(bpf), len(lpf)
        self.span = nb + nl - 1
        self.half = (self.span - 1) // 2
        # output at window centre: e = sum_m lpf[m] |sum_k bpf[k] x[c - (m - hl) - (k - hb)]|^2
        B = np.zeros((nl, self.span), dtype=complex)
        for m in range(nl):
            B[m, m:m + nb] = bpf[::-1]
        self.M = B.conj().T @ (lpf[::-1, None] * B)
        self.M = (self.M + self.M.conj().T) / 2
        C = noise_var * np.eye(self.span, dtype=complex)
        if r_int is not None:
            C = C + r_int
        self.noise_var = noise_var
        if np.allclose(C, 0):
            self.L = None
            self.lam = np.zeros(0)
            self.proj = np.zeros((0, self.span), dtype=complex)
            return
        self.L = cholesky(C + 1e-12 * np.trace(C).real / self.span * np.eye(self.span), lower=True)
        K = self.L.conj().T @ self.M @ self.L
        lam, V = eigh((K + K.conj().T) / 2)
        keep = np.abs(lam) > tol * np.max(np.abs(lam))
        self.lam = lam[keep]
        Linv_V = solve_triangular(self.L.conj().T, V[:, keep], lower=False)   # L^{-H} V
        # g = Lam V^H L^{-1} S
        self.proj = (self.lam[:, None] * Linv_V.conj().T)

    @property
    def noise_mean(self) -> float:
        return float(np.sum(self.lam))

    def signal_terms(self, windows: np.ndarray):
        """Per-window (deterministic output, projected linear coefficients g)."""
        windows = np.atleast_2d(windows)
        det = np.real(np.einsum("ni,ij,nj->n", windows.conj(), self.M, windows))
        g = windows @ self.proj.T
        return det, g

    def moments(self, det: np.ndarray, g: np.ndarray):
        mean = det + self.noise_mean
        var = 2 * np.sum(np.abs(g) ** 2, axis=-1) + np.sum(self.lam ** 2)
        return mean, var

    def draw(self, det: np.ndarray, g: np.ndarray, rng) -> np.ndarray:
        if self.lam.size == 0:
            return np.asarray(det, dtype=float).copy()
        r = len(self.lam)
        shape = (*np.shape(det), r)
        w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        lin = 2 * np.real(np.sum(np.conj(g) * w, axis=-1))
        quad = np.sum(self.lam * np.abs(w) ** 2, axis=-1)
        return det + lin + quad

    def windows_at(self, x: np.ndarray, centers) -> np.ndarray:
        """Input windows of ``x`` centred on integer sample indices."""
        centers = np.asarray(centers, dtype=int)
        idx = centers[:, None] + np.arange(-self.half, self.half + 1)[None, :]
        if idx.min() < 0 or idx.max() >= len(x):
            raise ValueError("window exceeds signal bounds")
        return x[idx]
