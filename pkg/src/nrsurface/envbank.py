"""Cached exact envelope samples of a known transmission.

Monte-Carlo experiments only ever need the receiver output at a handful of
instants per symbol.  ``EnvelopeBank`` precomputes, for every fine time
offset around chosen symbols, the deterministic output and the projected
noise coefficients of :class:`~nrsurface.frontend.EnvelopeSampler`, after
which each noisy sample costs a few dozen multiply-adds.
"""
from __future__ import annotations

import numpy as np

from .frontend import EnvelopeSampler, ReceiverConfig, design_filters, interference_covariance, noise_variance
from .waveform import N_SUBCARRIERS, BasebandSignal, symbol_layout

SLOTS = 256

_UNIT_CACHE: dict = {}


class EnvelopeBank:
    """Exact noisy receiver-output samples of ``tx`` at fine offsets from symbol useful starts.

    ``tx`` is sampled at ``oversample`` times the receiver rate with ``tx.t0``
    the start time of the subframe whose symbols are addressed.  Offsets are
    in units of one receiver sample / ``oversample`` (one receiver sample is
    one 260 ns slot at 3.84 Msps).  SNR is in-band and referenced to 12 unit
    subcarriers; ``amplitude`` scales the signal only.
    """

    def __init__(self, tx: BasebandSignal, snr_db: float = 0.0, interference=(), oversample: int = 16,
                 margin: int = 160, rx: ReceiverConfig = ReceiverConfig(), amplitude: float = 1.0,
                 cache_key=None):
        if abs(tx.sample_rate - rx.sample_rate * oversample) > 1e-6:
            raise ValueError("tx must be sampled at rx rate * oversample")
        self.q = oversample
        self.margin = margin
        self.rx = rx
        self.p_ref = float(N_SUBCARRIERS)
        self.noise_var = noise_variance(self.p_ref, snr_db, rx.sample_rate)
        self.interference = tuple(interference)
        self.x = tx.samples * amplitude
        # index of the receiver-rate subframe start inside tx, in fine samples
        self.origin = int(round(-tx.t0 * tx.sample_rate))
        self.layout = symbol_layout(rx.sample_rate)
        if self.interference:
            span = EnvelopeSampler(1.0, None, rx).span
            r_int = interference_covariance(span, rx.sample_rate, self.interference, self.p_ref)
            self.sampler = EnvelopeSampler(self.noise_var, r_int, rx)
            self._scale = 1.0
            self._cache = {}
        else:
            # white noise only: cache unit-variance projections and scale by sigma
            self.sampler = EnvelopeSampler(1.0, None, rx)
            self._scale = np.sqrt(self.noise_var)
            key = None if cache_key is None else (cache_key, oversample, margin, rx, amplitude)
            self._cache = _UNIT_CACHE.setdefault(key, {}) if key is not None else {}
        self.lam = self.sampler.lam * self._scale ** 2

    def _terms(self, symbol: int):
        if symbol not in self._cache:
            q = self.q
            offs = np.arange(-self.margin * q, (SLOTS + self.margin) * q)
            centers = self.origin + self.layout.useful_start[symbol] * q + offs
            taps = q * np.arange(-self.sampler.half, self.sampler.half + 1)
            if centers[0] + taps[0] < 0 or centers[-1] + taps[-1] >= len(self.x):
                raise ValueError("transmission too short for the requested margin")
            det = np.empty(len(offs))
            g = np.empty((len(offs), len(self.sampler.lam)), dtype=complex)
            for a in range(0, len(offs), 2048):
                w = self.x[centers[a:a + 2048, None] + taps[None, :]]
                det[a:a + 2048] = np.real(np.sum((w.conj() @ self.sampler.M) * w, axis=1))
                g[a:a + 2048] = w @ self.sampler.proj.T
            self._cache[symbol] = (det, g)
        return self._cache[symbol]

    def noiseless(self, symbol: int) -> np.ndarray:
        """Deterministic output over the cached offset range of ``symbol``."""
        return self._terms(symbol)[0]

    def _point_terms(self, symbol: int, offsets: np.ndarray):
        """Terms at a few offsets only, cached per (symbol, offset)."""
        key = ("pts", symbol)
        pts = self._cache.setdefault(key, {})
        missing = [int(o) for o in np.unique(offsets) if int(o) not in pts]
        if missing:
            taps = self.q * np.arange(-self.sampler.half, self.sampler.half + 1)
            centers = self.origin + self.layout.useful_start[symbol] * self.q + np.array(missing)
            w = self.x[centers[:, None] + taps[None, :]]
            det = np.real(np.sum((w.conj() @ self.sampler.M) * w, axis=1))
            g = w @ self.sampler.proj.T
            for i, o in enumerate(missing):
                pts[o] = (det[i], g[i])
        det = np.array([pts[int(o)][0] for o in offsets])
        g = np.array([pts[int(o)][1] for o in offsets]).reshape(len(offsets), -1)
        return det, g

    def _lookup(self, symbol: int, offsets):
        offsets = np.atleast_1d(np.asarray(offsets, dtype=int))
        k = offsets + self.margin * self.q
        if np.any(k < 0) or np.any(k >= (SLOTS + 2 * self.margin) * self.q):
            raise ValueError("offset outside cached range")
        if symbol not in self._cache and len(np.unique(offsets)) <= 64:
            det, g = self._point_terms(symbol, offsets)
            return det, g * self._scale
        det, g = self._terms(symbol)
        return det[k], g[k] * self._scale

    def mean_var(self, symbol: int, offsets):
        det, g = self._lookup(symbol, offsets)
        mean = det + np.sum(self.lam)
        var = 2 * np.sum(np.abs(g) ** 2, axis=-1) + np.sum(self.lam ** 2)
        return mean, var

    def draw(self, symbols, offsets, rng) -> np.ndarray:
        """One independent noisy sample per (symbol, offset) pair."""
        offsets = np.atleast_1d(np.asarray(offsets, dtype=int))
        symbols = np.broadcast_to(np.atleast_1d(symbols), offsets.shape)
        out = np.empty(offsets.shape)
        for s in np.unique(symbols):
            sel = symbols == s
            det, g = self._lookup(int(s), offsets[sel])
            if self.lam.size == 0 or not np.any(self.lam):
                out[sel] = det
                continue
            r = len(self.lam)
            k = int(sel.sum())
            w = (rng.standard_normal((k, r)) + 1j * rng.standard_normal((k, r))) / np.sqrt(2)
            out[sel] = det + 2 * np.real(np.sum(np.conj(g) * w, axis=1)) + np.sum(self.lam * np.abs(w) ** 2, axis=1)
        return out

    def draw_floor(self, n: int, rng) -> np.ndarray:
        """Receiver output with no signal present (noise and interference only)."""
        r = len(self.lam)
        w = (rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))) / np.sqrt(2)
        return np.sum(self.lam * np.abs(w) ** 2, axis=1)


def expected_chain_output(known: BasebandSignal, random_res: list, rx: ReceiverConfig, oversample: int) -> np.ndarray:
    """E[receiver output] on the fine grid when ``random_res`` carry independent unit-power symbols.

    ``known`` is the deterministic part at rate ``rx.sample_rate * oversample``;
    each entry of ``random_res`` is the fine-rate waveform of one unknown RE.
    The chain is run per polyphase branch, so output index c depends on input
    samples c + oversample*k exactly as in the sampler.
    """
    bpf, lpf = design_filters(rx)
    q = oversample
    out = np.zeros(len(known.samples))
    for ph in range(q):
        p = np.abs(np.convolve(known.samples[ph::q], bpf, mode="same")) ** 2
        for w in random_res:
            p += np.abs(np.convolve(w[ph::q], bpf, mode="same")) ** 2
        out[ph::q] = np.convolve(p, lpf, mode="same")
    return out
