"""Varactor unit cell, 1-bit codebooks and array-factor beam patterns."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import least_squares

C_LIGHT = 299_792_458.0
FREE_SPACE_OHMS = 376.730313668
CARRIER = 24.125e9
CHANNEL_BW = 200e6
GPIO_RISE = 7e-9
CELL_ENERGY = 12e-12
RECONFIG_BUDGET = 10e-9
MAX_STEER_DEG = 70.0


@dataclass
class VaractorModel:
    """Unit-cell equivalent circuit.

    The varactor branch (Rs + loss + plate inductance + Cj) sits in parallel
    with the gap capacitance between the two plates; the cell terminates a
    free-space wave.  L, Cg and the loss resistance are fitted so that both
    GPIO states reflect with amplitude ``reflection_amplitude`` and differ by
    180 degrees at the carrier.
    """

    rs: float = 13.0
    cj_at_bias: dict = field(default_factory=lambda: {0.0: 0.22e-12, 3.3: 0.08e-12, 15.0: 0.04e-12})
    reflection_amplitude: float = 0.6
    carrier: float = CARRIER
    gpio_states: tuple = (0.0, 3.3)

    def cj(self, bias_v: float) -> float:
        for v, c in self.cj_at_bias.items():
            if abs(v - bias_v) < 1e-9:
                return c
        raise ValueError(f"bias {bias_v} V not in modelled set {sorted(self.cj_at_bias)}")

    @property
    def time_constant(self) -> float:
        return self.rs * self.cj(0.0)

    def _gamma(self, cj: float, freq, params) -> np.ndarray:
        L, cg, rl = params[0] * 1e-9, params[1] * 1e-12, params[2]
        w = 2 * np.pi * np.asarray(freq, dtype=float)
        branch = self.rs + rl + 1j * w * L + 1 / (1j * w * cj)
        z = 1 / (1 / branch + 1j * w * cg)
        return (z - FREE_SPACE_OHMS) / (z + FREE_SPACE_OHMS)

    @cached_property
    def fitted(self) -> np.ndarray:
        """(L nH, Cg pF, R_loss ohm) matching the amplitude and 180 degree targets."""
        c0, c1 = (self.cj(v) for v in self.gpio_states)
        a = self.reflection_amplitude

        def resid(p):
            g0, g1 = self._gamma(c0, self.carrier, p), self._gamma(c1, self.carrier, p)
            return [abs(g0) - a, abs(g1) - a, abs(np.angle(g0 / g1)) - np.pi]

        fit = least_squares(resid, [0.5, 0.05, 5.0], bounds=([1e-3, 1e-4, 0.0], [10.0, 10.0, 1e3]))
        if fit.cost > 1e-12:
            raise RuntimeError("unit-cell circuit fit did not converge")
        return fit.x

    def reflection_coefficient(self, bias_v: float, freq=CARRIER):
        return self._gamma(self.cj(bias_v), freq, self.fitted)


def reflection_coefficient(bias_v: float, freq=CARRIER, model: VaractorModel | None = None):
    model = model or _default_varactor()
    if bias_v not in model.gpio_states:
        raise ValueError(f"bias {bias_v} V is not a GPIO state {model.gpio_states}")
    return model.reflection_coefficient(bias_v, freq)


_VARACTOR: list = []


def _default_varactor() -> VaractorModel:
    if not _VARACTOR:
        _VARACTOR.append(VaractorModel())
    return _VARACTOR[0]


def phase_difference_deg(freq=CARRIER, model: VaractorModel | None = None) -> np.ndarray:
    """|phase(0 V) - phase(3.3 V)| wrapped to [0, 180]."""
    model = model or _default_varactor()
    g0 = model.reflection_coefficient(model.gpio_states[0], freq)
    g1 = model.reflection_coefficient(model.gpio_states[1], freq)
    return np.degrees(np.abs(np.angle(g0 / g1)))


# -- geometry and codebooks ------------------------------------------------

@dataclass(frozen=True)
class SurfaceConfig:
    columns: int = 16
    rows: int = 16
    spacing: float | None = None          # metres; default half a wavelength
    carrier: float = CARRIER
    amplitude: float = 0.6
    per_cell: bool = False                 # 3D mode: every cell has its own bit

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.carrier

    @property
    def d(self) -> float:
        return self.wavelength / 2 if self.spacing is None else self.spacing

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def n_bits(self) -> int:
        return self.columns * self.rows if self.per_cell else self.columns


def _quantize(phase) -> np.ndarray:
    """Bit whose state {0, pi} is nearest (wrapped) to ``phase``; ties go to 0."""
    wrapped = np.mod(phase, 2 * np.pi)
    return ((wrapped > np.pi / 2) & (wrapped <= 3 * np.pi / 2)).astype(np.uint8)


def _offsets(n: int = 32) -> np.ndarray:
    return np.arange(n) * np.pi / n


def steer_codebook(target_deg: float, incident_deg: float = 0.0, cfg: SurfaceConfig = SurfaceConfig(),
                   n_offsets: int = 32, refine_deg: float | None = 1.0) -> np.ndarray:
    """1-bit column pattern steering towards ``target_deg``.

    The ideal ramp -k d n (sin target + sin incident) is shifted by a common
    phase offset, chosen from ``n_offsets`` values in [0, pi) to maximise the
    array gain at the target, then quantised to the nearest state.  If the
    resulting main lobe is more than ``refine_deg`` off target, single-bit
    flips pull it back (see ``_refine``; None disables this).  Negative targets under
    normal incidence use the column-mirrored pattern of the positive one.
    """
    if abs(target_deg) > MAX_STEER_DEG:
        warnings.warn(f"target {target_deg} deg outside the +-{MAX_STEER_DEG} deg steering range")
    if target_deg < 0 and incident_deg == 0:
        return steer_codebook(-target_deg, 0.0, cfg, n_offsets, refine_deg)[::-1].copy()
    n = np.arange(cfg.columns)
    ramp = -cfg.k * cfg.d * n * (np.sin(np.radians(target_deg)) + np.sin(np.radians(incident_deg)))
    starts = [_quantize(ramp + off) for off in _offsets(n_offsets)]
    gains = [abs(_af_1d(cfg, b, np.array([target_deg]), incident_deg)[0]) for b in starts]
    order = np.argsort(-np.round(gains, 9), kind="stable")
    if refine_deg is None:
        return starts[order[0]]
    side = 1 if target_deg >= 0 else -1
    grid = np.linspace(0, 90, 1801) * side
    near = np.abs(grid - target_deg) <= refine_deg

    def margin(b):
        p = np.abs(_af_1d(cfg, b, grid, incident_deg)) ** 2
        return p[~near].max() - p[near].max()
    return _refine([starts[i] for i in order], margin)


def _refine(starts, margin, max_iter: int = 64) -> np.ndarray:
    """Pick a pattern whose main lobe falls inside the target neighbourhood.

    ``margin(bits)`` is the peak power outside the neighbourhood minus the
    peak inside it, so a negative margin means the main lobe is on target.
    Starts are tried in order (best quantised ramps first); a start that is
    off target is improved by steepest-descent single-bit flips.  Small
    apertures and near-endfire targets need this; wide apertures usually
    accept the first start unchanged.
    """
    fallback, fallback_m = None, np.inf
    for start in starts:
        bits = np.array(start, dtype=np.uint8)
        m = margin(bits)
        flat = bits.reshape(-1)
        for _ in range(max_iter):
            if m < 0:
                return bits
            best, best_i = m, None
            for i in range(flat.size):
                flat[i] ^= 1
                e = margin(bits)
                flat[i] ^= 1
                if e < best - 1e-12:
                    best, best_i = e, i
            if best_i is None:
                break
            flat[best_i] ^= 1
            m = best
        if m < 0:
            return bits
        if m < fallback_m:
            fallback, fallback_m = bits.copy(), m
    return fallback


def _weights(cfg: SurfaceConfig, bits) -> np.ndarray:
    return cfg.amplitude * np.exp(1j * np.pi * np.asarray(bits, dtype=float))


def _af_1d(cfg: SurfaceConfig, bits, angles_deg, incident_deg: float = 0.0) -> np.ndarray:
    n = np.arange(len(bits))
    u = np.sin(np.radians(angles_deg)) + np.sin(np.radians(incident_deg))
    return np.exp(1j * cfg.k * cfg.d * np.outer(u, n)) @ _weights(cfg, bits)


@dataclass
class BeamPattern:
    angles: np.ndarray
    gain_db: np.ndarray               # relative to the peak
    peak_power: float                 # linear |AF|^2 at the main lobe
    main_lobe: float
    hpbw: float


def _hpbw(angles, power, i_peak) -> float:
    """Width between the -3 dB crossings around ``i_peak`` (linear interpolation)."""
    half = power[i_peak] / 2
    lo = i_peak
    while lo > 0 and power[lo] > half:
        lo -= 1
    hi = i_peak
    while hi < len(power) - 1 and power[hi] > half:
        hi += 1
    if power[lo] > half or power[hi] > half:
        return float("nan")
    a_lo = np.interp(half, [power[lo], power[lo + 1]], [angles[lo], angles[lo + 1]])
    a_hi = np.interp(half, [power[hi], power[hi - 1]], [angles[hi], angles[hi - 1]])
    return float(a_hi - a_lo)


def array_factor(cfg: SurfaceConfig, bits, angles_deg=None, incident_deg: float = 0.0,
                 half_space: int = 0) -> BeamPattern:
    """Column array factor |sum Gamma_n exp(j k d n (sin theta + sin incident))|^2.

    A 1-bit (real-weight) array radiates a mirror image of every lobe;
    ``half_space`` = +1 / -1 restricts the main-lobe search to that side of
    broadside, 0 searches everywhere.
    """
    angles = np.linspace(-90, 90, 18001) if angles_deg is None else np.asarray(angles_deg, dtype=float)
    power = np.abs(_af_1d(cfg, bits, angles, incident_deg)) ** 2
    search = power.copy()
    if half_space:
        search[np.sign(angles) * half_space < 0] = -np.inf
    i = int(np.argmax(search))
    with np.errstate(divide="ignore"):
        gain = 10 * np.log10(power / power[i])
    return BeamPattern(angles, gain, float(power[i]), float(angles[i]), _hpbw(angles, power, i))


def steered_pattern(target_deg: float, cfg: SurfaceConfig = SurfaceConfig(), incident_deg: float = 0.0,
                    angles_deg=None) -> BeamPattern:
    bits = steer_codebook(target_deg, incident_deg, cfg)
    side = int(np.sign(target_deg))
    return array_factor(cfg, bits, angles_deg, incident_deg, half_space=side)


def ideal_gain(target_deg: float, cfg: SurfaceConfig = SurfaceConfig()) -> float:
    """|AF|^2 of the continuous-phase beam at its target (= (N * amplitude)^2)."""
    return float((cfg.columns * cfg.amplitude) ** 2)


def codebook(targets_deg, cfg: SurfaceConfig = SurfaceConfig(), incident_deg: float = 0.0) -> np.ndarray:
    return np.stack([steer_codebook(t, incident_deg, cfg) for t in targets_deg])


# -- 3D mode ---------------------------------------------------------------

def _uv(az_deg, el_deg):
    az, el = np.radians(az_deg), np.radians(el_deg)
    return np.cos(el) * np.sin(az), np.sin(el)


def _af_2d(cfg: SurfaceConfig, bits, az_deg, el_deg) -> np.ndarray:
    bits = np.asarray(bits).reshape(cfg.rows, cfg.columns)
    u, v = _uv(np.asarray(az_deg, dtype=float), np.asarray(el_deg, dtype=float))
    m = np.arange(cfg.columns)
    r = np.arange(cfg.rows)
    kd = cfg.k * cfg.d
    ex = np.exp(1j * kd * np.multiply.outer(u, m))      # (..., columns)
    ey = np.exp(1j * kd * np.multiply.outer(v, r))      # (..., rows)
    w = _weights(cfg, bits)
    return np.einsum("...r,rc,...c->...", ey, w, ex)


def _uv_grid(cfg: SurfaceConfig, n_fft: int):
    """Direction cosines of a zero-padded 2D FFT of the cell weights (fftshifted)."""
    s = np.fft.fftshift(np.fft.fftfreq(n_fft)) * 2 * np.pi / (cfg.k * cfg.d)
    return np.meshgrid(s, s)


def _uv_power(cfg: SurfaceConfig, bits, n_fft: int) -> np.ndarray:
    w = _weights(cfg, np.asarray(bits).reshape(cfg.rows, cfg.columns))
    return np.abs(np.fft.fftshift(np.fft.ifft2(w, s=(n_fft, n_fft)))) ** 2


def codebook_3d(az_deg: float, el_deg: float, cfg: SurfaceConfig = SurfaceConfig(4, 4, per_cell=True),
                n_offsets: int = 32, refine_deg: float | None = 2.0) -> np.ndarray:
    """Per-cell 1-bit quantised 2D phase ramp (rows x columns), offset chosen for target gain.

    A 4x4 aperture can only place separable-ramp lobes at a few angles, so
    by default the ramp is refined by single-bit flips until the main lobe is
    within ``refine_deg`` of the target (or no flip helps).
    """
    if abs(az_deg) > 60 or abs(el_deg) > 45:
        warnings.warn("3D target outside az +-60 / el +-45 deg")
    u, v = _uv(az_deg, el_deg)
    kd = cfg.k * cfg.d
    ramp = -kd * (np.arange(cfg.rows)[:, None] * v + np.arange(cfg.columns)[None, :] * u)
    starts = [_quantize(ramp + off) for off in _offsets(n_offsets)]
    gains = [abs(_af_2d(cfg, b, az_deg, el_deg)) for b in starts]
    order = np.argsort(-np.round(gains, 9), kind="stable")
    if refine_deg is None:
        return starts[order[0]]
    U, V = _uv_grid(cfg, 128)
    ok = U ** 2 + V ** 2 <= 1
    if u or v:
        ok &= U * u + V * v >= 0
    az_g = np.degrees(np.arctan2(U, np.sqrt(np.clip(1 - U ** 2 - V ** 2, 0, None))))
    el_g = np.degrees(np.arcsin(np.clip(V, -1, 1)))
    near = ok & (np.hypot(az_g - az_deg, el_g - el_deg) <= refine_deg)
    far = ok & ~near
    if not near.any():
        return starts[order[0]]

    def margin(b):
        p = _uv_power(cfg, b, 128)
        return p[far].max() - p[near].max()
    return _refine([starts[i] for i in order], margin)


@dataclass
class BeamPattern3D:
    az: np.ndarray
    el: np.ndarray
    gain_db: np.ndarray        # (el, az) relative to the peak
    main_lobe: tuple           # (az, el) degrees


def array_factor_3d(cfg: SurfaceConfig, bits, az_grid=None, el_grid=None, half_space=None) -> BeamPattern3D:
    """2D array factor over an (el, az) grid.

    ``half_space`` is a (u, v) direction; the main lobe is searched only where
    the direction cosines have a non-negative projection onto it, which
    removes the mirror lobe of a real-weight array.
    """
    az = np.arange(-90, 90.25, 0.25) if az_grid is None else np.asarray(az_grid, dtype=float)
    el = np.arange(-90, 90.25, 0.25) if el_grid is None else np.asarray(el_grid, dtype=float)
    A, E = np.meshgrid(az, el)
    power = np.abs(_af_2d(cfg, bits, A, E)) ** 2
    search = power.copy()
    if half_space is not None:
        u, v = _uv(A, E)
        search[u * half_space[0] + v * half_space[1] < 0] = -np.inf
    i, j = np.unravel_index(int(np.argmax(search)), power.shape)
    with np.errstate(divide="ignore"):
        gain = 10 * np.log10(power / power[i, j])
    return BeamPattern3D(az, el, gain, (float(az[j]), float(el[i])))


def steered_pattern_3d(az_deg: float, el_deg: float, cfg: SurfaceConfig = SurfaceConfig(4, 4, per_cell=True),
                       **kw) -> BeamPattern3D:
    bits = codebook_3d(az_deg, el_deg, cfg)
    u, v = _uv(az_deg, el_deg)
    hs = (u, v) if (u or v) else None
    return array_factor_3d(cfg, bits, half_space=hs, **kw)


def reconfig_cost(cells: int, model: VaractorModel | None = None) -> tuple:
    """(latency s, energy J) of one reconfiguration touching ``cells`` unit cells."""
    if cells < 0:
        raise ValueError("cells must be non-negative")
    model = model or _default_varactor()
    latency = min(GPIO_RISE + model.time_constant, RECONFIG_BUDGET) if cells else 0.0
    return latency, cells * CELL_ENERGY


def write_pattern_csv(pattern: BeamPattern, path) -> None:
    np.savetxt(path, np.column_stack([pattern.angles, pattern.gain_db]), delimiter=",",
               header="angle_deg,gain_db", comments="", fmt="%.4f")


def write_codebook_csv(targets, bits, path) -> None:
    with open(path, "w") as f:
        f.write("target_deg,bits\n")
        for t, b in zip(targets, bits):
            f.write(f"{t:g},{''.join(str(int(x)) for x in np.ravel(b))}\n")
