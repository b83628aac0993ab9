"""Emulating NBPU symbols through the NB-IoT downlink coding chain.

Every stage between the transport block and the QPSK mapper is linear or
affine over GF(2): CRC, tail-biting convolutional code, sub-block interleaving,
circular-buffer selection and XOR scrambling.  The coded bits at any set of
resource elements are therefore ``A x ^ b`` for payload ``x``; ``A`` and ``b``
are recovered by probing the encoder, and a payload that produces any desired
phase pattern on the constrained REs is found by Gaussian elimination.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from . import gf2
from .waveform import (DATA_SYMBOLS, DEFAULT_NRS_SUBCARRIERS, N_SUBCARRIERS, N_SYMBOLS, NRS_PHASE,
                       NRS_SYMBOLS, ResourceGrid, bits_to_phases, data_positions, nrs_mask, phases_to_bits,
                       snap_qpsk)

# LTE tail-biting convolutional code, constraint length 7, octal 133/171/165
TBCC_POLYS = (0o133, 0o171, 0o165)
TBCC_K = 7
# sub-block interleaver column permutation for convolutionally coded channels
SUBBLOCK_PERM = (1, 17, 9, 25, 5, 21, 13, 29, 3, 19, 11, 27, 7, 23, 15, 31,
                 0, 16, 8, 24, 4, 20, 12, 28, 2, 18, 10, 26, 6, 22, 14, 30)
CRC24A_POLY = 0x864CFB
# fixed scrambler seed; the chain only needs a known sequence, not a cell-specific one
SCRAMBLE_CINIT = 0x2B5C3A1
GOLD_NC = 1600


def tbcc_generators() -> np.ndarray:
    """(3, 7) taps, element [i, j] multiplies input delayed by j."""
    return np.array([[(p >> (TBCC_K - 1 - j)) & 1 for j in range(TBCC_K)] for p in TBCC_POLYS], dtype=np.uint8)


def tbcc_encode(bits) -> np.ndarray:
    """Tail-biting encode; returns the three output streams, shape (3, K)."""
    c = np.asarray(bits, dtype=np.uint8)
    g = tbcc_generators()
    out = np.zeros((3, len(c)), dtype=np.uint8)
    for j in range(TBCC_K):
        delayed = np.roll(c, j)   # c[k - j mod K]
        out ^= g[:, j:j + 1] * delayed[None, :]
    return out


def crc24a(bits) -> np.ndarray:
    """24 parity bits of the LTE CRC24A (zero initial register, so linear)."""
    reg = 0
    for b in np.asarray(bits, dtype=np.uint8):
        fb = ((reg >> 23) & 1) ^ int(b)
        reg = (reg << 1) & 0xFFFFFF
        if fb:
            reg ^= CRC24A_POLY
    return np.array([(reg >> (23 - i)) & 1 for i in range(24)], dtype=np.uint8)


def subblock_interleave(stream) -> np.ndarray:
    """Column-permuting interleaver; returns int array with -1 marking dummy bits."""
    d = np.asarray(stream, dtype=np.int16)
    rows = -(-len(d) // 32)
    padded = np.concatenate([np.full(rows * 32 - len(d), -1, dtype=np.int16), d])
    mat = padded.reshape(rows, 32)
    return mat[:, SUBBLOCK_PERM].T.ravel()


def circular_buffer(streams) -> np.ndarray:
    return np.concatenate([subblock_interleave(s) for s in streams])


def rate_match(streams, n_out: int) -> np.ndarray:
    """Read ``n_out`` bits cyclically from the circular buffer, skipping dummies."""
    w = circular_buffer(streams)
    valid = w[w >= 0].astype(np.uint8)
    reps = -(-n_out // len(valid))
    return np.tile(valid, reps)[:n_out]


def gold_sequence(n: int, c_init: int = SCRAMBLE_CINIT) -> np.ndarray:
    """Length-31 Gold sequence as used for LTE scrambling."""
    return _gold(int(n), int(c_init)).copy()


@lru_cache(maxsize=16)
def _gold(n: int, c_init: int) -> np.ndarray:
    total = n + GOLD_NC
    x1 = np.zeros(total + 31, dtype=np.uint8)
    x2 = np.zeros(total + 31, dtype=np.uint8)
    x1[0] = 1
    x2[:31] = [(c_init >> i) & 1 for i in range(31)]
    for i in range(total):
        x1[i + 31] = x1[i + 3] ^ x1[i]
        x2[i + 31] = x2[i + 3] ^ x2[i + 2] ^ x2[i + 1] ^ x2[i]
    return x1[GOLD_NC:GOLD_NC + n] ^ x2[GOLD_NC:GOLD_NC + n]


@dataclass(frozen=True)
class PipelineConfig:
    payload_len: int = 256
    use_crc: bool = False
    n_subframes: int = 3            # transport block spread over this many subframes
    nbpu_subframe: int = 0          # which of them carries the NBPU symbols
    c_init: int = SCRAMBLE_CINIT
    nrs_positions: tuple = tuple(sorted(DEFAULT_NRS_SUBCARRIERS.items()))

    @property
    def mask(self) -> np.ndarray:
        return nrs_mask(dict(self.nrs_positions))

    @property
    def re_per_subframe(self) -> int:
        return int((~self.mask).sum())

    @property
    def coded_len(self) -> int:
        return 2 * self.re_per_subframe * self.n_subframes


@dataclass
class EncodedBlock:
    """Coded, scrambled bits in transmission order plus their RE placement."""

    bits: np.ndarray              # (coded_len,)
    re_bits: np.ndarray           # (n_subframes, 14, 12, 2); NRS entries are 0
    mask: np.ndarray

    def grid(self, subframe: int) -> ResourceGrid:
        phase = bits_to_phases(self.re_bits[subframe].reshape(-1, 2)).reshape(N_SYMBOLS, N_SUBCARRIERS)
        phase[self.mask] = NRS_PHASE
        return ResourceGrid(phase=phase, nrs_mask=self.mask.copy())


def encode_pipeline(payload, cfg: PipelineConfig = PipelineConfig()) -> EncodedBlock:
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.shape != (cfg.payload_len,):
        raise ValueError(f"payload must be {cfg.payload_len} bits, got {payload.shape}")
    tb = np.concatenate([payload, crc24a(payload)]) if cfg.use_crc else payload
    e = rate_match(tbcc_encode(tb), cfg.coded_len)
    e = e ^ gold_sequence(cfg.coded_len, cfg.c_init)
    mask = cfg.mask
    pos = data_positions(mask)
    per = 2 * len(pos)
    re_bits = np.zeros((cfg.n_subframes, N_SYMBOLS, N_SUBCARRIERS, 2), dtype=np.uint8)
    rows = np.array([p[0] for p in pos])
    cols = np.array([p[1] for p in pos])
    for sf in range(cfg.n_subframes):
        re_bits[sf, rows, cols] = e[sf * per:(sf + 1) * per].reshape(-1, 2)
    return EncodedBlock(bits=e, re_bits=re_bits, mask=mask)


# -- targets ---------------------------------------------------------------

@dataclass
class PhaseTargets:
    """Desired QPSK phases at (symbol, subcarrier) REs of the NBPU subframe."""

    entries: list = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for s, c, ph in self.entries:
            if s in NRS_SYMBOLS or not 0 <= s < N_SYMBOLS:
                raise ValueError(f"symbol {s} is not a data symbol (NRS columns {NRS_SYMBOLS})")
            if not 0 <= c < N_SUBCARRIERS:
                raise ValueError(f"subcarrier {c} out of range")
            if (s, c) in seen:
                raise ValueError(f"duplicate target at {(s, c)}")
            seen.add((s, c))
            if abs(np.exp(1j * snap_qpsk([ph])[0]) - np.exp(1j * ph)) > 1e-6:
                raise ValueError(f"phase {ph} is not a QPSK phase")

    @classmethod
    def from_symbols(cls, symbol_phases: dict) -> "PhaseTargets":
        """Build from {symbol: 12 phases}."""
        return cls([(int(s), c, float(p)) for s, ph in sorted(symbol_phases.items()) for c, p in enumerate(ph)])

    def is_complete(self) -> bool:
        return len(self.entries) == len(DATA_SYMBOLS) * N_SUBCARRIERS

    def bits(self) -> np.ndarray:
        return phases_to_bits([e[2] for e in self.entries])

    def __len__(self):
        return len(self.entries)


def random_targets(rng, symbols=DATA_SYMBOLS) -> PhaseTargets:
    ph = rng.integers(0, 4, size=(len(symbols), N_SUBCARRIERS)) * (np.pi / 2) + np.pi / 4
    return PhaseTargets.from_symbols(dict(zip(symbols, ph)))


def read_targets_csv(path) -> PhaseTargets:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PhaseTargets([(int(r[0]), int(r[1]), float(r[2])) for r in rows])


# -- affine model ----------------------------------------------------------

def constrained_indices(cfg: PipelineConfig, cells) -> np.ndarray:
    """Positions in the coded bit stream of the two bits of every (symbol, subcarrier) cell."""
    pos = data_positions(cfg.mask)
    lookup = {p: i for i, p in enumerate(pos)}
    base = 2 * len(pos) * cfg.nbpu_subframe
    idx = []
    for s, c in cells:
        i = lookup[(s, c)]
        idx.extend([base + 2 * i, base + 2 * i + 1])
    return np.array(idx, dtype=int)


def default_cells():
    return [(s, c) for s in DATA_SYMBOLS for c in range(N_SUBCARRIERS)]


@dataclass
class CodingPipeline:
    """y = A x ^ b on the constrained coded-bit positions ``rows``."""

    A: np.ndarray
    b: np.ndarray
    cells: list
    rows: np.ndarray
    config: PipelineConfig

    @property
    def payload_len(self) -> int:
        return self.A.shape[1]

    @property
    def constrained_len(self) -> int:
        return self.A.shape[0]

    def rank(self) -> int:
        return gf2.rank(self.A)

    def predict(self, payload) -> np.ndarray:
        return gf2.matvec(self.A, payload) ^ self.b


class ProbeMismatch(RuntimeError):
    pass


def build_affine_model(cfg: PipelineConfig = PipelineConfig(), n_check: int = 100, seed: int = 0) -> CodingPipeline:
    cells = default_cells()
    rows = constrained_indices(cfg, cells)
    zero = encode_pipeline(np.zeros(cfg.payload_len, dtype=np.uint8), cfg).bits
    b = zero[rows]
    A = np.empty((len(rows), cfg.payload_len), dtype=np.uint8)
    for j in range(cfg.payload_len):
        e = np.zeros(cfg.payload_len, dtype=np.uint8)
        e[j] = 1
        A[:, j] = encode_pipeline(e, cfg).bits[rows] ^ b
    model = CodingPipeline(A=A, b=b, cells=cells, rows=rows, config=cfg)
    rng = np.random.default_rng(seed)
    for _ in range(n_check):
        x = rng.integers(0, 2, cfg.payload_len, dtype=np.uint8)
        if not np.array_equal(model.predict(x), encode_pipeline(x, cfg).bits[rows]):
            raise ProbeMismatch("encoder is not affine on the probed positions")
    return model


def solve_payload(targets: PhaseTargets, model: CodingPipeline) -> np.ndarray:
    """Payload (free variables zero) whose encoding realises every target phase.

    Raises ``gf2.InconsistentSystem`` listing the unsatisfiable target bits
    (as indices into ``targets.bits()``).
    """
    lookup = {cell: i for i, cell in enumerate(model.cells)}
    sel = []
    for s, c, _ in targets.entries:
        i = lookup[(s, c)]
        sel.extend([2 * i, 2 * i + 1])
    sel = np.array(sel, dtype=int)
    y = targets.bits() ^ model.b[sel]
    x = gf2.solve(model.A[sel], y)
    got = encode_pipeline(x, model.config)
    want = targets.bits()
    if not np.array_equal(got.bits[model.rows[sel]], want):
        raise ProbeMismatch("solution failed forward verification")
    return x


def realised_phases(payload, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """(14, 12) phases of the NBPU subframe produced by ``payload``."""
    return encode_pipeline(payload, cfg).grid(cfg.nbpu_subframe).phase


def controllable_harmonics(nrs_row) -> int:
    """Number of subcarrier pairs in one symbol whose members are both free.

    ``nrs_row`` is a length-12 boolean mask or an integer count of NRS REs.
    """
    n_nrs = int(nrs_row) if np.isscalar(nrs_row) else int(np.sum(nrs_row))
    if not 0 <= n_nrs <= N_SUBCARRIERS:
        raise ValueError("NRS count must be within 0..12")
    return comb(N_SUBCARRIERS - n_nrs, 2)


def payload_hex(payload) -> str:
    return np.packbits(np.asarray(payload, dtype=np.uint8)).tobytes().hex()
