"""Coding chain checks against independent re-implementations of each stage."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrsurface import gf2
from nrsurface.emulation import (SUBBLOCK_PERM, PhaseTargets, PipelineConfig, build_affine_model, controllable_harmonics,
                                 crc24a, encode_pipeline, gold_sequence, payload_hex, random_targets,
                                 realised_phases, solve_payload, subblock_interleave, tbcc_encode)
from nrsurface.waveform import DATA_SYMBOLS


@pytest.fixture(scope="module")
def model():
    return build_affine_model()


# -- oracles -----------------------------------------------------------------

def tbcc_shift_register(bits):
    """Tail-biting encoder written as a shift register preloaded with the last six bits."""
    polys = (0o133, 0o171, 0o165)
    bits = [int(b) for b in bits]
    state = list(reversed(bits[-6:]))        # state[0] is the most recent bit
    out = [[], [], []]
    for b in bits:
        reg = [b] + state
        for i, p in enumerate(polys):
            taps = [(p >> (6 - j)) & 1 for j in range(7)]
            out[i].append(sum(t * r for t, r in zip(taps, reg)) % 2)
        state = reg[:6]
    return np.array(out, dtype=np.uint8)


def crc_long_division(bits, poly=0x1864CFB, width=24):
    msg = int("".join(str(int(b)) for b in bits), 2) << width if len(bits) else 0
    top = poly.bit_length() - 1
    while msg.bit_length() > width:
        msg ^= poly << (msg.bit_length() - 1 - top)
    return np.array([(msg >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def interleave_by_index(stream):
    """Sub-block interleaver output position k reads input column P[k // R] of row k % R."""
    d = list(stream)
    R = -(-len(d) // 32)
    y = [-1] * (R * 32 - len(d)) + d
    return np.array([y[SUBBLOCK_PERM[k // R] + 32 * (k % R)] for k in range(32 * R)])


def gold_direct(n, c_init, nc=1600):
    x1 = [1] + [0] * 30
    x2 = [(c_init >> i) & 1 for i in range(31)]
    for i in range(n + nc):
        x1.append((x1[i + 3] + x1[i]) % 2)
        x2.append((x2[i + 3] + x2[i + 2] + x2[i + 1] + x2[i]) % 2)
    return np.array([(x1[k + nc] + x2[k + nc]) % 2 for k in range(n)], dtype=np.uint8)


# -- stage checks ------------------------------------------------------------

@given(st.lists(st.integers(0, 1), min_size=8, max_size=300))
def test_tbcc_matches_shift_register(bits):
    assert np.array_equal(tbcc_encode(bits), tbcc_shift_register(bits))


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
def test_crc24a_matches_long_division(bits):
    assert np.array_equal(crc24a(bits), crc_long_division(bits))


@given(st.integers(1, 400))
def test_subblock_interleaver_matches_index_formula(n):
    s = np.arange(n)
    assert np.array_equal(subblock_interleave(s), interleave_by_index(s))


def test_gold_sequence_matches_direct_recursion():
    for c in (1, 0x2B5C3A1, 2**31 - 1):
        assert np.array_equal(gold_sequence(500, c), gold_direct(500, c))


def test_encoder_is_affine():
    cfg = PipelineConfig()
    rng = np.random.default_rng(5)
    z = encode_pipeline(np.zeros(256, np.uint8)).bits
    for _ in range(10):
        x, y = rng.integers(0, 2, (2, 256), dtype=np.uint8)
        lhs = encode_pipeline(x ^ y, cfg).bits ^ z
        rhs = encode_pipeline(x, cfg).bits ^ encode_pipeline(y, cfg).bits
        assert np.array_equal(lhs, rhs)


def test_crc_variant_is_affine_too():
    cfg = PipelineConfig(payload_len=232, use_crc=True)
    m = build_affine_model(cfg, n_check=20)
    assert m.payload_len == 232


# -- solver ------------------------------------------------------------------

def test_model_rank_is_frozen(model):
    # 10 data symbols x 12 subcarriers x 2 bits, all independent for a 256-bit payload
    assert model.constrained_len == 240
    assert model.rank() == 240


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_solve_reproduces_partial_targets(model, seed, n_symbols):
    rng = np.random.default_rng(seed)
    syms = tuple(rng.choice(DATA_SYMBOLS, n_symbols, replace=False))
    t = random_targets(rng, syms)
    x = solve_payload(t, model)
    ph = realised_phases(x)
    for s, c, p in t.entries:
        assert np.isclose(np.exp(1j * ph[s, c]), np.exp(1j * p))


def test_free_variables_are_zero(model):
    t = random_targets(np.random.default_rng(1))
    x = solve_payload(t, model)
    R, _, piv, _ = gf2.row_reduce(model.A)
    free = sorted(set(range(256)) - set(piv))
    assert len(free) == 16 and not x[free].any()


def test_targets_validation():
    with pytest.raises(ValueError):
        PhaseTargets([(5, 0, np.pi / 4)])          # NRS symbol
    with pytest.raises(ValueError):
        PhaseTargets([(0, 0, 0.3)])                # not QPSK
    with pytest.raises(ValueError):
        PhaseTargets([(0, 0, np.pi / 4), (0, 0, np.pi / 4)])
    assert random_targets(np.random.default_rng(0)).is_complete()


def test_controllable_harmonics():
    assert controllable_harmonics(0) == 66
    assert controllable_harmonics(2) == 45
    with pytest.raises(ValueError):
        controllable_harmonics(13)


def test_payload_hex_length():
    assert len(payload_hex(np.ones(256, np.uint8))) == 64


# -- GF(2) -------------------------------------------------------------------

bit_matrices = st.integers(1, 12).flatmap(
    lambda m: st.integers(1, 12).flatmap(
        lambda n: st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=m, max_size=m)))


@given(bit_matrices, st.integers(0, 2**32 - 1))
def test_gf2_solve_consistent(rows, seed):
    A = np.array(rows, dtype=np.uint8)
    x0 = np.random.default_rng(seed).integers(0, 2, A.shape[1], dtype=np.uint8)
    y = gf2.matvec(A, x0)
    x = gf2.solve(A, y)
    assert np.array_equal(gf2.matvec(A, x), y)
    assert gf2.rank(A) <= min(A.shape)


def test_gf2_inconsistent_reports_rows():
    A = np.array([[1, 0], [1, 0], [0, 1]], np.uint8)
    with pytest.raises(gf2.InconsistentSystem) as e:
        gf2.solve(A, np.array([1, 0, 1], np.uint8))
    assert set(e.value.rows) == {0, 1}


def test_gf2_rejects_non_binary():
    with pytest.raises(ValueError):
        gf2.rank(np.array([[2]]))
