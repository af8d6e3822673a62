import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ismsim.errors import (
    ConstellationMismatch,
    IndexOutOfRange,
    NotAConstellationPoint,
    NotPowerOfTwo,
    ValidationError,
    WrongBitCount,
)
from ismsim.mapping import (
    IsmConfig,
    block_bits,
    circular_shift,
    demap_block,
    map_block,
    transmit_table,
)
from ismsim.modem import build_constellation

# M_T=4, M_A=2, BPSK; amplitudes are unit when E_s=2
REFERENCE_ROWS = [
    ("0000", (1, 2), [-1, -1, 0, 0]),
    ("0001", (1, 2), [-1, 1, 0, 0]),
    ("0010", (1, 2), [1, -1, 0, 0]),
    ("0011", (1, 2), [1, 1, 0, 0]),
    ("0100", (2, 3), [0, -1, -1, 0]),
    ("0101", (2, 3), [0, -1, 1, 0]),
    ("0110", (2, 3), [0, 1, -1, 0]),
    ("0111", (2, 3), [0, 1, 1, 0]),
    ("1000", (3, 4), [0, 0, -1, -1]),
    ("1001", (3, 4), [0, 0, -1, 1]),
    ("1010", (3, 4), [0, 0, 1, -1]),
    ("1011", (3, 4), [0, 0, 1, 1]),
    ("1100", (4, 1), [-1, 0, 0, -1]),
    ("1101", (4, 1), [1, 0, 0, -1]),
    ("1110", (4, 1), [-1, 0, 0, 1]),
    ("1111", (4, 1), [1, 0, 0, 1]),
]

BPSK_CFG = IsmConfig(4, 4, 2, 2, symbol_energy=2.0)
BPSK = build_constellation(2)

FIGURE_CONFIGS = [
    (4, 4, 2, 4), (4, 4, 1, 16), (4, 4, 3, 4), (4, 4, 1, 64),
    (8, 4, 3, 8), (4, 4, 2, 32), (8, 4, 1, 512),
]


@pytest.mark.parametrize("t,a,m,expected", [(4, 2, 4, 6), (4, 3, 4, 8), (8, 3, 8, 12)])
def test_block_bits(t, a, m, expected):
    cfg = IsmConfig(t, 4, a, m)
    assert block_bits(cfg) == expected
    assert cfg.spectral_efficiency == expected
    assert 2 ** expected == t * m ** a


def test_circular_shift_examples():
    v = np.array(["s1", "s2", "0", "0"])
    assert list(circular_shift(v, 1)) == ["s1", "s2", "0", "0"]
    assert list(circular_shift(v, 3)) == ["0", "0", "s1", "s2"]
    assert list(circular_shift(v, 4)) == ["s2", "0", "0", "s1"]
    with pytest.raises(IndexOutOfRange):
        circular_shift(v, 0)
    with pytest.raises(IndexOutOfRange):
        circular_shift(v, 5)


@pytest.mark.parametrize("bits,active,row", REFERENCE_ROWS)
def test_reference_rows(bits, active, row):
    tv = map_block(bits, BPSK_CFG, BPSK)
    np.testing.assert_allclose(tv.x, row, atol=1e-12)
    assert tv.antenna_index == active[0]
    assert sorted(p + 1 for p in tv.active_positions()) == sorted(active)
    assert demap_block(tv.antenna_index, tv.symbols, BPSK_CFG, BPSK) == bits


def test_demap_examples():
    assert demap_block(2, [1, -1], BPSK_CFG, BPSK) == "0110"
    assert demap_block(1, [-1, -1], BPSK_CFG, BPSK) == "0000"


@pytest.mark.parametrize("t,r,a,m", FIGURE_CONFIGS)
def test_exhaustive_bijection_and_power(t, r, a, m):
    cfg = IsmConfig(t, r, a, m)
    c = build_constellation(m)
    assert cfg.block_bits <= 14
    seen = set()
    energy = 0.0
    for n in range(2 ** cfg.block_bits):
        bits = format(n, f"0{cfg.block_bits}b")
        tv = map_block(bits, cfg, c)
        seen.add(tuple(np.round(tv.x, 12)))
        energy += np.sum(np.abs(tv.x) ** 2)
        nz = np.flatnonzero(tv.x)
        assert sorted(nz) == sorted((tv.antenna_index - 1 + k) % t for k in range(a))
        assert demap_block(tv.antenna_index, tv.symbols, cfg, c) == bits
    assert len(seen) == 2 ** cfg.block_bits
    assert abs(energy / 2 ** cfg.block_bits - cfg.symbol_energy) < 1e-9


@pytest.mark.parametrize("t,r,a,m", FIGURE_CONFIGS)
def test_table_matches_map_block(t, r, a, m):
    cfg = IsmConfig(t, r, a, m, symbol_energy=1.7)
    c = build_constellation(m)
    tab = transmit_table(cfg, c)
    rng = np.random.default_rng(3)
    for n in rng.integers(0, tab.shape[1], 200):
        np.testing.assert_allclose(tab[:, n], map_block(format(n, f"0{cfg.block_bits}b"), cfg, c).x)


@st.composite
def configs(draw):
    t = draw(st.sampled_from([2, 4, 8, 16]))
    a = draw(st.integers(1, t - 1))
    m = draw(st.sampled_from([2, 4, 8, 16, 64]))
    return IsmConfig(t, 2, a, m, symbol_energy=draw(st.floats(0.1, 10)))


@settings(max_examples=60, deadline=None)
@given(configs(), st.data())
def test_map_properties(cfg, data):
    c = build_constellation(cfg.mod_order)
    n = data.draw(st.integers(0, 2 ** cfg.block_bits - 1))
    bits = format(n, f"0{cfg.block_bits}b")
    tv = map_block(bits, cfg, c)
    nz = np.flatnonzero(tv.x)
    assert len(nz) == cfg.num_active
    first = tv.antenna_index - 1
    for k in range(cfg.num_active):
        pos = (first + k) % cfg.num_tx
        assert tv.x[pos] == pytest.approx(np.sqrt(cfg.symbol_energy / cfg.num_active) * tv.symbols[k])
    assert demap_block(tv.antenna_index, tv.symbols, cfg, c) == bits


def test_single_active_is_conventional_sm():
    cfg = IsmConfig(8, 4, 1, 16)
    c = build_constellation(16)
    for n in range(2 ** cfg.block_bits):
        tv = map_block(format(n, "07b"), cfg, c)
        assert np.flatnonzero(tv.x).tolist() == [tv.antenna_index - 1]
        assert tv.x[tv.antenna_index - 1] == pytest.approx(tv.symbols[0])


def test_config_validation():
    with pytest.raises(NotPowerOfTwo):
        IsmConfig(3, 4, 1, 4)
    with pytest.raises(NotPowerOfTwo):
        IsmConfig(4, 4, 1, 6)
    with pytest.raises(ValidationError):
        IsmConfig(4, 4, 4, 4)
    with pytest.raises(ValidationError):
        IsmConfig(4, 4, 0, 4)
    with pytest.raises(ValidationError):
        IsmConfig(4, 0, 1, 4)


def test_map_errors():
    with pytest.raises(WrongBitCount):
        map_block("010", BPSK_CFG, BPSK)
    with pytest.raises(ConstellationMismatch):
        map_block("0101", BPSK_CFG, build_constellation(4))
    with pytest.raises(IndexOutOfRange):
        demap_block(5, [1, 1], BPSK_CFG, BPSK)
    with pytest.raises(NotAConstellationPoint):
        demap_block(1, [0.5, 1], BPSK_CFG, BPSK)


def test_bits_may_be_sequences():
    assert np.allclose(map_block([0, 1, 1, 0], BPSK_CFG, BPSK).x, [0, 1, -1, 0])
