"""Fast built-in property checks, run by ``ismsim selftest``."""

from __future__ import annotations

import numpy as np

from .channel import complex_normal
from .detection import ml_detect_batch, mmse_osic_batch
from .mapping import IsmConfig, demap_block, map_block, transmit_table
from .modem import build_constellation, demodulate_hard, modulate

# M_T=4, M_A=2, BPSK with E_s=2, so every active entry is +-1
BPSK_4TX_2ACTIVE = {
    "0000": [-1, -1, 0, 0], "0001": [-1, 1, 0, 0], "0010": [1, -1, 0, 0], "0011": [1, 1, 0, 0],
    "0100": [0, -1, -1, 0], "0101": [0, -1, 1, 0], "0110": [0, 1, -1, 0], "0111": [0, 1, 1, 0],
    "1000": [0, 0, -1, -1], "1001": [0, 0, -1, 1], "1010": [0, 0, 1, -1], "1011": [0, 0, 1, 1],
    "1100": [-1, 0, 0, -1], "1101": [1, 0, 0, -1], "1110": [-1, 0, 0, 1], "1111": [1, 0, 0, 1],
}

FIGURE_CONFIGS = [
    (4, 4, 2, 4), (4, 4, 1, 16), (4, 4, 3, 4), (4, 4, 1, 64),
    (8, 4, 3, 8), (4, 4, 2, 32), (8, 4, 1, 512),
]


def check_constellations():
    for m in (2, 4, 8, 16, 32, 64, 128, 256, 512):
        c = build_constellation(m)
        assert abs(c.mean_energy - 1) < 1e-12, m
        assert sorted(c.labels) == [format(k, f"0{c.bits_per_symbol}b") for k in range(m)]
        for lab in c.labels:
            assert demodulate_hard(modulate(lab, c), c) == lab


def check_table1():
    cfg = IsmConfig(4, 4, 2, 2, symbol_energy=2.0)
    c = build_constellation(2)
    for bits, row in BPSK_4TX_2ACTIVE.items():
        tv = map_block(bits, cfg, c)
        assert np.allclose(tv.x, row, atol=1e-12), bits
        assert demap_block(tv.antenna_index, tv.symbols, cfg, c) == bits


def check_bijection_and_power():
    for t, r, a, m in FIGURE_CONFIGS:
        cfg = IsmConfig(t, r, a, m)
        c = build_constellation(m)
        tab = transmit_table(cfg, c)
        assert len({tuple(np.round(col, 12)) for col in tab.T}) == tab.shape[1]
        assert abs(np.mean(np.sum(np.abs(tab) ** 2, axis=0)) - cfg.symbol_energy) < 1e-9
        assert (np.count_nonzero(tab, axis=0) == a).all()


def check_noiseless_ml(n=500):
    rng = np.random.default_rng(12345)
    for t, r, a, m in FIGURE_CONFIGS[:4]:
        cfg = IsmConfig(t, r, a, m)
        tab = transmit_table(cfg, build_constellation(m))
        blocks = rng.integers(0, tab.shape[1], n)
        h = complex_normal(rng, (n, r, t))
        y = np.einsum("brt,tb->br", h, tab[:, blocks])
        assert (ml_detect_batch(y, h, tab)[0] == blocks).all()


def check_osic_unitary():
    rng = np.random.default_rng(7)
    c = build_constellation(16)
    for _ in range(50):
        q, _ = np.linalg.qr(complex_normal(rng, (4, 4)))
        idx = rng.integers(0, 16, 4)
        y = q @ (0.5 * c.points[idx])
        assert (mmse_osic_batch(y, q, 1e-12, c)[0] == idx).all()


CHECKS = [
    ("constellations: unit energy, labels, round trip", check_constellations),
    ("mapper reproduces the 16-row BPSK table", check_table1),
    ("mapper bijection, sparsity and power constraint", check_bijection_and_power),
    ("noiseless ML exactness", check_noiseless_ml),
    ("MMSE-OSIC exact on unitary channels", check_osic_unitary),
]


def run(echo=print) -> bool:
    ok = True
    for name, fn in CHECKS:
        try:
            fn()
            echo(f"PASS  {name}")
        except AssertionError as e:
            ok = False
            echo(f"FAIL  {name} {e}")
    return ok
