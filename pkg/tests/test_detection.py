import itertools

import numpy as np
import pytest

from ismsim.detection import (
    log_likelihood,
    ml_detect_batch,
    ml_detect_ism,
    ml_detect_sm,
    mmse_osic_batch,
    vblast_mmse_osic,
)
from ismsim.errors import DimensionMismatch, ValidationError
from ismsim.mapping import IsmConfig, map_block, transmit_table
from ismsim.modem import build_constellation

from conftest import cn


def brute_force(y, h, cfg, c):
    """Exhaustive scan built from map_block, independent of the cached table."""
    best = None
    for n in range(2 ** cfg.block_bits):
        bits = format(n, f"0{cfg.block_bits}b")
        x = map_block(bits, cfg, c).x
        r = y - h @ x
        d = float(np.real(np.vdot(r, r)))
        if best is None or d < best[0]:
            best = (d, bits)
    return best


def test_noiseless_recovery_all_64_blocks(rng):
    cfg = IsmConfig(4, 4, 2, 4)
    c = build_constellation(4)
    h = cn(rng, (4, 4))
    for n in range(64):
        bits = format(n, "06b")
        tv = map_block(bits, cfg, c)
        res = ml_detect_ism(h @ tv.x, h, cfg, c)
        assert res.antenna_index == tv.antenna_index
        np.testing.assert_allclose(res.symbols, tv.symbols)
        assert res.hypothesis == n
        assert res.hypotheses_searched == 64
        assert res.metric == pytest.approx(0, abs=1e-20)


def test_all_zero_tie_rule():
    cfg = IsmConfig(4, 4, 2, 4)
    c = build_constellation(4)
    res = ml_detect_ism(np.zeros(4), np.zeros((4, 4)), cfg, c)
    assert res.antenna_index == 1
    assert res.hypothesis == 0
    np.testing.assert_allclose(res.symbols, [c.points[0], c.points[0]])


def test_likelihood_argmax_equals_residual_argmin(rng):
    cfg = IsmConfig(4, 2, 2, 2)
    c = build_constellation(2)
    tab = transmit_table(cfg, c)
    for _ in range(100):
        h = cn(rng, (2, 4))
        y = cn(rng, 2, 3.0)
        nv = rng.uniform(0.05, 3)
        ll = [log_likelihood(y, h, tab[:, n], nv) for n in range(tab.shape[1])]
        res = [np.sum(np.abs(y - h @ tab[:, n]) ** 2) for n in range(tab.shape[1])]
        assert int(np.argmax(ll)) == int(np.argmin(res))
        assert ml_detect_ism(y, h, cfg, c).hypothesis == int(np.argmin(res))
        # strictly decreasing affine map of the residual: identical ranking
        np.testing.assert_allclose(ll, -2 * np.log(np.pi * nv) - np.array(res) / nv)


def test_log_likelihood_value():
    y = np.array([1 + 1j, 0])
    h = np.eye(2)
    x = np.array([1, 0])
    assert log_likelihood(y, h, x, 0.5) == pytest.approx(-2 * np.log(np.pi * 0.5) - 1 / 0.5)


@pytest.mark.parametrize("cfg", [IsmConfig(4, 4, 2, 4), IsmConfig(4, 2, 3, 2), IsmConfig(8, 3, 1, 16)])
def test_metric_is_global_minimum(cfg, rng):
    c = build_constellation(cfg.mod_order)
    for _ in range(20):
        h = cn(rng, (cfg.num_rx, cfg.num_tx))
        tv = map_block(format(int(rng.integers(2 ** cfg.block_bits)), f"0{cfg.block_bits}b"), cfg, c)
        y = h @ tv.x + cn(rng, cfg.num_rx, 0.3)
        res = ml_detect_ism(y, h, cfg, c)
        d, bits = brute_force(y, h, cfg, c)
        assert res.metric == pytest.approx(d, rel=1e-9, abs=1e-12)
        assert format(res.hypothesis, f"0{cfg.block_bits}b") == bits


def test_sm_noiseless_all_hypotheses(rng):
    c = build_constellation(16)
    h = cn(rng, (4, 4))
    cfg = IsmConfig(4, 4, 1, 16)
    for n in range(64):
        tv = map_block(format(n, "06b"), cfg, c)
        res = ml_detect_sm(h @ tv.x, h, 4, c)
        assert (res.antenna_index, res.hypothesis) == (tv.antenna_index, n)


def test_sm_single_antenna_is_nearest_point(rng):
    c = build_constellation(16)
    for _ in range(50):
        h = cn(rng, (3, 1))
        y = cn(rng, 3)
        res = ml_detect_sm(y, h, 1, c)
        d = [np.sum(np.abs(y - h[:, 0] * p) ** 2) for p in c.points]
        assert res.antenna_index == 1
        assert res.symbols[0] == c.points[int(np.argmin(d))]


def test_sm_agrees_with_ism_single_active(rng):
    c = build_constellation(4)
    cfg = IsmConfig(4, 2, 1, 4)
    for _ in range(1000):
        h = cn(rng, (2, 4))
        y = cn(rng, 2, 1.5)
        a = ml_detect_sm(y, h, 4, c)
        b = ml_detect_ism(y, h, cfg, c)
        assert a.hypothesis == b.hypothesis and a.metric == b.metric


def test_noiseless_exactness_batch(rng):
    for t, r, a, m in [(4, 4, 2, 4), (4, 4, 3, 4), (4, 4, 1, 64)]:
        cfg = IsmConfig(t, r, a, m)
        tab = transmit_table(cfg, build_constellation(m))
        n = rng.integers(0, tab.shape[1], 2000)
        h = cn(rng, (2000, r, t))
        y = np.einsum("brt,tb->br", h, tab[:, n])
        assert (ml_detect_batch(y, h, tab)[0] == n).all()


def test_osic_unitary_exact(rng):
    c = build_constellation(16)
    for _ in range(100):
        q, _ = np.linalg.qr(cn(rng, (4, 4)))
        idx = rng.integers(0, 16, 4)
        s = c.points[idx]
        y = q @ (np.sqrt(1 / 4) * s)
        np.testing.assert_array_equal(vblast_mmse_osic(y, q, 1e-14, c), s)


@pytest.mark.parametrize("m", [4, 16, 64])
def test_osic_single_stream_equals_sm(m, rng):
    c = build_constellation(m)
    for _ in range(300):
        h = cn(rng, (4, 1))
        y = h[:, 0] * c.points[rng.integers(m)] + cn(rng, 4, 0.2)
        a = vblast_mmse_osic(y, h, 0.2, c)
        b = ml_detect_sm(y, h, 1, c)
        assert a[0] == b.symbols[0]


def test_osic_not_better_than_joint_ml(rng):
    c = build_constellation(4)
    n = 10000
    amp = np.sqrt(1 / 2)
    cands = np.array(list(itertools.product(range(4), repeat=2)))
    cand_x = amp * c.points[cands]  # (16, 2)
    h = cn(rng, (n, 2, 2))
    idx = rng.integers(0, 4, (n, 2))
    nv = 10 ** (-8 / 10)
    y = np.einsum("brt,bt->br", h, amp * c.points[idx]) + cn(rng, (n, 2), nv)
    osic = mmse_osic_batch(y, h, nv, c)
    hx = np.einsum("brt,kt->bkr", h, cand_x)
    best = cands[np.argmin(np.sum(np.abs(y[:, None, :] - hx) ** 2, axis=2), axis=1)]
    p_osic = np.mean((osic != idx).any(axis=1))
    p_ml = np.mean((best != idx).any(axis=1))
    sigma = np.sqrt((p_osic * (1 - p_osic) + p_ml * (1 - p_ml)) / n)
    assert p_osic >= p_ml - 3 * sigma
    assert p_osic > p_ml  # ML is strictly better at this operating point


def test_osic_ordering_picks_strongest_first():
    # stream 2 sees a much stronger column, so it must be decided first; with a
    # noiseless but rank-deficient first column the result is still well defined
    c = build_constellation(4)
    h = np.array([[0.1, 3.0], [0.0, 0.0], [0.05, 0.0]], dtype=complex)
    s = c.points[[1, 2]]
    y = h @ (np.sqrt(0.5) * s)
    np.testing.assert_array_equal(vblast_mmse_osic(y, h, 1e-9, c), s)


def test_detector_errors():
    c = build_constellation(4)
    cfg = IsmConfig(4, 4, 2, 4)
    with pytest.raises(DimensionMismatch):
        ml_detect_ism(np.zeros(3), np.zeros((4, 4)), cfg, c)
    with pytest.raises(DimensionMismatch):
        ml_detect_sm(np.zeros(4), np.zeros((4, 3)), 4, c)
    with pytest.raises(DimensionMismatch):
        vblast_mmse_osic(np.zeros(3), np.zeros((4, 4)), 0.1, c)
    with pytest.raises(ValidationError):
        vblast_mmse_osic(np.zeros(4), np.eye(4), 0.0, c)


def test_rank_deficient_channel_is_not_an_error():
    c = build_constellation(4)
    h = np.ones((4, 4), dtype=complex)
    out = vblast_mmse_osic(np.ones(4), h, 0.1, c)
    assert out.shape == (4,)


def test_determinism(rng):
    c = build_constellation(8)
    cfg = IsmConfig(8, 4, 3, 8)
    h = cn(rng, (4, 8))
    y = cn(rng, 4)
    a = ml_detect_ism(y, h, cfg, c)
    b = ml_detect_ism(y.copy(), h.copy(), cfg, c)
    assert (a.hypothesis, a.metric) == (b.hypothesis, b.metric)
