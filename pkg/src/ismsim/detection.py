"""Receivers: exhaustive joint ML for ISM / SM, and MMSE-OSIC for V-BLAST.

The single-instance functions (``ml_detect_ism``, ``ml_detect_sm``,
``vblast_mmse_osic``) are thin wrappers around batched kernels that the Monte
Carlo driver calls directly with a stack of channel realizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .mapping import IsmConfig, spatial_table, transmit_table
from .modem import Constellation, slice_indices

__all__ = [
    "DetectionResult",
    "ml_detect_batch",
    "ml_detect_ism",
    "ml_detect_sm",
    "log_likelihood",
    "mmse_osic_batch",
    "vblast_mmse_osic",
]

# upper bound on complex entries of the (batch, rx, hypotheses) product
_ML_WORK = 1 << 16


@dataclass(frozen=True, eq=False)
class DetectionResult:
    antenna_index: int
    symbols: np.ndarray
    metric: float
    hypotheses_searched: int
    hypothesis: int


def _as_batch(y, h):
    y = np.asarray(y, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 2:
        h = h[None]
    if y.ndim == 1:
        y = y[None]
    if h.ndim != 3 or y.ndim != 2 or h.shape[:2] != y.shape:
        raise DimensionMismatch(f"received {y.shape} incompatible with channel {h.shape}")
    return y, h


def _real_channel(h):
    """``(B, R, T)`` complex -> ``(B, 2R, 2T)`` real block form [[Re, -Im], [Im, Re]]."""
    top = np.concatenate([h.real, -h.imag], axis=2)
    bottom = np.concatenate([h.imag, h.real], axis=2)
    return np.concatenate([top, bottom], axis=1)


def ml_detect_batch(y, h, table: np.ndarray):
    """Exhaustive minimum-distance search for a batch of received vectors.

    ``y`` is ``(B, R)``, ``h`` is ``(B, R, T)`` and ``table`` holds the
    ``(T, N)`` candidate transmit vectors. Returns the winning column for every
    row together with its squared residual. The first minimum wins on ties.

    Candidates are ranked by ``|Hx|^2 - 2 Re(y^H H x)``, which differs from the
    squared residual only by the constant ``|y|^2``; the returned metric is
    recomputed directly for the winner.
    """
    y, h = _as_batch(y, h)
    if h.shape[2] != table.shape[0]:
        raise DimensionMismatch(f"channel has {h.shape[2]} inputs, table has {table.shape[0]}")
    nb, nr, _ = h.shape
    n = table.shape[1]
    xr = np.concatenate([table.real, table.imag], axis=0)
    hr = _real_channel(h)
    yr = np.concatenate([y.real, y.imag], axis=1)
    best = np.empty(nb, dtype=np.int64)
    step = max(1, _ML_WORK // (nr * n))
    for s in range(0, nb, step):
        hb = hr[s:s + step]
        e = hb @ xr
        z = np.einsum("brt,br->bt", hb, yr[s:s + step])
        d = np.einsum("brn,brn->bn", e, e) - 2.0 * (z @ xr)
        best[s:s + step] = np.argmin(d, axis=1)
    r = y - np.einsum("brt,tb->br", h, table[:, best])
    metric = (r.real ** 2 + r.imag ** 2).sum(axis=1)
    return best, metric


def _split_hypothesis(n: int, num_tx: int, num_active: int, c: Constellation):
    m = c.bits_per_symbol
    sym_bits = num_active * m
    i = (n >> sym_bits) + 1
    idx = [(n >> ((num_active - 1 - k) * m)) & (c.order - 1) for k in range(num_active)]
    return i, c.points[idx].copy()


def ml_detect_ism(y, h, cfg: IsmConfig, c: Constellation) -> DetectionResult:
    """Joint ML estimate of the antenna index and symbol vector."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape != (np.asarray(y).shape[0], cfg.num_tx):
        raise DimensionMismatch(f"channel {h.shape} does not match config / received vector")
    table = transmit_table(cfg, c)
    best, metric = ml_detect_batch(y, h, table)
    n = int(best[0])
    i, s = _split_hypothesis(n, cfg.num_tx, cfg.num_active, c)
    return DetectionResult(int(i), s, float(metric[0]), table.shape[1], n)


def ml_detect_sm(y, h, m_t: int, c: Constellation, symbol_energy: float = 1.0) -> DetectionResult:
    """Optimal spatial-modulation detector: one active antenna, all energy on it."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape != (np.asarray(y).shape[0], m_t):
        raise DimensionMismatch(f"channel {h.shape} does not match m_t={m_t} / received vector")
    table = spatial_table(m_t, 1, c, float(symbol_energy))
    best, metric = ml_detect_batch(y, h, table)
    n = int(best[0])
    i, s = _split_hypothesis(n, m_t, 1, c)
    return DetectionResult(int(i), s, float(metric[0]), table.shape[1], n)


def log_likelihood(y, h, x, noise_var: float) -> float:
    """Log of the circular Gaussian density of ``y`` given ``h`` and ``x``."""
    y = np.asarray(y)
    r = y - np.asarray(h) @ np.asarray(x)
    return float(-y.size * np.log(np.pi * noise_var) - np.vdot(r, r).real / noise_var)


def mmse_osic_batch(y, h, noise_var: float, c: Constellation, symbol_energy: float = 1.0):
    """MMSE ordered successive interference cancellation over a batch.

    All ``T`` inputs carry a symbol of energy ``symbol_energy / T``. At every
    stage the undetected stream with the smallest diagonal entry of
    ``(H^H H + sigma^2 I)^-1`` (highest post-filter SINR) is filtered, rescaled
    to remove the MMSE bias, sliced, and cancelled. Detected columns are zeroed
    rather than deleted; this leaves the remaining block of the inverse intact.

    Returns ``(B, T)`` constellation point indices.
    """
    if not noise_var > 0:
        raise ValidationError("noise_var", "MMSE-OSIC needs noise_var > 0")
    y, h = _as_batch(y, h)
    nb, _, nt = h.shape
    a = np.sqrt(symbol_energy / nt)
    hc = a * h
    yr = y.copy()
    done = np.zeros((nb, nt), dtype=bool)
    out = np.zeros((nb, nt), dtype=np.int64)
    rows = np.arange(nb)
    eye = np.eye(nt)
    for _ in range(nt):
        hh = np.conj(np.swapaxes(hc, 1, 2))
        p = np.linalg.inv(hh @ hc + noise_var * eye)
        d = np.einsum("bkk->bk", p).real.copy()
        d[done] = np.inf
        k = np.argmin(d, axis=1)
        g = np.einsum("bt,btr->br", p[rows, k], hh)
        hk = hc[rows, :, k]
        z = np.einsum("br,br->b", g, yr) / np.einsum("br,br->b", g, hk).real
        idx = slice_indices(z, c)
        out[rows, k] = idx
        yr -= hk * c.points[idx][:, None]
        hc[rows, :, k] = 0
        done[rows, k] = True
    return out


def vblast_mmse_osic(y, h, noise_var: float, c: Constellation,
                     symbol_energy: float = 1.0) -> np.ndarray:
    """Detected V-BLAST symbol vector (unscaled constellation points)."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != np.asarray(y).shape[0]:
        raise DimensionMismatch(f"channel {h.shape} does not match received vector")
    idx = mmse_osic_batch(y, h, noise_var, c, symbol_energy)[0]
    return c.points[idx].copy()
