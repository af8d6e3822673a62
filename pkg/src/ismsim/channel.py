"""Flat Rayleigh MIMO channel and additive white Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidationError

__all__ = [
    "ChannelRealization",
    "SNR_CONVENTION",
    "complex_normal",
    "sample_channel",
    "apply_channel",
    "noise_var_from_snr",
]

SNR_CONVENTION = "SNR = E_s / sigma_N^2 (total transmit energy per channel use over noise variance per receive antenna)"


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    noise_var: float

    def __post_init__(self):
        if not self.noise_var > 0:
            raise ValidationError("noise_var", "must be > 0")


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with total variance ``var``."""
    z = rng.standard_normal(shape + (2,) if isinstance(shape, tuple) else (shape, 2))
    return np.sqrt(var / 2.0) * (z[..., 0] + 1j * z[..., 1])


def sample_channel(m_r: int, m_t: int, rng: np.random.Generator) -> np.ndarray:
    """``m_r x m_t`` matrix of i.i.d. CN(0, 1) fading gains."""
    if m_r < 1 or m_t < 1:
        raise DimensionMismatch(f"channel needs m_r, m_t >= 1 (got {m_r}, {m_t})")
    return complex_normal(rng, (m_r, m_t))


def apply_channel(h, x, noise_var: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Received vector ``h @ x + n`` with ``n ~ CN(0, noise_var I)``.

    ``x`` may be a plain vector or anything carrying it as ``.x``. With
    ``noise_var == 0`` the result is exactly ``h @ x`` and ``rng`` is untouched.
    """
    h = np.asarray(h, dtype=np.complex128)
    x = np.asarray(getattr(x, "x", x), dtype=np.complex128)
    if h.ndim != 2 or x.ndim != 1 or h.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"cannot apply {h.shape} channel to vector of shape {x.shape}")
    if noise_var < 0:
        raise ValidationError("noise_var", "must be >= 0")
    y = h @ x
    if noise_var > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise_var > 0")
        y = y + complex_normal(rng, (h.shape[0],), noise_var)
    return y


def noise_var_from_snr(snr_db: float, cfg=None, symbol_energy: float | None = None) -> float:
    if symbol_energy is None:
        symbol_energy = 1.0 if cfg is None else cfg.symbol_energy
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    return float(symbol_energy / 10.0 ** (snr_db / 10.0))
