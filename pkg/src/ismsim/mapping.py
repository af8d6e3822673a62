"""Bit-block to transmit-vector mapping for improved spatial modulation.

A block of ``log2(M_T) + M_A * log2(M)`` bits is split into an antenna-index
field followed by ``M_A`` symbol fields. The symbols are stacked at the top of
a length ``M_T`` vector, scaled to ``sqrt(E_s / M_A)`` and rotated down by
``i - 1`` positions so that symbol 1 lands on antenna ``i`` and the rest follow
with wrap-around. ``M_A = 1`` is conventional spatial modulation.

Antenna indices are 1-based throughout, matching the way the scheme is usually
tabulated; array positions are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import (
    ConstellationMismatch,
    IndexOutOfRange,
    NotAConstellationPoint,
    NotPowerOfTwo,
    ValidationError,
    WrongBitCount,
)
from .modem import Bits, Constellation, bits_to_int, int_to_bits

__all__ = [
    "IsmConfig",
    "TransmitVector",
    "block_bits",
    "circular_shift",
    "map_block",
    "demap_block",
    "transmit_table",
    "spatial_table",
]


def _is_pow2(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


@dataclass(frozen=True)
class IsmConfig:
    num_tx: int
    num_rx: int
    num_active: int
    mod_order: int
    symbol_energy: float = 1.0

    def __post_init__(self):
        for name in ("num_tx", "num_rx", "num_active", "mod_order"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValidationError(name, f"must be an integer, got {v!r}")
        if not _is_pow2(self.num_tx):
            raise NotPowerOfTwo(f"num_tx={self.num_tx} is not a power of two")
        if not _is_pow2(self.mod_order) or self.mod_order < 2:
            raise NotPowerOfTwo(f"mod_order={self.mod_order} is not a power of two >= 2")
        if not 1 <= self.num_active < self.num_tx:
            raise ValidationError("num_active", f"requires 1 <= num_active < num_tx ({self.num_tx})")
        if self.num_rx < 1:
            raise ValidationError("num_rx", "must be >= 1")
        if not self.symbol_energy > 0:
            raise ValidationError("symbol_energy", "must be > 0")

    @property
    def index_bits(self) -> int:
        return self.num_tx.bit_length() - 1

    @property
    def bits_per_symbol(self) -> int:
        return self.mod_order.bit_length() - 1

    @property
    def block_bits(self) -> int:
        return self.index_bits + self.num_active * self.bits_per_symbol

    @property
    def spectral_efficiency(self) -> int:
        """Bits per channel use; one block occupies one channel use."""
        return self.block_bits

    @property
    def num_hypotheses(self) -> int:
        return 1 << self.block_bits

    @property
    def amplitude(self) -> float:
        return float(np.sqrt(self.symbol_energy / self.num_active))


@dataclass(frozen=True, eq=False)
class TransmitVector:
    x: np.ndarray
    antenna_index: int
    symbols: np.ndarray

    def active_positions(self) -> list:
        n = len(self.x)
        return [(self.antenna_index - 1 + k) % n for k in range(len(self.symbols))]


def block_bits(cfg: IsmConfig) -> int:
    return cfg.block_bits


def circular_shift(v, i: int) -> np.ndarray:
    """Rotate ``v`` down by ``i - 1`` positions; ``i = 1`` is the identity."""
    v = np.asarray(v)
    if not 1 <= i <= len(v):
        raise IndexOutOfRange(f"shift index {i} outside 1..{len(v)}")
    return np.roll(v, i - 1)


def _check_constellation(cfg: IsmConfig, c: Constellation):
    if c.order != cfg.mod_order:
        raise ConstellationMismatch(
            f"constellation order {c.order} != mod_order {cfg.mod_order}"
        )


def map_block(bits: Bits, cfg: IsmConfig, c: Constellation) -> TransmitVector:
    _check_constellation(cfg, c)
    if len(bits) != cfg.block_bits:
        raise WrongBitCount(f"expected {cfg.block_bits} bits, got {len(bits)}")
    s = bits if isinstance(bits, str) else "".join(str(int(b)) for b in bits)
    i = 1 + bits_to_int(s[: cfg.index_bits])
    m = cfg.bits_per_symbol
    rest = s[cfg.index_bits:]
    symbols = np.array(
        [c.points[bits_to_int(rest[k * m:(k + 1) * m])] for k in range(cfg.num_active)],
        dtype=np.complex128,
    )
    stacked = np.zeros(cfg.num_tx, dtype=np.complex128)
    stacked[: cfg.num_active] = cfg.amplitude * symbols
    return TransmitVector(x=circular_shift(stacked, i), antenna_index=i, symbols=symbols)


def demap_block(i: int, s: Sequence[complex], cfg: IsmConfig, c: Constellation,
                atol: float = 1e-9) -> str:
    """Inverse of :func:`map_block` given the antenna index and unscaled symbols."""
    _check_constellation(cfg, c)
    if not 1 <= i <= cfg.num_tx:
        raise IndexOutOfRange(f"antenna index {i} outside 1..{cfg.num_tx}")
    s = np.asarray(s, dtype=np.complex128).reshape(-1)
    if s.size != cfg.num_active:
        raise WrongBitCount(f"expected {cfg.num_active} symbols, got {s.size}")
    out = [int_to_bits(i - 1, cfg.index_bits)]
    for sym in s:
        d = np.abs(c.points - sym)
        k = int(np.argmin(d))
        if d[k] > atol:
            raise NotAConstellationPoint(f"{sym!r} is not a point of the constellation")
        out.append(c.labels[k])
    return "".join(out)


@lru_cache(maxsize=32)
def spatial_table(num_tx: int, num_active: int, c: Constellation,
                  symbol_energy: float = 1.0) -> np.ndarray:
    """Transmit vectors for every bit block, one per column.

    Column ``n`` is the vector produced for the block whose bits read ``n`` in
    natural binary, so column order is (antenna index, symbol labels)
    lexicographic. No validation: ``num_active == num_tx == 1`` is allowed here
    so that degenerate single-antenna detectors can share the table.
    """
    index_bits = num_tx.bit_length() - 1
    m = c.bits_per_symbol
    sym_bits = num_active * m
    n = np.arange(1 << (index_bits + sym_bits))
    start = n >> sym_bits
    amp = np.sqrt(symbol_energy / num_active)
    x = np.zeros((num_tx, n.size), dtype=np.complex128)
    for k in range(num_active):
        idx = (n >> ((num_active - 1 - k) * m)) & (c.order - 1)
        x[(start + k) % num_tx, n] = amp * c.points[idx]
    x.setflags(write=False)
    return x


def transmit_table(cfg: IsmConfig, c: Constellation) -> np.ndarray:
    """All transmit vectors as columns, column ``n`` being the block whose bits read ``n``.

    Shape ``(num_tx, 2**block_bits)``. Cached per (config, constellation).
    """
    _check_constellation(cfg, c)
    return spatial_table(cfg.num_tx, cfg.num_active, c, float(cfg.symbol_energy))
