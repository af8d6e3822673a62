"""Gray-labelled BPSK / QAM constellations with unit average energy.

Point ``k`` of a constellation always carries the label ``format(k, "0{m}b")``,
so the natural-binary value of a label doubles as the point index. The grid
position of a point is obtained by Gray-decoding each axis field of the label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import NotPowerOfTwo, SchemeMismatch, UnsupportedOrder, WrongBitCount

__all__ = [
    "Modulation",
    "Constellation",
    "build_constellation",
    "modulate",
    "demodulate_hard",
    "slice_indices",
    "gray_encode",
    "gray_decode",
    "bits_to_int",
    "int_to_bits",
]

MAX_ORDER = 512

Bits = Union[str, Sequence[int]]


class Modulation(str, enum.Enum):
    BPSK = "BPSK"
    QAM = "QAM"


def gray_encode(n: int) -> int:
    return n ^ (n >> 1)


def gray_decode(g: int) -> int:
    n = g
    shift = g >> 1
    while shift:
        n ^= shift
        shift >>= 1
    return n


def bits_to_int(bits: Bits) -> int:
    s = bits if isinstance(bits, str) else "".join(str(int(b)) for b in bits)
    if s and set(s) - {"0", "1"}:
        raise ValueError(f"not a bit string: {bits!r}")
    return int(s, 2) if s else 0


def int_to_bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def _log2_exact(m: int) -> int:
    if m < 1 or m & (m - 1):
        raise NotPowerOfTwo(f"{m} is not a power of two")
    return m.bit_length() - 1


@dataclass(frozen=True, eq=False)
class Constellation:
    order: int
    points: np.ndarray = field(repr=False)
    labels: tuple
    scheme: Modulation

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    @property
    def mean_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def index_of(self, label: Bits) -> int:
        n = len(label)
        if n != self.bits_per_symbol:
            raise WrongBitCount(
                f"expected {self.bits_per_symbol} bits, got {n}"
            )
        return bits_to_int(label)

    def __eq__(self, other):
        if not isinstance(other, Constellation):
            return NotImplemented
        return (
            self.order == other.order
            and self.scheme == other.scheme
            and np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash((self.order, self.scheme))


def _axis_levels(nbits: int) -> np.ndarray:
    """Amplitude of every axis label, indexed by the label's integer value."""
    size = 1 << nbits
    pos = np.array([gray_decode(g) for g in range(size)])
    return 2.0 * pos - (size - 1)


def build_constellation(order: int, scheme: Union[Modulation, str, None] = None) -> Constellation:
    """Build the Gray-labelled constellation of the given order.

    ``scheme`` defaults to BPSK for ``order == 2`` and QAM otherwise. QAM is
    laid out on a ``2**a x 2**b`` grid with ``a = ceil(log2(order) / 2)`` bits
    on the in-phase axis (the label's most significant bits) and the rest on
    quadrature, which gives square QAM for even bit counts and a rectangular
    grid otherwise.
    """
    if not isinstance(order, (int, np.integer)) or isinstance(order, bool):
        raise NotPowerOfTwo(f"order must be an integer, got {order!r}")
    order = int(order)
    if order < 2 or order > MAX_ORDER:
        raise UnsupportedOrder(f"order {order} outside [2, {MAX_ORDER}]")
    nbits = _log2_exact(order)
    if scheme is None:
        scheme = Modulation.BPSK if order == 2 else Modulation.QAM
    scheme = Modulation(scheme)

    if scheme is Modulation.BPSK:
        if order != 2:
            raise SchemeMismatch(f"BPSK requires order 2, got {order}")
        points = np.array([-1.0 + 0j, 1.0 + 0j])
    else:
        if order < 4:
            raise SchemeMismatch("QAM requires order >= 4; use BPSK for order 2")
        a = (nbits + 1) // 2
        b = nbits - a
        k = np.arange(order)
        i_axis = _axis_levels(a)[k >> b]
        q_axis = _axis_levels(b)[k & ((1 << b) - 1)]
        points = i_axis + 1j * q_axis
        points = points / np.sqrt(np.mean(np.abs(points) ** 2))

    points = np.ascontiguousarray(points, dtype=np.complex128)
    points.setflags(write=False)
    labels = tuple(int_to_bits(k, nbits) for k in range(order))
    return Constellation(order=order, points=points, labels=labels, scheme=scheme)


def modulate(bits: Bits, c: Constellation) -> complex:
    return complex(c.points[c.index_of(bits)])


def slice_indices(values, c: Constellation) -> np.ndarray:
    """Index of the nearest constellation point for every entry of ``values``.

    Exact ties resolve to the lowest point index.
    """
    v = np.asarray(values, dtype=np.complex128)
    flat = v.reshape(-1)
    out = np.empty(flat.shape, dtype=np.int64)
    # bound the temporary distance matrix to ~4M entries
    step = max(1, (1 << 22) // c.order)
    for start in range(0, flat.size, step):
        chunk = flat[start:start + step]
        d = np.abs(chunk[:, None] - c.points[None, :]) ** 2
        out[start:start + step] = np.argmin(d, axis=1)
    return out.reshape(v.shape)


def demodulate_hard(symbol: complex, c: Constellation) -> str:
    return c.labels[int(slice_indices(np.asarray([symbol]), c)[0])]
