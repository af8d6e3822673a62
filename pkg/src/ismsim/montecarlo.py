"""Monte Carlo BER estimation with reproducible, worker-count independent seeding.

Blocks are simulated in fixed-size batches. Batch ``b`` of the point at
``snr_db`` draws from ``SeedSequence(master_seed, spawn_key=(key(snr_db), b))``
split into independent children for bits, channel and noise. Because the
streams depend only on (seed, SNR value, batch ordinal), results do not depend
on how batches are scheduled, how many workers run them, or where the SNR value
sits in the sweep. Stopping is decided per block on the ordered concatenation
of batches, so a point is the exact prefix of one infinite block sequence.
"""

from __future__ import annotations

import enum
import logging
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .channel import SNR_CONVENTION, complex_normal, noise_var_from_snr
from .detection import ml_detect_batch, mmse_osic_batch
from .errors import TargetNotBracketed, ValidationError
from .mapping import IsmConfig, spatial_table
from .modem import Constellation, Modulation, build_constellation

__all__ = [
    "Scheme",
    "StoppingRule",
    "Scenario",
    "BerPoint",
    "BerCurve",
    "batch_streams",
    "simulate_batch",
    "run_ber_point",
    "run_sweep",
    "gain_at_ber",
    "resolve_workers",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "ISMSIM_WORKERS"
DEFAULT_BATCH = 1024
# MMSE-OSIC needs a strictly positive regularizer; used for the noiseless limit
_OSIC_NOISE_FLOOR = 1e-30


class Scheme(str, enum.Enum):
    ISM = "ISM"
    SM = "SM"
    VBLAST = "VBLAST"


@dataclass(frozen=True)
class StoppingRule:
    min_bit_errors: int = 200
    max_blocks: int = 10_000_000
    max_bits: Optional[int] = None

    def __post_init__(self):
        if self.min_bit_errors < 1:
            raise ValidationError("min_bit_errors", "must be >= 1")
        if self.max_blocks < 1:
            raise ValidationError("max_blocks", "must be >= 1")
        if self.max_bits is not None and self.max_bits < 1:
            raise ValidationError("max_bits", "must be >= 1")

    def block_cap(self, block_bits: int) -> int:
        cap = self.max_blocks
        if self.max_bits is not None:
            cap = min(cap, max(1, self.max_bits // block_bits))
        return cap


@dataclass(frozen=True)
class Scenario:
    """One simulated link: scheme, antenna/modulation setup, SNR grid and stopping rule.

    For V-BLAST every transmit antenna carries a stream, so ``num_active`` must
    equal ``num_tx``; for SM it is 1.
    """

    scheme: Scheme
    num_tx: int
    num_rx: int
    num_active: int
    mod_order: int
    snr_points_db: tuple
    stop: StoppingRule = field(default_factory=StoppingRule)
    master_seed: int = 0
    mod_scheme: Optional[Modulation] = None
    symbol_energy: float = 1.0
    name: str = ""
    batch_size: int = DEFAULT_BATCH

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "snr_points_db", tuple(float(s) for s in self.snr_points_db))
        ms = self.mod_scheme
        if ms is None:
            ms = Modulation.BPSK if self.mod_order == 2 else Modulation.QAM
        object.__setattr__(self, "mod_scheme", Modulation(ms))
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValidationError("seed", "must be a 64-bit unsigned integer")
        if self.batch_size < 1:
            raise ValidationError("batch_size", "must be >= 1")
        if self.num_rx < 1:
            raise ValidationError("num_rx", "must be >= 1")
        if self.scheme is Scheme.VBLAST:
            if self.num_tx < 1:
                raise ValidationError("num_tx", "must be >= 1")
            if self.num_active != self.num_tx:
                raise ValidationError("num_active", "V-BLAST drives every antenna: num_active must equal num_tx")
        elif self.scheme is Scheme.SM and self.num_active != 1:
            raise ValidationError("num_active", "SM has exactly one active antenna")
        if self.scheme is not Scheme.VBLAST:
            self.cfg  # validates the antenna / modulation constraints
        self.constellation

    @property
    def cfg(self) -> Optional[IsmConfig]:
        if self.scheme is Scheme.VBLAST:
            return None
        return IsmConfig(self.num_tx, self.num_rx, self.num_active, self.mod_order,
                         self.symbol_energy)

    @property
    def constellation(self) -> Constellation:
        return build_constellation(self.mod_order, self.mod_scheme)

    @property
    def block_bits(self) -> int:
        m = self.mod_order.bit_length() - 1
        if self.scheme is Scheme.VBLAST:
            return self.num_tx * m
        return self.cfg.block_bits

    @property
    def spectral_efficiency(self) -> int:
        return self.block_bits

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return f"{self.scheme.value}_{self.num_tx}x{self.num_rx}_A{self.num_active}_M{self.mod_order}"

    def table(self) -> np.ndarray:
        return spatial_table(self.num_tx, self.num_active, self.constellation,
                             float(self.symbol_energy))


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    bits_sent: int
    bit_errors: int
    blocks_sent: int
    wall_time_s: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else float("nan")

    def counts(self) -> tuple:
        return (self.snr_db, self.bits_sent, self.bit_errors, self.blocks_sent)


@dataclass
class BerCurve:
    """Per-SNR counts for one scenario; ``scenario`` is ``None`` for curves read without a manifest."""

    scenario: Optional[Scenario]
    points: list

    @property
    def master_seed(self) -> Optional[int]:
        return None if self.scenario is None else self.scenario.master_seed

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


def _snr_key(snr_db: float) -> int:
    return int(np.array(float(snr_db), dtype=np.float64).view(np.uint64))


def batch_streams(seed: int, snr_db: float, batch_index: int):
    """Independent (bits, channel, noise) generators for one batch."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(_snr_key(snr_db), int(batch_index)))
    return tuple(np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(3))


def _vblast_symbols(blocks: np.ndarray, num_tx: int, m: int, order: int) -> np.ndarray:
    shifts = m * np.arange(num_tx - 1, -1, -1)
    return (blocks[:, None] >> shifts[None, :]) & (order - 1)


def _default_detector(sc: Scenario) -> Callable:
    c = sc.constellation
    if sc.scheme is Scheme.VBLAST:
        m = c.bits_per_symbol
        shifts = m * np.arange(sc.num_tx - 1, -1, -1)

        def detect(y, h, noise_var):
            idx = mmse_osic_batch(y, h, max(noise_var, _OSIC_NOISE_FLOOR), c, sc.symbol_energy)
            return np.bitwise_or.reduce(idx << shifts[None, :], axis=1)

        return detect
    table = sc.table()

    def detect(y, h, noise_var):
        return ml_detect_batch(y, h, table)[0]

    return detect


def simulate_batch(sc: Scenario, snr_db: float, batch_index: int,
                   detector: Optional[Callable] = None) -> np.ndarray:
    """Bit errors of every block in one batch (length ``sc.batch_size``).

    ``detector(y, h, noise_var)`` must return the decoded block integers; the
    default is the scheme's own receiver.
    """
    rng_bits, rng_ch, rng_noise = batch_streams(sc.master_seed, snr_db, batch_index)
    nb = sc.batch_size
    nbits = sc.block_bits
    blocks = rng_bits.integers(0, 1 << nbits, size=nb, dtype=np.int64)
    c = sc.constellation
    if sc.scheme is Scheme.VBLAST:
        idx = _vblast_symbols(blocks, sc.num_tx, c.bits_per_symbol, c.order)
        x = np.sqrt(sc.symbol_energy / sc.num_tx) * c.points[idx]
    else:
        x = sc.table()[:, blocks].T
    h = complex_normal(rng_ch, (nb, sc.num_rx, sc.num_tx))
    noise_var = noise_var_from_snr(snr_db, symbol_energy=sc.symbol_energy)
    y = np.einsum("brt,bt->br", h, x)
    if noise_var > 0:
        y = y + complex_normal(rng_noise, (nb, sc.num_rx), noise_var)
    det = detector or _default_detector(sc)
    decoded = np.asarray(det(y, h, noise_var), dtype=np.int64)
    return np.bitwise_count(blocks ^ decoded).astype(np.int64)


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def _batch_job(args):
    sc, snr_db, b = args
    return simulate_batch(sc, snr_db, b)


def run_ber_point(sc: Scenario, snr_db: float, workers: Optional[int] = None,
                  detector: Optional[Callable] = None,
                  pool: Optional[ProcessPoolExecutor] = None) -> BerPoint:
    """Simulate blocks at one SNR until the stopping rule fires.

    Stops at the first block where the running bit-error count reaches
    ``min_bit_errors``, or at the block cap. Counts are identical for any
    worker count.
    """
    workers = resolve_workers(workers)
    cap = sc.stop.block_cap(sc.block_bits)
    t0 = time.perf_counter()
    errors = 0
    blocks = 0
    b = 0
    own_pool = None
    if detector is None and workers > 1 and pool is None:
        pool = own_pool = ProcessPoolExecutor(max_workers=workers)
    try:
        while blocks < cap and errors < sc.stop.min_bit_errors:
            remaining = cap - blocks
            wave = 1 if pool is None else min(workers, -(-remaining // sc.batch_size))
            if pool is None:
                results = [simulate_batch(sc, snr_db, b, detector)]
            else:
                results = list(pool.map(_batch_job, [(sc, snr_db, b + j) for j in range(wave)]))
            b += wave
            for e in results:
                e = e[: cap - blocks]
                csum = np.cumsum(e) + errors
                hit = np.flatnonzero(csum >= sc.stop.min_bit_errors)
                n = int(hit[0]) + 1 if hit.size else e.size
                errors = int(csum[n - 1])
                blocks += n
                if hit.size or blocks >= cap:
                    break
    finally:
        if own_pool is not None:
            own_pool.shutdown()
    wall = time.perf_counter() - t0
    point = BerPoint(snr_db=float(snr_db), bits_sent=blocks * sc.block_bits,
                     bit_errors=errors, blocks_sent=blocks, wall_time_s=wall)
    log.info("%s snr=%.2f dB: %d errors / %d bits (ber=%.3e) in %.1fs",
             sc.label, snr_db, errors, point.bits_sent, point.ber, wall)
    return point


def run_sweep(sc: Scenario, workers: Optional[int] = None,
              detector: Optional[Callable] = None) -> BerCurve:
    if not sc.snr_points_db:
        raise ValidationError("snr_db", "at least one SNR point is required")
    workers = resolve_workers(workers)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 and detector is None else None
    try:
        points = [run_ber_point(sc, s, workers, detector, pool) for s in sorted(sc.snr_points_db)]
    finally:
        if pool is not None:
            pool.shutdown()
    return BerCurve(scenario=sc, points=points)


def _snr_at(snr: np.ndarray, ber: np.ndarray, target: float) -> float:
    order = np.argsort(snr, kind="stable")
    snr, ber = snr[order], ber[order]
    keep = ber > 0
    snr, ber = snr[keep], ber[keep]
    lt = math.log10(target)
    for k in range(len(snr) - 1):
        hi, lo = ber[k], ber[k + 1]
        if hi >= target >= lo:
            l_hi, l_lo = math.log10(hi), math.log10(lo)
            if l_hi == l_lo:
                return float(snr[k])
            t = (l_hi - lt) / (l_hi - l_lo)
            return float(snr[k] + t * (snr[k + 1] - snr[k]))
    raise TargetNotBracketed(f"BER {target:g} not bracketed by curve (range {ber.min() if ber.size else 'n/a'}..{ber.max() if ber.size else 'n/a'})")


def _curve_arrays(curve):
    if isinstance(curve, BerCurve):
        return curve.snr_db, curve.ber
    snr, ber = curve
    return np.asarray(snr, dtype=float), np.asarray(ber, dtype=float)


def gain_at_ber(curve_a, curve_b, target_ber: float) -> float:
    """SNR advantage of ``curve_a`` over ``curve_b`` at ``target_ber``, in dB.

    Positive when ``curve_a`` reaches the target at a lower SNR. Each curve is
    a :class:`BerCurve` or an ``(snr_db, ber)`` pair; the crossing is found by
    linear interpolation of ``log10(ber)`` between the bracketing points.
    """
    if getattr(curve_a, "scenario", None) is not None and getattr(curve_b, "scenario", None) is not None:
        ea = curve_a.scenario.spectral_efficiency
        eb = curve_b.scenario.spectral_efficiency
        if ea != eb:
            warnings.warn(f"comparing curves with different spectral efficiency ({ea} vs {eb} bits/s/Hz)",
                          stacklevel=2)
    sa = _snr_at(*_curve_arrays(curve_a), target_ber)
    sb = _snr_at(*_curve_arrays(curve_b), target_ber)
    return sb - sa


def with_overrides(sc: Scenario, **kw) -> Scenario:
    """Copy of ``sc`` with top-level fields or stopping-rule fields replaced."""
    stop_fields = {"min_bit_errors", "max_blocks", "max_bits"}
    stop_kw = {k: kw.pop(k) for k in list(kw) if k in stop_fields}
    if stop_kw:
        kw["stop"] = replace(sc.stop, **stop_kw)
    return replace(sc, **kw)
