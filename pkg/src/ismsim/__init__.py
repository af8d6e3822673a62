"""Link-level simulator for improved spatial modulation (ISM) and its SM / V-BLAST baselines."""

__version__ = "0.1.0"

from .channel import apply_channel, noise_var_from_snr, sample_channel  # noqa: E402
from .detection import ml_detect_ism, ml_detect_sm, vblast_mmse_osic  # noqa: E402
from .mapping import IsmConfig, TransmitVector, circular_shift, demap_block, map_block  # noqa: E402
from .modem import Constellation, Modulation, build_constellation, demodulate_hard, modulate  # noqa: E402
from .montecarlo import (  # noqa: E402
    BerCurve,
    BerPoint,
    Scenario,
    Scheme,
    StoppingRule,
    gain_at_ber,
    run_ber_point,
    run_sweep,
)
