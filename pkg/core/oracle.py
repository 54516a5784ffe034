"""
Exhaustive reference decoders used to verify the trellis decoders.
"""
import logging

import numpy as np
from scipy.spatial.distance import cdist

from core.link import Link
from core.trellis import TimeVariantTrellis

logger = logging.getLogger(__name__)

MAX_ORACLE_BITS = 20
_CHUNK = 1 << 14


def all_sequences(n_bits: int, start: int = 0, stop: int = None) -> np.ndarray:
    """Rows are the integers start..stop-1 written MSB first on n_bits bits."""
    stop = 2 ** n_bits if stop is None else stop
    values = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8)


def brute_force_mlse(received, link: Link, n_info: int) -> np.ndarray:
    """
    Info sequence minimizing sum((r - replay(u))^2) over all 2^n_info frames.

    Ties go to the smallest sequence read as an unsigned integer.
    """
    if not 1 <= n_info <= MAX_ORACLE_BITS:
        raise ValueError(f"n_info must be in 1..{MAX_ORACLE_BITS}, got {n_info}")
    r = np.asarray(received, dtype=float)
    expected = link.frame_symbols(n_info)
    if r.shape != (expected,):
        raise ValueError(f"expected {expected} received symbols for {n_info} info bits, got {r.shape}")

    best_metric, best_value = np.inf, 0
    total = 2 ** n_info
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        candidates = all_sequences(n_info, start, stop)
        metric = np.sum((r - link.transmit(candidates)) ** 2, axis=1)
        i = int(np.argmin(metric))
        if metric[i] < best_metric:
            best_metric, best_value = metric[i], start + i
    return all_sequences(n_info, best_value, best_value + 1)[0]


def minimum_distance(trellis: TimeVariantTrellis, n_bits: int, tail: int) -> float:
    """
    Minimum squared Euclidean distance between hypothesis sequences.

    Pairs start in the zero state, differ in their first bit and are followed
    by `tail` zero bits (rounded up to whole cycles), so encoder and channel
    remerge when the tail covers the code and channel memory.
    """
    if n_bits < 1 or tail < 0:
        raise ValueError(f"need n_bits >= 1 and tail >= 0, got {n_bits}, {tail}")
    steps = trellis.steps_per_cycle
    padded = -(-(n_bits + tail) // steps) * steps
    seqs = all_sequences(n_bits)
    bits = np.pad(seqs, [(0, 0), (0, padded - n_bits)])
    hyp = trellis.hypotheses_for(bits)
    half = 2 ** (n_bits - 1)
    d = cdist(hyp[:half], hyp[half:], metric="sqeuclidean")
    result = float(d.min())
    logger.debug("Minimum squared distance over %d-bit spans: %.12g", n_bits, result)
    return result
