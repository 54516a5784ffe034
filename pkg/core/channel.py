"""
ISI channel - reference tap construction, linear filtering and calibrated AWGN.
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.signal import lfilter

logger = logging.getLogger(__name__)

# Tolerance on sum(h^2) = 1
UNIT_ENERGY_TOL = 1e-12


@dataclass(frozen=True)
class ChannelTaps:
    """Real, unit-energy channel impulse response h[0..L]."""
    taps: Tuple[float, ...]
    norm: float = 1.0  # alpha, the factor the raw taps were divided by
    renormalized: bool = False

    def __post_init__(self):
        if not self.taps:
            raise ValueError("channel needs at least one tap")
        energy = float(np.sum(np.square(self.taps)))
        if abs(energy - 1.0) > UNIT_ENERGY_TOL:
            raise ValueError(f"channel taps must have unit energy, got {energy!r}")

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "ChannelTaps":
        """Accept custom taps, normalizing them to unit energy if needed."""
        raw = np.asarray(values, dtype=float)
        if raw.ndim != 1 or raw.size == 0:
            raise ValueError("taps must be a non-empty list of reals")
        alpha = float(np.sqrt(np.sum(raw ** 2)))
        if alpha == 0.0:
            raise ValueError("taps are all zero")
        if abs(alpha ** 2 - 1.0) <= UNIT_ENERGY_TOL:
            return cls(tuple(raw.tolist()))
        logger.warning("Custom taps have energy %.6g, normalizing to unit energy", alpha ** 2)
        return cls(tuple((raw / alpha).tolist()), norm=alpha, renormalized=True)

    @property
    def memory(self) -> int:
        """L."""
        return len(self.taps) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.taps, dtype=float)

    def states(self, m_ary: int) -> int:
        """Z_cha = M^L."""
        return m_ary ** self.memory


@dataclass(frozen=True)
class NoiseSpec:
    """Eb/N0 calibration for real-baseband PAM: Eb = Es/R, sigma^2 = N0/2."""
    ebn0_db: float
    rate: float
    symbol_energy: float
    noiseless: bool = False

    @property
    def ebn0(self) -> float:
        return 10.0 ** (self.ebn0_db / 10.0)

    @property
    def n0(self) -> float:
        if self.noiseless:
            return 0.0
        if not self.ebn0 > 0.0 or self.rate <= 0.0:
            raise ValueError(f"Eb/N0 and rate must be positive (ebn0={self.ebn0}, R={self.rate})")
        return self.symbol_energy / (self.rate * self.ebn0)

    @property
    def variance(self) -> float:
        """Noise variance per real sample."""
        return self.n0 / 2.0


def reference_taps(memory: int) -> ChannelTaps:
    """Minimum-phase ramp h[k] = (L-k+1)/((L+1)*alpha), normalized to unit energy."""
    if memory < 0:
        raise ValueError(f"channel memory must be >= 0, got {memory}")
    ramp = (memory - np.arange(memory + 1) + 1) / (memory + 1)
    alpha = float(np.sqrt(np.sum(ramp ** 2)))
    return ChannelTaps(tuple((ramp / alpha).tolist()), norm=alpha)


def filter_symbols(symbols, taps: ChannelTaps, flush: bool = False) -> np.ndarray:
    """
    r[k] = sum_i h[i] * m[k-i] with zero initial channel memory.

    Works along the last axis, so a batch of frames can be filtered at once.
    With flush the output carries L extra samples of the channel tail.
    """
    m = np.asarray(symbols, dtype=float)
    if flush:
        pad = [(0, 0)] * (m.ndim - 1) + [(0, taps.memory)]
        m = np.pad(m, pad)
    return lfilter(taps.array, [1.0], m, axis=-1)


def add_awgn(signal, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Add white Gaussian noise with variance N0/2 drawn from the given stream."""
    x = np.asarray(signal, dtype=float)
    if noise.noiseless:
        return x.copy()
    sigma = np.sqrt(noise.variance)
    return x + rng.normal(0.0, sigma, size=x.shape)


def idle_offsets(taps: ChannelTaps, idle_amplitude: float, length: int) -> np.ndarray:
    """
    Offsets that align received samples with trellises started in state 0.

    A zero state models the pre-frame channel memory as idle symbols, while
    the transmitter starts from an empty channel: offset[k] = sum_{j>k} h[j]*idle.
    """
    h = taps.array
    offsets = np.zeros(length)
    for k in range(min(taps.memory, length)):
        offsets[k] = idle_amplitude * h[k + 1:].sum()
    return offsets
