"""
Coding core - convolutional encoding, periodic puncturing and M-ASK mapping.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


def mod2(values: np.ndarray) -> np.ndarray:
    """Gauss (floor) form of the modulo: v mod 2 = v - 2*floor(v/2)."""
    values = np.asarray(values)
    return (values - 2 * np.floor_divide(values, 2)).astype(np.uint8)


@dataclass(frozen=True)
class CodeSpec:
    """Feed-forward binary convolutional code."""
    k_in: int
    n_out: int
    generators: Tuple[Tuple[int, ...], ...]  # first tap = current input
    memory: int

    def __post_init__(self):
        if self.k_in != 1:
            raise ValueError(f"only K=1 encoders are supported, got K={self.k_in}")
        if self.n_out < 1 or len(self.generators) != self.n_out:
            raise ValueError(
                f"expected {self.n_out} generators, got {len(self.generators)}"
            )
        for i, taps in enumerate(self.generators):
            if len(taps) != self.memory + 1:
                raise ValueError(
                    f"generator {i} has {len(taps)} taps, expected memory+1={self.memory + 1}"
                )
            if any(t not in (0, 1) for t in taps):
                raise ValueError(f"generator {i} has non-binary taps: {taps}")
        if not any(taps[0] for taps in self.generators):
            raise ValueError("encoder is not delay-free: no generator taps the current input")

    @classmethod
    def from_octal(cls, generators: Sequence) -> "CodeSpec":
        """
        Build a rate-1/n code from octal generators (e.g. ["5", "7"] or [0o5, 0o7]).

        The most significant bit of each generator is the current input; shorter
        generators are right-aligned.
        """
        values = [int(g, 8) if isinstance(g, str) else int(g) for g in generators]
        if not values or any(v <= 0 for v in values):
            raise ValueError(f"invalid generators: {list(generators)}")
        memory = max(v.bit_length() for v in values) - 1
        taps = tuple(
            tuple((v >> (memory - j)) & 1 for j in range(memory + 1)) for v in values
        )
        return cls(k_in=1, n_out=len(values), generators=taps, memory=memory)

    @property
    def num_states(self) -> int:
        """Z_enc."""
        return 2 ** self.memory

    @property
    def rate(self) -> float:
        return self.k_in / self.n_out

    def octal(self) -> List[str]:
        return [format(int("".join(map(str, g)), 2), "o") for g in self.generators]


@dataclass(frozen=True)
class PuncturingScheme:
    """Periodic keep (1) / drop (0) pattern, one row per generator."""
    pattern: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if not self.pattern or not self.pattern[0]:
            raise ValueError("puncturing pattern is empty")
        width = len(self.pattern[0])
        if any(len(row) != width for row in self.pattern):
            raise ValueError("puncturing pattern rows differ in length")
        if any(v not in (0, 1) for row in self.pattern for v in row):
            raise ValueError("puncturing pattern must contain only 0/1")
        if self.kept_per_period == 0:
            raise ValueError("puncturing pattern drops every bit")

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> "PuncturingScheme":
        """Parse rows of 0/1 characters, e.g. ["10", "11"]."""
        return cls(tuple(tuple(int(c) for c in row.strip()) for row in rows))

    @classmethod
    def all_keep(cls, n_out: int) -> "PuncturingScheme":
        return cls(tuple((1,) for _ in range(n_out)))

    @property
    def n_out(self) -> int:
        return len(self.pattern)

    @property
    def period(self) -> int:
        """Encoder steps per puncturing period."""
        return len(self.pattern[0])

    @property
    def kept_per_period(self) -> int:
        return sum(sum(row) for row in self.pattern)

    def keep_mask(self, n_steps: int) -> np.ndarray:
        """Flat keep mask over n_steps encoder steps (step-major, generator-minor)."""
        columns = np.array(self.pattern, dtype=bool).T  # (period, n_out)
        reps = -(-n_steps // self.period)
        return np.tile(columns, (reps, 1))[:n_steps].reshape(-1)

    def rows(self) -> List[str]:
        return ["".join(map(str, row)) for row in self.pattern]


@dataclass(frozen=True)
class Labeling:
    """Bits-to-amplitude labeling for M-ary ASK."""
    m_ary: int = 4
    kind: str = "natural"

    def __post_init__(self):
        if self.m_ary < 2 or self.m_ary & (self.m_ary - 1):
            raise ValueError(f"M must be a power of two, got {self.m_ary}")
        if self.kind not in ("natural", "gray"):
            raise ValueError(f"unknown labeling '{self.kind}'")

    @property
    def bits_per_symbol(self) -> int:
        return self.m_ary.bit_length() - 1

    @property
    def alphabet(self) -> np.ndarray:
        """Amplitudes {-(M-1), ..., M-1} indexed by alphabet index."""
        return 2.0 * np.arange(self.m_ary) - (self.m_ary - 1)

    @property
    def symbol_energy(self) -> float:
        return (self.m_ary ** 2 - 1) / 3.0

    @property
    def idle_amplitude(self) -> float:
        """Amplitude of the all-zero label, used for pre-frame channel memory."""
        return float(self.alphabet[0])

    def label_to_index(self, labels: np.ndarray) -> np.ndarray:
        labels = np.asarray(labels, dtype=np.int64)
        if self.kind == "natural":
            return labels
        # binary-reflected Gray decode
        index = labels.copy()
        shift = labels >> 1
        while np.any(shift):
            index ^= shift
            shift >>= 1
        return index

    def index_to_label(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        if self.kind == "natural":
            return indices
        return indices ^ (indices >> 1)

    def label_bits(self) -> np.ndarray:
        """(M, bits_per_symbol) table of label bits per alphabet index, MSB first."""
        labels = self.index_to_label(np.arange(self.m_ary))
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return ((labels[:, None] >> shifts) & 1).astype(np.uint8)


def _as_bits(bits) -> np.ndarray:
    array = np.asarray(bits)
    if array.size and not np.all((array == 0) | (array == 1)):
        raise ValueError("bit streams may only contain 0 and 1")
    return array.astype(np.uint8)


def encode(info, code: CodeSpec, terminate: bool = False) -> np.ndarray:
    """
    Encode info bits, starting from the all-zero state.

    Accepts a 1-D frame or a 2-D batch (one frame per row). The output is
    interleaved per encoder step in generator order: c1[0], c2[0], c1[1], ...
    """
    u = _as_bits(info)
    if u.shape[-1] == 0:
        raise ValueError("cannot encode an empty bit stream")
    if terminate:
        pad = [(0, 0)] * (u.ndim - 1) + [(0, code.memory)]
        u = np.pad(u, pad)

    n_steps = u.shape[-1]
    acc = np.zeros(u.shape + (code.n_out,), dtype=np.int64)
    for delay in range(code.memory + 1):
        if delay:
            shifted = np.zeros_like(u)
            shifted[..., delay:] = u[..., :n_steps - delay]
        else:
            shifted = u
        taps = np.array([g[delay] for g in code.generators], dtype=np.int64)
        acc += shifted[..., None].astype(np.int64) * taps
    return mod2(acc).reshape(u.shape[:-1] + (n_steps * code.n_out,))


def puncture(coded, scheme: PuncturingScheme) -> Tuple[np.ndarray, np.ndarray]:
    """
    Drop coded bits per the periodic pattern.

    Returns the kept bits (original order, last axis) and a phase trace with
    one (generator index, encoder step) row per kept bit.
    """
    c = _as_bits(coded)
    n_out = scheme.n_out
    if c.shape[-1] % n_out:
        raise ValueError(
            f"coded length {c.shape[-1]} is not a multiple of n_out={n_out}"
        )
    n_steps = c.shape[-1] // n_out
    mask = scheme.keep_mask(n_steps)
    positions = np.flatnonzero(mask)
    trace = np.stack([positions % n_out, positions // n_out], axis=1)
    return c[..., mask], trace


def kept_count(scheme: PuncturingScheme, n_steps: int) -> int:
    """Number of kept bits over the first n_steps encoder steps."""
    return int(scheme.keep_mask(n_steps).sum())


def depuncture_llrs(llrs, scheme: PuncturingScheme, n_steps: int = None) -> np.ndarray:
    """
    Re-insert erasures (exactly 0) at punctured positions.

    The number of encoder steps is inferred from the soft value count when not given.
    """
    values = np.asarray(llrs, dtype=float)
    count = values.shape[-1]
    if n_steps is None:
        n_steps = (count * scheme.period) // scheme.kept_per_period
        while kept_count(scheme, n_steps) < count:
            n_steps += 1
    mask = scheme.keep_mask(n_steps)
    if int(mask.sum()) != count:
        raise ValueError(
            f"{count} soft values do not match the puncturing scheme over {n_steps} steps"
        )
    full = np.zeros(values.shape[:-1] + (mask.size,), dtype=float)
    full[..., mask] = values
    return full


def symbol_indices(bits, label: Labeling) -> np.ndarray:
    """Group bits (MSB first) into alphabet indices."""
    b = _as_bits(bits)
    n = label.bits_per_symbol
    if b.shape[-1] % n:
        raise ValueError(
            f"{b.shape[-1]} bits do not fill whole {label.m_ary}-ary symbols"
        )
    groups = b.reshape(b.shape[:-1] + (-1, n)).astype(np.int64)
    weights = 1 << np.arange(n - 1, -1, -1)
    return label.label_to_index(groups @ weights)


def amplitudes(indices, label: Labeling) -> np.ndarray:
    return label.alphabet[np.asarray(indices, dtype=np.int64)]


def map_symbols(bits, label: Labeling) -> np.ndarray:
    """Map bit groups to M-ASK amplitudes: amplitude = 2d - (M-1)."""
    return amplitudes(symbol_indices(bits, label), label)


def index_bits(indices, label: Labeling) -> np.ndarray:
    """Label bits (MSB first) of alphabet indices, flattened per frame."""
    table = label.label_bits()
    out = table[np.asarray(indices, dtype=np.int64)]
    return out.reshape(out.shape[:-2] + (-1,))
