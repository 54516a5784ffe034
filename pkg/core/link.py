"""
Link - one coded-modulation system: code, puncturer, mapper and ISI channel.
"""
from dataclasses import dataclass, field

import numpy as np

from core.channel import ChannelTaps, filter_symbols
from core.coding import (CodeSpec, Labeling, PuncturingScheme, encode,
                         map_symbols, puncture)
from core.trellis import PhasePlan, compute_phase_plan


@dataclass(frozen=True)
class Link:
    code: CodeSpec
    scheme: PuncturingScheme
    label: Labeling
    taps: ChannelTaps
    plan: PhasePlan = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "plan", compute_phase_plan(self.code, self.scheme, self.label))

    @property
    def rate(self) -> float:
        """Info bits per transmitted symbol over one cycle, tail excluded."""
        return self.plan.rate

    def tail_length(self, n_info: int) -> int:
        """Zero bits appended so the encoder is flushed and the frame ends on a cycle boundary."""
        if n_info < 1:
            raise ValueError(f"frame needs at least one info bit, got {n_info}")
        steps = self.plan.steps_per_cycle
        tail = self.code.memory
        while (n_info + tail) % steps:
            tail += 1
        return tail

    def frame_steps(self, n_info: int) -> int:
        return n_info + self.tail_length(n_info)

    def frame_symbols(self, n_info: int) -> int:
        return self.frame_steps(n_info) // self.plan.steps_per_cycle * self.plan.period

    def frame_bits(self, info) -> np.ndarray:
        """Info bits followed by the zero tail (batch along leading axes)."""
        u = np.asarray(info, dtype=np.uint8)
        tail = self.tail_length(u.shape[-1])
        return np.pad(u, [(0, 0)] * (u.ndim - 1) + [(0, tail)])

    def symbols(self, info) -> np.ndarray:
        """Transmitted amplitudes of a (batch of) frame(s)."""
        coded = encode(self.frame_bits(info), self.code)
        kept, _ = puncture(coded, self.scheme)
        return map_symbols(kept, self.label)

    def transmit(self, info) -> np.ndarray:
        """Noiseless channel output: tail -> encode -> puncture -> map -> filter."""
        return filter_symbols(self.symbols(info), self.taps)
