"""
Trellis synthesis - time-variant super-trellises for (punctured) convolutional
codes over ISI channels.

Matched trellises use a window of past information bits as the state; the
hypothesis of every transition is the noiseless channel output replayed
through encoder, puncturer, mapper and channel, with the modulo evaluated in
its floor form. Product trellises use encoder state x last L channel symbols.
"""
import logging
from dataclasses import dataclass
from math import gcd
from typing import List, Optional, Tuple

import numpy as np

from core.channel import ChannelTaps, idle_offsets
from core.coding import CodeSpec, Labeling, PuncturingScheme, mod2

logger = logging.getLogger(__name__)

DEFAULT_STATE_CAP = 2 ** 20


class TrellisSizeError(RuntimeError):
    """Raised when a trellis section would exceed the configured state cap."""


@dataclass(frozen=True)
class PhaseDescriptor:
    """Generator offset Gamma_i of one symbol phase."""
    index: int
    sources: Tuple[Tuple[int, int], ...]  # (generator, encoder step in cycle), MSB first
    first: int      # oldest encoder step among the sources
    latest: int     # newest encoder step among the sources
    earliest: int   # oldest info bit touched by the generator windows
    inputs: int     # info bits entering the state with this symbol
    pending: int    # bits in the state whose coded outputs are not all sent yet

    def describe(self) -> str:
        parts = [f"g{g + 1}@{s}" for g, s in self.sources]
        return f"G{self.index}(" + ", ".join(parts) + ")"


@dataclass(frozen=True)
class WindowLayout:
    """Per-phase state windows of a matched trellis for one channel memory."""
    channel_memory: int
    windows: Tuple[int, ...]   # state window length before each phase
    inputs: Tuple[int, ...]
    decided: Tuple[int, ...]
    compact: bool = False

    @property
    def states(self) -> Tuple[int, ...]:
        return tuple(2 ** w for w in self.windows)

    @property
    def split(self) -> Tuple[bool, ...]:
        n = len(self.windows)
        return tuple(self.windows[(i + 1) % n] > self.windows[i] for i in range(n))

    @property
    def merge(self) -> Tuple[bool, ...]:
        n = len(self.windows)
        return tuple(self.windows[(i + 1) % n] < self.windows[i] for i in range(n))


@dataclass(frozen=True)
class PhasePlan:
    """Cyclic symbol-phase structure of a punctured code mapped onto M-ASK."""
    period: int            # symbols per cycle
    steps_per_cycle: int   # encoder steps per cycle
    bits_per_symbol: int
    memory: int
    phases: Tuple[PhaseDescriptor, ...]

    def locate(self, t: int) -> Tuple[int, int]:
        """(cycle, phase) of global symbol index t; t may be negative."""
        cycle, phase = divmod(t, self.period)
        return cycle, phase

    def latest_at(self, t: int) -> int:
        cycle, phase = self.locate(t)
        return cycle * self.steps_per_cycle + self.phases[phase].latest

    def earliest_at(self, t: int) -> int:
        cycle, phase = self.locate(t)
        return cycle * self.steps_per_cycle + self.phases[phase].earliest

    def first_at(self, t: int) -> int:
        cycle, phase = self.locate(t)
        return cycle * self.steps_per_cycle + self.phases[phase].first

    @property
    def info_bits_per_cycle(self) -> int:
        return self.steps_per_cycle

    @property
    def rate(self) -> float:
        """Info bits per transmitted symbol."""
        return self.steps_per_cycle / self.period

    def window_layout(self, channel_memory: int, compact: bool = False) -> WindowLayout:
        """
        State windows for a channel of memory L.

        The minimal window before symbol t spans every info bit that is already
        in the state and still needed by the generator windows of symbols
        t-L..t. By default each window is padded to a common base length, plus
        the bits of a pending split; compact keeps the minimal windows.
        """
        if channel_memory < 0:
            raise ValueError(f"channel memory must be >= 0, got {channel_memory}")
        minimal = []
        for i in range(self.period):
            oldest = min(self.earliest_at(i - j) for j in range(channel_memory + 1))
            minimal.append(max(0, self.latest_at(i - 1) - oldest + 1))
        pending = [p.pending for p in self.phases]
        if compact:
            windows = minimal
        else:
            base = max(m - p for m, p in zip(minimal, pending))
            windows = [base + p for p in pending]
        inputs = [p.inputs for p in self.phases]
        decided = [
            windows[i] + inputs[i] - windows[(i + 1) % self.period]
            for i in range(self.period)
        ]
        return WindowLayout(
            channel_memory=channel_memory,
            windows=tuple(windows),
            inputs=tuple(inputs),
            decided=tuple(decided),
            compact=compact,
        )

    @property
    def decided(self) -> Tuple[int, ...]:
        """Info bits decided per phase in the code-only trellis."""
        return self.window_layout(0).decided

    @property
    def split(self) -> Tuple[bool, ...]:
        return self.window_layout(0).split

    @property
    def merge(self) -> Tuple[bool, ...]:
        return self.window_layout(0).merge


def compute_phase_plan(code: CodeSpec, scheme: PuncturingScheme,
                       label: Labeling) -> PhasePlan:
    """
    Derive the generator offsets of every symbol phase.

    The puncturing cycle is extended until the kept bits fill whole symbols.
    """
    if scheme.n_out != code.n_out:
        raise ValueError(
            f"puncturing pattern has {scheme.n_out} rows, code has {code.n_out} outputs"
        )
    kept = scheme.kept_per_period
    if kept == 0:
        raise ValueError("degenerate puncturing scheme: no kept bits")
    n_bits = label.bits_per_symbol
    cycles = n_bits // gcd(kept, n_bits)
    steps = cycles * scheme.period
    period = cycles * kept // n_bits

    kept_bits = [
        (g, s)
        for s in range(steps)
        for g in range(code.n_out)
        if scheme.pattern[g][s % scheme.period]
    ]
    groups = [tuple(kept_bits[i * n_bits:(i + 1) * n_bits]) for i in range(period)]

    first = [min(s for _, s in grp) for grp in groups]
    latest = [max(s for _, s in grp) for grp in groups]

    def latest_at(t):
        c, i = divmod(t, period)
        return c * steps + latest[i]

    def first_at(t):
        c, i = divmod(t, period)
        return c * steps + first[i]

    phases = []
    for i, grp in enumerate(groups):
        phases.append(PhaseDescriptor(
            index=i,
            sources=grp,
            first=first[i],
            latest=latest[i],
            earliest=first[i] - code.memory,
            inputs=latest_at(i) - latest_at(i - 1),
            pending=max(0, latest_at(i - 1) - first_at(i) + 1),
        ))
    plan = PhasePlan(
        period=period,
        steps_per_cycle=steps,
        bits_per_symbol=n_bits,
        memory=code.memory,
        phases=tuple(phases),
    )
    logger.debug(
        "Phase plan: %d symbols per %d steps, %s",
        period, steps, " ".join(p.describe() for p in phases),
    )
    return plan


@dataclass(frozen=True, eq=False)
class TrellisSection:
    """Transitions consumed by one received symbol of a given phase."""
    phase: int
    n_from: int
    n_to: int
    input_bits: int
    decided: int
    window_len: int        # info-bit window carried by the from-states
    next_state: np.ndarray  # (n_from, 2**input_bits)
    released: np.ndarray    # decided bits of each transition, oldest bit most significant
    hypothesis: np.ndarray  # noiseless channel output per transition
    input_steps: Tuple[int, ...]  # cycle-relative steps of the input bits, oldest first
    split: bool = False
    merge: bool = False

    @property
    def n_inputs(self) -> int:
        return 2 ** self.input_bits


@dataclass(frozen=True, eq=False)
class TimeVariantTrellis:
    """Cyclic sequence of trellis sections; immutable once built."""
    sections: Tuple[TrellisSection, ...]
    taps: ChannelTaps
    label: Labeling
    steps_per_cycle: int
    first_step: int  # encoder step of the first bit entered after frame start
    plan: Optional[PhasePlan] = None
    layout: Optional[WindowLayout] = None
    kind: str = "matched"

    @property
    def period(self) -> int:
        return len(self.sections)

    @property
    def is_window(self) -> bool:
        """States are plain info-bit windows (newest bit least significant)."""
        return True

    @property
    def state_counts(self) -> Tuple[int, ...]:
        return tuple(s.n_from for s in self.sections)

    @property
    def max_states(self) -> int:
        return max(self.state_counts)

    def state_window(self, phase: int, state: int) -> int:
        """Info-bit window held by a state of the given phase."""
        return state

    def window_len(self, phase: int) -> int:
        return self.sections[phase % self.period].window_len

    def align(self, received) -> np.ndarray:
        """Add the idle-memory offsets to the first L received samples."""
        r = np.asarray(received, dtype=float)
        return r + idle_offsets(self.taps, self.label.idle_amplitude, r.shape[-1])

    def section_inputs(self, t: int, step_bits: np.ndarray) -> np.ndarray:
        """Input value of symbol t, gathered from a (batch of) step-bit sequences."""
        cycle, phase = divmod(t, self.period)
        section = self.sections[phase]
        n_steps = step_bits.shape[-1]
        value = np.zeros(step_bits.shape[:-1], dtype=np.int64)
        for s in section.input_steps:
            step = cycle * self.steps_per_cycle + s
            bit = step_bits[..., step] if 0 <= step < n_steps else 0
            value = (value << 1) | bit
        return value

    def hypotheses_for(self, step_bits) -> np.ndarray:
        """
        Walk step bits (frame steps 0..N-1, batch along leading axes) from the
        zero state and return the hypothesis of every traversed transition.
        """
        bits = np.asarray(step_bits, dtype=np.int64)
        if bits.shape[-1] % self.steps_per_cycle:
            raise ValueError(
                f"{bits.shape[-1]} steps do not fill whole cycles of {self.steps_per_cycle}"
            )
        n_symbols = bits.shape[-1] // self.steps_per_cycle * self.period
        state = np.zeros(bits.shape[:-1], dtype=np.int64)
        out = np.zeros(bits.shape[:-1] + (n_symbols,))
        for t in range(n_symbols):
            section = self.sections[t % self.period]
            x = self.section_inputs(t, bits)
            out[..., t] = section.hypothesis[state, x]
            state = section.next_state[state, x]
        return out


@dataclass(frozen=True, eq=False)
class ProductTrellis(TimeVariantTrellis):
    """Straightforward super-trellis: encoder window x last L symbol indices."""
    history_states: int = 1  # M^L
    kind: str = "product"

    @property
    def is_window(self) -> bool:
        return False

    def state_window(self, phase: int, state: int) -> int:
        return state // self.history_states


def _check_cap(phase: int, states: int, cap: int):
    if states > cap:
        raise TrellisSizeError(
            f"phase {phase} needs {states} states, exceeding the cap of {cap}"
        )


def _window_tables(window: int, n_in: int, next_window: int):
    full = np.arange(2 ** (window + n_in), dtype=np.int64).reshape(2 ** window, 2 ** n_in)
    next_state = full & ((1 << next_window) - 1)
    released = full >> next_window
    return full, next_state, released


def _symbol_index(plan: PhasePlan, code: CodeSpec, label: Labeling,
                  full: np.ndarray, newest: int, width: int, t: int) -> np.ndarray:
    """
    Alphabet index of symbol t computed from info-bit windows.

    full holds windows of `width` bits whose least significant bit is the
    info bit of encoder step `newest` (cycle-relative to symbol 0's cycle).
    """
    cycle, phase = plan.locate(t)
    label_value = np.zeros(full.shape, dtype=np.int64)
    for g, s in plan.phases[phase].sources:
        step = cycle * plan.steps_per_cycle + s
        acc = np.zeros(full.shape, dtype=np.int64)
        for delay, tap in enumerate(code.generators[g]):
            if not tap:
                continue
            position = newest - (step - delay)
            if position >= width:
                raise AssertionError(
                    f"window of {width} bits misses step {step - delay} of phase {phase}"
                )
            acc += (full >> position) & 1
        label_value = (label_value << 1) | mod2(acc)
    return label.label_to_index(label_value)


def build_matched_trellis(code: CodeSpec, scheme: PuncturingScheme, label: Labeling,
                          taps: ChannelTaps, state_cap: int = DEFAULT_STATE_CAP,
                          compact: bool = False) -> TimeVariantTrellis:
    """
    Build the matched (info-bit window) super-trellis.

    Section i consumes the symbol of phase i; its hypotheses cover the symbol
    and the L previous ones under their own generator offsets.
    """
    plan = compute_phase_plan(code, scheme, label)
    layout = plan.window_layout(taps.memory, compact=compact)
    h = taps.array
    alphabet = label.alphabet

    for i, window in enumerate(layout.windows):
        _check_cap(i, 2 ** window, state_cap)

    sections = []
    for i, phase in enumerate(plan.phases):
        window = layout.windows[i]
        n_in = layout.inputs[i]
        next_window = layout.windows[(i + 1) % plan.period]
        full, next_state, released = _window_tables(window, n_in, next_window)
        width = window + n_in

        hypothesis = np.zeros(full.shape)
        for j in range(taps.memory + 1):
            index = _symbol_index(plan, code, label, full, phase.latest, width, i - j)
            hypothesis += h[j] * alphabet[index]

        input_steps = tuple(range(plan.latest_at(i - 1) + 1, phase.latest + 1))
        sections.append(TrellisSection(
            phase=i,
            n_from=2 ** window,
            n_to=2 ** next_window,
            input_bits=n_in,
            decided=layout.decided[i],
            window_len=window,
            next_state=next_state,
            released=released,
            hypothesis=hypothesis,
            input_steps=input_steps,
            split=layout.split[i],
            merge=layout.merge[i],
        ))
        logger.debug(
            "Matched phase %d: %d -> %d states, %d input(s), %d decided",
            i, 2 ** window, 2 ** next_window, n_in, layout.decided[i],
        )

    trellis = TimeVariantTrellis(
        sections=tuple(sections),
        taps=taps,
        label=label,
        steps_per_cycle=plan.steps_per_cycle,
        first_step=plan.latest_at(-1) + 1,
        plan=plan,
        layout=layout,
        kind="compact" if compact else "matched",
    )
    logger.info("Matched trellis (L=%d): states per phase %s",
                taps.memory, list(trellis.state_counts))
    return trellis


def build_product_trellis(code: CodeSpec, scheme: PuncturingScheme, label: Labeling,
                          taps: ChannelTaps,
                          state_cap: int = DEFAULT_STATE_CAP) -> ProductTrellis:
    """
    Build the straightforward super-trellis of encoder and channel.

    The encoder part keeps the info bits still needed by coming symbols (one
    more in split phases); the channel part keeps the last L alphabet indices.
    """
    plan = compute_phase_plan(code, scheme, label)
    m = label.m_ary
    n_hist = m ** taps.memory
    h = taps.array
    alphabet = label.alphabet

    enc = [
        max(0, plan.latest_at(i - 1) - plan.earliest_at(i) + 1)
        for i in range(plan.period)
    ]
    for i, bits in enumerate(enc):
        _check_cap(i, 2 ** bits * n_hist, state_cap)

    sections = []
    for i, phase in enumerate(plan.phases):
        e_from, e_to = enc[i], enc[(i + 1) % plan.period]
        n_in = phase.inputs
        full, next_enc, released = _window_tables(e_from, n_in, e_to)
        index = _symbol_index(plan, code, label, full, phase.latest, e_from + n_in, i)

        hist = np.arange(n_hist, dtype=np.int64)
        past = np.zeros(n_hist)
        for j in range(1, taps.memory + 1):
            digit = (hist // m ** (j - 1)) % m
            past += h[j] * alphabet[digit]

        # axes: (encoder window, history, input)
        hypothesis = h[0] * alphabet[index][:, None, :] + past[None, :, None]
        new_hist = (hist[None, :, None] * m + index[:, None, :]) % n_hist
        next_state = next_enc[:, None, :] * n_hist + new_hist
        released_full = np.broadcast_to(released[:, None, :], next_state.shape)

        n_from = 2 ** e_from * n_hist
        sections.append(TrellisSection(
            phase=i,
            n_from=n_from,
            n_to=2 ** e_to * n_hist,
            input_bits=n_in,
            decided=e_from + n_in - e_to,
            window_len=e_from,
            next_state=next_state.reshape(n_from, -1),
            released=np.ascontiguousarray(released_full).reshape(n_from, -1),
            hypothesis=hypothesis.reshape(n_from, -1),
            input_steps=tuple(range(plan.latest_at(i - 1) + 1, phase.latest + 1)),
            split=e_to > e_from,
            merge=e_to < e_from,
        ))

    trellis = ProductTrellis(
        sections=tuple(sections),
        taps=taps,
        label=label,
        steps_per_cycle=plan.steps_per_cycle,
        first_step=plan.latest_at(-1) + 1,
        plan=plan,
        history_states=n_hist,
    )
    logger.info("Product trellis (L=%d): states per phase %s",
                taps.memory, list(trellis.state_counts))
    return trellis


def build_channel_trellis(taps: ChannelTaps, label: Labeling,
                          state_cap: int = DEFAULT_STATE_CAP) -> TimeVariantTrellis:
    """
    Symbol-level ISI trellis with M^L states.

    Inputs are alphabet indices written as bits, so the state is again a bit
    window and the reduced-state decoders apply unchanged.
    """
    n_bits = label.bits_per_symbol
    window = n_bits * taps.memory
    _check_cap(0, 2 ** window, state_cap)
    full, next_state, released = _window_tables(window, n_bits, window)
    h = taps.array
    hypothesis = np.zeros(full.shape)
    for j in range(taps.memory + 1):
        index = (full >> (n_bits * j)) & (label.m_ary - 1)
        hypothesis += h[j] * label.alphabet[index]

    section = TrellisSection(
        phase=0,
        n_from=2 ** window,
        n_to=2 ** window,
        input_bits=n_bits,
        decided=n_bits,
        window_len=window,
        next_state=next_state,
        released=released,
        hypothesis=hypothesis,
        input_steps=tuple(range(n_bits)),
    )
    layout = WindowLayout(
        channel_memory=taps.memory,
        windows=(window,),
        inputs=(n_bits,),
        decided=(n_bits,),
    )
    return TimeVariantTrellis(
        sections=(section,),
        taps=taps,
        label=label,
        steps_per_cycle=n_bits,
        first_step=0,
        layout=layout,
        kind="channel",
    )


def enumerate_hypotheses(trellis: TimeVariantTrellis, state: int,
                         phase: int) -> List[Tuple[int, float, int]]:
    """All (input bits, hypothesis, next state) leaving a state, in ascending order."""
    if not 0 <= phase < trellis.period:
        raise ValueError(f"phase {phase} out of range 0..{trellis.period - 1}")
    section = trellis.sections[phase]
    if not 0 <= state < section.n_from:
        raise ValueError(f"state {state} out of range for phase {phase} ({section.n_from} states)")
    rows = [
        (x, float(section.hypothesis[state, x]), int(section.next_state[state, x]))
        for x in range(section.n_inputs)
    ]
    return sorted(rows, key=lambda row: (row[0], row[2]))


def dump_section(trellis: TimeVariantTrellis, phase: int) -> str:
    """Text dump of one section: phase, from, input, hypothesis, to, decided bits."""
    if not 0 <= phase < trellis.period:
        raise ValueError(f"phase {phase} out of range 0..{trellis.period - 1}")
    section = trellis.sections[phase]
    lines = []
    for state in range(section.n_from):
        for x, y, nxt in enumerate_hypotheses(trellis, state, phase):
            released = int(section.released[state, x])
            decided = format(released, f"0{section.decided}b") if section.decided else "-"
            lines.append(f"{phase} {state} {x} {y:.12g} {nxt} {decided}")
    return "\n".join(lines) + "\n"
