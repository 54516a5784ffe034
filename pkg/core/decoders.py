"""
Sequence estimators on time-variant trellises.

One add-compare-select engine serves full Viterbi, RSSE and DFSE: reduced
decoders run on classes of the window state (newest bits kept) and take the
truncated oldest bits from a per-survivor feedback register. With no
truncation the class is the state itself and the section tables are used
as they are, so the full decoder is the degenerate case of the reduced one.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from core.coding import CodeSpec, mod2
from core.trellis import TimeVariantTrellis

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RssePartition:
    """Truncation of the window state to its newest bits."""
    states: int      # classes in phase 0
    truncation: int  # oldest window bits replaced by decision feedback

    @classmethod
    def full(cls, trellis: TimeVariantTrellis) -> "RssePartition":
        return cls(states=trellis.sections[0].n_from, truncation=0)

    @classmethod
    def reduced(cls, trellis: TimeVariantTrellis, states: int) -> "RssePartition":
        base = trellis.sections[0].n_from
        if states < 1 or states & (states - 1):
            raise ValueError(f"reduced state count must be a power of two, got {states}")
        if states > base:
            raise ValueError(f"reduced state count {states} exceeds the {base} base states")
        if states < base and not trellis.is_window:
            raise ValueError(f"{trellis.kind} trellis states are not bit windows; only the full partition applies")
        truncation = trellis.window_len(0) - (states.bit_length() - 1)
        smallest = min(s.window_len for s in trellis.sections)
        if truncation > smallest:
            raise ValueError(
                f"{states} classes would truncate {truncation} bits, but a phase holds only {smallest}"
            )
        return cls(states=states, truncation=truncation)

    def class_bits(self, trellis: TimeVariantTrellis, phase: int) -> int:
        return trellis.window_len(phase) - self.truncation

    def class_of(self, trellis: TimeVariantTrellis, phase: int, state) -> np.ndarray:
        """Class map: keep the newest window bits."""
        return np.asarray(state) & ((1 << self.class_bits(trellis, phase)) - 1)

    def class_counts(self, trellis: TimeVariantTrellis) -> Tuple[int, ...]:
        if self.truncation == 0:
            # product states also carry channel history, not just window bits
            return tuple(s.n_from for s in trellis.sections)
        return tuple(2 ** self.class_bits(trellis, i) for i in range(trellis.period))


@dataclass
class SurvivorMemory:
    """Metrics, feedback registers and per-step decisions of all survivors."""
    metrics: np.ndarray
    feedback: np.ndarray
    predecessors: List[np.ndarray] = field(default_factory=list)
    released: List[np.ndarray] = field(default_factory=list)
    decided: List[int] = field(default_factory=list)

    @classmethod
    def start(cls, n_states: int) -> "SurvivorMemory":
        metrics = np.full(n_states, np.inf)
        metrics[0] = 0.0
        return cls(metrics=metrics, feedback=np.zeros(n_states, dtype=np.int64))

    def record(self, predecessors: np.ndarray, released: np.ndarray, decided: int):
        self.predecessors.append(predecessors)
        self.released.append(released)
        self.decided.append(decided)

    def best(self) -> int:
        """Final survivor: minimum metric, ties to the smallest index."""
        return int(np.argmin(self.metrics))

    def traceback(self, final: int) -> List[int]:
        """Released bits along the survivor ending in `final`, oldest first."""
        chunks = []
        state = final
        for pred, rel, d in zip(reversed(self.predecessors), reversed(self.released),
                                reversed(self.decided)):
            if d:
                value = int(rel[state])
                chunks.append([(value >> (d - 1 - b)) & 1 for b in range(d)])
            state = int(pred[state])
        bits = []
        for chunk in reversed(chunks):
            bits.extend(chunk)
        return bits


def _bits_of(value: int, width: int) -> List[int]:
    return [(value >> (width - 1 - b)) & 1 for b in range(width)]


def add_compare_select(metrics: np.ndarray, cost: np.ndarray, next_state: np.ndarray,
                       n_next: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Scatter ACS over all (state, input) candidates.

    Returns the new metrics and, per next state, the flat index state*X + x of
    the winning candidate. Ties go to the smallest (state, input).
    """
    cand = (metrics[:, None] + cost).ravel()
    nxt = next_state.ravel()
    order = np.lexsort((cand, nxt))
    sorted_next = nxt[order]
    first = np.ones(order.size, dtype=bool)
    first[1:] = sorted_next[1:] != sorted_next[:-1]
    winners = order[first]
    targets = sorted_next[first]

    new_metrics = np.full(n_next, np.inf)
    new_metrics[targets] = cand[winners]
    winner = np.zeros(n_next, dtype=np.int64)
    winner[targets] = winners
    return new_metrics, winner


def _allowed_inputs(trellis: TimeVariantTrellis, t: int, n_info: Optional[int]) -> np.ndarray:
    """Input mask: pre-frame bits and zero-tail bits are forced to 0."""
    section = trellis.sections[t % trellis.period]
    cycle = t // trellis.period
    n = section.input_bits
    forced = 0
    for j, s in enumerate(section.input_steps):
        step = cycle * trellis.steps_per_cycle + s
        if step < 0 or (n_info is not None and step >= n_info):
            forced |= 1 << (n - 1 - j)
    return (np.arange(section.n_inputs) & forced) == 0


def _run(trellis: TimeVariantTrellis, partition: RssePartition, received,
         n_info: Optional[int]) -> np.ndarray:
    r = np.asarray(received, dtype=float)
    if r.ndim != 1:
        raise ValueError("received must be a 1-D symbol stream")
    if r.size == 0 or r.size % trellis.period:
        raise ValueError(
            f"{r.size} received symbols are not a whole number of {trellis.period}-symbol cycles"
        )
    r = trellis.align(r)
    k = partition.truncation
    counts = partition.class_counts(trellis)
    memory = SurvivorMemory.start(counts[0])

    for t, sample in enumerate(r):
        phase = t % trellis.period
        section = trellis.sections[phase]
        n_next = counts[(phase + 1) % trellis.period]
        if k == 0:
            hypothesis = section.hypothesis
            next_state = section.next_state
            released = section.released
        else:
            classes = np.arange(counts[phase], dtype=np.int64)
            bits_now = partition.class_bits(trellis, phase)
            bits_next = partition.class_bits(trellis, phase + 1)
            window = (memory.feedback << bits_now) | classes
            hypothesis = section.hypothesis[window]
            combined = (classes[:, None] << section.input_bits) | np.arange(section.n_inputs)
            next_state = combined & ((1 << bits_next) - 1)
            released = combined >> bits_next

        cost = (sample - hypothesis) ** 2
        allowed = _allowed_inputs(trellis, t, n_info)
        if not allowed.all():
            cost = np.where(allowed[None, :], cost, np.inf)

        metrics, winner = add_compare_select(memory.metrics, cost, next_state, n_next)
        pred = winner // section.n_inputs
        chosen = released.ravel()[winner]
        if k:
            memory.feedback = ((memory.feedback[pred] << section.decided) | chosen) & ((1 << k) - 1)
        memory.metrics = metrics
        memory.record(pred, chosen, section.decided)

    final = memory.best()
    last_phase = r.size % trellis.period
    # feedback bits already left the class, so the traceback holds them
    if k:
        tail = _bits_of(final, partition.class_bits(trellis, last_phase))
    else:
        tail = _bits_of(trellis.state_window(last_phase, final), trellis.window_len(last_phase))
    sequence = memory.traceback(final) + tail

    # sequence[0] is the oldest bit of the initial class
    start = trellis.window_len(0) - k - trellis.first_step
    count = n_info if n_info is not None else r.size // trellis.period * trellis.steps_per_cycle
    logger.debug("Survivor metric %.6g after %d symbols", memory.metrics[final], r.size)
    return np.asarray(sequence[start:start + count], dtype=np.uint8)


def viterbi_time_variant(trellis: TimeVariantTrellis, received,
                         n_info: Optional[int] = None) -> np.ndarray:
    """
    Full-state Viterbi over a frame starting in the zero state at phase 0.

    With n_info the inputs of the zero tail are forced to 0 and exactly the
    n_info frame bits are returned; otherwise every entered bit is returned.
    """
    return _run(trellis, RssePartition.full(trellis), received, n_info)


def rsse_decode(trellis: TimeVariantTrellis, partition: RssePartition, received,
                n_info: Optional[int] = None) -> np.ndarray:
    """Reduced-state Viterbi with per-survivor decision feedback."""
    if partition.truncation < 0 or partition.states < 1:
        raise ValueError(f"invalid partition {partition}")
    if partition.truncation and not trellis.is_window:
        raise ValueError(f"{trellis.kind} trellis supports only the full partition")
    if partition.truncation > min(trellis.window_len(i) for i in range(trellis.period)):
        raise ValueError(f"partition truncates more bits than the trellis windows hold")
    if partition.class_counts(trellis)[0] != partition.states:
        raise ValueError(
            f"partition of {partition.states} states does not match this trellis"
        )
    return _run(trellis, partition, received, n_info)


def viterbi_code(llrs, code: CodeSpec, n_info: int) -> np.ndarray:
    """
    Standard code-trellis Viterbi on per-coded-bit soft values.

    The cost of a branch is sum(c_i * llr_i); erasures (0) cost nothing.
    Inputs past n_info are forced to 0.
    """
    values = np.asarray(llrs, dtype=float)
    if values.size % code.n_out:
        raise ValueError(f"{values.size} soft values do not fill {code.n_out}-bit steps")
    n_steps = values.size // code.n_out
    if not 0 < n_info <= n_steps:
        raise ValueError(f"n_info={n_info} outside 1..{n_steps}")
    values = values.reshape(n_steps, code.n_out)

    nu = code.memory
    states = np.arange(2 ** nu, dtype=np.int64)
    combined = (states[:, None] << 1) | np.arange(2)
    next_state = combined & ((1 << nu) - 1)
    released = combined >> nu
    taps = np.array(code.generators, dtype=np.int64)  # (n_out, nu+1)
    # window bit for delay d sits at position d of `combined`
    window_bits = (combined[..., None] >> np.arange(nu + 1)) & 1
    coded = mod2(window_bits @ taps.T)  # (states, 2, n_out)

    memory = SurvivorMemory.start(2 ** nu)
    for step in range(n_steps):
        cost = coded @ values[step]
        if step >= n_info:
            cost = cost.copy()
            cost[:, 1] = np.inf
        metrics, winner = add_compare_select(memory.metrics, cost, next_state, 2 ** nu)
        memory.metrics = metrics
        memory.record(winner // 2, released.ravel()[winner], 1)

    final = memory.best()
    sequence = memory.traceback(final) + _bits_of(final, nu)
    return np.asarray(sequence[nu:nu + n_info], dtype=np.uint8)
