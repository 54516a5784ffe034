"""
Receiver registry - maps receiver ids to decoders with shared, cached trellises.

Ids: matched, matched-rsse:S, product, dfse-va:S, bcjr-va.
"""
import logging
import threading
from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

import numpy as np

from core.decoders import RssePartition, rsse_decode, viterbi_time_variant
from core.equalizers import separated_receiver
from core.link import Link
from core.trellis import (DEFAULT_STATE_CAP, TimeVariantTrellis, build_channel_trellis,
                          build_matched_trellis, build_product_trellis)

logger = logging.getLogger(__name__)

RECEIVER_KINDS = ("matched", "matched-rsse", "product", "dfse-va", "bcjr-va")

# BCJR needs a positive variance even for noiseless runs
MIN_NOISE_VAR = 1e-6

_cache: Dict[Tuple, TimeVariantTrellis] = {}
_cache_lock = threading.Lock()


def cached_trellis(kind: str, link: Link, state_cap: int = DEFAULT_STATE_CAP) -> TimeVariantTrellis:
    """Build a trellis once per (kind, link, cap); the result is shared read-only."""
    key = (kind, link, state_cap)
    with _cache_lock:
        trellis = _cache.get(key)
        if trellis is None:
            if kind == "matched":
                trellis = build_matched_trellis(link.code, link.scheme, link.label, link.taps, state_cap)
            elif kind == "product":
                trellis = build_product_trellis(link.code, link.scheme, link.label, link.taps, state_cap)
            elif kind == "channel":
                trellis = build_channel_trellis(link.taps, link.label, state_cap)
            else:
                raise ValueError(f"unknown trellis kind '{kind}'")
            _cache[key] = trellis
    return trellis


def parse_receiver_id(receiver_id: str) -> Tuple[str, Optional[int]]:
    """Split 'name:S' into its kind and state count."""
    name, _, states = receiver_id.strip().partition(":")
    if name not in RECEIVER_KINDS:
        raise ValueError(f"unknown receiver '{receiver_id}' (expected one of {', '.join(RECEIVER_KINDS)})")
    if name in ("matched-rsse", "dfse-va"):
        if not states:
            raise ValueError(f"receiver '{name}' needs a state count, e.g. {name}:16")
        try:
            count = int(states)
        except ValueError:
            raise ValueError(f"invalid state count in '{receiver_id}'") from None
        return name, count
    if states:
        raise ValueError(f"receiver '{name}' takes no state count")
    return name, None


class Receiver(ABC):
    """Decodes one frame of received samples into info bits."""

    def __init__(self, receiver_id: str, link: Link):
        self.receiver_id = receiver_id
        self.link = link

    @abstractmethod
    def decode(self, received, noise_var: float, n_info: int) -> np.ndarray:
        ...


class MatchedReceiver(Receiver):
    """Joint decoding on the matched trellis, optionally reduced to S classes."""

    def __init__(self, receiver_id: str, link: Link, trellis: TimeVariantTrellis,
                 states: Optional[int] = None):
        super().__init__(receiver_id, link)
        self.trellis = trellis
        if states is None:
            self.partition = RssePartition.full(trellis)
        else:
            self.partition = RssePartition.reduced(trellis, states)

    def decode(self, received, noise_var, n_info):
        if self.partition.truncation == 0:
            return viterbi_time_variant(self.trellis, received, n_info)
        return rsse_decode(self.trellis, self.partition, received, n_info)


class SeparatedReceiver(Receiver):
    def __init__(self, receiver_id: str, link: Link, trellis: TimeVariantTrellis,
                 mode: str, eq_states: Optional[int] = None):
        super().__init__(receiver_id, link)
        self.trellis = trellis
        self.mode = mode
        self.eq_states = eq_states

    def decode(self, received, noise_var, n_info):
        return separated_receiver(
            received, self.link, self.mode, n_info,
            noise_var=max(noise_var, MIN_NOISE_VAR),
            eq_states=self.eq_states,
            trellis=self.trellis,
        )


def build_receiver(receiver_id: str, link: Link, state_cap: int = DEFAULT_STATE_CAP) -> Receiver:
    name, states = parse_receiver_id(receiver_id)
    if name == "matched":
        return MatchedReceiver(receiver_id, link, cached_trellis("matched", link, state_cap))
    if name == "matched-rsse":
        return MatchedReceiver(receiver_id, link, cached_trellis("matched", link, state_cap), states)
    if name == "product":
        return MatchedReceiver(receiver_id, link, cached_trellis("product", link, state_cap))
    channel = cached_trellis("channel", link, state_cap)
    if name == "dfse-va":
        full = link.taps.states(link.label.m_ary)
        if states > full:
            raise ValueError(f"dfse-va:{states} exceeds the {full} channel states")
        return SeparatedReceiver(receiver_id, link, channel, "hard", states)
    return SeparatedReceiver(receiver_id, link, channel, "soft")
