"""
Separated receivers - symbol equalization followed by code-trellis decoding.

The equalizers run on the symbol-level ISI trellis (M^L states). BCJR is the
exact log-domain forward-backward recursion; DFSE is the reduced-state
Viterbi engine applied to that trellis.
"""
import logging
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from core.channel import ChannelTaps
from core.coding import Labeling, depuncture_llrs, index_bits
from core.decoders import RssePartition, rsse_decode, viterbi_code
from core.link import Link
from core.trellis import TimeVariantTrellis, build_channel_trellis

logger = logging.getLogger(__name__)


def _branch_logs(trellis: TimeVariantTrellis, received, noise_var: float) -> np.ndarray:
    if noise_var <= 0.0:
        raise ValueError(f"noise variance must be positive, got {noise_var}")
    r = trellis.align(np.asarray(received, dtype=float))
    if r.ndim != 1 or r.size == 0:
        raise ValueError("received must be a non-empty 1-D symbol stream")
    hyp = trellis.sections[0].hypothesis  # (states, M)
    return -((r[:, None, None] - hyp[None]) ** 2) / (2.0 * noise_var)


def symbol_log_posteriors(received, taps: ChannelTaps, label: Labeling, noise_var: float,
                          trellis: Optional[TimeVariantTrellis] = None) -> np.ndarray:
    """
    Log APPs of the alphabet index of every received symbol, shape (T, M).

    Zero (idle) initial channel state, open final state, uniform priors.
    """
    if trellis is None:
        trellis = build_channel_trellis(taps, label)
    section = trellis.sections[0]
    n_states, m = section.n_from, section.n_inputs
    gamma = _branch_logs(trellis, received, noise_var)
    n_symbols = gamma.shape[0]

    # next state = (s*M + x) mod S, so a (M, S) reshape groups each target's predecessors
    alpha = np.full((n_symbols + 1, n_states), -np.inf)
    alpha[0, 0] = 0.0
    for t in range(n_symbols):
        incoming = (alpha[t][:, None] + gamma[t]).reshape(m, n_states)
        a = logsumexp(incoming, axis=0)
        alpha[t + 1] = a - np.max(a)

    beta = np.zeros(n_states)
    log_app = np.empty((n_symbols, m))
    for t in range(n_symbols - 1, -1, -1):
        joint = alpha[t][:, None] + gamma[t] + beta[section.next_state]
        per_symbol = logsumexp(joint, axis=0)
        log_app[t] = per_symbol - logsumexp(per_symbol)
        b = logsumexp(gamma[t] + beta[section.next_state], axis=1)
        beta = b - np.max(b)
    return log_app


def symbol_posteriors(received, taps: ChannelTaps, label: Labeling, noise_var: float,
                      trellis: Optional[TimeVariantTrellis] = None) -> np.ndarray:
    """Symbol APPs in the probability domain; rows sum to 1."""
    return np.exp(symbol_log_posteriors(received, taps, label, noise_var, trellis))


def bcjr_equalize(received, taps: ChannelTaps, label: Labeling, noise_var: float,
                  trellis: Optional[TimeVariantTrellis] = None) -> np.ndarray:
    """
    Per coded-bit LLRs (positive favours 0), label bits MSB first per symbol.
    """
    log_app = symbol_log_posteriors(received, taps, label, noise_var, trellis)
    table = label.label_bits()  # (M, bits)
    llrs = np.empty((log_app.shape[0], label.bits_per_symbol))
    for b in range(label.bits_per_symbol):
        zero = table[:, b] == 0
        llrs[:, b] = logsumexp(log_app[:, zero], axis=1) - logsumexp(log_app[:, ~zero], axis=1)
    return llrs.reshape(-1)


def dfse_equalize(received, taps: ChannelTaps, label: Labeling, kept_states: int,
                  trellis: Optional[TimeVariantTrellis] = None) -> np.ndarray:
    """
    Hard alphabet indices from DFSE with M^J states.

    Taps beyond J are fed back from each survivor's own decisions; J = L is
    the full MLSE equalizer.
    """
    full = label.m_ary ** taps.memory
    j = 0
    while label.m_ary ** j < kept_states:
        j += 1
    if label.m_ary ** j != kept_states or j > taps.memory:
        raise ValueError(
            f"kept_states must be M^J with J <= {taps.memory} (up to {full}), got {kept_states}"
        )
    if trellis is None:
        trellis = build_channel_trellis(taps, label)
    partition = RssePartition.reduced(trellis, kept_states)
    bits = rsse_decode(trellis, partition, received)
    n = label.bits_per_symbol
    weights = 1 << np.arange(n - 1, -1, -1)
    return bits.reshape(-1, n).astype(np.int64) @ weights


def separated_receiver(received, link: Link, mode: str, n_info: int,
                       noise_var: Optional[float] = None, eq_states: Optional[int] = None,
                       trellis: Optional[TimeVariantTrellis] = None) -> np.ndarray:
    """
    Equalize, demap to bit metrics, re-insert erasures, decode the code alone.

    mode 'hard': DFSE decisions become +-1 metrics. mode 'soft': BCJR LLRs.
    """
    n_steps = link.frame_steps(n_info)
    if mode == "hard":
        states = eq_states if eq_states is not None else link.taps.states(link.label.m_ary)
        indices = dfse_equalize(received, link.taps, link.label, states, trellis)
        bits = index_bits(indices, link.label)
        metrics = 1.0 - 2.0 * bits.astype(float)
    elif mode == "soft":
        if noise_var is None:
            raise ValueError("soft separated receiver needs the noise variance")
        metrics = bcjr_equalize(received, link.taps, link.label, noise_var, trellis)
    else:
        raise ValueError(f"unknown separated receiver mode '{mode}'")
    full = depuncture_llrs(metrics, link.scheme, n_steps)
    return viterbi_code(full, link.code, n_info)
