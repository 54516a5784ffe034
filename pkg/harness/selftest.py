"""
Self-test suites: state counts, oracle equivalence, reduced-state degeneracy
and distance preservation on the reference (5,7) system.
"""
import logging
from typing import Callable, List, Tuple

import numpy as np

from core.channel import NoiseSpec, add_awgn, reference_taps
from core.coding import CodeSpec, Labeling, PuncturingScheme
from core.decoders import RssePartition, rsse_decode, viterbi_time_variant
from core.link import Link
from core.oracle import brute_force_mlse, minimum_distance
from core.trellis import build_matched_trellis, build_product_trellis

logger = logging.getLogger(__name__)

REFERENCE_GENERATORS = ("5", "7")
REFERENCE_PUNCTURING = ("10", "11")


def reference_link(memory: int, punctured: bool = True) -> Link:
    code = CodeSpec.from_octal(REFERENCE_GENERATORS)
    scheme = (PuncturingScheme.from_rows(REFERENCE_PUNCTURING) if punctured
              else PuncturingScheme.all_keep(code.n_out))
    return Link(code, scheme, Labeling(4, "natural"), reference_taps(memory))


def _states(link: Link, product: bool = False) -> Tuple[int, ...]:
    build = build_product_trellis if product else build_matched_trellis
    return build(link.code, link.scheme, link.label, link.taps).state_counts


def check_state_counts() -> bool:
    cases = [
        ("matched, non-punctured, L=4", lambda: max(_states(reference_link(4, punctured=False))), 64),
        ("matched, L=4", lambda: _states(reference_link(4)), (256, 256, 512)),
        ("matched, L=3", lambda: _states(reference_link(3)), (64, 64, 128)),
        ("matched, L=2", lambda: _states(reference_link(2)), (32, 32, 64)),
        ("matched, L=0", lambda: _states(reference_link(0)), (4, 4, 8)),
        ("product, L=4", lambda: _states(reference_link(4), product=True), (1024, 1024, 2048)),
    ]
    ok = True
    for name, measure, expected in cases:
        got = measure()
        if got != expected:
            logger.error("State count %s: expected %s, got %s", name, expected, got)
            ok = False
    return ok


def check_oracle_equivalence(frames: int, rng: np.random.Generator, n_info: int = 8) -> bool:
    ok = True
    for memory in (0, 1, 2):
        link = reference_link(memory)
        trellis = build_matched_trellis(link.code, link.scheme, link.label, link.taps)
        mismatches = 0
        for ebn0 in (2.0, 6.0, 10.0):
            noise = NoiseSpec(ebn0, link.rate, link.label.symbol_energy)
            for _ in range(frames):
                info = rng.integers(0, 2, size=n_info, dtype=np.uint8)
                received = add_awgn(link.transmit(info), noise, rng)
                decoded = viterbi_time_variant(trellis, received, n_info)
                if not np.array_equal(decoded, brute_force_mlse(received, link, n_info)):
                    mismatches += 1
        if mismatches:
            logger.error("Oracle equivalence L=%d: %d mismatching frames", memory, mismatches)
            ok = False
    return ok


def check_rsse_degeneracy(frames: int, rng: np.random.Generator, n_info: int = 12) -> bool:
    link = reference_link(2)
    trellis = build_matched_trellis(link.code, link.scheme, link.label, link.taps)
    full = RssePartition.reduced(trellis, trellis.sections[0].n_from)
    noise = NoiseSpec(4.0, link.rate, link.label.symbol_energy)
    for _ in range(frames):
        info = rng.integers(0, 2, size=n_info, dtype=np.uint8)
        received = add_awgn(link.transmit(info), noise, rng)
        if not np.array_equal(rsse_decode(trellis, full, received, n_info),
                              viterbi_time_variant(trellis, received, n_info)):
            logger.error("Full-partition RSSE differs from Viterbi")
            return False
    return True


def check_rsse_noiseless(rng: np.random.Generator, n_info: int = 48) -> bool:
    """Every reduced partition of the L=4 trellis recovers a noiseless frame."""
    link = reference_link(4)
    trellis = build_matched_trellis(link.code, link.scheme, link.label, link.taps)
    info = rng.integers(0, 2, size=n_info, dtype=np.uint8)
    received = link.transmit(info)
    ok = True
    for states in (128, 64, 32, 16, 8, 4):
        decoded = rsse_decode(trellis, RssePartition.reduced(trellis, states), received, n_info)
        if not np.array_equal(decoded, info):
            logger.error("RSSE with %d states fails on a noiseless frame", states)
            ok = False
    return ok


def check_distance_preservation(n_bits: int = 6) -> bool:
    ok = True
    for memory in (0, 1, 2):
        link = reference_link(memory)
        tail = link.code.memory + (memory + 1) * link.plan.steps_per_cycle
        args = (link.code, link.scheme, link.label, link.taps)
        distances = [
            minimum_distance(build_matched_trellis(*args), n_bits, tail),
            minimum_distance(build_matched_trellis(*args, compact=True), n_bits, tail),
            minimum_distance(build_product_trellis(*args), n_bits, tail),
        ]
        if max(distances) - min(distances) > 1e-9:
            logger.error("Distance L=%d: matched/compact/product differ: %s", memory, distances)
            ok = False
    return ok


def run_selftest(frames: int = 100, seed: int = 7) -> bool:
    """Run every suite; True iff all pass."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    suites: List[Tuple[str, Callable[[], bool]]] = [
        ("state counts", check_state_counts),
        ("oracle equivalence", lambda: check_oracle_equivalence(frames, rng)),
        ("rsse degeneracy", lambda: check_rsse_degeneracy(frames, rng)),
        ("rsse noiseless", lambda: check_rsse_noiseless(rng)),
        ("distance preservation", check_distance_preservation),
    ]
    passed = True
    for name, suite in suites:
        ok = suite()
        logger.info("%-22s %s", name, "PASS" if ok else "FAIL")
        passed = passed and ok
    return passed
