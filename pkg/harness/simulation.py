"""
Monte-Carlo BER points and sweeps with reproducible per-frame random streams.
"""
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.channel import NoiseSpec, add_awgn
from core.config import SimConfig, config_hash, save_config
from core.receivers import build_receiver
from core.trellis import TrellisSizeError

logger = logging.getLogger(__name__)

WILSON_Z = 1.959963984540054  # two-sided 95 %


@dataclass(frozen=True)
class BerRecord:
    """One measurement point."""
    ebn0_db: float
    receiver: str
    bits: int = 0
    errors: int = 0
    frames: int = 0
    frame_errors: int = 0
    error: Optional[str] = None  # receiver construction failure

    @property
    def ber(self) -> float:
        if self.error is not None or self.bits == 0:
            return float("nan")
        return self.errors / self.bits

    @property
    def wilson_halfwidth(self) -> float:
        """Half-width of the 95 % Wilson score interval of the BER."""
        if self.bits == 0:
            return float("nan")
        return wilson_interval(self.errors, self.bits)[1]


def wilson_interval(errors: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    """(centre, half-width) of the Wilson score interval."""
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z / denom * np.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
    return float(centre), float(half)


def frame_rng(seed: int, receiver: str, ebn0_index: int, frame: int) -> np.random.Generator:
    """Counter-based stream for one frame, independent of scheduling."""
    key = (zlib.crc32(receiver.encode("utf-8")), ebn0_index, frame)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def run_point(config: SimConfig, ebn0_db: float, receiver: str,
              ebn0_index: Optional[int] = None, noiseless: bool = False) -> BerRecord:
    """
    Simulate frames until min_errors bit errors or max_frames frames.

    A receiver that cannot be built yields a record carrying the error.
    """
    if ebn0_index is None:
        if ebn0_db not in config.ebn0:
            raise ValueError(
                f"Eb/N0 {ebn0_db:g} dB is not on the config grid; pass ebn0_index explicitly"
            )
        ebn0_index = config.ebn0.index(ebn0_db)
    link = config.link()
    try:
        decoder = build_receiver(receiver, link, config.state_cap)
    except (ValueError, TrellisSizeError) as e:
        logger.warning("Receiver %s unavailable: %s", receiver, e)
        return BerRecord(ebn0_db=ebn0_db, receiver=receiver, error=str(e))

    noise = NoiseSpec(ebn0_db, link.rate, link.label.symbol_energy, noiseless=noiseless)
    variance = noise.variance
    n_info = config.frame_bits

    bits = errors = frames = frame_errors = 0
    while frames < config.max_frames and errors < config.min_errors:
        rng = frame_rng(config.seed, receiver, ebn0_index, frames)
        info = rng.integers(0, 2, size=n_info, dtype=np.uint8)
        received = add_awgn(link.transmit(info), noise, rng)
        decoded = decoder.decode(received, variance, n_info)
        wrong = int(np.count_nonzero(decoded != info))
        bits += n_info
        errors += wrong
        frames += 1
        frame_errors += wrong > 0

    record = BerRecord(ebn0_db, receiver, bits, errors, frames, frame_errors)
    logger.info("%s @ %.2f dB: %d errors / %d bits (BER %.3e +- %.1e)",
                receiver, ebn0_db, errors, bits, record.ber, record.wilson_halfwidth)
    return record


def write_data_file(records: Sequence[BerRecord], config: SimConfig,
                    path: Union[str, Path]) -> Path:
    """
    Column data: Eb/N0 in dB, then one BER column per receiver in config order.

    Raises:
        OSError: if the file cannot be written
    """
    table: Dict[Tuple[str, float], BerRecord] = {(r.receiver, r.ebn0_db): r for r in records}
    lines = [
        f"# {config.title or 'BER over Eb/N0'}",
        f"# config-hash: {config_hash(config)}",
        "# columns: ebn0_db " + " ".join(config.receivers),
    ]
    for ebn0 in config.ebn0:
        row = [f"{ebn0:g}"]
        for receiver in config.receivers:
            record = table.get((receiver, ebn0))
            ber = record.ber if record is not None else float("nan")
            row.append("nan" if np.isnan(ber) else f"{ber:.6e}")
        lines.append(" ".join(row))

    out = Path(path)
    with open(out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    logger.info("Wrote %s", out)
    return out


def run_sweep(config: SimConfig, out_path: Optional[Union[str, Path]] = None,
              workers: Optional[int] = None, noiseless: bool = False) -> List[BerRecord]:
    """
    Every (receiver, Eb/N0) point of the config, merged in grid order.

    Points run on a thread pool; per-frame streams make the result
    independent of the worker count.
    """
    tasks = list(product(config.receivers, enumerate(config.ebn0)))
    n_workers = workers or config.workers

    def work(task):
        receiver, (index, ebn0) = task
        return run_point(config, ebn0, receiver, index, noiseless)

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(task) for task in tasks]

    merged = {(r.receiver, r.ebn0_db): r for r in results}
    records = [merged[(receiver, ebn0)] for ebn0 in config.ebn0 for receiver in config.receivers]

    target = out_path or config.output
    if target:
        data_path = write_data_file(records, config, target)
        if not save_config(config, data_path.with_suffix(".cfg")):
            logger.warning("Could not save the resolved config next to %s", data_path)
    return records
