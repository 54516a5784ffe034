"""
Configuration management - flat key = value experiment files.
"""
import hashlib
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from core.channel import ChannelTaps, reference_taps
from core.coding import CodeSpec, Labeling, PuncturingScheme
from core.link import Link
from core.trellis import DEFAULT_STATE_CAP

logger = logging.getLogger(__name__)

DEFAULT_MAX_FRAMES = 100_000
DEFAULT_MIN_ERRORS = 100


@dataclass
class SimConfig:
    """One Monte-Carlo experiment."""
    generators: List[str] = field(default_factory=lambda: ["5", "7"])  # octal
    puncturing: List[str] = field(default_factory=lambda: ["10", "11"])
    labeling: str = "natural"
    m_ary: int = 4
    channel_memory: int = 2
    taps: Optional[List[float]] = None  # overrides channel_memory when set
    receivers: List[str] = field(default_factory=lambda: ["matched", "bcjr-va"])
    ebn0: List[float] = field(default_factory=lambda: [2.0, 4.0, 6.0, 8.0, 10.0, 12.0])
    frame_bits: int = 1000
    max_frames: int = DEFAULT_MAX_FRAMES
    min_errors: int = DEFAULT_MIN_ERRORS
    seed: int = 1
    state_cap: int = DEFAULT_STATE_CAP
    workers: int = 1
    output: Optional[str] = None
    title: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self):
        period = len(self.puncturing[0]) if self.puncturing else 0
        if period == 0:
            raise ValueError("puncturing pattern is empty")
        if self.frame_bits < 1 or self.frame_bits % period:
            raise ValueError(
                f"frame_bits={self.frame_bits} must be a positive multiple of the puncturing period {period}"
            )
        if self.min_errors < 1:
            raise ValueError(f"min_errors must be >= 1, got {self.min_errors}")
        if self.max_frames < 1:
            raise ValueError(f"max_frames must be >= 1, got {self.max_frames}")
        if self.channel_memory < 0:
            raise ValueError(f"channel_memory must be >= 0, got {self.channel_memory}")
        if not self.receivers:
            raise ValueError("no receivers configured")
        if not self.ebn0:
            raise ValueError("empty Eb/N0 grid")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def channel(self) -> ChannelTaps:
        if self.taps:
            return ChannelTaps.from_values(self.taps)
        return reference_taps(self.channel_memory)

    def link(self) -> Link:
        return Link(
            code=CodeSpec.from_octal(self.generators),
            scheme=PuncturingScheme.from_rows(self.puncturing),
            label=Labeling(self.m_ary, self.labeling),
            taps=self.channel(),
        )


def parse_grid(text: str) -> List[float]:
    """'a:b:step' (inclusive) or a list of values separated by commas/whitespace."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"Eb/N0 range must be a:b:step, got '{text}'")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"invalid Eb/N0 range '{text}'")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    values = [float(v) for v in text.replace(",", " ").split()]
    if not values:
        raise ValueError("empty Eb/N0 grid")
    return values


def _split_list(text: str) -> List[str]:
    return [v for v in text.replace(",", " ").split() if v]


_PARSERS = {
    "generators": _split_list,
    "puncturing": _split_list,
    "labeling": str.strip,
    "m_ary": int,
    "channel_memory": int,
    "taps": lambda t: [float(v) for v in _split_list(t)],
    "receivers": _split_list,
    "ebn0": parse_grid,
    "frame_bits": int,
    "max_frames": int,
    "min_errors": int,
    "seed": int,
    "state_cap": int,
    "workers": int,
    "output": str.strip,
    "title": str.strip,
}


def _format_value(value) -> str:
    if isinstance(value, list):
        return " ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    return str(value)


def config_text(config: SimConfig) -> str:
    """Canonical key = value text (fixed key order, unset keys omitted)."""
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if value is None or value == "":
            continue
        lines.append(f"{f.name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def config_hash(config: SimConfig) -> str:
    """SHA-1 of the canonical text; output path and worker count are excluded."""
    canonical = config_text(replace(config, output=None, workers=1))
    return hashlib.sha1(canonical.encode("utf-8")).hexdigest()


def parse_config(text: str) -> SimConfig:
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"line {number}: expected 'key = value', got '{raw.strip()}'")
        if key not in _PARSERS:
            raise ValueError(f"line {number}: unknown key '{key}'")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as e:
            raise ValueError(f"line {number}: bad value for '{key}': {e}") from None
    return SimConfig(**values)


def load_config(path: Union[str, Path]) -> SimConfig:
    """
    Load an experiment config.

    Raises:
        FileNotFoundError: if the file does not exist
        ValueError: on unknown keys or invalid values
    """
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"config file not found: {config_path}")
    config = parse_config(config_path.read_text(encoding="utf-8"))
    logger.debug("Loaded config %s (hash %s)", config_path, config_hash(config)[:12])
    return config


def save_config(config: SimConfig, path: Union[str, Path]) -> bool:
    """
    Save the resolved config so a run can be reproduced.

    Returns:
        True if successful, False otherwise
    """
    try:
        config_path = Path(path)
        config_path.parent.mkdir(parents=True, exist_ok=True)
        config_path.write_text(config_text(config), encoding="utf-8")
        return True
    except OSError as e:
        logger.error("Error saving config: %s", e)
        return False


def apply_overrides(config: SimConfig, ebn0: Optional[str] = None, seed: Optional[int] = None,
                    receivers: Optional[str] = None, output: Optional[str] = None,
                    workers: Optional[int] = None, max_frames: Optional[int] = None,
                    min_errors: Optional[int] = None, frame_bits: Optional[int] = None) -> SimConfig:
    """Return a copy of the config with the given CLI values merged in."""
    changes = {}
    if ebn0 is not None:
        changes["ebn0"] = parse_grid(ebn0)
    if seed is not None:
        changes["seed"] = seed
    if receivers is not None:
        changes["receivers"] = _split_list(receivers)
    if output is not None:
        changes["output"] = output
    if workers is not None:
        changes["workers"] = workers
    if max_frames is not None:
        changes["max_frames"] = max_frames
    if min_errors is not None:
        changes["min_errors"] = min_errors
    if frame_bits is not None:
        changes["frame_bits"] = frame_bits
    return replace(config, **changes)
