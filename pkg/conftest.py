"""Shared fixtures: the reference (5,7) code, the 2/3 puncturing pattern and links."""
import numpy as np
import pytest

from core.channel import reference_taps
from core.coding import CodeSpec, Labeling, PuncturingScheme
from core.link import Link


@pytest.fixture
def code57():
    return CodeSpec.from_octal(["5", "7"])


@pytest.fixture
def scheme23():
    return PuncturingScheme.from_rows(["10", "11"])


@pytest.fixture
def natural():
    return Labeling(4, "natural")


@pytest.fixture
def gray():
    return Labeling(4, "gray")


@pytest.fixture
def make_link(code57, scheme23, natural):
    """Reference link factory: make_link(L, punctured=True, label=None)."""
    def make(memory, punctured=True, label=None):
        scheme = scheme23 if punctured else PuncturingScheme.all_keep(2)
        return Link(code57, scheme, label or natural, reference_taps(memory))
    return make


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(2024)))
