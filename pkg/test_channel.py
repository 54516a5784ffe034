"""Tests for the ISI channel, noise calibration and the link pipeline."""
import numpy as np
import pytest

from core.channel import (ChannelTaps, NoiseSpec, add_awgn, filter_symbols, idle_offsets,
                          reference_taps)


class TestReferenceTaps:
    """Minimum-phase ramp normalized to unit energy."""

    def test_l2_values(self):
        taps = reference_taps(2)
        assert np.allclose(taps.array, np.array([3.0, 2.0, 1.0]) / np.sqrt(14.0))
        assert taps.norm == pytest.approx(np.sqrt(14.0) / 3.0)

    @pytest.mark.parametrize("memory", range(7))
    def test_unit_energy_and_decreasing(self, memory):
        h = reference_taps(memory).array
        assert abs(np.sum(h ** 2) - 1.0) < 1e-12
        assert np.all(h > 0)
        assert np.all(np.diff(h) < 0)

    def test_no_isi(self):
        assert reference_taps(0).taps == (1.0,)

    def test_negative_memory(self):
        with pytest.raises(ValueError, match="memory"):
            reference_taps(-1)


class TestChannelTaps:
    def test_custom_taps_are_renormalized(self):
        taps = ChannelTaps.from_values([1.0, 1.0])
        assert taps.renormalized
        assert np.allclose(taps.array, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_rejects_non_unit_energy(self):
        with pytest.raises(ValueError, match="unit energy"):
            ChannelTaps((0.5,))

    def test_channel_states(self):
        assert reference_taps(4).states(4) == 256


class TestFilter:
    """Linear ISI with zero initial memory."""

    def test_impulse_response(self):
        taps = reference_taps(2)
        assert np.allclose(filter_symbols([1.0, 0.0, 0.0], taps), taps.array)

    def test_flush_adds_tail(self):
        out = filter_symbols([1.0, -1.0], reference_taps(3), flush=True)
        assert out.shape == (5,)

    def test_batch_along_last_axis(self, rng):
        taps = reference_taps(2)
        batch = rng.normal(size=(3, 10))
        out = filter_symbols(batch, taps)
        assert np.allclose(out[1], filter_symbols(batch[1], taps))

    def test_power_preserved(self, natural, rng):
        symbols = natural.alphabet[rng.integers(0, 4, 200_000)]
        out = filter_symbols(symbols, reference_taps(4))
        assert np.mean(out ** 2) == pytest.approx(5.0, rel=0.02)

    def test_idle_offsets(self):
        taps = reference_taps(1)
        offsets = idle_offsets(taps, -3.0, 4)
        assert offsets[0] == pytest.approx(-3.0 * taps.taps[1])
        assert np.all(offsets[1:] == 0.0)


class TestNoise:
    """Eb/N0 calibration."""

    def test_variance(self):
        noise = NoiseSpec(6.0, 4.0 / 3.0, 5.0)
        n0 = 5.0 / (4.0 / 3.0 * 10 ** 0.6)
        assert noise.n0 == pytest.approx(n0)
        assert noise.variance == pytest.approx(n0 / 2)

    def test_non_positive_ebn0(self):
        with pytest.raises(ValueError):
            NoiseSpec(-np.inf, 1.0, 5.0).variance

    def test_noiseless_is_exact(self, rng):
        x = np.arange(5.0)
        assert np.array_equal(add_awgn(x, NoiseSpec(0.0, 1.0, 5.0, noiseless=True), rng), x)

    def test_empirical_variance(self, rng):
        noise = NoiseSpec(3.0, 4.0 / 3.0, 5.0)
        samples = add_awgn(np.zeros(200_000), noise, rng)
        assert np.var(samples) == pytest.approx(noise.variance, rel=0.02)


class TestLink:
    """Frame layout of the reference system."""

    def test_rate(self, make_link):
        assert make_link(2).rate == pytest.approx(4.0 / 3.0)

    def test_tail_ends_on_cycle(self, make_link):
        link = make_link(2)
        assert link.tail_length(8) == 4
        assert link.frame_steps(8) == 12
        assert link.frame_symbols(8) == 9
        assert link.tail_length(10) == 2
        assert link.tail_length(1) == 3

    def test_transmit_batch(self, make_link, rng):
        link = make_link(1)
        info = rng.integers(0, 2, (4, 8)).astype(np.uint8)
        out = link.transmit(info)
        assert out.shape == (4, 9)
        assert np.allclose(out[2], link.transmit(info[2]))

    def test_first_sample(self, make_link):
        link = make_link(1)
        h = link.taps.array
        assert link.transmit([1, 0, 0, 0, 0, 0, 0, 0])[0] == pytest.approx(3.0 * h[0])
