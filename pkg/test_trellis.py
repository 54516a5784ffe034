"""Tests for phase plans and matched / product / channel trellis synthesis."""
import numpy as np
import pytest

from core.channel import reference_taps
from core.coding import CodeSpec, PuncturingScheme
from core.oracle import all_sequences
from core.trellis import (TrellisSizeError, build_channel_trellis, build_matched_trellis,
                          build_product_trellis, compute_phase_plan, dump_section,
                          enumerate_hypotheses)


def matched(link, **kwargs):
    return build_matched_trellis(link.code, link.scheme, link.label, link.taps, **kwargs)


def product(link, **kwargs):
    return build_product_trellis(link.code, link.scheme, link.label, link.taps, **kwargs)


# ============================================================================
# PHASE PLAN
# ============================================================================


class TestPhasePlan:
    """Generator offsets of the 2/3-punctured (5,7) code on 4-ASK."""

    def test_reference_offsets(self, code57, scheme23, natural):
        plan = compute_phase_plan(code57, scheme23, natural)
        assert plan.period == 3
        assert plan.steps_per_cycle == 4
        assert [p.sources for p in plan.phases] == [
            ((0, 0), (1, 0)),
            ((1, 1), (0, 2)),
            ((1, 2), (1, 3)),
        ]
        assert plan.decided == (1, 1, 2)
        assert plan.split == (False, True, False)
        assert plan.merge == (False, False, True)

    def test_decided_bits_sum_to_cycle(self, code57, scheme23, natural):
        plan = compute_phase_plan(code57, scheme23, natural)
        for memory in range(5):
            layout = plan.window_layout(memory)
            assert sum(layout.decided) == plan.steps_per_cycle
            assert sum(layout.split) == sum(layout.merge)

    def test_non_punctured(self, code57, natural):
        plan = compute_phase_plan(code57, PuncturingScheme.all_keep(2), natural)
        assert plan.period == 1
        assert plan.decided == (1,)

    def test_pattern_code_mismatch(self, code57, natural):
        scheme = PuncturingScheme.from_rows(["1", "1", "1"])
        with pytest.raises(ValueError, match="rows"):
            compute_phase_plan(code57, scheme, natural)

    def test_cycle_extended_to_whole_symbols(self, natural):
        code = CodeSpec.from_octal(["5", "7"])
        scheme = PuncturingScheme.from_rows(["11", "10"])  # 3 kept bits per period
        plan = compute_phase_plan(code, scheme, natural)
        assert plan.steps_per_cycle == 4
        assert plan.period == 3


# ============================================================================
# STATE COUNTS
# ============================================================================


class TestStateCounts:
    """Exact state counts of the reference system."""

    def test_non_punctured_l4(self, make_link):
        assert matched(make_link(4, punctured=False)).state_counts == (64,)

    def test_punctured_l4(self, make_link):
        assert matched(make_link(4)).state_counts == (256, 256, 512)

    def test_punctured_l3(self, make_link):
        assert matched(make_link(3)).state_counts == (64, 64, 128)

    def test_punctured_l2(self, make_link):
        assert matched(make_link(2)).state_counts == (32, 32, 64)

    def test_code_only(self, make_link):
        trellis = matched(make_link(0))
        assert trellis.state_counts == (4, 4, 8)
        assert [s.decided for s in trellis.sections] == [1, 1, 2]

    def test_product_l4(self, make_link):
        assert product(make_link(4)).state_counts == (1024, 1024, 2048)

    def test_product_l0_is_code_trellis(self, make_link):
        assert product(make_link(0)).state_counts == (4, 4, 8)

    def test_compact_l4(self, make_link):
        assert matched(make_link(4), compact=True).state_counts == (256, 128, 256)

    def test_channel_trellis(self, natural):
        assert build_channel_trellis(reference_taps(2), natural).state_counts == (16,)

    def test_state_cap(self, make_link):
        with pytest.raises(TrellisSizeError, match="phase 0"):
            matched(make_link(4), state_cap=100)
        with pytest.raises(TrellisSizeError, match="phase"):
            product(make_link(4), state_cap=1024)


# ============================================================================
# STRUCTURE
# ============================================================================


class TestStructure:
    """Degrees, path counts and replay equivalence."""

    @pytest.mark.parametrize("memory", [0, 1, 2])
    def test_in_degree(self, make_link, memory):
        trellis = matched(make_link(memory))
        for section in trellis.sections:
            indegree = np.bincount(section.next_state.ravel(), minlength=section.n_to)
            assert np.all(indegree == (4 if section.merge else 2))

    @pytest.mark.parametrize("build", [matched, product])
    def test_path_count(self, make_link, build):
        trellis = build(make_link(2))
        paths = np.zeros(trellis.sections[0].n_from, dtype=np.int64)
        paths[0] = 1
        cycles = 2
        for t in range(cycles * trellis.period):
            section = trellis.sections[t % trellis.period]
            following = np.zeros(section.n_to, dtype=np.int64)
            np.add.at(following, section.next_state.ravel(),
                      np.repeat(paths, section.n_inputs))
            paths = following
        assert paths.sum() == 2 ** (cycles * trellis.steps_per_cycle)

    @pytest.mark.parametrize("memory", [0, 1, 2])
    @pytest.mark.parametrize("build", [matched, product])
    def test_replay_equivalence(self, make_link, build, memory):
        link = make_link(memory)
        trellis = build(link)
        info = all_sequences(8)
        replay = trellis.align(link.transmit(info))
        assert np.allclose(trellis.hypotheses_for(link.frame_bits(info)), replay, atol=1e-12)

    def test_gray_replay(self, make_link, gray):
        link = make_link(2, label=gray)
        trellis = matched(link)
        info = all_sequences(8)
        assert np.allclose(trellis.hypotheses_for(link.frame_bits(info)),
                           trellis.align(link.transmit(info)), atol=1e-12)


# ============================================================================
# ACCESSORS
# ============================================================================


class TestAccessors:
    """Hypothesis enumeration and section dumps."""

    def test_zero_state_zero_input(self, make_link):
        link = make_link(2)
        rows = enumerate_hypotheses(matched(link), 0, 0)
        assert rows[0][0] == 0
        assert rows[0][1] == pytest.approx(-3.0 * link.taps.array.sum())
        assert rows[0][2] == 0

    def test_input_driving_plus_three(self, make_link):
        link = make_link(1)
        h = link.taps.array
        x, y, _ = enumerate_hypotheses(matched(link), 0, 0)[1]
        assert x == 1
        assert y == pytest.approx(3.0 * h[0] - 3.0 * h[1])

    def test_ordering(self, make_link):
        rows = enumerate_hypotheses(matched(make_link(1)), 5, 1)
        assert [r[0] for r in rows] == [0, 1, 2, 3]

    def test_out_of_range(self, make_link):
        trellis = matched(make_link(1))
        with pytest.raises(ValueError, match="state"):
            enumerate_hypotheses(trellis, trellis.sections[0].n_from, 0)
        with pytest.raises(ValueError, match="phase"):
            enumerate_hypotheses(trellis, 0, 3)

    def test_dump_section(self, make_link):
        trellis = matched(make_link(0))
        lines = dump_section(trellis, 0).splitlines()
        assert len(lines) == 4 * 2
        assert lines[0] == "0 0 0 -3 0 0"
        assert all(len(line.split()) == 6 for line in lines)

    def test_dump_is_deterministic(self, make_link):
        link = make_link(1)
        assert dump_section(matched(link), 2) == dump_section(matched(link), 2)
