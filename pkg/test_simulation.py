"""Tests for the Monte-Carlo harness, data files, plot scripts and the CLI."""
import numpy as np
import pytest

from core.config import SimConfig
from harness import emit_plot_script, run_point, run_sweep, write_data_file
from harness.simulation import BerRecord, frame_rng, wilson_interval
from main import main


def small_config(**kwargs):
    values = dict(channel_memory=2, receivers=["matched", "bcjr-va"], ebn0=[4.0, 6.0, 8.0],
                  frame_bits=40, max_frames=4, min_errors=1000, seed=11)
    values.update(kwargs)
    return SimConfig(**values)


# ============================================================================
# POINTS
# ============================================================================


class TestRunPoint:
    """Single (receiver, Eb/N0) measurements."""

    @pytest.mark.parametrize("receiver", ["matched", "matched-rsse:8", "product",
                                          "dfse-va:4", "bcjr-va"])
    def test_noiseless_is_error_free(self, receiver):
        record = run_point(small_config(max_frames=3), 0.0, receiver, ebn0_index=0, noiseless=True)
        assert record.error is None
        assert record.errors == 0
        assert record.ber == 0.0
        assert record.frames == 3

    def test_same_seed_same_record(self):
        config = small_config()
        assert run_point(config, 4.0, "matched") == run_point(config, 4.0, "matched")

    def test_conservation(self):
        record = run_point(small_config(), 4.0, "bcjr-va")
        assert record.bits == record.frames * 40
        assert 0.0 <= record.ber <= 1.0

    def test_stops_at_min_errors(self):
        record = run_point(small_config(min_errors=1, max_frames=1000), -2.0, "matched",
                           ebn0_index=0)
        assert record.errors >= 1
        assert record.frames < 1000

    def test_off_grid_ebn0_needs_index(self):
        with pytest.raises(ValueError, match="ebn0_index"):
            run_point(small_config(), 5.0, "matched")

    def test_construction_failure_is_recorded(self):
        record = run_point(small_config(state_cap=8), 4.0, "matched")
        assert record.error is not None and "states" in record.error
        assert np.isnan(record.ber)

    def test_unknown_receiver_is_recorded(self):
        record = run_point(small_config(), 4.0, "turbo")
        assert "unknown receiver" in record.error

    def test_frame_streams_are_reproducible(self):
        a = frame_rng(1, "matched", 2, 7).integers(0, 2, 32)
        b = frame_rng(1, "matched", 2, 7).integers(0, 2, 32)
        c = frame_rng(1, "matched", 2, 8).integers(0, 2, 32)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_wilson(self):
        centre, half = wilson_interval(10, 100)
        assert centre == pytest.approx(0.1148, abs=1e-4)
        assert half == pytest.approx(0.0596, abs=1e-4)
        assert BerRecord(6.0, "matched", bits=100, errors=0).wilson_halfwidth > 0


# ============================================================================
# SWEEPS AND FILES
# ============================================================================


class TestRunSweep:
    """Grid x receivers, merged in config order."""

    def test_data_file_layout(self, tmp_path):
        out = tmp_path / "ber.dat"
        records = run_sweep(small_config(), out)
        assert len(records) == 6
        lines = out.read_text().splitlines()
        header = [l for l in lines if l.startswith("#")]
        rows = [l.split() for l in lines if not l.startswith("#")]
        assert header[-1] == "# columns: ebn0_db matched bcjr-va"
        assert header[1].startswith("# config-hash: ")
        assert len(rows) == 3
        assert all(len(r) == 3 for r in rows)
        assert [float(r[0]) for r in rows] == [4.0, 6.0, 8.0]
        assert (tmp_path / "ber.cfg").exists()

    def test_workers_do_not_change_results(self):
        config = small_config()
        assert run_sweep(config, workers=1) == run_sweep(config, workers=3)

    def test_failed_receiver_writes_nan(self, tmp_path):
        out = tmp_path / "ber.dat"
        run_sweep(small_config(receivers=["matched", "matched-rsse:3"], ebn0=[4.0]), out)
        row = [l for l in out.read_text().splitlines() if not l.startswith("#")][0].split()
        assert row[2] == "nan"

    def test_unwritable_output(self, tmp_path):
        with pytest.raises(OSError):
            write_data_file([], small_config(), tmp_path / "missing" / "ber.dat")


class TestPlotScript:
    """Gnuplot script emission."""

    def write(self, tmp_path):
        path = tmp_path / "ber.dat"
        path.write_text("# demo\n# config-hash: abc\n# columns: ebn0_db matched bcjr-va\n"
                        "2 1.0e-01 2.0e-01\n4 1.0e-02 5.0e-02\n")
        return path

    def test_two_curves(self, tmp_path):
        script = emit_plot_script(self.write(tmp_path))
        assert script.count("using 1:") == 2
        assert "title 'matched'" in script and "title 'bcjr-va'" in script
        assert "set logscale y" in script
        assert "set title 'demo'" in script

    def test_deterministic(self, tmp_path):
        path = self.write(tmp_path)
        assert emit_plot_script(path) == emit_plot_script(path)

    def test_quotes_are_escaped(self, tmp_path):
        path = tmp_path / "ber.dat"
        path.write_text("# operator's sweep\n# columns: ebn0_db it's\n2 1.0e-01\n")
        script = emit_plot_script(path)
        assert "set title 'operator''s sweep'" in script
        assert "title 'it''s'" in script

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            emit_plot_script(tmp_path / "absent.dat")


# ============================================================================
# CLI
# ============================================================================


class TestCli:
    def test_simulate_noiseless(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("channel_memory = 1\nreceivers = matched\nframe_bits = 20\n"
                       "max_frames = 2\nebn0 = 4\n")
        out = tmp_path / "ber.dat"
        assert main(["simulate", "--config", str(cfg), "--out", str(out), "--noiseless"]) == 0
        assert out.exists()
        assert "matched" in capsys.readouterr().out

    def test_dump_trellis(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("channel_memory = 0\n")
        assert main(["dump-trellis", "--config", str(cfg), "--phase", "1"]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 4 * 4

    def test_plot_script(self, tmp_path, capsys):
        path = TestPlotScript().write(tmp_path)
        assert main(["plot-script", str(path)]) == 0
        assert "plot '" in capsys.readouterr().out

    def test_selftest_passes(self):
        assert main(["selftest", "--frames", "2"]) == 0

    def test_missing_config_fails(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "absent.cfg")]) == 1


# ============================================================================
# BER ORDERING (statistical, run with -m slow)
# ============================================================================


def overlap(a: BerRecord, b: BerRecord) -> bool:
    return abs(a.ber - b.ber) <= a.wilson_halfwidth + b.wilson_halfwidth


@pytest.mark.slow
class TestBerOrdering:
    """Desk-scale reproductions of the published BER orderings."""

    def test_matched_beats_separated_l2(self):
        config = SimConfig(channel_memory=2, labeling="gray",
                           receivers=["matched", "bcjr-va", "dfse-va:4"],
                           ebn0=[2.0, 4.0, 6.0, 8.0, 10.0], frame_bits=500,
                           max_frames=4000, min_errors=100, seed=5, workers=4)
        records = {(r.receiver, r.ebn0_db): r for r in run_sweep(config)}
        for ebn0 in config.ebn0:
            md, bcjr, dfse = (records[(name, ebn0)] for name in config.receivers)
            assert md.ber < bcjr.ber
            if ebn0 >= 8.0:
                assert bcjr.ber <= dfse.ber
            if ebn0 >= 10.0:
                assert not overlap(md, bcjr)

    def test_rsse_tradeoff_l4(self):
        family = ["matched-rsse:4", "matched-rsse:8", "matched-rsse:16",
                  "matched-rsse:32", "matched-rsse:128"]
        config = SimConfig(channel_memory=4, labeling="gray",
                           receivers=family + ["bcjr-va", "dfse-va:16"],
                           ebn0=[10.0], frame_bits=500, max_frames=2000,
                           min_errors=100, seed=5, workers=4)
        records = {r.receiver: r for r in run_sweep(config)}
        for smaller, larger in zip(family, family[1:]):
            a, b = records[smaller], records[larger]
            assert b.ber <= a.ber + 2 * (a.wilson_halfwidth + b.wilson_halfwidth)
        rsse16 = records["matched-rsse:16"]
        assert rsse16.ber < records["bcjr-va"].ber
        assert rsse16.ber < records["dfse-va:16"].ber
