"""End-to-end tests for the marginlab command line driver."""

import pytest

from marginlab.cli import load_config, main
from marginlab.errors import ConfigError
from marginlab.model import SUPPLY_STEPS_MV
from marginlab.sweep import FixedCeiling, StopOnFirstLockup

SWEEP_YAML = """\
campaign_seed: 3
sweep:
  voltages_mv: [1000]
  sizes: [50000, 100000]
  repetitions: 2
  stop_rule: {fixed_ceiling_khz: 240000}
"""

ENERGY_YAML = """\
campaign_seed: 3
energy:
  voltages_mv: [1000, 1200]
  freqs_khz: {start: 160000, stop: 180000, step: 10000}
"""

CONTROL_YAML = """\
campaign_seed: 3
controller:
  episodes: 3
  duration_windows: 10
"""


def write_config(tmp_path, text, name="campaign.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestLoadConfig:
    def test_defaults_without_a_file(self):
        cfg = load_config(None)
        assert cfg.campaign_seed == 1
        assert cfg.plan.voltages_mv == SUPPLY_STEPS_MV
        assert isinstance(cfg.plan.stop_rule, StopOnFirstLockup)
        assert cfg.episodes == 100
        assert str(cfg.output_dir) == "out"

    def test_overrides_win(self, tmp_path):
        path = write_config(tmp_path, SWEEP_YAML)
        cfg = load_config(path, seed_override=9, out_override=str(tmp_path / "o"))
        assert cfg.campaign_seed == 9
        assert cfg.output_dir == tmp_path / "o"
        assert cfg.plan.voltages_mv == (1000,)
        assert cfg.plan.stop_rule == FixedCeiling(240_000)

    def test_seed_changes_digest(self, tmp_path):
        path = write_config(tmp_path, SWEEP_YAML)
        assert load_config(path).digest != load_config(path, seed_override=9).digest

    def test_range_syntax_expands_inclusively(self, tmp_path):
        path = write_config(tmp_path, ENERGY_YAML)
        cfg = load_config(path)
        assert cfg.energy_freqs == (160_000, 170_000, 180_000)
        assert cfg.energy_voltages == (1000, 1200)

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("unknown_section: {}\n", "unknown config section"),
            ("campaign_seed: -1\n", "non-negative"),
            ("campaign_seed: true\n", "non-negative"),
            ("workload_seed: 0\n", "positive"),
            ("sweep: [1, 2]\n", "expected a mapping"),
            ("sweep:\n  voltages_mv: [1075]\n", "sweep"),
            ("sweep:\n  voltages_mv: [one]\n", "list of integers"),
            ("sweep:\n  stop_rule: whenever\n", "stop_rule"),
            ("sweep:\n  sizes: {start: 1, stop: 9}\n", "missing"),
            ("sweep:\n  sizes: {start: 1, stop: 9, step: 0}\n", "positive"),
            ("sweep:\n  sizes: {start: 1, stop: 9, step: 2, pace: 3}\n", "unknown range field"),
            ("energy:\n  voltages_mv: []\n", "non-empty"),
            ("energy:\n  workload: {n_cores: 12}\n", "workload"),
            ("model:\n  targets: {speedup: 2}\n", "unknown calibration target"),
            ("model:\n  targets_file: /no/such/file.yaml\n", "no such file"),
            ("controller:\n  episodes: 0\n", "positive"),
            ("controller:\n  error_rate_bounds: [0.1]\n", "expected [lo, hi]"),
            ("controller:\n  target_freq_khz: -5\n", "controller"),
        ],
    )
    def test_rejects_bad_config(self, tmp_path, text, fragment):
        path = write_config(tmp_path, text)
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert fragment in str(err.value)

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="no such file"):
            load_config("/definitely/not/here.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = write_config(tmp_path, "sweep: [unclosed\n")
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_config(path)

    def test_targets_file_merge(self, tmp_path):
        targets = tmp_path / "targets.yaml"
        targets.write_text("savings_target: 0.2\nmultiplier_at_min_mv: 2.4\n")
        path = write_config(
            tmp_path,
            f"model:\n  targets_file: {targets}\n"
            "  targets: {multiplier_at_min_mv: 2.6}\n",
        )
        cfg = load_config(path)
        assert cfg.targets.savings_target == 0.2
        assert cfg.targets.multiplier_at_min_mv == 2.6


class TestMainExitCodes:
    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = write_config(tmp_path, "unknown_section: {}\n")
        assert main(["calibrate", "--config", path]) == 2
        assert "config error:" in capsys.readouterr().err

    def test_missing_command_is_a_usage_error(self):
        with pytest.raises(SystemExit):
            main([])

    def test_report_with_nothing_to_do_exits_1(self, tmp_path, capsys):
        assert main(["report", "--out", str(tmp_path / "empty")]) == 1
        assert "nothing to report" in capsys.readouterr().err


class TestCalibrateCommand:
    def test_writes_report(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["calibrate", "--out", str(out)]) == 0
        text = (out / "calibration.txt").read_text()
        assert "v_th" in text
        assert text in capsys.readouterr().out


class TestCharacterizeCommand:
    def test_smoke_grid(self, tmp_path, capsys):
        path = write_config(tmp_path, SWEEP_YAML)
        out = tmp_path / "out"
        code = main(
            ["characterize", "--config", path, "--out", str(out), "--workers", "2"]
        )
        assert code == 0
        records_lines = (out / "records.csv").read_text().splitlines()
        assert records_lines[0].startswith("# marginlab ")
        assert len(records_lines) > 2
        summary_lines = (out / "summary.csv").read_text().splitlines()
        assert len(summary_lines) == 3  # provenance, header, one voltage
        assert "1000 mV: first error" in capsys.readouterr().out

    def test_byte_identical_across_worker_counts(self, tmp_path):
        path = write_config(tmp_path, SWEEP_YAML)
        blobs = []
        for workers in ("1", "4"):
            out = tmp_path / f"w{workers}"
            assert main(
                ["characterize", "--config", path, "--out", str(out),
                 "--workers", workers]
            ) == 0
            blobs.append((out / "records.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_no_failures_skips_summary(self, tmp_path, capsys):
        quiet = (
            "sweep:\n"
            "  voltages_mv: [1200]\n"
            "  sizes: [50000]\n"
            "  repetitions: 1\n"
            "  stop_rule: {fixed_ceiling_khz: 200000}\n"
        )
        path = write_config(tmp_path, quiet)
        out = tmp_path / "out"
        assert main(["characterize", "--config", path, "--out", str(out)]) == 0
        assert (out / "records.csv").is_file()
        assert not (out / "summary.csv").exists()
        assert "no failures observed" in capsys.readouterr().out


class TestEnergyCommand:
    def test_smoke_grid(self, tmp_path, capsys):
        path = write_config(tmp_path, ENERGY_YAML)
        out = tmp_path / "out"
        assert main(["energy", "--config", path, "--out", str(out)]) == 0
        energy_lines = (out / "energy.csv").read_text().splitlines()
        assert len(energy_lines) == 2 + 2 * 3
        assert (out / "savings.csv").is_file()
        assert "maximum savings" in (out / "savings.txt").read_text()
        assert "maximum savings" in capsys.readouterr().out


class TestControlCommand:
    def test_smoke_episodes(self, tmp_path, capsys):
        path = write_config(tmp_path, CONTROL_YAML)
        out = tmp_path / "out"
        assert main(["control", "--config", path, "--out", str(out)]) == 0
        episodes = (out / "episodes.csv").read_text().splitlines()
        assert len(episodes) == 2 + 3
        trace = (out / "trace.csv").read_text().splitlines()
        assert len(trace) == 2 + 10
        assert "Controller episodes: 3" in (out / "control.txt").read_text()
        capsys.readouterr()


class TestReportCommand:
    def test_rederives_summary_from_records(self, tmp_path):
        path = write_config(tmp_path, SWEEP_YAML)
        out = tmp_path / "out"
        assert main(["characterize", "--config", path, "--out", str(out)]) == 0
        original = (out / "summary.csv").read_bytes()
        (out / "summary.csv").unlink()
        assert main(["report", "--config", path, "--out", str(out)]) == 0
        assert (out / "summary.csv").read_bytes() == original

    def test_rederives_savings_from_energy(self, tmp_path, capsys):
        path = write_config(tmp_path, ENERGY_YAML)
        out = tmp_path / "out"
        assert main(["energy", "--config", path, "--out", str(out)]) == 0
        original = (out / "savings.csv").read_bytes()
        (out / "savings.csv").unlink()
        capsys.readouterr()
        assert main(["report", "--config", path, "--out", str(out)]) == 0
        assert (out / "savings.csv").read_bytes() == original
        assert "maximum savings" in capsys.readouterr().out
