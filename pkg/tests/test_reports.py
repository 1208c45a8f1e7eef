"""Tests for CSV serialization and the plain-text report renderers."""

import io

import pytest

from marginlab import (
    DATASHEET_GUARDBANDS,
    CalibrationTargets,
    EnergyRecord,
    NoRecords,
    OperatingPoint,
    Outcome,
    RecordCsvWriter,
    SimulatedBackend,
    SweepPlan,
    FixedCeiling,
    TestRecord,
    calibration_report_text,
    config_hash,
    energy_sweep,
    episode_summary_text,
    execute_plan,
    iso_performance_savings,
    provenance_line,
    read_energy_csv,
    read_records_csv,
    run_episode,
    savings_report_text,
    summarize,
    write_energy_csv,
    write_episode_csv,
    write_records_csv,
    write_savings_csv,
    write_summary_csv,
    write_trace_csv,
)
from marginlab.controller import ControllerConfig
from marginlab.energy import DEFAULT_ENERGY_WORKLOAD

PROV = provenance_line("abcdef012345", 7)


def sample_records():
    return [
        TestRecord(
            op=OperatingPoint(1000, 200_000),
            n_items=50_000,
            repetition_index=0,
            outcome=Outcome.CORRECT,
            elapsed_s=0.035,
            energy_j=0.0007222193548387089,
        ),
        TestRecord(
            op=OperatingPoint(1000, 218_000),
            n_items=50_000,
            repetition_index=1,
            outcome=Outcome.ERROR,
            elapsed_s=0.03211,
            energy_j=0.00066,
        ),
        TestRecord(
            op=OperatingPoint(1200, 340_000),
            n_items=100_000,
            repetition_index=0,
            outcome=Outcome.LOCKUP,
            elapsed_s=0.1235,
            energy_j=0.005,
        ),
    ]


class TestProvenance:
    def test_line_format(self):
        assert PROV == "# marginlab 0.1.0 config=abcdef012345 seed=7"

    def test_config_hash_is_stable_and_order_insensitive(self):
        a = config_hash({"x": 1, "y": [1, 2]})
        b = config_hash({"y": [1, 2], "x": 1})
        assert a == b
        assert len(a) == 12
        assert config_hash({"x": 2, "y": [1, 2]}) != a


class TestRecordsCsv:
    def test_round_trip(self):
        buf = io.StringIO()
        write_records_csv(buf, sample_records(), PROV)
        buf.seek(0)
        assert read_records_csv(buf) == sample_records()

    def test_first_lines(self):
        buf = io.StringIO()
        write_records_csv(buf, sample_records(), PROV)
        lines = buf.getvalue().splitlines()
        assert lines[0] == PROV
        assert lines[1] == "voltage_mv,freq_khz,n_items,rep,outcome,elapsed_s,energy_j"
        assert lines[2] == "1000,200000,50000,0,correct,0.035,0.0007222193548387089"

    def test_streaming_writer_matches_batch(self):
        batch = io.StringIO()
        write_records_csv(batch, sample_records(), PROV)
        streamed = io.StringIO()
        sink = RecordCsvWriter(streamed, PROV)
        for rec in sample_records():
            sink(rec)
        assert streamed.getvalue() == batch.getvalue()

    def test_float_round_trip_is_exact(self):
        # repr-formatted floats survive the text round trip bit for bit.
        rec = sample_records()[0]
        buf = io.StringIO()
        write_records_csv(buf, [rec], PROV)
        buf.seek(0)
        back = read_records_csv(buf)[0]
        assert back.elapsed_s == rec.elapsed_s
        assert back.energy_j == rec.energy_j

    def test_headerless_input_rejected(self):
        with pytest.raises(NoRecords):
            read_records_csv(io.StringIO(""))

    def test_wrong_header_rejected(self):
        with pytest.raises(ValueError, match="header"):
            read_records_csv(io.StringIO("a,b,c\n"))


class TestSummaryCsv:
    def test_layout_and_absent_markers(self):
        records = sample_records()
        buf = io.StringIO()
        write_summary_csv(buf, summarize(records), DATASHEET_GUARDBANDS, PROV)
        lines = buf.getvalue().splitlines()
        assert lines[1].startswith("voltage_mv,n_records,first_error_khz")
        assert lines[1].endswith("cluster_guardband_khz")
        row_1000 = lines[2].split(",")
        assert row_1000[0] == "1000"
        assert row_1000[2] == "218000"   # first error
        assert row_1000[3] == ""         # no lockup at this voltage
        assert row_1000[-1] == "87000"   # guardband column
        row_1200 = lines[3].split(",")
        assert row_1200[3] == "340000"
        assert row_1200[2] == ""
        assert row_1200[-1] == "170000"


class TestEnergyCsv:
    def _records(self, params, cache):
        backend = SimulatedBackend(params, cache=cache)
        return energy_sweep(
            backend, DEFAULT_ENERGY_WORKLOAD, (1000, 1200), (160_000, 170_000)
        )

    def test_round_trip(self, params, cache):
        records = self._records(params, cache)
        buf = io.StringIO()
        write_energy_csv(buf, records, PROV)
        buf.seek(0)
        assert read_energy_csv(buf) == records

    def test_boolean_encoding(self, params, cache):
        buf = io.StringIO()
        write_energy_csv(buf, self._records(params, cache), PROV)
        body = buf.getvalue().splitlines()[2:]
        assert all(line.endswith(("true", "false")) for line in body)

    def test_headerless_input_rejected(self):
        with pytest.raises(NoRecords):
            read_energy_csv(io.StringIO("# just a comment\n"))


class TestSavingsOutputs:
    def _report(self, params, cache):
        records = energy_sweep(
            SimulatedBackend(params, cache=cache),
            DEFAULT_ENERGY_WORKLOAD,
            (1000, 1200),
            (150_000, 160_000, 170_000),
        )
        return iso_performance_savings(records, DATASHEET_GUARDBANDS)

    def test_csv_layout(self, params, cache):
        buf = io.StringIO()
        write_savings_csv(buf, self._report(params, cache), PROV)
        lines = buf.getvalue().splitlines()
        assert lines[1] == (
            "freq_khz,baseline_voltage_mv,baseline_energy_j,"
            "candidate_voltage_mv,candidate_energy_j,savings"
        )
        assert len(lines) == 2 + 3

    def test_text_summary_names_the_best_point(self, params, cache):
        text = savings_report_text(self._report(params, cache))
        assert "27.00%" in text
        assert "170 MHz" in text
        assert "1000 mV instead of 1200 mV" in text


class TestEpisodeOutputs:
    def _episodes(self, params):
        cfg = ControllerConfig(target_freq_khz=170_000)
        return [
            run_episode(params, cfg, campaign_seed=s, duration_windows=8)
            for s in (1, 2)
        ]

    def test_episode_csv_layout(self, params):
        buf = io.StringIO()
        write_episode_csv(buf, self._episodes(params), PROV)
        lines = buf.getvalue().splitlines()
        assert lines[1].startswith("episode,settled_voltage_mv")
        assert len(lines) == 2 + 2
        assert lines[2].split(",")[0] == "0"
        assert lines[2].split(",")[-1] == "true"

    def test_trace_csv_layout(self, params):
        report = self._episodes(params)[0]
        buf = io.StringIO()
        write_trace_csv(buf, report.trace, PROV)
        lines = buf.getvalue().splitlines()
        assert lines[1].startswith("window,voltage_mv")
        assert len(lines) == 2 + len(report.trace)
        first = lines[2].split(",")
        assert first[0] == "0"
        assert first[1] == "1200"
        assert first[5] == "step_down"

    def test_text_summary(self, params):
        text = episode_summary_text(self._episodes(params))
        assert "settled: 2/2" in text
        assert "total lockup events: 0" in text


class TestCalibrationReport:
    def test_content_and_idempotence(self, params):
        text = calibration_report_text(
            params, CalibrationTargets(), DATASHEET_GUARDBANDS
        )
        again = calibration_report_text(
            params, CalibrationTargets(), DATASHEET_GUARDBANDS
        )
        assert text == again
        assert "v_th = 857.9389 mV" in text
        assert "alpha = 0.716617" in text
        for v in ("1000", "1050", "1100", "1150", "1200"):
            assert v in text
        assert "27.00%" in text


class TestCsvReplayability:
    def test_identical_bytes_across_worker_counts(self, params, cache):
        plan = SweepPlan(
            voltages_mv=(1000, 1100, 1200),
            sizes=(500, 1000),
            repetitions=2,
            stop_rule=FixedCeiling(226_000),
        )
        outputs = []
        for workers in (1, 4):
            buf = io.StringIO()
            sink = RecordCsvWriter(buf, PROV)
            execute_plan(
                SimulatedBackend(params, cache=cache), plan, campaign_seed=5,
                sink=sink, workers=workers,
            )
            outputs.append(buf.getvalue())
        assert outputs[0] == outputs[1]
