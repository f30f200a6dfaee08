"""Tests for report writing and plot data emission."""

import csv
import json

import pytest

from viewpoint_sim.harness import run_experiment
from viewpoint_sim.report import (
    PLOT_FILES,
    FoldResult,
    RunReport,
    SweepPoint,
    emit_plot_data,
    fmt,
    summary_lines,
    write_report,
)


@pytest.fixture
def report():
    """Hand-built report with every series filled in."""
    return RunReport(
        config={"seed": 1, "data": None},
        seed=1,
        predictor="gru",
        scheme="proactive",
        folds=[FoldResult(0, 12.5, 0.02, 2, 40, 0.9, 15.0)],
        mse=12.5,
        normalized_error=0.02,
        offline_mse=15.0,
        scheme_mse={"proactive": 12.5},
        scheme_normalized={"proactive": 0.02},
        delivered_fraction={"proactive": 0.9},
        slot_errors={"proactive": [(5, 10.0), (6, 1.0 / 3.0)], "offline": [(5, 11.0)]},
        latency_histogram={"proactive": [(4, 30, 0), (22, 0, 4)]},
        epoch_losses=[0.1, 0.05, 0.025],
        window_sweep=[SweepPoint(5, 20.0, 0.03), SweepPoint(10, 12.5, 0.02)],
    )


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestFmt:
    """Tests for number formatting."""

    def test_nine_significant_digits(self):
        """Should keep 9 significant digits."""
        assert fmt(1.0 / 3.0) == "0.333333333"
        assert fmt(12.5) == "12.5"
        assert fmt(123456789012.0) == "1.23456789e+11"


class TestWriteReport:
    """Tests for write_report."""

    def test_writes_text_and_json(self, report, tmp_path):
        """report.txt holds key = value lines, report.json the echo and results."""
        txt, js = write_report(report, tmp_path)
        lines = txt.read_text().splitlines()
        assert "predictor = gru" in lines
        assert "mse_deg2 = 12.5" in lines
        assert "offline_mse_deg2 = 15" in lines
        assert "delivered_fraction.proactive = 0.9" in lines
        data = json.loads(js.read_text())
        assert data["config"] == {"seed": 1, "data": None}
        assert data["results"]["mse_deg2"] == 12.5
        assert data["results"]["folds"][0]["n_scored_slots"] == 40

    def test_dataset_note(self, report):
        """Reports on supplied data are marked dataset-dependent."""
        report.config = {"data": "traces.csv"}
        assert "note = absolute errors are dataset-dependent" in summary_lines(report)


class TestEmitPlotData:
    """Tests for emit_plot_data."""

    def test_one_file_per_series(self, report, tmp_path):
        """Should write every plot CSV."""
        paths = emit_plot_data(report, tmp_path)
        assert set(paths) == set(PLOT_FILES)
        assert all(p.exists() for p in paths.values())

    def test_epoch_loss_rows(self, report, tmp_path):
        """One row per epoch."""
        rows = _rows(emit_plot_data(report, tmp_path)["epoch_loss"])
        assert rows[0] == ["epoch", "loss"]
        assert rows[1:] == [["1", "0.1"], ["2", "0.05"], ["3", "0.025"]]

    def test_slot_rows(self, report, tmp_path):
        """One row per scored slot, blank where a series has no value."""
        rows = _rows(emit_plot_data(report, tmp_path)["error_vs_slot"])
        assert rows[0] == ["slot", "offline", "proactive"]
        assert rows[1] == ["5", "11", "10"]
        assert rows[2] == ["6", "", "0.333333333"]

    def test_window_sweep_rows(self, report, tmp_path):
        """One row per window size."""
        rows = _rows(emit_plot_data(report, tmp_path)["error_vs_window"])
        assert rows[0][:3] == ["t_w", "mse_deg2", "normalized_error"]
        assert [r[0] for r in rows[1:]] == ["5", "10"]

    def test_latency_rows(self, report, tmp_path):
        """Histogram rows per scheme and latency."""
        rows = _rows(emit_plot_data(report, tmp_path)["latency"])
        assert rows[1:] == [["proactive", "4", "30", "0"], ["proactive", "22", "0", "4"]]

    def test_values_match_run(self, small_dataset, fast_config, tmp_path):
        """CSV values equal the in-memory report to 9 digits."""
        run = run_experiment(small_dataset, fast_config)
        paths = emit_plot_data(run, tmp_path)
        rows = _rows(paths["error_vs_slot"])
        assert len(rows) - 1 == len(run.slot_errors["proactive"])
        proactive_col = rows[0].index("proactive")
        for row, (slot, value) in zip(rows[1:], run.slot_errors["proactive"]):
            assert int(row[0]) == slot
            assert float(row[proactive_col]) == float(fmt(value))
        assert len(_rows(paths["epoch_loss"])) - 1 == fast_config.train.epochs
