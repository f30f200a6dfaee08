"""Run results and their on-disk forms.

``report.txt`` is ``key = value`` lines, ``report.json`` holds the config echo plus all
results, and ``emit_plot_data`` writes one CSV per figure-style series. Numbers in the
CSVs carry 9 significant digits.
"""

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)

REPORT_TXT = "report.txt"
REPORT_JSON = "report.json"
OFFLINE = "offline"

PLOT_FILES = {
    "epoch_loss": "epoch_loss.csv",
    "error_vs_window": "error_vs_window.csv",
    "error_vs_train_users": "error_vs_train_users.csv",
    "error_vs_slot": "error_vs_slot.csv",
    "latency": "latency.csv",
}


def fmt(value: float) -> str:
    return format(value, ".9g")


@dataclass(frozen=True)
class FoldResult:
    index: int
    mse: float  # degrees^2, configured scheme
    normalized_error: float
    n_test_traces: int
    n_scored_slots: int
    delivered_fraction: float
    offline_mse: Optional[float] = None


@dataclass(frozen=True)
class SweepPoint:
    value: int  # window length or training users per video
    mse: float
    normalized_error: float
    offline_mse: Optional[float] = None
    scheme_mse: dict[str, float] = field(default_factory=dict)


@dataclass
class RunReport:
    """Everything a run measured; ``config`` is the echo that reproduces it."""

    config: dict
    seed: int
    predictor: str
    scheme: str
    folds: list[FoldResult]
    mse: float
    normalized_error: float
    offline_mse: Optional[float] = None
    scheme_mse: dict[str, float] = field(default_factory=dict)
    scheme_normalized: dict[str, float] = field(default_factory=dict)
    delivered_fraction: dict[str, float] = field(default_factory=dict)
    # series name (scheme value or "offline") -> [(slot, mean squared error)]
    slot_errors: dict[str, list[tuple[int, float]]] = field(default_factory=dict)
    # scheme value -> [(latency_ttis, successes, failures)]
    latency_histogram: dict[str, list[tuple[int, int, int]]] = field(default_factory=dict)
    epoch_losses: list[float] = field(default_factory=list)
    window_sweep: list[SweepPoint] = field(default_factory=list)
    users_sweep: list[SweepPoint] = field(default_factory=list)
    outcome_records: list[dict] = field(default_factory=list, repr=False, compare=False)

    @property
    def n_scored_slots(self) -> int:
        return sum(f.n_scored_slots for f in self.folds)

    def results_dict(self) -> dict:
        return {
            "seed": self.seed,
            "predictor": self.predictor,
            "scheme": self.scheme,
            "mse_deg2": self.mse,
            "normalized_error": self.normalized_error,
            "offline_mse_deg2": self.offline_mse,
            "scheme_mse_deg2": dict(self.scheme_mse),
            "scheme_normalized_error": dict(self.scheme_normalized),
            "delivered_fraction": dict(self.delivered_fraction),
            "folds": [asdict(f) for f in self.folds],
            "epoch_losses": list(self.epoch_losses),
            "slot_errors": {k: [list(row) for row in v] for k, v in self.slot_errors.items()},
            "latency_histogram": {
                k: [list(row) for row in v] for k, v in self.latency_histogram.items()
            },
            "window_sweep": [asdict(p) for p in self.window_sweep],
            "users_sweep": [asdict(p) for p in self.users_sweep],
        }

    def to_dict(self) -> dict:
        return {"config": self.config, "results": self.results_dict()}


def summary_lines(report: RunReport) -> list[str]:
    """``key = value`` lines for report.txt."""
    lines = [
        f"predictor = {report.predictor}",
        f"scheme = {report.scheme}",
        f"seed = {report.seed}",
        f"folds = {len(report.folds)}",
        f"scored_slots = {report.n_scored_slots}",
        f"mse_deg2 = {fmt(report.mse)}",
        f"normalized_error = {fmt(report.normalized_error)}",
    ]
    if report.offline_mse is not None:
        lines.append(f"offline_mse_deg2 = {fmt(report.offline_mse)}")
    for scheme, value in sorted(report.delivered_fraction.items()):
        lines.append(f"delivered_fraction.{scheme} = {fmt(value)}")
    for scheme, value in sorted(report.scheme_mse.items()):
        lines.append(f"scheme_mse_deg2.{scheme} = {fmt(value)}")
    for fold in report.folds:
        lines.append(f"fold.{fold.index}.mse_deg2 = {fmt(fold.mse)}")
    if report.config.get("data"):
        lines.append("note = absolute errors are dataset-dependent")
    return lines


def write_report(report: RunReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.txt and report.json into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    txt_path = out_dir / REPORT_TXT
    json_path = out_dir / REPORT_JSON
    with open(txt_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(summary_lines(report)) + "\n")
    with open(json_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote {txt_path} and {json_path}")
    return txt_path, json_path


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _opt(value: Optional[float]) -> str:
    return "" if value is None else fmt(value)


def _sweep_rows(points: list[SweepPoint], schemes: list[str]) -> list[list]:
    return [
        [p.value, fmt(p.mse), fmt(p.normalized_error), _opt(p.offline_mse)]
        + [_opt(p.scheme_mse.get(s)) for s in schemes]
        for p in points
    ]


def emit_plot_data(report: RunReport, out_dir: str | Path) -> dict[str, Path]:
    """Write the plot CSVs; returns {series name: path}."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: out_dir / filename for name, filename in PLOT_FILES.items()}

    _write_csv(
        paths["epoch_loss"],
        ["epoch", "loss"],
        [[i + 1, fmt(loss)] for i, loss in enumerate(report.epoch_losses)],
    )

    sweep_schemes = sorted(report.scheme_mse)
    sweep_header = ["mse_deg2", "normalized_error", "offline_mse_deg2"] + [
        f"mse_deg2_{s}" for s in sweep_schemes
    ]
    _write_csv(
        paths["error_vs_window"],
        ["t_w"] + sweep_header,
        _sweep_rows(report.window_sweep, sweep_schemes),
    )
    _write_csv(
        paths["error_vs_train_users"],
        ["train_users"] + sweep_header,
        _sweep_rows(report.users_sweep, sweep_schemes),
    )

    series = sorted(report.slot_errors)
    by_slot: dict[int, dict[str, float]] = {}
    for name in series:
        for slot, value in report.slot_errors[name]:
            by_slot.setdefault(slot, {})[name] = value
    _write_csv(
        paths["error_vs_slot"],
        ["slot"] + series,
        [[slot] + [_opt(by_slot[slot].get(n)) for n in series] for slot in sorted(by_slot)],
    )

    _write_csv(
        paths["latency"],
        ["scheme", "latency_ttis", "successes", "failures"],
        [
            [scheme, latency, ok, failed]
            for scheme in sorted(report.latency_histogram)
            for latency, ok, failed in report.latency_histogram[scheme]
        ],
    )
    logger.info(f"Wrote {len(paths)} plot files to {out_dir}")
    return paths
