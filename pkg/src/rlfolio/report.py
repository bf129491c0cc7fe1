"""Cross-run comparison: merged metrics table, value curves, and figures.

Consumes one or more completed backtest directories (each holding trace.csv
and report.json) and emits delimited files for external tooling plus PNG
renderings of the same data.
"""

from __future__ import annotations

import csv
from datetime import date
from pathlib import Path

import numpy as np

from .artifacts import read_json
from . import plotting

TRACE_CSV = "trace.csv"
REPORT_JSON = "report.json"

METRIC_ROWS = [
    "final_portfolio_value",
    "mean_log_return",
    "standard_deviation",
    "sharpe_ratio",
    "sortino_ratio",
    "maximum_drawdown",
    "var_95",
    "cvar_95",
    "calmar_ratio",
    "utility",
]


class NoCompletedRunsError(RuntimeError):
    pass


def load_run(run_dir: str | Path) -> dict:
    """Read one backtest directory into {name, report, dates, values, weights...}."""
    run_dir = Path(run_dir)
    report = read_json(run_dir / REPORT_JSON)
    rows = list(csv.DictReader(open(run_dir / TRACE_CSV, newline="")))
    if not rows:
        raise NoCompletedRunsError(f"{run_dir} has an empty trace")
    weight_cols = [c for c in rows[0] if c.startswith("w_")]
    return {
        "name": report.get("run_name") or run_dir.name,
        "report": report,
        "dates": [date.fromisoformat(r["date"]) for r in rows],
        "values": [float(r["value"]) for r in rows],
        "weights": [[float(r[c]) for c in weight_cols] for r in rows],
        "weight_names": [c[2:] for c in weight_cols],
        "start_date": date.fromisoformat(report["start_date"]),
        "initial_value": float(report["initial_value"]),
    }


def write_metrics_table(path: str | Path, runs: list[dict]) -> None:
    """Metric rows x run columns, plus one average-weight row per component."""
    weight_keys = sorted({k for run in runs
                          for k in run["report"]["metrics"]["avg_weights"]})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric"] + [run["name"] for run in runs])
        for metric in METRIC_ROWS:
            writer.writerow([metric] + [repr(float(run["report"]["metrics"][metric]))
                                        for run in runs])
        for key in weight_keys:
            writer.writerow(
                [f"avg_weight_{key}"]
                + [repr(float(run["report"]["metrics"]["avg_weights"].get(key, float("nan"))))
                   for run in runs])


def normalized_curves(runs: list[dict]) -> tuple[list[date], dict[str, list[float]]]:
    """Per-run value series divided by v_0, anchored at exactly 1.0.

    Runs are joined on their common date axis (identical test splits in the
    normal workflow).
    """
    date_sets = [set(run["dates"]) for run in runs]
    common = sorted(set.intersection(*date_sets))
    if not common:
        raise NoCompletedRunsError("runs share no common dates")
    anchor = min(run["start_date"] for run in runs)
    axis = [anchor] + common
    series: dict[str, list[float]] = {}
    for run in runs:
        by_date = dict(zip(run["dates"], run["values"]))
        v0 = run["initial_value"]
        series[run["name"]] = [1.0] + [by_date[d] / v0 for d in common]
    return axis, series


def write_value_curves(path: str | Path, axis: list[date],
                       series: dict[str, list[float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + list(series))
        for i, day in enumerate(axis):
            writer.writerow([day.isoformat()] + [repr(values[i]) for values in series.values()])


def cmd_report(run_dirs: list[str | Path], out_dir: str | Path) -> dict:
    """Build all comparison artifacts; returns {artifact name: path}."""
    runs = []
    for run_dir in run_dirs:
        try:
            runs.append(load_run(run_dir))
        except FileNotFoundError:
            continue
    if not runs:
        raise NoCompletedRunsError("no completed backtest directory among inputs")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {}

    table_path = out / "metrics_table.csv"
    write_metrics_table(table_path, runs)
    artifacts["metrics_table"] = table_path

    axis, series = normalized_curves(runs)
    curves_path = out / "value_curves.csv"
    write_value_curves(curves_path, axis, series)
    artifacts["value_curves"] = curves_path

    fig_path = out / "value_comparison.png"
    plotting.plot_value_curves(axis, series, fig_path)
    artifacts["value_comparison"] = fig_path

    for run in runs:
        wpath = out / f"weights_{run['name']}.png"
        plotting.plot_weights(run["dates"], np.array(run["weights"]),
                              run["weight_names"], wpath)
        artifacts[f"weights_{run['name']}"] = wpath
    return artifacts
