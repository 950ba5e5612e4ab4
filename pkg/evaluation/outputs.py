"""Report files: runs table, averages, figure data and timings."""
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union
import pandas as pd
from core.errors import EmptyInput
from core.files import atomic_write_text
from core.logging import get_logger
from loans.schema import cents_to_dollars_str
from .reports import AggregateReport, RunReport, format_timing_summary

logger = get_logger(__name__)

RUNS_COLUMNS = (
    "run",
    "actual_total",
    "dp_actual_total",
    "predicted_total_ndpm",
    "predicted_total_dpm",
    "rel_diff_ndpm",
    "rel_diff_dpm",
)
FIGURE_FILES = ("actual_loss.csv", "predicted_loss.csv", "relative_difference.csv")


def _csv_text(rows: List[Dict[str, Any]], columns: Sequence[str]) -> str:
    return pd.DataFrame(rows, columns=list(columns)).to_csv(index=False, lineterminator="\n")


def canonical_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_runs_csv(reports: Sequence[RunReport], path: Union[str, Path]) -> Path:
    """Write the per-run table (whole dollars, 3-decimal percents)."""
    ordered = sorted(reports, key=lambda r: r.run_id)
    target = atomic_write_text(path, _csv_text([r.to_row() for r in ordered], RUNS_COLUMNS))
    logger.info("Wrote run table", path=str(target), runs=len(ordered))
    return target


def write_aggregate_json(report: AggregateReport, path: Union[str, Path]) -> Path:
    """Write the averaged report as canonical JSON."""
    target = atomic_write_text(path, canonical_json(report.to_dict()))
    logger.info("Wrote aggregate report", path=str(target), runs=report.runs)
    return target


def emit_figure_data(reports: Sequence[RunReport], directory: Union[str, Path]) -> List[Path]:
    """
    Write the three plotting tables, each with columns run,ndpm,dpm.

    actual_loss.csv holds the exact (ndpm) and private (dpm) actual totals,
    predicted_loss.csv the predicted totals and relative_difference.csv the
    percent differences. Currency is written in dollars with cents and
    percents at full precision, so reading a file back reproduces the
    report fields exactly.

    Args:
        reports: At least one report
        directory: Output directory

    Returns:
        Paths of the three files
    """
    if not reports:
        raise EmptyInput("no runs to emit figure data for")
    ordered = sorted(reports, key=lambda r: r.run_id)
    directory = Path(directory)
    tables = {
        "actual_loss.csv": [
            {"run": r.run_id, "ndpm": cents_to_dollars_str(r.actual_total), "dpm": cents_to_dollars_str(r.dp_actual_total)}
            for r in ordered
        ],
        "predicted_loss.csv": [
            {
                "run": r.run_id,
                "ndpm": cents_to_dollars_str(r.predicted_total_ndpm),
                "dpm": cents_to_dollars_str(r.predicted_total_dpm),
            }
            for r in ordered
        ],
        "relative_difference.csv": [
            {"run": r.run_id, "ndpm": repr(r.rel_diff_ndpm), "dpm": repr(r.rel_diff_dpm)}
            for r in ordered
        ],
    }
    paths = [atomic_write_text(directory / name, _csv_text(rows, ("run", "ndpm", "dpm"))) for name, rows in tables.items()]
    logger.info("Wrote figure data", directory=str(directory), runs=len(ordered))
    return paths


def write_timing_summary(summary: Dict[str, Dict[str, Any]], path: Union[str, Path]) -> Path:
    """Write the timing summary as JSON; the text table goes to the log."""
    target = atomic_write_text(path, canonical_json(summary))
    logger.info("Wrote timing summary", path=str(target))
    logger.debug("Timing summary", table="\n" + format_timing_summary(summary))
    return target
