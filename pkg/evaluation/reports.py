"""Per-run and averaged loss reports."""
import math
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union
from core.errors import DivisionByZero, EmptyInput, ParseError
from core.logging import get_logger
from loans.csv_io import read_raw_csv, require_columns
from loans.schema import dollars_to_cents

logger = get_logger(__name__)

VARIANTS = ("ndpm", "dpm")
STAGES = ("preprocess_s", "train_s", "predict_s")
REPLAY_COLUMNS = ("run", "actual_total", "dp_actual_total", "predicted_total_ndpm", "predicted_total_dpm")


def relative_difference(actual: int | float, predicted: int | float) -> float:
    """
    Percent by which actual exceeds predicted.

    Args:
        actual: Actual loss (any currency unit)
        predicted: Predicted loss in the same unit, > 0

    Returns:
        100 * (actual - predicted) / predicted
    """
    if not predicted > 0:
        raise DivisionByZero(f"predicted loss must be positive, got {predicted}")
    return 100.0 * (actual - predicted) / predicted


def whole_dollars(cents: int | Decimal) -> int:
    """Round a cent amount to whole dollars, half away from zero."""
    return int((Decimal(cents) / 100).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def truncate(value: float, decimals: int) -> float:
    """Drop digits past the given number of decimals (toward zero)."""
    factor = 10 ** decimals
    return math.trunc(round(value * factor, 6)) / factor


@dataclass(frozen=True)
class StageTimings:
    """Wall-clock seconds per stage of one variant."""
    preprocess_s: float = 0.0
    train_s: float = 0.0
    predict_s: float = 0.0

    def as_dict(self) -> Dict[str, float]:
        return {stage: getattr(self, stage) for stage in STAGES}


@dataclass(frozen=True)
class RunReport:
    """
    Totals of one run, in cents.

    The DPM relative difference uses the differentially private actual
    total, the NDPM one the exact total. Timings do not take part in
    equality so repeated runs compare equal.
    """
    run_id: int
    actual_total: int
    dp_actual_total: int
    predicted_total_ndpm: int
    predicted_total_dpm: int
    timings: Dict[str, StageTimings] = field(default_factory=dict, compare=False)

    @property
    def rel_diff_ndpm(self) -> float:
        return relative_difference(self.actual_total, self.predicted_total_ndpm)

    @property
    def rel_diff_dpm(self) -> float:
        return relative_difference(self.dp_actual_total, self.predicted_total_dpm)

    def to_row(self) -> Dict[str, Any]:
        """Table row: whole dollars and 3-decimal percents."""
        return {
            "run": self.run_id,
            "actual_total": whole_dollars(self.actual_total),
            "dp_actual_total": whole_dollars(self.dp_actual_total),
            "predicted_total_ndpm": whole_dollars(self.predicted_total_ndpm),
            "predicted_total_dpm": whole_dollars(self.predicted_total_dpm),
            "rel_diff_ndpm": f"{self.rel_diff_ndpm:.3f}",
            "rel_diff_dpm": f"{self.rel_diff_dpm:.3f}",
        }


@dataclass(frozen=True)
class VariantAverage:
    """Averages of one variant's columns."""
    actual_sum: int
    predicted_sum: int
    rel_diff_mean: float
    runs: int

    @property
    def avg_actual(self) -> int:
        """Mean actual total in whole dollars."""
        return whole_dollars(Decimal(self.actual_sum) / self.runs)

    @property
    def avg_predicted(self) -> int:
        return whole_dollars(Decimal(self.predicted_sum) / self.runs)

    @property
    def avg_rel_diff(self) -> float:
        """Mean relative difference shown at 2 decimals (truncated)."""
        return truncate(self.rel_diff_mean, 2)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "avg_actual": self.avg_actual,
            "avg_predicted": self.avg_predicted,
            "avg_rel_diff": self.avg_rel_diff,
            "avg_rel_diff_exact": self.rel_diff_mean,
        }


@dataclass(frozen=True)
class AggregateReport:
    """Per-variant averages over a set of runs."""
    ndpm: VariantAverage
    dpm: VariantAverage
    runs: int

    def to_dict(self) -> Dict[str, Any]:
        return {"runs": self.runs, "ndpm": self.ndpm.to_dict(), "dpm": self.dpm.to_dict()}


def aggregate(reports: Sequence[RunReport]) -> AggregateReport:
    """
    Column-wise means of run reports.

    Args:
        reports: At least one report

    Returns:
        AggregateReport (exact integer sums; means rounded only for display)
    """
    if not reports:
        raise EmptyInput("cannot aggregate zero runs")
    n = len(reports)
    ndpm = VariantAverage(
        actual_sum=sum(r.actual_total for r in reports),
        predicted_sum=sum(r.predicted_total_ndpm for r in reports),
        rel_diff_mean=math.fsum(r.rel_diff_ndpm for r in reports) / n,
        runs=n,
    )
    dpm = VariantAverage(
        actual_sum=sum(r.dp_actual_total for r in reports),
        predicted_sum=sum(r.predicted_total_dpm for r in reports),
        rel_diff_mean=math.fsum(r.rel_diff_dpm for r in reports) / n,
        runs=n,
    )
    return AggregateReport(ndpm=ndpm, dpm=dpm, runs=n)


def replay_reports(path: Union[str, Path]) -> List[RunReport]:
    """
    Build reports from externally supplied run totals.

    Args:
        path: CSV with run,actual_total,dp_actual_total,predicted_total_ndpm,
            predicted_total_dpm in dollars (extra columns ignored)

    Returns:
        Reports sorted by run
    """
    frame = read_raw_csv(path)
    require_columns(frame, REPLAY_COLUMNS)
    reports = []
    for row_number, row in enumerate(frame.to_dict(orient="records"), start=1):
        values: Dict[str, int] = {}
        for column in REPLAY_COLUMNS:
            text = str(row[column]).strip()
            try:
                values[column] = int(text) if column == "run" else dollars_to_cents(text)
            except (ValueError, ArithmeticError) as e:
                raise ParseError(f"cannot parse '{text}'", row=row_number, column=column) from e
        reports.append(RunReport(
            run_id=values["run"],
            actual_total=values["actual_total"],
            dp_actual_total=values["dp_actual_total"],
            predicted_total_ndpm=values["predicted_total_ndpm"],
            predicted_total_dpm=values["predicted_total_dpm"],
        ))
    logger.info("Replayed run totals", path=str(path), runs=len(reports))
    return sorted(reports, key=lambda r: r.run_id)


def timing_summary(reports: Sequence[RunReport]) -> Dict[str, Dict[str, Any]]:
    """
    Mean stage durations per variant and the DPM/NDPM ratio.

    Reported, not asserted: absolute times depend on the machine.

    Returns:
        {stage: {"ndpm": mean_s, "dpm": mean_s, "ratio": dpm/ndpm or None}}
    """
    summary: Dict[str, Dict[str, Any]] = {}
    for stage in STAGES:
        means: Dict[str, Any] = {}
        for variant in VARIANTS:
            values = [getattr(r.timings[variant], stage) for r in reports if variant in r.timings]
            means[variant] = math.fsum(values) / len(values) if values else None
        ndpm, dpm = means["ndpm"], means["dpm"]
        means["ratio"] = dpm / ndpm if ndpm and dpm is not None else None
        summary[stage] = means
    return summary


def format_timing_summary(summary: Dict[str, Dict[str, Any]]) -> str:
    """Fixed-width text table of a timing summary."""
    lines = [f"{'stage':<12}{'ndpm_s':>12}{'dpm_s':>12}{'dpm/ndpm':>12}"]
    for stage, means in summary.items():
        cells = [
            "-" if means[key] is None else f"{means[key]:.3f}"
            for key in ("ndpm", "dpm", "ratio")
        ]
        lines.append(f"{stage.removesuffix('_s'):<12}" + "".join(f"{c:>12}" for c in cells))
    return "\n".join(lines)
