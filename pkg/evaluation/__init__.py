"""Repeated-run NDPM vs DPM evaluation and its report arithmetic."""
from .reports import (
    AggregateReport,
    RunReport,
    StageTimings,
    VariantAverage,
    aggregate,
    format_timing_summary,
    relative_difference,
    replay_reports,
    timing_summary,
    truncate,
    whole_dollars,
)
from .outputs import (
    FIGURE_FILES,
    emit_figure_data,
    write_aggregate_json,
    write_runs_csv,
    write_timing_summary,
)
from .experiment import (
    ExperimentConfig,
    default_dpm_config,
    default_ndpm_config,
    run_experiment,
    run_once,
)

__all__ = [
    "AggregateReport",
    "RunReport",
    "StageTimings",
    "VariantAverage",
    "aggregate",
    "format_timing_summary",
    "relative_difference",
    "replay_reports",
    "timing_summary",
    "truncate",
    "whole_dollars",
    "FIGURE_FILES",
    "emit_figure_data",
    "write_aggregate_json",
    "write_runs_csv",
    "write_timing_summary",
    "ExperimentConfig",
    "default_dpm_config",
    "default_ndpm_config",
    "run_experiment",
    "run_once",
]
