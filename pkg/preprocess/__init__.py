"""Preprocessing: binning, column removal, imputation, correlation filter, one-hot."""
from .binning import BINNING_TABLES, HOME_OWNERSHIP_VOCAB, PURPOSE_VOCAB, REGION_VOCAB
from .matrix import FeatureMatrix
from .steps import (
    DEFAULT_DROP_COLUMNS,
    StepKind,
    TransformStep,
    fit_binning,
    fit_correlation_filter,
    fit_drop_columns,
    fit_median_impute,
    fit_one_hot,
)
from .pipeline import Pipeline, apply, coerce_frame, fit_pipeline

__all__ = [
    "BINNING_TABLES",
    "HOME_OWNERSHIP_VOCAB",
    "PURPOSE_VOCAB",
    "REGION_VOCAB",
    "FeatureMatrix",
    "DEFAULT_DROP_COLUMNS",
    "StepKind",
    "TransformStep",
    "fit_binning",
    "fit_correlation_filter",
    "fit_drop_columns",
    "fit_median_impute",
    "fit_one_hot",
    "Pipeline",
    "apply",
    "coerce_frame",
    "fit_pipeline",
]
