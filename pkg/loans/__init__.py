"""Loan record schema, ingestion, synthetic generation and sampling."""
from .schema import (
    CSV_COLUMNS,
    NUMERIC_FEATURES,
    CATEGORICAL_FEATURES,
    NUMERIC_BOUNDS,
    PURPOSES,
    Dataset,
    LoanRecord,
    LoanStatus,
    Provenance,
    cents_to_dollars_str,
    dollars_to_cents,
)
from .csv_io import load_csv, write_csv, read_raw_csv, require_columns
from .synthetic import GeneratorConfig, generate_synthetic
from .sampling import SplitSpec, split, subsample

__all__ = [
    "CSV_COLUMNS",
    "NUMERIC_FEATURES",
    "CATEGORICAL_FEATURES",
    "NUMERIC_BOUNDS",
    "PURPOSES",
    "Dataset",
    "LoanRecord",
    "LoanStatus",
    "Provenance",
    "cents_to_dollars_str",
    "dollars_to_cents",
    "load_csv",
    "write_csv",
    "read_raw_csv",
    "require_columns",
    "GeneratorConfig",
    "generate_synthetic",
    "SplitSpec",
    "split",
    "subsample",
]
