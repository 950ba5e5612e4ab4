"""Differential privacy mechanisms and budget accounting."""
from .params import Mode, PrivacyParams, ClippingBounds
from .accountant import PrivacyAccountant, LedgerEntry, LedgerRecord, BudgetPlan, Spend, load_ledger
from .mechanisms import (
    laplace,
    gaussian,
    gaussian_vector,
    gaussian_sigma,
    laplace_scale,
    dp_sum,
    dp_count,
    dp_median,
    MEDIAN_GRID_INTERVALS,
)

__all__ = [
    "Mode",
    "PrivacyParams",
    "ClippingBounds",
    "PrivacyAccountant",
    "LedgerEntry",
    "LedgerRecord",
    "load_ledger",
    "BudgetPlan",
    "Spend",
    "laplace",
    "gaussian",
    "gaussian_vector",
    "gaussian_sigma",
    "laplace_scale",
    "dp_sum",
    "dp_count",
    "dp_median",
    "MEDIAN_GRID_INTERVALS",
]
