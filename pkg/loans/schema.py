"""Loan record schema, dataset container and schema metadata."""
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator
from privacy.params import ClippingBounds

SCHEMA_VERSION = "1"

# Exact CSV header, in order.
CSV_COLUMNS: Tuple[str, ...] = (
    "member_id",
    "loan_amount",
    "total_funded_amount",
    "term_months",
    "interest_rate",
    "annual_income",
    "dti",
    "state",
    "zip_code",
    "home_ownership",
    "purpose",
    "loan_status",
    "total_recovered_principal",
    "recoveries",
)

CURRENCY_COLUMNS = ("loan_amount", "total_funded_amount", "annual_income", "total_recovered_principal", "recoveries")
NULLABLE_COLUMNS = ("interest_rate", "annual_income", "dti")

# Columns the preprocessing pipeline may turn into features.
NUMERIC_FEATURES: Tuple[str, ...] = (
    "loan_amount",
    "total_funded_amount",
    "term_months",
    "interest_rate",
    "annual_income",
    "dti",
)
CATEGORICAL_FEATURES: Tuple[str, ...] = ("state", "home_ownership", "purpose")
IDENTIFIER_COLUMNS: Tuple[str, ...] = ("member_id", "zip_code")

# Domain clipping bounds per numeric column (dollars, percent, months, ratio).
# Never derived from data.
NUMERIC_BOUNDS: Dict[str, ClippingBounds] = {
    "loan_amount": ClippingBounds(lower=0.0, upper=40_000.0),
    "total_funded_amount": ClippingBounds(lower=0.0, upper=40_000.0),
    "term_months": ClippingBounds(lower=36.0, upper=60.0),
    "interest_rate": ClippingBounds(lower=5.0, upper=31.0),
    "annual_income": ClippingBounds(lower=0.0, upper=300_000.0),
    "dti": ClippingBounds(lower=0.0, upper=60.0),
}

PURPOSES: Tuple[str, ...] = (
    "debt_consolidation",
    "credit_card",
    "home_improvement",
    "major_purchase",
    "small_business",
    "car",
    "medical",
    "moving",
    "vacation",
    "house",
    "wedding",
    "renewable_energy",
    "educational",
    "other",
)


class LoanStatus(str, Enum):
    """Loan status enumeration."""
    FULLY_PAID = "FULLY_PAID"
    CURRENT = "CURRENT"
    CHARGED_OFF = "CHARGED_OFF"
    DEFAULT = "DEFAULT"
    LATE = "LATE"
    IN_GRACE = "IN_GRACE"

    @classmethod
    def parse(cls, raw: str) -> "LoanStatus":
        """
        Parse a canonical name or a public-export spelling.

        Args:
            raw: e.g. "CHARGED_OFF", "Charged Off", "Late (31-120 days)"

        Returns:
            LoanStatus
        """
        text = raw.strip()
        try:
            return cls(text.upper())
        except ValueError:
            pass
        lowered = text.lower()
        if lowered.startswith("does not meet the credit policy. status:"):
            lowered = lowered.split(":", 1)[1].strip()
        for prefix, status in _STATUS_SPELLINGS:
            if lowered.startswith(prefix):
                return status
        raise ValueError(f"unknown loan_status '{raw}'")

    @property
    def defaulted(self) -> bool:
        return self in (LoanStatus.CHARGED_OFF, LoanStatus.DEFAULT)


_STATUS_SPELLINGS = (
    ("fully paid", LoanStatus.FULLY_PAID),
    ("current", LoanStatus.CURRENT),
    ("charged off", LoanStatus.CHARGED_OFF),
    ("default", LoanStatus.DEFAULT),
    ("late", LoanStatus.LATE),
    ("in grace", LoanStatus.IN_GRACE),
)


class Provenance(str, Enum):
    """Dataset origin."""
    CSV = "CSV"
    SYNTHETIC = "SYNTHETIC"


def dollars_to_cents(value: str | Decimal | float | int) -> int:
    """Convert a dollar amount to integer cents (half-up at the cent)."""
    amount = Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return int(amount * 100)


def cents_to_dollars_str(cents: int) -> str:
    """Render integer cents as a plain dollar string with two decimals."""
    sign = "-" if cents < 0 else ""
    whole, frac = divmod(abs(cents), 100)
    return f"{sign}{whole}.{frac:02d}"


class LoanRecord(BaseModel):
    """
    One borrower/loan row.

    Currency fields are integer cents. interest_rate, annual_income and dti
    may be missing.
    """
    model_config = ConfigDict(frozen=True)

    member_id: str = Field(..., min_length=1)
    loan_amount: int = Field(..., ge=0)
    total_funded_amount: int = Field(..., gt=0)
    term_months: int
    interest_rate: Optional[float] = Field(default=None, ge=0)
    annual_income: Optional[int] = Field(default=None, ge=0)
    dti: Optional[float] = Field(default=None, ge=0)
    state: str = Field(..., pattern=r"^[A-Z]{2}$")
    zip_code: str
    home_ownership: str
    purpose: str
    loan_status: LoanStatus
    total_recovered_principal: int = Field(..., ge=0)
    recoveries: int = Field(..., ge=0)

    @field_validator("term_months")
    @classmethod
    def validate_term(cls, value: int) -> int:
        if value not in (36, 60):
            raise ValueError(f"term_months must be 36 or 60, got {value}")
        return value

    @property
    def defaulted(self) -> bool:
        return self.loan_status.defaulted

    def invariant_violation(self) -> Optional[str]:
        """Describe the first broken cross-field invariant, if any."""
        if self.total_recovered_principal > self.total_funded_amount:
            return (
                f"total_recovered_principal ({cents_to_dollars_str(self.total_recovered_principal)}) "
                f"exceeds total_funded_amount ({cents_to_dollars_str(self.total_funded_amount)})"
            )
        return None


@dataclass(frozen=True)
class Dataset:
    """Immutable, ordered collection of loan records."""
    records: Tuple[LoanRecord, ...]
    provenance: Provenance
    schema_version: str = SCHEMA_VERSION
    rejected_rows: int = 0
    _index: Dict[str, int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        index: Dict[str, int] = {}
        for i, record in enumerate(records):
            if record.member_id in index:
                raise ValueError(f"duplicate member_id '{record.member_id}'")
            index[record.member_id] = i
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[LoanRecord]:
        return iter(self.records)

    @property
    def member_ids(self) -> List[str]:
        return [r.member_id for r in self.records]

    def select(self, positions: List[int] | np.ndarray) -> "Dataset":
        """Sub-dataset at the given positions, original order preserved by caller."""
        return Dataset(
            records=tuple(self.records[int(i)] for i in positions),
            provenance=self.provenance,
            schema_version=self.schema_version,
        )

    def funded_cents(self) -> np.ndarray:
        return np.array([r.total_funded_amount for r in self.records], dtype=np.int64)

    def to_frame(self) -> pd.DataFrame:
        """
        Convert to the frame consumed by preprocessing.

        Currency becomes float dollars, missing values become NaN, and
        loan_status becomes its canonical name.
        """
        columns: Dict[str, list] = {name: [] for name in CSV_COLUMNS}
        for r in self.records:
            columns["member_id"].append(r.member_id)
            columns["loan_amount"].append(r.loan_amount / 100)
            columns["total_funded_amount"].append(r.total_funded_amount / 100)
            columns["term_months"].append(float(r.term_months))
            columns["interest_rate"].append(np.nan if r.interest_rate is None else r.interest_rate)
            columns["annual_income"].append(np.nan if r.annual_income is None else r.annual_income / 100)
            columns["dti"].append(np.nan if r.dti is None else r.dti)
            columns["state"].append(r.state)
            columns["zip_code"].append(r.zip_code)
            columns["home_ownership"].append(r.home_ownership)
            columns["purpose"].append(r.purpose)
            columns["loan_status"].append(r.loan_status.value)
            columns["total_recovered_principal"].append(r.total_recovered_principal / 100)
            columns["recoveries"].append(r.recoveries / 100)
        frame = pd.DataFrame(columns, columns=list(CSV_COLUMNS))
        for name in NUMERIC_FEATURES + ("total_recovered_principal", "recoveries"):
            frame[name] = frame[name].astype(float)
        return frame
