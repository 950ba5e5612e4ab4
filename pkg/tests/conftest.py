"""Shared fixtures: hand-built loan records and small synthetic portfolios."""
from typing import Any, Dict
import pytest
import structlog
from loans import CSV_COLUMNS, Dataset, LoanRecord, LoanStatus, Provenance, generate_synthetic

BASE_RECORD: Dict[str, Any] = {
    "member_id": "M1",
    "loan_amount": 1_000_000,
    "total_funded_amount": 1_000_000,
    "term_months": 36,
    "interest_rate": 12.5,
    "annual_income": 6_500_000,
    "dti": 18.0,
    "state": "CA",
    "zip_code": "941xx",
    "home_ownership": "RENT",
    "purpose": "credit_card",
    "loan_status": LoanStatus.FULLY_PAID,
    "total_recovered_principal": 1_000_000,
    "recoveries": 0,
}

BASE_ROW: Dict[str, str] = {
    "member_id": "M1",
    "loan_amount": "10000.00",
    "total_funded_amount": "10000.00",
    "term_months": "36",
    "interest_rate": "12.5",
    "annual_income": "65000.00",
    "dti": "18.0",
    "state": "CA",
    "zip_code": "941xx",
    "home_ownership": "RENT",
    "purpose": "credit_card",
    "loan_status": "Fully Paid",
    "total_recovered_principal": "10000.00",
    "recoveries": "0.00",
}


def make_record(**overrides) -> LoanRecord:
    return LoanRecord(**{**BASE_RECORD, **overrides})


def make_dataset(*records: LoanRecord) -> Dataset:
    return Dataset(records=tuple(records), provenance=Provenance.CSV)


def csv_text(*rows: Dict[str, str], columns=CSV_COLUMNS) -> str:
    lines = [",".join(columns)]
    for row in rows:
        full = {**BASE_ROW, **row}
        lines.append(",".join(full.get(c, "") for c in columns))
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def portfolio() -> Dataset:
    """A 2,000-loan synthetic portfolio shared across tests (read-only)."""
    return generate_synthetic(2_000, seed=7)


@pytest.fixture(scope="session")
def small_portfolio() -> Dataset:
    return generate_synthetic(400, seed=3)


@pytest.fixture(autouse=True)
def _restore_logging_config():
    """Undo logging reconfiguration (e.g. cli.main under capsys) so later tests
    do not log to a closed capture stream."""
    saved = structlog.get_config()
    yield
    structlog.configure(**saved)
