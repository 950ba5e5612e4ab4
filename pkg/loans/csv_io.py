"""CSV ingestion and emission for loan datasets."""
from pathlib import Path
from typing import Any, Dict, List, Union
import pandas as pd
from pydantic import ValidationError
from core.errors import ParseError, RecordInvariantViolation, SchemaMismatch
from core.files import atomic_write_text
from core.logging import get_logger
from .schema import (
    CSV_COLUMNS,
    CURRENCY_COLUMNS,
    NULLABLE_COLUMNS,
    Dataset,
    LoanRecord,
    LoanStatus,
    Provenance,
    cents_to_dollars_str,
    dollars_to_cents,
)

logger = get_logger(__name__)


def read_raw_csv(path: Union[str, Path]) -> pd.DataFrame:
    """
    Read a CSV as untyped strings.

    Args:
        path: CSV file path

    Returns:
        Frame of str cells (empty cells are "")
    """
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    except pd.errors.EmptyDataError as e:
        raise SchemaMismatch(f"{path} is empty; expected header {','.join(CSV_COLUMNS)}") from e
    except UnicodeDecodeError as e:
        raise SchemaMismatch(f"{path} is not UTF-8 text (byte {e.start})") from e


def require_columns(frame: pd.DataFrame, required: List[str] | tuple) -> None:
    """Raise SchemaMismatch naming the first required column missing from frame."""
    present = set(frame.columns)
    for name in required:
        if name not in present:
            raise SchemaMismatch(f"missing column '{name}'", column=name)


def _parse_cell(column: str, text: str) -> Any:
    text = text.strip()
    if text == "":
        if column in NULLABLE_COLUMNS:
            return None
        raise ValueError("empty value")
    if column in CURRENCY_COLUMNS:
        return dollars_to_cents(text)
    if column == "term_months":
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"'{text}' is not a whole number of months")
        return int(value)
    if column in ("interest_rate", "dti"):
        return float(text.rstrip("%"))
    if column == "loan_status":
        return LoanStatus.parse(text)
    if column == "state":
        return text.upper()
    return text


def parse_row(row: Dict[str, str], row_number: int) -> LoanRecord:
    """
    Parse one CSV row into a LoanRecord.

    Args:
        row: Column -> raw cell
        row_number: 1-based data row number used in error messages

    Returns:
        Validated record

    Raises:
        ParseError: Cell cannot be parsed or violates a field constraint
        RecordInvariantViolation: Cross-field invariant broken
    """
    values: Dict[str, Any] = {}
    for column in CSV_COLUMNS:
        try:
            values[column] = _parse_cell(column, row[column])
        except (ValueError, ArithmeticError) as e:
            raise ParseError(f"row {row_number}, column '{column}': {e}", row=row_number, column=column) from e

    try:
        record = LoanRecord(**values)
    except ValidationError as e:
        first = e.errors()[0]
        column = str(first["loc"][0]) if first["loc"] else "?"
        raise ParseError(
            f"row {row_number}, column '{column}': {first['msg']}", row=row_number, column=column
        ) from e

    violation = record.invariant_violation()
    if violation:
        raise RecordInvariantViolation(f"row {row_number}: {violation}", row=row_number)
    return record


def load_csv(path: Union[str, Path], strict: bool = True) -> Dataset:
    """
    Load a loan CSV.

    Args:
        path: CSV with the exact schema header (extra columns are ignored)
        strict: Raise on the first invalid row instead of skipping it

    Returns:
        Dataset with provenance CSV; rejected_rows counts skipped rows
    """
    frame = read_raw_csv(path)
    require_columns(frame, CSV_COLUMNS)

    records: List[LoanRecord] = []
    seen: set[str] = set()
    rejected = 0
    for position, row in enumerate(frame[list(CSV_COLUMNS)].to_dict(orient="records"), start=1):
        try:
            record = parse_row(row, position)
            if record.member_id in seen:
                raise RecordInvariantViolation(
                    f"row {position}: duplicate member_id '{record.member_id}'", row=position
                )
        except (ParseError, RecordInvariantViolation) as e:
            if strict:
                logger.error("Rejected loan row", path=str(path), row=position, error=str(e))
                raise
            rejected += 1
            logger.debug("Skipped loan row", row=position, error=str(e))
            continue
        seen.add(record.member_id)
        records.append(record)

    if rejected:
        logger.warning("Skipped invalid loan rows", path=str(path), skipped=rejected)
    logger.info("Loaded loan CSV", path=str(path), records=len(records), skipped=rejected)
    return Dataset(records=tuple(records), provenance=Provenance.CSV, rejected_rows=rejected)


def _format_optional_float(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def dataset_to_csv_text(dataset: Dataset) -> str:
    """Render a dataset in the CSV schema (currency at two decimals)."""
    rows = []
    for r in dataset.records:
        rows.append({
            "member_id": r.member_id,
            "loan_amount": cents_to_dollars_str(r.loan_amount),
            "total_funded_amount": cents_to_dollars_str(r.total_funded_amount),
            "term_months": str(r.term_months),
            "interest_rate": _format_optional_float(r.interest_rate),
            "annual_income": "" if r.annual_income is None else cents_to_dollars_str(r.annual_income),
            "dti": _format_optional_float(r.dti),
            "state": r.state,
            "zip_code": r.zip_code,
            "home_ownership": r.home_ownership,
            "purpose": r.purpose,
            "loan_status": r.loan_status.value,
            "total_recovered_principal": cents_to_dollars_str(r.total_recovered_principal),
            "recoveries": cents_to_dollars_str(r.recoveries),
        })
    frame = pd.DataFrame(rows, columns=list(CSV_COLUMNS))
    return frame.to_csv(index=False, lineterminator="\n")


def write_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write a dataset to path atomically."""
    target = atomic_write_text(path, dataset_to_csv_text(dataset))
    logger.info("Wrote loan CSV", path=str(target), records=len(dataset))
    return target
