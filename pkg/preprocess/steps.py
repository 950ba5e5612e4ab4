"""Fitted preprocessing steps and the fit operation for each kind."""
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence
import numpy as np
import pandas as pd
from core.config import settings
from core.errors import EmptyInput, InvalidParams, UnknownColumn
from core.logging import get_logger
from loans.schema import Dataset
from privacy import ClippingBounds, Mode, PrivacyAccountant, PrivacyParams, dp_median, dp_sum
from .binning import BINNING_TABLES, normalize_key
from .matrix import FeatureMatrix

logger = get_logger(__name__)

DEFAULT_DROP_COLUMNS = ("loan_amount", "zip_code", "member_id")
_UNIT = ClippingBounds(lower=0.0, upper=1.0)


class StepKind(str, Enum):
    """Preprocessing step kinds."""
    BIN_CATEGORICAL = "BIN_CATEGORICAL"
    DROP_COLUMNS = "DROP_COLUMNS"
    CORRELATION_FILTER = "CORRELATION_FILTER"
    MEDIAN_IMPUTE = "MEDIAN_IMPUTE"
    ONE_HOT = "ONE_HOT"


@dataclass(frozen=True)
class TransformStep:
    """
    One fitted step. params holds only constants (tables, column names,
    imputation values, vocabularies); applying a step never looks at
    anything but its params and the input frame.
    """
    kind: StepKind
    params: Mapping[str, Any] = field(default_factory=dict)

    def apply_frame(self, frame: pd.DataFrame) -> pd.DataFrame:
        """
        Apply the step to a frame.

        Args:
            frame: Frame with raw or previously transformed columns

        Returns:
            New frame (input is not modified)
        """
        out = frame.copy()
        if self.kind is StepKind.BIN_CATEGORICAL:
            column = self.params["column"]
            if column in out:
                mapping, default = self.params["mapping"], self.params["default"]
                out[column] = [
                    mapping.get(normalize_key(column, v), default) if isinstance(v, str) and v.strip() else None
                    for v in out[column]
                ]
        elif self.kind in (StepKind.DROP_COLUMNS, StepKind.CORRELATION_FILTER):
            names = self.params["columns"] if self.kind is StepKind.DROP_COLUMNS else self.params["dropped"]
            out = out.drop(columns=[c for c in names if c in out.columns])
        elif self.kind is StepKind.MEDIAN_IMPUTE:
            for column, value in self.params["values"].items():
                if column in out:
                    out[column] = out[column].astype(float).fillna(value)
        elif self.kind is StepKind.ONE_HOT:
            for column, vocab in self.params["vocabularies"].items():
                if column not in out:
                    continue
                values = out[column].tolist()
                for category in vocab:
                    out[f"{column}={category}"] = [1.0 if v == category else 0.0 for v in values]
                out = out.drop(columns=[column])
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "params": _plain(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TransformStep":
        return cls(kind=StepKind(data["kind"]), params=dict(data["params"]))


def _plain(value: Any) -> Any:
    """Convert tuples/numpy scalars to JSON-friendly values."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def fit_binning(dataset: Optional[Dataset], column: str) -> TransformStep:
    """
    Build the binning step for state, home_ownership or purpose.

    The table is fixed, so the dataset is not read and no budget is spent.

    Args:
        dataset: Dataset being prepared (unused; tables are data-independent)
        column: One of state, home_ownership, purpose

    Returns:
        BIN_CATEGORICAL step
    """
    if column not in BINNING_TABLES:
        raise UnknownColumn(f"no binning table for column '{column}'; expected one of {sorted(BINNING_TABLES)}")
    mapping, default, vocab = BINNING_TABLES[column]
    return TransformStep(
        kind=StepKind.BIN_CATEGORICAL,
        params={"column": column, "mapping": dict(mapping), "default": default, "vocabulary": list(vocab)},
    )


def fit_drop_columns(names: Optional[Sequence[str]] = None, schema: Optional[Sequence[str]] = None) -> TransformStep:
    """
    Build the column-removal step.

    Args:
        names: Columns to remove (default: loan_amount, zip_code, member_id)
        schema: Known column names; unknown names are kept as no-ops with a warning

    Returns:
        DROP_COLUMNS step
    """
    columns = list(DEFAULT_DROP_COLUMNS if names is None else names)
    if schema is not None:
        for name in columns:
            if name not in schema:
                logger.warning("Drop column not in schema; ignoring", column=name)
    return TransformStep(kind=StepKind.DROP_COLUMNS, params={"columns": columns})


def fit_median_impute(
    matrix: FeatureMatrix,
    columns: Sequence[str],
    bounds: Optional[Mapping[str, ClippingBounds]],
    mode: Mode,
    accountant: Optional[PrivacyAccountant] = None,
    rng: Optional[np.random.Generator] = None,
    budget: Optional[PrivacyParams] = None,
) -> TransformStep:
    """
    Fit per-column imputation values.

    EXACT stores the median of the present values. PRIVATE stores dp_median
    over the present values clipped to the column's bounds; the budget is
    split evenly across columns and debited per column.

    Args:
        matrix: Numeric matrix, NaN marking missing entries
        columns: Columns to impute
        bounds: Clipping bounds per column (required in PRIVATE mode)
        mode: EXACT or PRIVATE
        accountant: Accountant to debit (PRIVATE)
        rng: Random stream (PRIVATE)
        budget: Total budget for this step (PRIVATE)

    Returns:
        MEDIAN_IMPUTE step
    """
    values: Dict[str, float] = {}
    if mode is Mode.PRIVATE:
        _require_private(accountant, rng, budget)
        per_column = budget.epsilon / max(1, len(columns))

    for column in columns:
        data = matrix.column(column)
        present = data[~np.isnan(data)]
        if present.size == 0:
            raise EmptyInput(f"column '{column}' has no values to take a median of")
        if mode is Mode.EXACT:
            values[column] = float(np.median(present))
        else:
            if bounds is None or column not in bounds:
                raise InvalidParams(f"PRIVATE median imputation needs bounds for column '{column}'")
            accountant.consume(f"preprocess.median_impute:{column}", PrivacyParams(epsilon=per_column))
            values[column] = dp_median(present, bounds[column], per_column, rng)

    logger.info("Fitted median imputation", mode=mode.value, columns=len(values))
    return TransformStep(kind=StepKind.MEDIAN_IMPUTE, params={"values": values})


def _exact_correlation(x: np.ndarray, y: np.ndarray) -> float:
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return 0.0
    return float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))


def _private_correlation(
    x: np.ndarray,
    y: np.ndarray,
    pair_id: str,
    epsilon: float,
    accountant: PrivacyAccountant,
    rng: np.random.Generator,
) -> float:
    """Correlation from five clipped moment sums on [0, 1]-rescaled columns."""
    n = x.size
    per_sum = epsilon / 5.0
    moments = {}
    for stat, values in (("x", x), ("y", y), ("xx", x * x), ("yy", y * y), ("xy", x * y)):
        accountant.consume(f"preprocess.correlation:{pair_id}:sum_{stat}", PrivacyParams(epsilon=per_sum))
        moments[stat] = dp_sum(values, _UNIT, per_sum, rng) / max(n, 1)
    var_x = moments["xx"] - moments["x"] ** 2
    var_y = moments["yy"] - moments["y"] ** 2
    if var_x <= 0 or var_y <= 0:
        return 0.0
    r = (moments["xy"] - moments["x"] * moments["y"]) / math.sqrt(var_x * var_y)
    return float(np.clip(r, -1.0, 1.0))


def fit_correlation_filter(
    matrix: FeatureMatrix,
    threshold: Optional[float] = None,
    mode: Mode = Mode.EXACT,
    accountant: Optional[PrivacyAccountant] = None,
    rng: Optional[np.random.Generator] = None,
    budget: Optional[PrivacyParams] = None,
) -> TransformStep:
    """
    Drop the later column of every highly correlated pair.

    All pairwise correlations are computed first (so PRIVATE spend does not
    depend on the data); pairs are then visited in schema order and a pair
    whose earlier column is already dropped is skipped.

    Args:
        matrix: Imputed numeric matrix, columns in schema order
        threshold: |r| above which to drop (default settings.correlation_threshold)
        mode: EXACT or PRIVATE
        accountant: Accountant to debit (PRIVATE)
        rng: Random stream (PRIVATE)
        budget: Total budget for this step, split evenly across pairs (PRIVATE)

    Returns:
        CORRELATION_FILTER step
    """
    threshold = settings.correlation_threshold if threshold is None else threshold
    if not 0 < threshold < 1:
        raise InvalidParams(f"threshold must be in (0, 1), got {threshold}")
    names = list(matrix.column_names)
    pairs = list(itertools.combinations(range(len(names)), 2))
    if mode is Mode.PRIVATE and pairs:
        _require_private(accountant, rng, budget)
        per_pair = budget.epsilon / len(pairs)

    correlations: Dict[tuple, float] = {}
    for i, j in pairs:
        x, y = matrix.rows[:, i], matrix.rows[:, j]
        if mode is Mode.EXACT:
            correlations[(i, j)] = _exact_correlation(x, y)
        else:
            bx, by = matrix.feature_bounds[i], matrix.feature_bounds[j]
            ux = np.clip((x - bx.lower) / bx.width, 0.0, 1.0)
            uy = np.clip((y - by.lower) / by.width, 0.0, 1.0)
            correlations[(i, j)] = _private_correlation(
                ux, uy, f"{names[i]}~{names[j]}", per_pair, accountant, rng
            )

    dropped: List[str] = []
    for (i, j), r in correlations.items():
        if names[i] in dropped or names[j] in dropped:
            continue
        if abs(r) > threshold:
            dropped.append(names[j])
            logger.debug("Correlated pair", kept=names[i], dropped=names[j], r=round(r, 4))

    logger.info("Fitted correlation filter", mode=mode.value, pairs=len(pairs), dropped=dropped)
    return TransformStep(
        kind=StepKind.CORRELATION_FILTER,
        params={"threshold": threshold, "columns": names, "dropped": dropped},
    )


def fit_one_hot(columns: Sequence[str]) -> TransformStep:
    """
    Build the one-hot step from the fixed bin vocabularies.

    Args:
        columns: Binned categorical columns to expand

    Returns:
        ONE_HOT step; unseen categories encode as all zeros
    """
    vocabularies = {}
    for column in columns:
        if column not in BINNING_TABLES:
            raise UnknownColumn(f"no fixed vocabulary for column '{column}'")
        vocabularies[column] = list(BINNING_TABLES[column][2])
    return TransformStep(kind=StepKind.ONE_HOT, params={"vocabularies": vocabularies})


def _require_private(
    accountant: Optional[PrivacyAccountant],
    rng: Optional[np.random.Generator],
    budget: Optional[PrivacyParams],
) -> None:
    if accountant is None or rng is None or budget is None:
        raise InvalidParams("PRIVATE fitting needs an accountant, a random stream and a budget")
