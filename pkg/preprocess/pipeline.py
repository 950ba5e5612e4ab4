"""
Fitted, replayable preprocessing pipeline.

Fitting may touch the data (and the accountant, in PRIVATE mode); applying
a fitted pipeline is a pure function of its step parameters and the input.
"""
import math
from typing import Any, Dict, List, Mapping, Optional, Sequence
import numpy as np
import pandas as pd
from core.errors import EmptyInput, NotFitted, ParseError, SchemaMismatch
from core.logging import get_logger
from loans.schema import (
    CATEGORICAL_FEATURES,
    CSV_COLUMNS,
    CURRENCY_COLUMNS,
    NUMERIC_BOUNDS,
    NUMERIC_FEATURES,
    Dataset,
    dollars_to_cents,
)
from privacy import ClippingBounds, Mode, PrivacyAccountant, PrivacyParams
from .matrix import FeatureMatrix
from .steps import (
    StepKind,
    TransformStep,
    fit_binning,
    fit_correlation_filter,
    fit_drop_columns,
    fit_median_impute,
    fit_one_hot,
)

logger = get_logger(__name__)

INDICATOR_BOUNDS = ClippingBounds(lower=0.0, upper=1.0)
# Share of the preprocess budget spent on imputation; the rest goes to correlation.
IMPUTE_SHARE = 0.5


def coerce_frame(frame: pd.DataFrame, numeric_columns: Sequence[str]) -> pd.DataFrame:
    """
    Convert CSV text cells in numeric columns to floats.

    Currency columns go through the cent conversion so that a value read
    from text equals the value produced by Dataset.to_frame(). Empty cells
    become NaN.

    Args:
        frame: Frame possibly holding strings
        numeric_columns: Columns to convert

    Returns:
        New frame with float numeric columns
    """
    out = frame.copy()
    for column in numeric_columns:
        if column not in out or pd.api.types.is_numeric_dtype(out[column]):
            continue
        converted = []
        for row_number, cell in enumerate(out[column].tolist(), start=1):
            if cell is None or (isinstance(cell, float) and math.isnan(cell)):
                converted.append(np.nan)
                continue
            text = str(cell).strip()
            if not text:
                converted.append(np.nan)
                continue
            try:
                if column in CURRENCY_COLUMNS:
                    converted.append(dollars_to_cents(text) / 100)
                else:
                    converted.append(float(text))
            except (ValueError, ArithmeticError) as e:
                raise ParseError(f"cannot parse '{text}' as a number", row=row_number, column=column) from e
        out[column] = converted
    return out


class Pipeline:
    """
    Ordered list of fitted steps plus the output column layout.

    Attributes:
        steps: Fitted steps in application order
        mode: EXACT or PRIVATE (how the steps were fitted)
        numeric_columns: Numeric inputs read by the pipeline
        categorical_columns: Categorical inputs expanded by one-hot
        column_names: Output feature columns, in order
        feature_bounds: Schema bounds per output column
    """

    def __init__(
        self,
        steps: Sequence[TransformStep] = (),
        mode: Mode = Mode.EXACT,
        numeric_columns: Sequence[str] = (),
        categorical_columns: Sequence[str] = (),
        column_names: Sequence[str] = (),
        feature_bounds: Sequence[ClippingBounds] = (),
        fitted: bool = False,
    ):
        self.steps = tuple(steps)
        self.mode = mode
        self.numeric_columns = tuple(numeric_columns)
        self.categorical_columns = tuple(categorical_columns)
        self.column_names = tuple(column_names)
        self.feature_bounds = tuple(feature_bounds)
        self.fitted = fitted

    @property
    def input_columns(self) -> List[str]:
        """Raw columns a frame must carry for transform_frame."""
        return list(self.numeric_columns) + list(self.categorical_columns)

    @property
    def width(self) -> int:
        return len(self.column_names)

    @classmethod
    def fit(
        cls,
        dataset: Dataset,
        mode: Mode = Mode.EXACT,
        accountant: Optional[PrivacyAccountant] = None,
        rng: Optional[np.random.Generator] = None,
        budget: Optional[PrivacyParams] = None,
        threshold: Optional[float] = None,
        drop_columns: Optional[Sequence[str]] = None,
    ) -> "Pipeline":
        """
        Fit binning, column removal, imputation, correlation filter and one-hot.

        Args:
            dataset: Training records
            mode: EXACT reads statistics directly; PRIVATE uses DP queries
            accountant: Accountant debited by PRIVATE fits
            rng: Random stream for PRIVATE fits
            budget: Preprocess share of the run budget (PRIVATE)
            threshold: Correlation threshold (default from settings)
            drop_columns: Columns to remove (default loan_amount, zip_code, member_id)

        Returns:
            Fitted pipeline
        """
        if len(dataset) == 0:
            raise EmptyInput("cannot fit a pipeline on an empty dataset")

        frame = dataset.to_frame()
        steps: List[TransformStep] = []

        for column in CATEGORICAL_FEATURES:
            step = fit_binning(dataset, column)
            steps.append(step)
            frame = step.apply_frame(frame)

        drop = fit_drop_columns(drop_columns, schema=CSV_COLUMNS)
        steps.append(drop)
        frame = drop.apply_frame(frame)

        numeric = [c for c in NUMERIC_FEATURES if c in frame.columns]
        categorical = [c for c in CATEGORICAL_FEATURES if c in frame.columns]
        impute_budget = corr_budget = None
        if mode is Mode.PRIVATE and budget is not None:
            impute_budget = PrivacyParams.of(budget.epsilon * IMPUTE_SHARE)
            corr_budget = PrivacyParams.of(budget.epsilon * (1.0 - IMPUTE_SHARE))

        raw = FeatureMatrix.from_columns(
            [(c, frame[c].to_numpy(dtype=float), NUMERIC_BOUNDS[c]) for c in numeric],
            n_rows=len(frame),
        )
        impute = fit_median_impute(
            raw, numeric, NUMERIC_BOUNDS, mode, accountant=accountant, rng=rng, budget=impute_budget
        )
        steps.append(impute)
        frame = impute.apply_frame(frame)

        imputed = FeatureMatrix.from_columns(
            [(c, frame[c].to_numpy(dtype=float), NUMERIC_BOUNDS[c]) for c in numeric],
            n_rows=len(frame),
        )
        correlation = fit_correlation_filter(
            imputed, threshold, mode, accountant=accountant, rng=rng, budget=corr_budget
        )
        steps.append(correlation)
        survivors = [c for c in numeric if c not in correlation.params["dropped"]]

        one_hot = fit_one_hot(categorical)
        steps.append(one_hot)

        column_names: List[str] = list(survivors)
        bounds: List[ClippingBounds] = [NUMERIC_BOUNDS[c] for c in survivors]
        for column, vocab in one_hot.params["vocabularies"].items():
            column_names.extend(f"{column}={category}" for category in vocab)
            bounds.extend(INDICATOR_BOUNDS for _ in vocab)

        logger.info(
            "Fitted preprocessing pipeline",
            mode=mode.value,
            records=len(dataset),
            numeric=len(survivors),
            width=len(column_names),
        )
        return cls(
            steps=steps,
            mode=mode,
            numeric_columns=numeric,
            categorical_columns=categorical,
            column_names=column_names,
            feature_bounds=bounds,
            fitted=True,
        )

    def _require_fitted(self) -> None:
        if not self.fitted:
            raise NotFitted("pipeline must be fitted before it is applied")

    def transform_frame(self, frame: pd.DataFrame, **targets) -> FeatureMatrix:
        """
        Apply the fitted steps to a raw frame.

        Args:
            frame: Raw columns (CSV text or floats); extra columns are ignored
            **targets: Optional target arrays passed through to the matrix

        Returns:
            FeatureMatrix with the fitted column layout
        """
        self._require_fitted()
        for column in self.input_columns:
            if column not in frame.columns:
                raise SchemaMismatch(f"input is missing required column '{column}'", column=column)

        out = coerce_frame(frame, self.numeric_columns)
        for step in self.steps:
            out = step.apply_frame(out)

        rows = out[list(self.column_names)].to_numpy(dtype=float) if len(out) else np.zeros((0, self.width))
        member_ids = tuple(str(m) for m in frame["member_id"]) if "member_id" in frame.columns else ()
        return FeatureMatrix(
            column_names=self.column_names,
            rows=rows,
            feature_bounds=self.feature_bounds,
            member_ids=member_ids,
            **targets,
        )

    def apply(self, dataset: Dataset) -> FeatureMatrix:
        """
        Transform a dataset and attach derived targets.

        default_label is 1 for CHARGED_OFF/DEFAULT. ccf and recovery_rate are
        set for defaulted records and NaN elsewhere. No noise is added and no
        budget is spent.

        Args:
            dataset: Records to transform

        Returns:
            FeatureMatrix with targets
        """
        # credit_risk imports this package
        from credit_risk.formulas import ccf, recovery_rate

        self._require_fitted()
        n = len(dataset)
        default_label = np.zeros(n)
        ccf_target = np.full(n, np.nan)
        recovery_target = np.full(n, np.nan)
        for i, record in enumerate(dataset):
            if not record.defaulted:
                continue
            default_label[i] = 1.0
            ccf_target[i] = ccf(record.total_funded_amount, record.total_recovered_principal)
            exposure = record.total_funded_amount - record.total_recovered_principal
            recovery_target[i] = recovery_rate(record.recoveries, exposure)

        return self.transform_frame(
            dataset.to_frame(),
            default_label=default_label,
            ccf=ccf_target,
            recovery_rate=recovery_target,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to a JSON-ready mapping (ordered steps with parameters)."""
        self._require_fitted()
        return {
            "mode": self.mode.value,
            "numeric_columns": list(self.numeric_columns),
            "categorical_columns": list(self.categorical_columns),
            "column_names": list(self.column_names),
            "feature_bounds": [[b.lower, b.upper] for b in self.feature_bounds],
            "steps": [step.to_dict() for step in self.steps],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Pipeline":
        """Rebuild a fitted pipeline from to_dict() output."""
        return cls(
            steps=[TransformStep.from_dict(s) for s in data["steps"]],
            mode=Mode(data["mode"]),
            numeric_columns=data["numeric_columns"],
            categorical_columns=data["categorical_columns"],
            column_names=data["column_names"],
            feature_bounds=[ClippingBounds(lower=lo, upper=hi) for lo, hi in data["feature_bounds"]],
            fitted=True,
        )

    def step(self, kind: StepKind) -> Optional[TransformStep]:
        """First step of the given kind, if any."""
        return next((s for s in self.steps if s.kind is kind), None)


def fit_pipeline(dataset: Dataset, mode: Mode = Mode.EXACT, **kwargs) -> Pipeline:
    """Fit a pipeline (see Pipeline.fit)."""
    return Pipeline.fit(dataset, mode, **kwargs)


def apply(pipeline: Pipeline, dataset: Dataset) -> FeatureMatrix:
    """Apply a fitted pipeline to a dataset."""
    return pipeline.apply(dataset)
