"""Tests for preprocessing steps and the fitted pipeline."""
import numpy as np
import pandas as pd
import pytest
from core.errors import EmptyInput, InvalidParams, NotFitted, ParseError, SchemaMismatch, UnknownColumn
from core.logging import configure_logging, get_logger
from loans import NUMERIC_BOUNDS, read_raw_csv, write_csv
from preprocess import (
    DEFAULT_DROP_COLUMNS,
    FeatureMatrix,
    Pipeline,
    StepKind,
    TransformStep,
    coerce_frame,
    fit_binning,
    fit_correlation_filter,
    fit_drop_columns,
    fit_median_impute,
    fit_one_hot,
    fit_pipeline,
)
from privacy import MEDIAN_GRID_INTERVALS, ClippingBounds, Mode, PrivacyAccountant, PrivacyParams

configure_logging()
logger = get_logger(__name__)

UNIT = ClippingBounds(lower=0.0, upper=1.0)
WIDE = ClippingBounds(lower=0.0, upper=100.0)


def _matrix(**columns) -> FeatureMatrix:
    return FeatureMatrix.from_columns([(name, np.asarray(v, dtype=float), WIDE) for name, v in columns.items()])


def test_binning_maps_to_fixed_vocabulary():
    """Known values map to their bin, unknown values to the catch-all."""
    frame = pd.DataFrame({
        "state": ["CA", "ny", "XX", ""],
        "purpose": ["Debt_Consolidation", "wedding", "car", "house"],
    })
    out = fit_binning(None, "purpose").apply_frame(fit_binning(None, "state").apply_frame(frame))
    assert out["state"].tolist() == ["West", "Northeast", "OTHER", None]
    assert out["purpose"].tolist() == ["debt", "other", "major_purchase", "home"]
    assert frame["state"].tolist() == ["CA", "ny", "XX", ""]


def test_binning_unknown_column():
    with pytest.raises(UnknownColumn):
        fit_binning(None, "zip_code")


def test_drop_columns_defaults():
    step = fit_drop_columns()
    assert step.params["columns"] == list(DEFAULT_DROP_COLUMNS)
    frame = pd.DataFrame({"member_id": ["a"], "zip_code": ["1xx"], "dti": [3.0]})
    assert list(step.apply_frame(frame).columns) == ["dti"]
    assert fit_drop_columns(["nope"], schema=["dti"]).apply_frame(frame).shape == frame.shape


def test_median_impute_exact():
    matrix = _matrix(a=[1.0, np.nan, 3.0, 10.0], b=[2.0, 4.0, np.nan, np.nan])
    step = fit_median_impute(matrix, ["a", "b"], None, Mode.EXACT)
    assert step.params["values"] == {"a": 3.0, "b": 3.0}
    frame = pd.DataFrame({"a": [np.nan, 5.0], "b": [np.nan, np.nan]})
    filled = step.apply_frame(frame)
    assert filled["a"].tolist() == [3.0, 5.0]
    assert filled["b"].tolist() == [3.0, 3.0]


def test_median_impute_empty_column():
    with pytest.raises(EmptyInput):
        fit_median_impute(_matrix(a=[np.nan, np.nan]), ["a"], None, Mode.EXACT)


def test_median_impute_private_requires_accountant():
    with pytest.raises(InvalidParams):
        fit_median_impute(_matrix(a=[1.0]), ["a"], {"a": WIDE}, Mode.PRIVATE)


def test_median_impute_private_debits_per_column():
    """Each column is one dp_median release at an equal share of the budget."""
    accountant = PrivacyAccountant(PrivacyParams.of(1e9))
    matrix = _matrix(a=[1.0, np.nan, 3.0, 10.0], b=[7.0, 8.0, 9.0, np.nan])
    step = fit_median_impute(
        matrix, ["a", "b"], {"a": WIDE, "b": WIDE}, Mode.PRIVATE,
        accountant=accountant, rng=np.random.default_rng(0), budget=PrivacyParams.of(1e9),
    )
    assert step.params["values"] == {"a": 3.0, "b": 8.0}
    assert [e.query_id for e in accountant.ledger] == [
        "preprocess.median_impute:a", "preprocess.median_impute:b"
    ]
    assert accountant.ledger[0].cost.epsilon == pytest.approx(5e8)


def test_correlation_filter_drops_later_column():
    """Pairs are visited in order; a pair with a dropped member is skipped."""
    rng = np.random.default_rng(4)
    a = rng.uniform(0, 50, 500)
    matrix = _matrix(a=a, b=2 * a + 1, c=a + rng.normal(0, 0.01, 500), d=rng.uniform(0, 50, 500))
    step = fit_correlation_filter(matrix, threshold=0.85)
    assert step.params["dropped"] == ["b", "c"]
    assert step.params["columns"] == ["a", "b", "c", "d"]
    out = step.apply_frame(pd.DataFrame({"a": [1.0], "b": [1.0], "c": [1.0], "d": [1.0]}))
    assert list(out.columns) == ["a", "d"]


def test_correlation_filter_threshold_validation():
    with pytest.raises(InvalidParams):
        fit_correlation_filter(_matrix(a=[1.0, 2.0]), threshold=1.5)


def test_correlation_filter_private_matches_exact_at_huge_epsilon():
    rng = np.random.default_rng(5)
    a = rng.uniform(0, 100, 400)
    matrix = _matrix(a=a, b=100 - a, c=rng.uniform(0, 100, 400))
    accountant = PrivacyAccountant(PrivacyParams.of(1e9))
    private = fit_correlation_filter(
        matrix, 0.85, Mode.PRIVATE, accountant=accountant, rng=np.random.default_rng(1),
        budget=PrivacyParams.of(1e9),
    )
    exact = fit_correlation_filter(matrix, 0.85)
    assert private.params["dropped"] == exact.params["dropped"] == ["b"]
    assert len(accountant.ledger) == 3 * 5
    assert accountant.ledger[0].query_id == "preprocess.correlation:a~b:sum_x"


def test_one_hot_unseen_category_is_all_zero():
    step = fit_one_hot(["home_ownership"])
    out = step.apply_frame(pd.DataFrame({"home_ownership": ["RENT", "SPACESHIP"]}))
    indicator_columns = [c for c in out.columns if c.startswith("home_ownership=")]
    assert indicator_columns == [
        "home_ownership=RENT", "home_ownership=OWN", "home_ownership=MORTGAGE", "home_ownership=OTHER"
    ]
    assert out.loc[0, indicator_columns].tolist() == [1.0, 0.0, 0.0, 0.0]
    assert out.loc[1, indicator_columns].tolist() == [0.0, 0.0, 0.0, 0.0]
    with pytest.raises(UnknownColumn):
        fit_one_hot(["zip_code"])


def test_step_serialization_round_trip():
    step = fit_binning(None, "state")
    assert TransformStep.from_dict(step.to_dict()) == step


def test_coerce_frame_parse_error():
    frame = pd.DataFrame({"dti": ["1.5", "abc"]})
    with pytest.raises(ParseError) as excinfo:
        coerce_frame(frame, ["dti"])
    assert excinfo.value.row == 2 and excinfo.value.column == "dti"


def test_pipeline_exact_layout(portfolio):
    """Identifiers and loan_amount are gone; categoricals are expanded."""
    pipeline = fit_pipeline(portfolio, Mode.EXACT)
    assert pipeline.mode is Mode.EXACT
    names = pipeline.column_names
    for removed in ("member_id", "zip_code", "loan_amount", "state", "purpose"):
        assert removed not in names
    assert "total_funded_amount" in names
    assert "state=West" in names and "purpose=other" in names
    assert [s.kind for s in pipeline.steps] == [
        StepKind.BIN_CATEGORICAL, StepKind.BIN_CATEGORICAL, StepKind.BIN_CATEGORICAL,
        StepKind.DROP_COLUMNS, StepKind.MEDIAN_IMPUTE, StepKind.CORRELATION_FILTER, StepKind.ONE_HOT,
    ]
    assert len(pipeline.feature_bounds) == pipeline.width


def test_pipeline_apply_targets(portfolio):
    pipeline = fit_pipeline(portfolio)
    matrix = pipeline.apply(portfolio)
    assert matrix.n_rows == len(portfolio)
    assert not matrix.has_missing()
    defaulted = np.array([r.defaulted for r in portfolio])
    assert matrix.default_label.sum() == defaulted.sum()
    assert np.isnan(matrix.ccf[~defaulted]).all()
    assert not np.isnan(matrix.ccf[defaulted]).any()
    assert ((matrix.recovery_rate[defaulted] >= 0) & (matrix.recovery_rate[defaulted] <= 1)).all()
    assert matrix.member_ids == tuple(portfolio.member_ids)


def test_transform_frame_from_csv_matches_apply(tmp_path, portfolio):
    """Scoring CSV text gives the same rows as applying the dataset."""
    pipeline = fit_pipeline(portfolio)
    path = write_csv(portfolio, tmp_path / "loans.csv")
    from_csv = pipeline.transform_frame(read_raw_csv(path))
    assert np.array_equal(from_csv.rows, pipeline.apply(portfolio).rows)


def test_transform_frame_missing_column(portfolio):
    pipeline = fit_pipeline(portfolio)
    frame = portfolio.to_frame().drop(columns=["dti"])
    with pytest.raises(SchemaMismatch) as excinfo:
        pipeline.transform_frame(frame)
    assert excinfo.value.column == "dti"


def test_pipeline_serialization_round_trip(portfolio):
    pipeline = fit_pipeline(portfolio)
    restored = Pipeline.from_dict(pipeline.to_dict())
    assert restored.column_names == pipeline.column_names
    assert np.array_equal(restored.apply(portfolio).rows, pipeline.apply(portfolio).rows)


def test_unfitted_pipeline():
    with pytest.raises(NotFitted):
        Pipeline().transform_frame(pd.DataFrame())


def test_pipeline_empty_dataset():
    from tests.conftest import make_dataset
    with pytest.raises(EmptyInput):
        fit_pipeline(make_dataset())


def test_pipeline_private_spend(portfolio):
    """Imputation and correlation split the preprocess budget in half."""
    budget = PrivacyParams.of(2.0)
    accountant = PrivacyAccountant(budget)
    pipeline = fit_pipeline(
        portfolio, Mode.PRIVATE, accountant=accountant, rng=np.random.default_rng(0), budget=budget
    )
    entries = accountant.ledger
    impute = [e for e in entries if e.query_id.startswith("preprocess.median_impute")]
    correlation = [e for e in entries if e.query_id.startswith("preprocess.correlation")]
    n_numeric = len(pipeline.numeric_columns)
    assert len(impute) == n_numeric
    assert len(correlation) == 5 * n_numeric * (n_numeric - 1) // 2
    assert sum(e.cost.epsilon for e in impute) == pytest.approx(1.0)
    assert accountant.spent.epsilon == pytest.approx(2.0)


def test_pipeline_private_collapses_to_exact(portfolio):
    """At a huge budget the private fit keeps the exact layout and medians."""
    exact = fit_pipeline(portfolio, Mode.EXACT)
    budget = PrivacyParams.of(1e9)
    private = fit_pipeline(
        portfolio, Mode.PRIVATE, accountant=PrivacyAccountant(budget), rng=np.random.default_rng(2), budget=budget
    )
    assert private.column_names == exact.column_names
    frame = portfolio.to_frame()
    private_values = private.step(StepKind.MEDIAN_IMPUTE).params["values"]
    for column, value in private_values.items():
        present = np.sort(frame[column].dropna().to_numpy())
        n = present.size
        lower, upper = present[(n - 1) // 2], present[n // 2]
        step = NUMERIC_BOUNDS[column].width / MEDIAN_GRID_INTERVALS
        assert lower - step <= value <= upper + step
