"""
Three-model credit-risk composition.

PD comes from a classifier on all records, EAD from a CCF regressor fitted
on defaulted records, and LGD from a two-stage pair fitted on defaulted
records: a classifier for "recovery rate is nonzero" and a regressor for
the rate where it is.
"""
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from core.config import settings
from core.errors import InvalidConfig, InvalidParams
from core.files import atomic_write_text
from core.logging import get_logger
from learners import (
    LinearModel,
    Model,
    SplitStrategy,
    TrainConfig,
    predict,
    train_gbt,
    train_linear,
    train_logistic,
    train_random_forest,
)
from loans.schema import Dataset, cents_to_dollars_str
from preprocess import FeatureMatrix, Pipeline
from privacy import BudgetPlan, ClippingBounds, Mode, PrivacyAccountant, PrivacyParams, dp_count, dp_sum
from .formulas import expected_loss_array, predicted_ead_array

logger = get_logger(__name__)

LOSS_CSV_COLUMNS = ("member_id", "pd", "ead", "lgd", "expected_loss")
UNIT_BOUNDS = ClippingBounds(lower=0.0, upper=1.0)


class PdLearner(str, Enum):
    """PD classifier family."""
    GBT = "gbt"
    LOGISTIC = "logistic"


class LgdLearner(str, Enum):
    """Two-stage LGD family: (nonzero classifier)+(rate regressor)."""
    GBT_FOREST = "gbt+forest"
    LOGISTIC_LINEAR = "logistic+linear"


class Hyperparameters(BaseModel):
    """Optional per-model overrides of TrainConfig fields."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_trees: Optional[int] = None
    rounds: Optional[int] = None
    max_depth: Optional[int] = None
    learning_rate: Optional[float] = None
    reg_lambda: Optional[float] = None
    min_samples_leaf: Optional[int] = None
    max_features: Optional[int] = None
    bootstrap: Optional[bool] = None
    split_strategy: Optional[SplitStrategy] = None
    iterations: Optional[int] = None
    step_size: Optional[float] = None
    l2: Optional[float] = None
    gradient_clip: Optional[float] = None

    def overrides(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True)


class CreditRiskConfig(BaseModel):
    """Everything needed to train one CreditRiskModel."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Mode = Mode.EXACT
    budget: Optional[PrivacyParams] = Field(
        default=None, description="Model budget in PRIVATE mode (defaults to settings)"
    )
    budget_plan: Dict[str, float] = Field(default_factory=lambda: dict(settings.budget_plan_map))
    pd_learner: PdLearner = PdLearner.GBT
    lgd_learner: LgdLearner = LgdLearner.GBT_FOREST
    pd: Hyperparameters = Field(default_factory=Hyperparameters)
    ccf: Hyperparameters = Field(default_factory=Hyperparameters)
    lgd_nonzero: Hyperparameters = Field(default_factory=Hyperparameters)
    lgd_rate: Hyperparameters = Field(default_factory=Hyperparameters)
    correlation_threshold: float = Field(default_factory=lambda: settings.correlation_threshold)
    drop_columns: Optional[List[str]] = None

    @classmethod
    def build(cls, **values) -> "CreditRiskConfig":
        try:
            return cls(**values)
        except ValidationError as e:
            raise InvalidConfig(f"invalid credit-risk config: {e.errors()[0]['msg']}") from e

    def resolved_budget(self) -> PrivacyParams:
        if self.budget is not None:
            return self.budget
        return PrivacyParams.of(settings.default_epsilon, settings.default_delta)


@dataclass(frozen=True, eq=False)
class CreditRiskModel:
    """Fitted pipeline plus the PD, CCF and two LGD models."""
    pipeline: Pipeline
    pd_model: Model
    ccf_model: Model
    lgd_nonzero: Model
    lgd_rate: Model
    mode: Mode = Mode.EXACT
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class LossBreakdown:
    """Per-record loss components; currency in cents."""
    member_id: str
    pd: float
    ead: int
    lgd: float
    expected_loss: int


def _train_config(
    mode: Mode,
    params: Hyperparameters,
    privacy: Optional[PrivacyParams],
    seed: int,
) -> TrainConfig:
    values: Dict[str, Any] = params.overrides()
    values.update(mode=mode, privacy=privacy if mode is Mode.PRIVATE else None, seed=seed)
    return TrainConfig.build(**values)


def _constant_stage(
    width: int,
    targets: np.ndarray,
    mode: Mode,
    accountant: Optional[PrivacyAccountant],
    rng: np.random.Generator,
    share: Optional[PrivacyParams],
    query_id: str,
) -> LinearModel:
    """
    Constant model for an LGD stage whose targets cannot fit a learner.

    Covers a nonzero-recovery label with a single class and a rate stage
    with no recovered loans. The value is the target mean (0 when empty).
    PRIVATE debits the stage share under the learner's query id, so the
    ledger has the same shape either way, and releases the mean as
    dp_sum / dp_count over [0, 1] at half the epsilon each.
    """
    if mode is Mode.PRIVATE:
        accountant.consume(query_id, PrivacyParams(epsilon=share.epsilon))
        if targets.size == 0:
            value = 0.0
        else:
            half = share.epsilon / 2.0
            total = dp_sum(targets, UNIT_BOUNDS, half, rng)
            value = total / max(1.0, dp_count(targets.size, half, rng))
    else:
        value = float(targets.mean()) if targets.size else 0.0
    value = float(np.clip(value, 0.0, 1.0))
    logger.warning("LGD stage fitted as a constant", query_id=query_id, rows=int(targets.size), value=value)
    return LinearModel(weights=np.zeros(width), intercept=value)


def train_credit_risk_model(
    dataset: Dataset,
    config: Optional[CreditRiskConfig] = None,
    accountant: Optional[PrivacyAccountant] = None,
    rng: Optional[np.random.Generator] = None,
    seed: int = 0,
    timings: Optional[Dict[str, float]] = None,
) -> CreditRiskModel:
    """
    Fit the pipeline and all four component models.

    Child streams for the pipeline and each model are drawn upfront so
    EXACT and PRIVATE runs with the same seed use the same structure draws.

    Args:
        dataset: Training records
        config: Learner families, hyperparameters and privacy settings
        accountant: Accountant debited in PRIVATE mode
        rng: Random stream (defaults to default_rng(seed))
        seed: Seed recorded in metadata and used when rng is None
        timings: When given, receives preprocess_s and train_s wall-clock durations

    Returns:
        CreditRiskModel
    """
    config = config or CreditRiskConfig()
    rng = np.random.default_rng(seed) if rng is None else rng
    private = config.mode is Mode.PRIVATE
    if private and accountant is None:
        raise InvalidParams("PRIVATE training requires an accountant")

    child_seeds = [int(s) for s in rng.integers(2**63, size=5)]
    pipeline_rng, pd_seed, ccf_seed, nonzero_seed, rate_seed = (
        np.random.default_rng(child_seeds[0]), *child_seeds[1:]
    )

    shares: Dict[str, Optional[PrivacyParams]] = {stage: None for stage in ("preprocess", "pd", "ccf", "lgd")}
    if private:
        plan = BudgetPlan(config.budget_plan)
        budget = config.resolved_budget()
        shares = {stage: plan.share(budget, stage) for stage in shares}
    lgd_half = shares["lgd"].scaled(0.5) if private else None

    start = time.perf_counter()
    pipeline = Pipeline.fit(
        dataset,
        config.mode,
        accountant=accountant,
        rng=pipeline_rng,
        budget=shares["preprocess"],
        threshold=config.correlation_threshold,
        drop_columns=config.drop_columns,
    )
    matrix = pipeline.apply(dataset)
    fitted_at = time.perf_counter()
    labels = matrix.default_label

    use_gbt_pd = config.pd_learner is PdLearner.GBT
    pd_config = _train_config(config.mode, config.pd, shares["pd"], pd_seed)
    pd_trainer, pd_query = (train_gbt, "train_gbt:pd") if use_gbt_pd else (train_logistic, "train_logistic:pd")
    pd_model = pd_trainer(matrix, labels, pd_config, accountant, np.random.default_rng(pd_seed), query_id=pd_query)

    defaulted = matrix.select_rows(labels == 1.0)
    use_trees = config.lgd_learner is LgdLearner.GBT_FOREST
    regressor, regressor_name = (train_random_forest, "train_random_forest") if use_trees else (train_linear, "train_linear")
    classifier, classifier_name = (train_gbt, "train_gbt") if use_trees else (train_logistic, "train_logistic")

    ccf_config = _train_config(config.mode, config.ccf, shares["ccf"], ccf_seed)
    ccf_model = regressor(
        defaulted, defaulted.ccf, ccf_config, accountant, np.random.default_rng(ccf_seed),
        query_id=f"{regressor_name}:ccf",
    )

    constant_stages: List[str] = []
    nonzero_labels = (defaulted.recovery_rate > 0).astype(float)
    nonzero_query = f"{classifier_name}:lgd_nonzero"
    if np.unique(nonzero_labels).size < 2:
        lgd_nonzero = _constant_stage(
            matrix.width, nonzero_labels, config.mode, accountant, np.random.default_rng(nonzero_seed),
            lgd_half, nonzero_query,
        )
        constant_stages.append("lgd_nonzero")
    else:
        nonzero_config = _train_config(config.mode, config.lgd_nonzero, lgd_half, nonzero_seed)
        lgd_nonzero = classifier(
            defaulted, nonzero_labels, nonzero_config, accountant, np.random.default_rng(nonzero_seed),
            query_id=nonzero_query,
        )

    recovered = defaulted.select_rows(nonzero_labels == 1.0)
    rate_query = f"{regressor_name}:lgd_rate"
    if recovered.n_rows == 0:
        lgd_rate = _constant_stage(
            matrix.width, recovered.recovery_rate, config.mode, accountant, np.random.default_rng(rate_seed),
            lgd_half, rate_query,
        )
        constant_stages.append("lgd_rate")
    else:
        rate_config = _train_config(config.mode, config.lgd_rate, lgd_half, rate_seed)
        lgd_rate = regressor(
            recovered, recovered.recovery_rate, rate_config, accountant, np.random.default_rng(rate_seed),
            query_id=rate_query,
        )

    if timings is not None:
        timings["preprocess_s"] = fitted_at - start
        timings["train_s"] = time.perf_counter() - fitted_at

    metadata: Dict[str, Any] = {
        "trained_mode": config.mode.value,
        "seed": seed,
        "pd_learner": config.pd_learner.value,
        "lgd_learner": config.lgd_learner.value,
        "records": len(dataset),
        "constant_stages": constant_stages,
    }
    if accountant is not None:
        metadata["privacy"] = accountant.summary()

    logger.info(
        "Trained credit-risk model",
        mode=config.mode.value,
        records=len(dataset),
        defaulted=defaulted.n_rows,
        recovered=recovered.n_rows,
        width=matrix.width,
    )
    return CreditRiskModel(
        pipeline=pipeline,
        pd_model=pd_model,
        ccf_model=ccf_model,
        lgd_nonzero=lgd_nonzero,
        lgd_rate=lgd_rate,
        mode=config.mode,
        metadata=metadata,
    )


def score_matrix(
    model: CreditRiskModel,
    matrix: FeatureMatrix,
    funded_cents: Sequence[int] | np.ndarray,
) -> List[LossBreakdown]:
    """
    Compose per-record losses from an already transformed matrix.

    Args:
        model: Trained bundle
        matrix: Rows produced by model.pipeline
        funded_cents: total_funded_amount per row (cents)

    Returns:
        One LossBreakdown per row
    """
    funded = np.asarray(funded_cents, dtype=np.int64)
    pd_values = np.clip(predict(model.pd_model, matrix), 0.0, 1.0)
    ead = predicted_ead_array(funded, predict(model.ccf_model, matrix))
    p_nonzero = np.clip(predict(model.lgd_nonzero, matrix), 0.0, 1.0)
    rate = np.clip(predict(model.lgd_rate, matrix), 0.0, 1.0)
    lgd_values = 1.0 - p_nonzero * rate
    losses = expected_loss_array(pd_values, ead, lgd_values)

    member_ids = matrix.member_ids or tuple(str(i) for i in range(matrix.n_rows))
    return [
        LossBreakdown(member_id=m, pd=float(p), ead=int(e), lgd=float(g), expected_loss=int(l))
        for m, p, e, g, l in zip(member_ids, pd_values, ead, lgd_values, losses)
    ]


def predict_losses(model: CreditRiskModel, dataset: Dataset) -> List[LossBreakdown]:
    """
    Score every record of a dataset.

    pd from the PD model, ead = funded * predicted CCF, lgd = 1 -
    P(recovery nonzero) * predicted rate, expected_loss = pd * ead * lgd.
    """
    matrix = model.pipeline.transform_frame(dataset.to_frame())
    return score_matrix(model, matrix, dataset.funded_cents())


def loss_frame(breakdowns: Sequence[LossBreakdown]) -> pd.DataFrame:
    """Breakdowns as a frame with dollar strings for currency."""
    return pd.DataFrame(
        [
            {
                "member_id": b.member_id,
                "pd": repr(b.pd),
                "ead": cents_to_dollars_str(b.ead),
                "lgd": repr(b.lgd),
                "expected_loss": cents_to_dollars_str(b.expected_loss),
            }
            for b in breakdowns
        ],
        columns=list(LOSS_CSV_COLUMNS),
    )


def write_loss_csv(breakdowns: Sequence[LossBreakdown], path: Union[str, Path]) -> Path:
    """Write member_id,pd,ead,lgd,expected_loss atomically."""
    target = atomic_write_text(path, loss_frame(breakdowns).to_csv(index=False, lineterminator="\n"))
    logger.info("Wrote loss breakdowns", path=str(target), records=len(breakdowns))
    return target
