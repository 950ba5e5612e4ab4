"""
Repeated-subsample comparison of the exact (NDPM) and private (DPM) models.

Each run subsamples the portfolio, trains both variants on the sample and
scores the same sample (or a held-out part of it), then records exact,
private and predicted loss totals.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from core.config import settings
from core.errors import InvalidConfig, PrivRiskError, RunFailed
from core.logging import get_logger
from credit_risk import (
    CreditRiskConfig,
    Hyperparameters,
    actual_loss,
    predict_losses,
    total_expected_loss,
    train_credit_risk_model,
)
from loans import Dataset, SplitSpec, split, subsample
from privacy import ClippingBounds, Mode, PrivacyAccountant, PrivacyParams, dp_sum
from .reports import RunReport, StageTimings

logger = get_logger(__name__)

AccountantFactory = Callable[[], PrivacyAccountant]


def default_ndpm_config() -> CreditRiskConfig:
    return CreditRiskConfig(mode=Mode.EXACT)


def default_dpm_config(budget: Optional[PrivacyParams] = None) -> CreditRiskConfig:
    """
    Private variant with ensembles sized for noisy leaves.

    Fewer rounds and trees leave each release a larger share of the budget.
    """
    return CreditRiskConfig(
        mode=Mode.PRIVATE,
        budget=budget,
        pd=Hyperparameters(rounds=20, learning_rate=0.3),
        ccf=Hyperparameters(n_trees=10, max_depth=3),
        lgd_nonzero=Hyperparameters(rounds=5, learning_rate=0.3),
        lgd_rate=Hyperparameters(n_trees=5, max_depth=3),
    )


class ExperimentConfig(BaseModel):
    """Protocol settings for run_experiment."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_runs: int = Field(default_factory=lambda: settings.evaluation_runs, ge=1)
    subsample_fraction: float = Field(default_factory=lambda: settings.subsample_fraction, gt=0, le=1)
    seed: int = Field(default=0, ge=0)
    ndpm: CreditRiskConfig = Field(default_factory=default_ndpm_config)
    dpm: CreditRiskConfig = Field(default_factory=default_dpm_config)
    report_epsilon: float = Field(default_factory=lambda: settings.report_epsilon, gt=0)
    actual_loss_clip: float = Field(default_factory=lambda: settings.actual_loss_clip, gt=0)
    holdout: bool = False
    train_fraction: float = Field(default=0.8, gt=0, lt=1)

    @classmethod
    def build(cls, **values) -> "ExperimentConfig":
        try:
            return cls(**values)
        except ValidationError as e:
            raise InvalidConfig(f"invalid experiment config: {e.errors()[0]['msg']}") from e

    def run_budget(self) -> PrivacyParams:
        """Per-run DPM accountant budget: model budget plus the report reserve."""
        model = self.dpm.resolved_budget()
        return PrivacyParams.of(model.epsilon + self.report_epsilon, model.delta)


def _train_and_score(
    train: Dataset,
    test: Dataset,
    config: CreditRiskConfig,
    accountant: Optional[PrivacyAccountant],
    seed: int,
) -> Tuple[int, StageTimings]:
    stage_times: Dict[str, float] = {}
    model = train_credit_risk_model(
        train, config, accountant=accountant, rng=np.random.default_rng(seed), seed=seed, timings=stage_times
    )
    start = time.perf_counter()
    predicted = total_expected_loss(predict_losses(model, test))
    timings = StageTimings(
        preprocess_s=stage_times.get("preprocess_s", 0.0),
        train_s=stage_times.get("train_s", 0.0),
        predict_s=time.perf_counter() - start,
    )
    return predicted, timings


def run_once(
    dataset: Dataset,
    run_id: int,
    config: ExperimentConfig,
    accountant_factory: AccountantFactory,
) -> RunReport:
    """
    Execute one run.

    Args:
        dataset: Full portfolio
        run_id: Run number; the run seed is config.seed XOR run_id
        config: Protocol settings
        accountant_factory: Makes the run's fresh DPM accountant

    Returns:
        RunReport
    """
    run_seed = config.seed ^ run_id
    sample = subsample(dataset, config.subsample_fraction, run_seed)
    if config.holdout:
        train, test = split(sample, SplitSpec(train_fraction=config.train_fraction, seed=run_seed))
    else:
        train = test = sample

    losses = [actual_loss(record) for record in test]
    actual_total = sum(losses)

    ndpm_total, ndpm_timings = _train_and_score(train, test, config.ndpm, None, run_seed)

    accountant = accountant_factory()
    dpm_total, dpm_timings = _train_and_score(train, test, config.dpm, accountant, run_seed)

    accountant.consume("evaluation.dp_actual_total", PrivacyParams(epsilon=config.report_epsilon))
    noisy_dollars = dp_sum(
        [cents / 100 for cents in losses],
        ClippingBounds(lower=0.0, upper=config.actual_loss_clip),
        config.report_epsilon,
        np.random.default_rng([run_seed, 1]),
    )

    report = RunReport(
        run_id=run_id,
        actual_total=actual_total,
        dp_actual_total=int(round(noisy_dollars * 100)),
        predicted_total_ndpm=ndpm_total,
        predicted_total_dpm=dpm_total,
        timings={"ndpm": ndpm_timings, "dpm": dpm_timings},
    )
    logger.info(
        "Finished run",
        run_id=run_id,
        records=len(test),
        actual_total=report.actual_total,
        predicted_ndpm=report.predicted_total_ndpm,
        predicted_dpm=report.predicted_total_dpm,
        spent_epsilon=accountant.spent.epsilon,
    )
    return report


def run_experiment(
    dataset: Dataset,
    config: Optional[ExperimentConfig] = None,
    accountant_factory: Optional[AccountantFactory] = None,
    threads: int = 1,
) -> List[RunReport]:
    """
    Run the NDPM vs DPM protocol n_runs times.

    Runs are independent (own seed, own accountant) and may execute on a
    thread pool; reports come back sorted by run_id and do not depend on
    the thread count.

    Args:
        dataset: Full portfolio
        config: Protocol settings (defaults from settings)
        accountant_factory: Fresh accountant per DPM run (default: run_budget())
        threads: Worker threads

    Returns:
        Reports for runs 1..n_runs
    """
    config = config or ExperimentConfig()
    if accountant_factory is None:
        budget = config.run_budget()
        accountant_factory = lambda: PrivacyAccountant(budget)

    def execute(run_id: int) -> RunReport:
        try:
            return run_once(dataset, run_id, config, accountant_factory)
        except PrivRiskError as e:
            logger.error("Run failed", run_id=run_id, error=str(e), error_type=type(e).__name__)
            raise RunFailed(run_id, e) from e

    run_ids = range(1, config.n_runs + 1)
    logger.info(
        "Starting experiment",
        runs=config.n_runs,
        records=len(dataset),
        fraction=config.subsample_fraction,
        holdout=config.holdout,
        threads=threads,
    )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(execute, run_ids))
    else:
        reports = [execute(run_id) for run_id in run_ids]
    return sorted(reports, key=lambda r: r.run_id)
