"""
JSON run configuration for train/evaluate/budget.

Every section is optional; omitted values fall back to core.config.settings.
Unknown keys anywhere in the file are rejected.
"""
import json
from pathlib import Path
from typing import Dict, List, Optional, Union
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from core.config import settings
from core.errors import InvalidConfig, InvalidParams
from core.logging import get_logger
from credit_risk import CreditRiskConfig, Hyperparameters, LgdLearner, PdLearner
from evaluation import ExperimentConfig, default_dpm_config
from loans import Dataset, GeneratorConfig, SplitSpec, generate_synthetic, load_csv
from privacy import BudgetPlan, Mode, PrivacyParams

logger = get_logger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SyntheticSection(_Section):
    """Synthetic portfolio used when no source file is given."""
    n: int = Field(default=20_000, ge=1, description="Number of loans")
    seed: int = Field(default=0, ge=0, description="Generator seed")
    default_rate: float = Field(default_factory=lambda: settings.synthetic_default_rate, ge=0, le=1)


class DataSection(_Section):
    source: Optional[str] = Field(default=None, description="Loan CSV path; overrides synthetic")
    strict: bool = Field(default=True, description="Fail on the first invalid row instead of skipping it")
    synthetic: SyntheticSection = Field(default_factory=SyntheticSection)


class SplitSection(_Section):
    holdout: bool = Field(default=False, description="Train on the train part and score the test part")
    train_fraction: float = Field(default=0.8, gt=0, lt=1)
    seed: int = Field(default=0, ge=0)


class PrivacySection(_Section):
    mode: Mode = Mode.PRIVATE
    epsilon: float = Field(default_factory=lambda: settings.default_epsilon, gt=0)
    delta: float = Field(default_factory=lambda: settings.default_delta, ge=0, lt=1)
    budget_plan: Dict[str, float] = Field(default_factory=lambda: dict(settings.budget_plan_map))

    def budget(self) -> PrivacyParams:
        return PrivacyParams.of(self.epsilon, self.delta)


class ModelSet(_Section):
    """Hyperparameter overrides for the four component models."""
    pd: Hyperparameters = Field(default_factory=Hyperparameters)
    ccf: Hyperparameters = Field(default_factory=Hyperparameters)
    lgd_nonzero: Hyperparameters = Field(default_factory=Hyperparameters)
    lgd_rate: Hyperparameters = Field(default_factory=Hyperparameters)


def _private_model_set() -> ModelSet:
    dpm = default_dpm_config()
    return ModelSet(pd=dpm.pd, ccf=dpm.ccf, lgd_nonzero=dpm.lgd_nonzero, lgd_rate=dpm.lgd_rate)


class ModelsSection(_Section):
    pd_learner: PdLearner = PdLearner.GBT
    lgd_learner: LgdLearner = LgdLearner.GBT_FOREST
    correlation_threshold: float = Field(default_factory=lambda: settings.correlation_threshold, gt=0, le=1)
    drop_columns: Optional[List[str]] = None
    exact: ModelSet = Field(default_factory=ModelSet, description="Overrides for EXACT (NDPM) training")
    private: ModelSet = Field(default_factory=_private_model_set, description="Overrides for PRIVATE (DPM) training")


class EvaluationSection(_Section):
    n_runs: int = Field(default_factory=lambda: settings.evaluation_runs, ge=1)
    subsample_fraction: float = Field(default_factory=lambda: settings.subsample_fraction, gt=0, le=1)
    report_epsilon: float = Field(default_factory=lambda: settings.report_epsilon, gt=0)
    actual_loss_clip: float = Field(default_factory=lambda: settings.actual_loss_clip, gt=0)


class OutputSection(_Section):
    directory: str = Field(default_factory=lambda: settings.output_directory)


class RunConfigFile(_Section):
    """A complete, reproducible run description."""
    seed: int = Field(default=0, ge=0, description="Master seed")
    data: DataSection = Field(default_factory=DataSection)
    split: SplitSection = Field(default_factory=SplitSection)
    privacy: PrivacySection = Field(default_factory=PrivacySection)
    models: ModelsSection = Field(default_factory=ModelsSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @classmethod
    def load(cls, path: Optional[Union[str, Path]]) -> "RunConfigFile":
        """
        Read a config file; None yields the all-defaults config.

        Raises:
            InvalidConfig: unreadable JSON, unknown keys or invalid values
        """
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            config = cls.model_validate(data)
        except json.JSONDecodeError as e:
            raise InvalidConfig(f"{path}: invalid JSON: {e.msg} at line {e.lineno}") from e
        except UnicodeDecodeError as e:
            raise InvalidConfig(f"{path}: not UTF-8 text (byte {e.start})") from e
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(part) for part in first["loc"])
            raise InvalidConfig(f"{path}: {where}: {first['msg']}") from e
        try:
            BudgetPlan(config.privacy.budget_plan)
        except InvalidParams as e:
            raise InvalidConfig(f"{path}: privacy.budget_plan: {e}") from e
        logger.debug("Loaded run config", path=str(path))
        return config

    def with_overrides(self, seed: Optional[int] = None, out_dir: Optional[str] = None) -> "RunConfigFile":
        """Apply the --seed and --out-dir command-line flags."""
        update = {}
        if seed is not None:
            update["seed"] = seed
        if out_dir is not None:
            update["output"] = OutputSection(directory=out_dir)
        return self.model_copy(update=update)

    @property
    def output_directory(self) -> Path:
        return Path(self.output.directory)

    def credit_risk_config(self, mode: Optional[Mode] = None) -> CreditRiskConfig:
        """Training config for one mode (defaults to privacy.mode)."""
        mode = mode or self.privacy.mode
        models = self.models.private if mode is Mode.PRIVATE else self.models.exact
        return CreditRiskConfig.build(
            mode=mode,
            budget=self.privacy.budget() if mode is Mode.PRIVATE else None,
            budget_plan=self.privacy.budget_plan,
            pd_learner=self.models.pd_learner,
            lgd_learner=self.models.lgd_learner,
            pd=models.pd,
            ccf=models.ccf,
            lgd_nonzero=models.lgd_nonzero,
            lgd_rate=models.lgd_rate,
            correlation_threshold=self.models.correlation_threshold,
            drop_columns=self.models.drop_columns,
        )

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig.build(
            n_runs=self.evaluation.n_runs,
            subsample_fraction=self.evaluation.subsample_fraction,
            seed=self.seed,
            ndpm=self.credit_risk_config(Mode.EXACT),
            dpm=self.credit_risk_config(Mode.PRIVATE),
            report_epsilon=self.evaluation.report_epsilon,
            actual_loss_clip=self.evaluation.actual_loss_clip,
            holdout=self.split.holdout,
            train_fraction=self.split.train_fraction,
        )

    def split_spec(self) -> SplitSpec:
        return SplitSpec(train_fraction=self.split.train_fraction, seed=self.split.seed)

    def load_dataset(self) -> Dataset:
        """The configured source CSV, or the synthetic portfolio."""
        if self.data.source is not None:
            return load_csv(self.data.source, strict=self.data.strict)
        synthetic = self.data.synthetic
        return generate_synthetic(
            synthetic.n, synthetic.seed, GeneratorConfig.build(default_rate=synthetic.default_rate)
        )
