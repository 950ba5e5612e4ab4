"""Configuration management using pydantic-settings."""
from typing import Literal
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Engine settings loaded from environment variables.

    Configuration priority (highest to lowest):
    1. Runtime environment variables
    2. .env file
    3. Defaults in this class

    Categories:
    - Application: Logging and output locations
    - Privacy: Default budget and how it is divided across pipeline stages
    - Models: Default hyperparameters surfaced in TrainConfig
    - Data: Synthetic generator defaults
    - Evaluation: Repeated-run protocol defaults

    Run-specific values live in the JSON run config (see cli.config_file);
    these settings only provide the defaults it falls back to.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # ============================================
    # APPLICATION
    # ============================================
    app_name: str = Field(
        default="privrisk",
        description="Application name"
    )
    app_version: str = Field(
        default="0.1.0",
        description="Application version"
    )
    debug: bool = Field(
        default=True,
        description="Render logs for humans (console) instead of JSON lines"
    )
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO",
        description="Logging level"
    )
    output_directory: str = Field(
        default="out",
        description="Default directory for model documents, ledgers and reports"
    )

    # ============================================
    # PRIVACY
    # ============================================
    default_epsilon: float = Field(
        default=8.0,
        description="Total epsilon for one end-to-end modeling run"
    )
    default_delta: float = Field(
        default=1e-5,
        description="Total delta for one end-to-end modeling run"
    )
    budget_plan: str = Field(
        default="preprocess=0.25,pd=0.25,ccf=0.25,lgd=0.25",
        description=(
            "Stage weights for splitting a run budget. "
            "Format: stage=weight,stage2=weight2 (weights must sum to at most 1)"
        )
    )
    budget_tolerance: float = Field(
        default=1e-12,
        description="Relative slack admitted when comparing spend against the budget (float summation)"
    )
    actual_loss_clip: float = Field(
        default=50_000.0,
        description="Upper clipping bound (dollars) for one loan's realized loss in DP totals"
    )

    # ============================================
    # MODELS
    # ============================================
    gbt_rounds: int = Field(default=100, description="Boosting rounds")
    gbt_max_depth: int = Field(default=3, description="Depth of each boosted tree")
    gbt_learning_rate: float = Field(default=0.1, description="Boosting shrinkage")
    gbt_reg_lambda: float = Field(default=1.0, description="L2 penalty on boosted leaf values")
    forest_trees: int = Field(default=100, description="Random forest size")
    forest_max_depth: int = Field(default=6, description="Depth of each forest tree")
    glm_iterations: int = Field(default=500, description="Gradient descent iterations for GLMs")
    glm_step_size: float = Field(default=0.1, description="Gradient descent step size for GLMs")
    glm_l2: float = Field(default=1e-4, description="L2 regularization for GLM weights")
    gradient_clip: float = Field(default=1.0, description="Per-record L2 gradient clip for private GLMs")
    correlation_threshold: float = Field(
        default=0.85,
        description="Absolute Pearson correlation above which the later column of a pair is dropped"
    )

    # ============================================
    # DATA
    # ============================================
    synthetic_default_rate: float = Field(
        default=0.12,
        description="Fraction of generated loans that end CHARGED_OFF/DEFAULT"
    )
    synthetic_recovery_probability: float = Field(
        default=0.6,
        description="Probability that a defaulted generated loan has post-default recoveries"
    )
    synthetic_missing_rate: float = Field(
        default=0.02,
        description="Probability that a nullable numeric field is left empty"
    )

    # ============================================
    # EVALUATION
    # ============================================
    evaluation_runs: int = Field(default=8, description="Number of repeated subsample runs")
    subsample_fraction: float = Field(default=0.5, description="Fraction of records per run")
    report_epsilon: float = Field(
        default=1.0,
        description="Epsilon reserved per private run for the DP actual-loss total"
    )

    @property
    def budget_plan_map(self) -> dict[str, float]:
        """Get the budget plan as a stage -> weight mapping."""
        mapping: dict[str, float] = {}
        for entry in self.budget_plan.split(","):
            entry = entry.strip()
            if not entry:
                continue
            if "=" not in entry:
                raise ValueError(
                    f"Invalid budget_plan entry '{entry}'. Expected format 'stage=weight'."
                )
            stage, weight = (part.strip() for part in entry.split("=", 1))
            if not stage:
                raise ValueError(f"Invalid budget_plan entry '{entry}'. Stage name required.")
            mapping[stage] = float(weight)
        return mapping


# Global settings instance
settings = Settings()
