"""Training configuration shared by every learner."""
from enum import Enum
from typing import Any, Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from core.config import settings
from core.errors import InvalidConfig, InvalidParams
from privacy import ClippingBounds, Mode, PrivacyAccountant, PrivacyParams


class SplitStrategy(str, Enum):
    """How tree splits are chosen."""
    GREEDY = "GREEDY"
    RANDOM = "RANDOM"


class TrainConfig(BaseModel):
    """
    Hyperparameters and privacy settings for one training call.

    PRIVATE mode needs a privacy share and always uses random,
    data-independent splits without bootstrap resampling.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(default=0, description="Seed used when no random stream is passed")
    mode: Mode = Field(default=Mode.EXACT)
    privacy: Optional[PrivacyParams] = Field(default=None, description="Budget share for this training call")
    label_bounds: ClippingBounds = Field(
        default_factory=lambda: ClippingBounds(lower=0.0, upper=1.0),
        description="Clipping bounds for regression labels in private leaves"
    )
    gradient_clip: float = Field(default_factory=lambda: settings.gradient_clip, gt=0)

    # Trees
    n_trees: int = Field(default_factory=lambda: settings.forest_trees, ge=1)
    rounds: int = Field(default_factory=lambda: settings.gbt_rounds, ge=0)
    max_depth: Optional[int] = Field(default=None, ge=0, description="Defaults per learner when unset")
    learning_rate: float = Field(default_factory=lambda: settings.gbt_learning_rate, gt=0, le=1)
    reg_lambda: float = Field(default_factory=lambda: settings.gbt_reg_lambda, ge=0)
    min_samples_leaf: int = Field(default=1, ge=1)
    max_features: Optional[int] = Field(default=None, ge=1, description="Features tried per greedy split (forest default sqrt(d))")
    bootstrap: bool = True
    split_strategy: SplitStrategy = SplitStrategy.GREEDY

    # Linear models
    iterations: int = Field(default_factory=lambda: settings.glm_iterations, ge=1)
    step_size: float = Field(default_factory=lambda: settings.glm_step_size, gt=0)
    l2: float = Field(default_factory=lambda: settings.glm_l2, ge=0)
    tolerance: float = Field(default=1e-8, gt=0)

    @model_validator(mode="before")
    @classmethod
    def _private_overrides(cls, data: Any) -> Any:
        if isinstance(data, dict) and str(getattr(data.get("mode"), "value", data.get("mode"))) == Mode.PRIVATE.value:
            data = dict(data)
            data["split_strategy"] = SplitStrategy.RANDOM
            data["bootstrap"] = False
        return data

    @model_validator(mode="after")
    def _check_privacy(self) -> "TrainConfig":
        if self.mode is Mode.PRIVATE and self.privacy is None:
            raise ValueError("PRIVATE training requires privacy parameters")
        return self

    @classmethod
    def build(cls, **values) -> "TrainConfig":
        """Build a config, raising InvalidConfig instead of a pydantic error."""
        try:
            return cls(**values)
        except ValidationError as e:
            raise InvalidConfig(f"invalid training config: {e.errors()[0]['msg']}") from e

    def depth_or(self, default: int) -> int:
        return default if self.max_depth is None else self.max_depth


def resolve_rng(config: TrainConfig, rng: Optional[np.random.Generator]) -> np.random.Generator:
    return np.random.default_rng(config.seed) if rng is None else rng


def derive_streams(rng: np.random.Generator) -> tuple[int, np.random.Generator]:
    """
    Split a stream into a structure seed and a noise stream.

    Structure draws (bootstrap, feature subsets, random splits) use the seed;
    mechanism noise uses the second stream, so tree structure does not depend
    on whether noise is drawn.
    """
    structure_seed, noise_seed = rng.integers(2**63, size=2)
    return int(structure_seed), np.random.default_rng(int(noise_seed))


def debit(
    config: TrainConfig,
    accountant: Optional[PrivacyAccountant],
    query_id: str,
    pure: bool,
) -> None:
    """
    Single upfront consume for a PRIVATE training call.

    Args:
        config: Training config holding the share
        accountant: Accountant to debit
        query_id: Ledger identifier
        pure: Debit epsilon only (tree learners use pure-epsilon mechanisms)
    """
    if config.mode is not Mode.PRIVATE:
        return
    if accountant is None:
        raise InvalidParams("PRIVATE training requires an accountant")
    cost = PrivacyParams(epsilon=config.privacy.epsilon) if pure else config.privacy
    accountant.consume(query_id, cost)
