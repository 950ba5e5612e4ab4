"""Privacy parameter and clipping-bound value types."""
from enum import Enum
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from core.errors import InvalidParams


class Mode(str, Enum):
    """Whether a fit sees data exactly or only through DP queries."""
    EXACT = "EXACT"
    PRIVATE = "PRIVATE"


class PrivacyParams(BaseModel):
    """An (epsilon, delta) pair. delta = 0 means pure DP."""
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(..., description="Privacy-loss bound")
    delta: float = Field(default=0.0, description="Failure probability")

    @model_validator(mode="after")
    def _check(self) -> "PrivacyParams":
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 <= self.delta < 1:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")
        return self

    @classmethod
    def of(cls, epsilon: float, delta: float = 0.0) -> "PrivacyParams":
        """Build params, raising InvalidParams instead of a pydantic error."""
        try:
            return cls(epsilon=epsilon, delta=delta)
        except ValidationError as e:
            raise InvalidParams(str(e.errors()[0]["msg"])) from e

    def scaled(self, fraction: float) -> "PrivacyParams":
        """Return this budget multiplied by a positive fraction."""
        return PrivacyParams.of(self.epsilon * fraction, self.delta * fraction)


class ClippingBounds(BaseModel):
    """Closed interval every released value is clipped into."""
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float

    @model_validator(mode="after")
    def _check(self) -> "ClippingBounds":
        if not self.lower < self.upper:
            raise ValueError(f"lower must be < upper, got [{self.lower}, {self.upper}]")
        return self

    @classmethod
    def of(cls, lower: float, upper: float) -> "ClippingBounds":
        """Build bounds, raising InvalidParams instead of a pydantic error."""
        try:
            return cls(lower=lower, upper=upper)
        except ValidationError as e:
            raise InvalidParams(str(e.errors()[0]["msg"])) from e

    @property
    def sum_sensitivity(self) -> float:
        """Largest change one record's presence makes to a clipped sum."""
        return max(abs(self.lower), abs(self.upper))

    @property
    def width(self) -> float:
        return self.upper - self.lower
