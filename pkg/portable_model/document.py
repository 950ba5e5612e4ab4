"""
Portable model document schema.

A document is self-contained: model parameters, the fitted preprocessing
pipeline and metadata. Trees are flat node arrays; child indices always
point forward, so loading never recurses and cannot loop.
"""
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from learners.linear import Link
from preprocess.steps import StepKind
from privacy import Mode

FORMAT_VERSION = "1"
FILE_SUFFIX = ".dpcm.json"


class ModelKind(str, Enum):
    LINEAR = "LINEAR"
    LOGISTIC = "LOGISTIC"
    FOREST = "FOREST"
    GBT = "GBT"
    CREDIT_RISK_BUNDLE = "CREDIT_RISK_BUNDLE"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _require_finite(values: List[float]) -> List[float]:
    for value in values:
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value}")
    return values


class TreeArrays(_Strict):
    """One tree as parallel node arrays; feature -1 marks a leaf."""
    feature: List[int]
    threshold: List[float]
    left: List[int]
    right: List[int]
    value: List[float]

    @field_validator("threshold", "value")
    @classmethod
    def _finite(cls, values: List[float]) -> List[float]:
        return _require_finite(values)

    @model_validator(mode="after")
    def _check_structure(self) -> "TreeArrays":
        n = len(self.feature)
        if n == 0:
            raise ValueError("tree has no nodes")
        if not len(self.threshold) == len(self.left) == len(self.right) == len(self.value) == n:
            raise ValueError("tree arrays differ in length")
        for i in range(n):
            if self.feature[i] == -1:
                if self.left[i] != -1 or self.right[i] != -1:
                    raise ValueError(f"leaf node {i} has children")
            elif self.feature[i] < 0:
                raise ValueError(f"node {i} has invalid feature {self.feature[i]}")
            elif not (i < self.left[i] < n and i < self.right[i] < n):
                raise ValueError(f"node {i} has child index out of order or range")
        return self


class LinearParameters(_Strict):
    weights: List[float]
    intercept: float
    link: Link

    @field_validator("weights")
    @classmethod
    def _finite(cls, values: List[float]) -> List[float]:
        return _require_finite(values)


class ForestParameters(_Strict):
    n_features: int = Field(..., ge=0)
    trees: List[TreeArrays] = Field(..., min_length=1)


class GbtParameters(_Strict):
    n_features: int = Field(..., ge=0)
    base_score: float
    learning_rate: float = Field(..., gt=0, le=1)
    trees: List[TreeArrays]


class ComponentModel(_Strict):
    """A single model nested inside a bundle."""
    model_kind: ModelKind
    parameters: Dict[str, Any]


class BundleParameters(_Strict):
    pd: ComponentModel
    ccf: ComponentModel
    lgd_nonzero: ComponentModel
    lgd_rate: ComponentModel


PARAMETER_MODELS = {
    ModelKind.LINEAR: LinearParameters,
    ModelKind.LOGISTIC: LinearParameters,
    ModelKind.FOREST: ForestParameters,
    ModelKind.GBT: GbtParameters,
    ModelKind.CREDIT_RISK_BUNDLE: BundleParameters,
}


class StepDocument(_Strict):
    kind: StepKind
    params: Dict[str, Any]


class PipelineDocument(_Strict):
    """Serialized fitted pipeline (see preprocess.Pipeline.to_dict)."""
    mode: Mode
    numeric_columns: List[str]
    categorical_columns: List[str]
    column_names: List[str]
    feature_bounds: List[Tuple[float, float]]
    steps: List[StepDocument]

    @model_validator(mode="after")
    def _check_layout(self) -> "PipelineDocument":
        if len(self.feature_bounds) != len(self.column_names):
            raise ValueError("one bound pair per column is required")
        return self


class PortableModelDocument(_Strict):
    """Top-level document; parameters are validated against model_kind separately."""
    format_version: str
    model_kind: ModelKind
    column_names: List[str]
    input_columns: List[str]
    parameters: Dict[str, Any]
    pipeline: Optional[PipelineDocument] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)
