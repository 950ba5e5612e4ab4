"""Model-agnostic scoring."""
from typing import Union
import numpy as np
from core.errors import WidthMismatch
from preprocess.matrix import FeatureMatrix
from .forest import ForestModel
from .gbt import GbtModel
from .linear import LinearModel

Model = Union[LinearModel, ForestModel, GbtModel]


def predict(model: Model, matrix: Union[FeatureMatrix, np.ndarray]) -> np.ndarray:
    """
    Score feature rows.

    Pure: never touches an accountant or a random stream.

    Args:
        model: Trained LinearModel, ForestModel or GbtModel
        matrix: FeatureMatrix or raw (n, d) array

    Returns:
        One prediction per row; probabilities for LOGIT and GBT models
    """
    if not isinstance(model, (LinearModel, ForestModel, GbtModel)):
        raise TypeError(f"unsupported model type {type(model).__name__}")
    rows = matrix.rows if isinstance(matrix, FeatureMatrix) else np.asarray(matrix, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != model.n_features:
        width = rows.shape[1] if rows.ndim == 2 else rows.ndim
        raise WidthMismatch(f"model expects {model.n_features} features, got {width}")
    return model.predict_rows(rows)
