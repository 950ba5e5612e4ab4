"""From-scratch learners trainable in EXACT or PRIVATE mode."""
from .config import SplitStrategy, TrainConfig
from .trees import LEAF, Tree, TreeNode
from .linear import (
    Link,
    LinearModel,
    logistic_loss_and_gradient,
    sigmoid,
    squared_loss_and_gradient,
    train_linear,
    train_logistic,
)
from .forest import ForestModel, train_random_forest
from .gbt import GbtModel, log_loss, train_gbt
from .predict import Model, predict

__all__ = [
    "SplitStrategy",
    "TrainConfig",
    "LEAF",
    "Tree",
    "TreeNode",
    "Link",
    "LinearModel",
    "logistic_loss_and_gradient",
    "sigmoid",
    "squared_loss_and_gradient",
    "train_linear",
    "train_logistic",
    "ForestModel",
    "train_random_forest",
    "GbtModel",
    "log_loss",
    "train_gbt",
    "Model",
    "predict",
]
