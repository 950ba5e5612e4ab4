"""Gradient boosted trees for binary classification (Newton boosting on log-loss)."""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence
import numpy as np
from core.config import settings
from core.errors import EmptyInput, SingleClass
from core.logging import get_logger
from preprocess.matrix import FeatureMatrix
from privacy import ClippingBounds, Mode, PrivacyAccountant, dp_count, dp_sum
from .config import TrainConfig, debit, derive_streams, resolve_rng
from .linear import sigmoid
from .trees import Tree, grow_tree

logger = get_logger(__name__)

GRADIENT_BOUNDS = ClippingBounds(lower=-1.0, upper=1.0)
HESSIAN_BOUNDS = ClippingBounds(lower=0.0, upper=0.25)
LABEL_BOUNDS = ClippingBounds(lower=0.0, upper=1.0)
# Keeps the base score finite when a (noisy) label mean hits 0 or 1.
BASE_RATE_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class GbtModel:
    """sigmoid(base_score + learning_rate * sum of tree outputs)."""
    base_score: float
    trees: Sequence[Tree]
    learning_rate: float
    n_features: int

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "base_score", float(self.base_score))

    def raw_score(self, rows: np.ndarray) -> np.ndarray:
        score = np.full(rows.shape[0], self.base_score)
        for tree in self.trees:
            score = score + self.learning_rate * tree.predict_rows(rows)
        return score

    def predict_rows(self, rows: np.ndarray) -> np.ndarray:
        return sigmoid(self.raw_score(rows))


def log_loss(labels: np.ndarray, raw_score: np.ndarray) -> float:
    """Mean log-loss of raw (logit) scores."""
    return float(np.mean(np.logaddexp(0.0, raw_score) - labels * raw_score))


def _logit(p: float) -> float:
    p = min(max(p, BASE_RATE_EPS), 1.0 - BASE_RATE_EPS)
    return math.log(p / (1.0 - p))


def _newton_leaf(g: np.ndarray, h: np.ndarray, reg_lambda: float):
    def leaf(index: np.ndarray) -> float:
        denominator = h[index].sum() + reg_lambda
        return float(-g[index].sum() / denominator) if denominator > 0 else 0.0
    return leaf


def _private_newton_leaf(g: np.ndarray, h: np.ndarray, reg_lambda: float, epsilon: float, rng: np.random.Generator):
    def leaf(index: np.ndarray) -> float:
        g_sum = dp_sum(g[index], GRADIENT_BOUNDS, epsilon / 2.0, rng)
        h_sum = max(0.0, dp_sum(h[index], HESSIAN_BOUNDS, epsilon / 2.0, rng))
        denominator = h_sum + reg_lambda
        return float(-g_sum / denominator) if denominator > 0 else 0.0
    return leaf


def train_gbt(
    matrix: FeatureMatrix,
    labels: np.ndarray,
    config: TrainConfig,
    accountant: Optional[PrivacyAccountant] = None,
    rng: Optional[np.random.Generator] = None,
    query_id: str = "train_gbt",
) -> GbtModel:
    """
    Fit a boosted tree classifier.

    Each round fits a tree to g = p - y, h = p(1 - p) with leaf value
    -G/(H + lambda). PRIVATE mode splits its share into rounds + 1 equal
    parts: one for the base score (noisy label sum over noisy count) and one
    per round, where every leaf releases G (g clipped to [-1, 1]) and H
    (bounds [0, 0.25]) through dp_sum with half of the round share each.

    Args:
        matrix: Training features
        labels: 0/1 labels, both classes present
        config: Hyperparameters (rounds, max_depth, learning_rate, reg_lambda)
        accountant: Accountant debited once upfront (PRIVATE)
        rng: Random stream (defaults to config.seed)
        query_id: Ledger identifier

    Returns:
        GbtModel
    """
    if matrix.n_rows == 0:
        raise EmptyInput("cannot train boosted trees on an empty matrix")
    labels = np.asarray(labels, dtype=float)
    if len(np.unique(labels)) < 2:
        raise SingleClass("boosted trees need both classes in the labels")

    debit(config, accountant, query_id, pure=True)
    structure_seed, noise_rng = derive_streams(resolve_rng(config, rng))
    rows = matrix.rows
    n, d = rows.shape
    depth = config.depth_or(settings.gbt_max_depth)
    private = config.mode is Mode.PRIVATE
    part = config.privacy.epsilon / (config.rounds + 1) if private else None

    if private:
        total = dp_sum(labels, LABEL_BOUNDS, part / 2.0, noise_rng)
        count = dp_count(n, part / 2.0, noise_rng)
        base_score = _logit(total / max(1.0, count))
    else:
        base_score = _logit(labels.sum() / n)

    raw = np.full(n, base_score)
    trees: List[Tree] = []
    for r in range(config.rounds):
        p = sigmoid(raw)
        g = p - labels
        h = p * (1.0 - p)
        if private:
            leaf_fn = _private_newton_leaf(np.clip(g, -1.0, 1.0), h, config.reg_lambda, part, noise_rng)
        else:
            leaf_fn = _newton_leaf(g, h, config.reg_lambda)
        tree = grow_tree(
            config.split_strategy, rows, g, h, matrix.feature_bounds, leaf_fn,
            depth, config.reg_lambda, config.min_samples_leaf, config.max_features,
            np.random.default_rng(structure_seed ^ r),
        )
        trees.append(tree)
        raw = raw + config.learning_rate * tree.predict_rows(rows)
        if not private and (r + 1) % 25 == 0:
            logger.debug("Boosting round", round=r + 1, loss=log_loss(labels, raw))

    logger.info(
        "Trained GBT",
        mode=config.mode.value,
        rounds=len(trees),
        depth=depth,
        split_strategy=config.split_strategy.value,
        rows=n,
    )
    return GbtModel(base_score=base_score, trees=trees, learning_rate=config.learning_rate, n_features=d)
