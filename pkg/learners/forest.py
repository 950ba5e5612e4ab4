"""Random forest regression, exact or with noisy leaf aggregates."""
import math
from dataclasses import dataclass
from typing import Optional, Sequence
import numpy as np
from core.config import settings
from core.errors import EmptyInput, InvalidParams
from core.logging import get_logger
from preprocess.matrix import FeatureMatrix
from privacy import ClippingBounds, Mode, PrivacyAccountant, dp_count, dp_sum
from .config import SplitStrategy, TrainConfig, debit, derive_streams, resolve_rng
from .trees import Tree, grow_tree

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class ForestModel:
    """Mean of regression trees."""
    trees: Sequence[Tree]
    n_features: int

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        if not self.trees:
            raise ValueError("a forest needs at least one tree")

    def predict_rows(self, rows: np.ndarray) -> np.ndarray:
        return np.mean([tree.predict_rows(rows) for tree in self.trees], axis=0)


def _private_leaf(targets: np.ndarray, bounds: ClippingBounds, epsilon: float, rng: np.random.Generator):
    """Leaf mean from a noisy clipped sum over a noisy count, clipped to the label bounds."""
    def leaf(index: np.ndarray) -> float:
        total = dp_sum(targets[index], bounds, epsilon / 2.0, rng)
        count = dp_count(index.size, epsilon / 2.0, rng)
        return float(np.clip(total / max(1.0, count), bounds.lower, bounds.upper))
    return leaf


def _mean_leaf(targets: np.ndarray):
    def leaf(index: np.ndarray) -> float:
        return float(targets[index].sum() / max(1, index.size))
    return leaf


def train_random_forest(
    matrix: FeatureMatrix,
    targets: np.ndarray,
    config: TrainConfig,
    accountant: Optional[PrivacyAccountant] = None,
    rng: Optional[np.random.Generator] = None,
    query_id: str = "train_random_forest",
) -> ForestModel:
    """
    Fit a random forest regressor.

    EXACT with GREEDY splits bootstraps each tree (when enabled), samples
    sqrt(d) features per node and uses mean leaves. RANDOM splits draw
    features and thresholds from schema bounds without looking at the data.
    PRIVATE releases each leaf as dp_sum(labels) / max(1, dp_count) with the
    per-tree share n_trees-th of the budget; leaves of one tree are disjoint
    so they all use that share.

    Args:
        matrix: Training features
        targets: One finite target per row
        config: Hyperparameters (n_trees, max_depth, ...) and privacy share
        accountant: Accountant debited once upfront (PRIVATE)
        rng: Random stream (defaults to config.seed)
        query_id: Ledger identifier

    Returns:
        ForestModel
    """
    if matrix.n_rows == 0:
        raise EmptyInput("cannot train a forest on an empty matrix")
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (matrix.n_rows,) or not np.isfinite(targets).all():
        raise InvalidParams("targets must be finite with one value per row")

    debit(config, accountant, query_id, pure=True)
    structure_seed, noise_rng = derive_streams(resolve_rng(config, rng))
    rows = matrix.rows
    n, d = rows.shape
    depth = config.depth_or(settings.forest_max_depth)
    max_features = config.max_features or max(1, int(math.sqrt(d)))
    per_tree = config.privacy.epsilon / config.n_trees if config.mode is Mode.PRIVATE else None

    trees = []
    for t in range(config.n_trees):
        tree_rng = np.random.default_rng(structure_seed ^ t)
        if config.bootstrap and config.split_strategy is SplitStrategy.GREEDY:
            sample = tree_rng.integers(n, size=n)
        else:
            sample = np.arange(n)
        x, y = rows[sample], targets[sample]
        if per_tree is not None:
            leaf_fn = _private_leaf(y, config.label_bounds, per_tree, noise_rng)
        else:
            leaf_fn = _mean_leaf(y)
        trees.append(grow_tree(
            config.split_strategy, x, y, np.ones_like(y), matrix.feature_bounds, leaf_fn,
            depth, 0.0, config.min_samples_leaf, max_features, tree_rng,
        ))

    logger.info(
        "Trained random forest",
        mode=config.mode.value,
        trees=len(trees),
        depth=depth,
        split_strategy=config.split_strategy.value,
        rows=n,
    )
    return ForestModel(trees=trees, n_features=d)
