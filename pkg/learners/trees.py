"""
Regression trees stored as flat node arrays.

Node i is a leaf when feature[i] == -1; otherwise rows with
x[feature[i]] <= threshold[i] go to left[i] and the rest to right[i].
Trees are grown on gradient statistics (g, h): a split scores
G_L^2/(H_L + lambda) + G_R^2/(H_R + lambda) - G^2/(H + lambda). Regression
on targets y uses g = y, h = 1, lambda = 0, which is variance reduction.
"""
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence
import numpy as np
from privacy import ClippingBounds
from .config import SplitStrategy

LEAF = -1

# Leaf value from the row indices that reach the leaf.
LeafFn = Callable[[np.ndarray], float]


class TreeNode(NamedTuple):
    """Read-only view of one node."""
    feature: int
    threshold: float
    left: int
    right: int
    value: float

    @property
    def is_leaf(self) -> bool:
        return self.feature == LEAF


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat-array regression tree."""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        for name, dtype in (("feature", np.int64), ("threshold", float), ("left", np.int64),
                            ("right", np.int64), ("value", float)):
            array = np.array(getattr(self, name), dtype=dtype).reshape(-1)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        if not self.feature.size == self.threshold.size == self.left.size == self.right.size == self.value.size:
            raise ValueError("tree arrays must have equal length")
        if self.feature.size == 0:
            raise ValueError("a tree needs at least one node")

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    @property
    def nodes(self) -> List[TreeNode]:
        return [
            TreeNode(int(f), float(t), int(l), int(r), float(v))
            for f, t, l, r, v in zip(self.feature, self.threshold, self.left, self.right, self.value)
        ]

    def apply(self, rows: np.ndarray) -> np.ndarray:
        """Index of the leaf each row lands in."""
        node = np.zeros(rows.shape[0], dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.nonzero(active)[0]
            current = node[idx]
            go_left = rows[idx, self.feature[current]] <= self.threshold[current]
            node[idx] = np.where(go_left, self.left[current], self.right[current])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def predict_rows(self, rows: np.ndarray) -> np.ndarray:
        return self.value[self.apply(rows)]


class _Builder:
    """Preorder node lists filled while growing."""

    def __init__(self):
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def add(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def tree(self) -> Tree:
        return Tree(self.feature, self.threshold, self.left, self.right, self.value)


def best_greedy_split(
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    features: Sequence[int],
    reg_lambda: float,
    min_samples_leaf: int,
) -> Optional[tuple]:
    """
    Best (feature, threshold, gain) over the candidate features, or None.

    Thresholds are midpoints between distinct sorted values. Ties keep the
    first candidate in (feature order, position) order.
    """
    n = g.size
    if n < 2 * min_samples_leaf:
        return None
    g_total, h_total = g.sum(), h.sum()
    parent = g_total ** 2 / (h_total + reg_lambda) if h_total + reg_lambda > 0 else 0.0
    best = None
    for f in features:
        order = np.argsort(rows[:, f], kind="stable")
        x = rows[order, f]
        g_left = np.cumsum(g[order])[:-1]
        h_left = np.cumsum(h[order])[:-1]
        g_right, h_right = g_total - g_left, h_total - h_left
        count_left = np.arange(1, n)
        valid = (x[:-1] < x[1:]) & (count_left >= min_samples_leaf) & (n - count_left >= min_samples_leaf)
        valid &= (h_left + reg_lambda > 0) & (h_right + reg_lambda > 0)
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = g_left ** 2 / (h_left + reg_lambda) + g_right ** 2 / (h_right + reg_lambda) - parent
        gain = np.where(valid, gain, -np.inf)
        k = int(np.argmax(gain))
        if best is None or gain[k] > best[2]:
            best = (int(f), float((x[k] + x[k + 1]) / 2.0), float(gain[k]))
    if best is None or not best[2] > 1e-12 * max(1.0, abs(parent)):
        return None
    return best


def grow_greedy(
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    leaf_fn: LeafFn,
    max_depth: int,
    reg_lambda: float,
    min_samples_leaf: int,
    max_features: Optional[int],
    rng: np.random.Generator,
) -> Tree:
    """
    Grow a tree by exhaustive split search on (g, h).

    Args:
        rows: Training rows
        g, h: Per-row gradient statistics
        leaf_fn: Leaf value from the row indices reaching a leaf
        max_depth: Depth limit (0 = single leaf)
        reg_lambda: Hessian regularizer in the split score
        min_samples_leaf: Smallest allowed child
        max_features: Features sampled per node (None = all)
        rng: Stream for feature sampling
    """
    builder = _Builder()
    d = rows.shape[1]

    def grow(index: np.ndarray, depth: int) -> int:
        node = builder.add()
        split = None
        if depth < max_depth and d > 0:
            if max_features is None or max_features >= d:
                features = range(d)
            else:
                features = np.sort(rng.choice(d, size=max_features, replace=False))
            split = best_greedy_split(rows[index], g[index], h[index], features, reg_lambda, min_samples_leaf)
        if split is None:
            builder.value[node] = float(leaf_fn(index))
            return node
        feature, threshold, _ = split
        go_left = rows[index, feature] <= threshold
        builder.feature[node] = feature
        builder.threshold[node] = threshold
        builder.left[node] = grow(index[go_left], depth + 1)
        builder.right[node] = grow(index[~go_left], depth + 1)
        return node

    grow(np.arange(rows.shape[0]), 0)
    return builder.tree()


def grow_random(
    rows: np.ndarray,
    bounds: Sequence[ClippingBounds],
    leaf_fn: LeafFn,
    max_depth: int,
    rng: np.random.Generator,
) -> Tree:
    """
    Grow a complete tree whose splits ignore the data.

    Each internal node draws a feature uniformly and a threshold uniformly
    inside that feature's schema bounds. Every path reaches max_depth, so
    the sequence of draws (and therefore the structure) depends only on rng.
    Rows are routed only to hand each leaf its index set.
    """
    builder = _Builder()
    d = len(bounds)

    def grow(index: np.ndarray, depth: int) -> int:
        node = builder.add()
        if depth >= max_depth or d == 0:
            builder.value[node] = float(leaf_fn(index))
            return node
        feature = int(rng.integers(d))
        threshold = float(rng.uniform(bounds[feature].lower, bounds[feature].upper))
        go_left = rows[index, feature] <= threshold
        builder.feature[node] = feature
        builder.threshold[node] = threshold
        builder.left[node] = grow(index[go_left], depth + 1)
        builder.right[node] = grow(index[~go_left], depth + 1)
        return node

    grow(np.arange(rows.shape[0]), 0)
    return builder.tree()


def grow_tree(
    strategy: SplitStrategy,
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    bounds: Sequence[ClippingBounds],
    leaf_fn: LeafFn,
    max_depth: int,
    reg_lambda: float,
    min_samples_leaf: int,
    max_features: Optional[int],
    rng: np.random.Generator,
) -> Tree:
    """Dispatch to the greedy or random grower."""
    if strategy is SplitStrategy.RANDOM:
        return grow_random(rows, bounds, leaf_fn, max_depth, rng)
    return grow_greedy(rows, g, h, leaf_fn, max_depth, reg_lambda, min_samples_leaf, max_features, rng)
