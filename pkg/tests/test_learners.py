"""Tests for the GLM, random forest and boosted tree learners."""
import numpy as np
import pytest
from core.errors import BudgetExhausted, EmptyInput, InvalidConfig, InvalidParams, SingleClass, WidthMismatch
from core.logging import configure_logging, get_logger
from learners import (
    LEAF,
    ForestModel,
    GbtModel,
    Link,
    LinearModel,
    SplitStrategy,
    TrainConfig,
    log_loss,
    logistic_loss_and_gradient,
    predict,
    squared_loss_and_gradient,
    train_gbt,
    train_linear,
    train_logistic,
    train_random_forest,
)
from preprocess import FeatureMatrix
from privacy import ClippingBounds, Mode, PrivacyAccountant, PrivacyParams

configure_logging()
logger = get_logger(__name__)

HUGE = PrivacyParams.of(1e9)


def _features(n: int = 300, d: int = 3, seed: int = 0) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    bounds = ClippingBounds(lower=0.0, upper=10.0)
    return FeatureMatrix.from_columns(
        [(f"x{i}", rng.uniform(0, 10, n), bounds) for i in range(d)]
    )


def _labels(matrix: FeatureMatrix, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    score = matrix.rows[:, 0] - matrix.rows[:, 1] + rng.normal(0, 1.0, matrix.n_rows)
    return (score > 0).astype(float)


# ============================================
# TrainConfig
# ============================================

def test_private_config_requires_privacy():
    with pytest.raises(InvalidConfig):
        TrainConfig.build(mode=Mode.PRIVATE)


def test_private_config_forces_random_splits():
    config = TrainConfig.build(mode=Mode.PRIVATE, privacy=HUGE, split_strategy=SplitStrategy.GREEDY, bootstrap=True)
    assert config.split_strategy is SplitStrategy.RANDOM
    assert config.bootstrap is False


def test_config_rejects_unknown_fields():
    with pytest.raises(InvalidConfig):
        TrainConfig.build(trees=5)
    with pytest.raises(InvalidConfig):
        TrainConfig.build(learning_rate=0.0)


# ============================================
# GLMs
# ============================================

@pytest.mark.parametrize("loss_fn", [squared_loss_and_gradient, logistic_loss_and_gradient])
def test_glm_gradients_match_finite_differences(loss_fn):
    """Analytic gradients agree with central differences at random points."""
    rng = np.random.default_rng(8)
    rows = rng.normal(size=(50, 4))
    targets = (rng.random(50) < 0.4).astype(float)
    step = 1e-6
    for _ in range(10):
        theta = rng.normal(size=5)
        _, grad = loss_fn(theta, rows, targets, 0.1)
        numeric = np.zeros_like(theta)
        for k in range(theta.size):
            bump = np.zeros_like(theta)
            bump[k] = step
            numeric[k] = (loss_fn(theta + bump, rows, targets, 0.1)[0] - loss_fn(theta - bump, rows, targets, 0.1)[0]) / (2 * step)
        assert np.all(np.abs(numeric - grad) <= 1e-5 * np.maximum(1.0, np.abs(grad)))


def test_train_linear_recovers_exact_line():
    """y = 2x + 1 is recovered in raw feature units."""
    x = np.linspace(0, 10, 101)
    matrix = FeatureMatrix.from_columns([("x", x, ClippingBounds(lower=0.0, upper=10.0))])
    config = TrainConfig.build(l2=0.0, iterations=20_000, step_size=0.5, tolerance=1e-10)
    model = train_linear(matrix, 2 * x + 1, config)
    assert model.link is Link.IDENTITY
    assert model.weights[0] == pytest.approx(2.0, abs=1e-6)
    assert model.intercept == pytest.approx(1.0, abs=1e-6)
    assert predict(model, matrix) == pytest.approx(2 * x + 1, abs=1e-5)


def test_train_linear_validates_targets():
    matrix = _features(10)
    with pytest.raises(InvalidParams):
        train_linear(matrix, np.full(10, np.nan), TrainConfig())
    with pytest.raises(EmptyInput):
        train_linear(_features(0), np.zeros(0), TrainConfig())


def test_train_logistic_separates_classes():
    matrix = _features(400)
    labels = _labels(matrix)
    model = train_logistic(matrix, labels, TrainConfig.build(iterations=2_000, step_size=1.0))
    p = predict(model, matrix)
    assert ((p > 0.5) == (labels == 1)).mean() > 0.85
    assert model.weights[0] > 0 > model.weights[1]
    assert np.all((p > 0) & (p < 1))


def test_train_logistic_single_class():
    matrix = _features(20)
    with pytest.raises(SingleClass) as excinfo:
        train_logistic(matrix, np.ones(20), TrainConfig())
    assert excinfo.value.exit_code == 4


def test_private_linear_debits_once_with_delta():
    matrix = _features(200)
    targets = matrix.rows[:, 0] / 10
    budget = PrivacyParams.of(1.0, 1e-5)
    accountant = PrivacyAccountant(budget)
    config = TrainConfig.build(mode=Mode.PRIVATE, privacy=budget, iterations=50)
    model = train_linear(matrix, targets, config, accountant, np.random.default_rng(0), query_id="train_linear:ccf")
    assert isinstance(model, LinearModel)
    assert [(e.query_id, e.cost.epsilon, e.cost.delta) for e in accountant.ledger] == [("train_linear:ccf", 1.0, 1e-5)]


def test_private_linear_needs_accountant():
    config = TrainConfig.build(mode=Mode.PRIVATE, privacy=PrivacyParams.of(1.0, 1e-5))
    with pytest.raises(InvalidParams):
        train_linear(_features(20), np.zeros(20), config)


def test_private_linear_collapses_to_exact():
    """Huge budget and a loose clip reproduce exact gradient descent."""
    matrix = _features(200, d=2)
    targets = 0.3 * matrix.rows[:, 0] - 0.1 * matrix.rows[:, 1] + 2.0
    common = dict(iterations=200, step_size=0.5, l2=0.0, gradient_clip=1e6)
    exact = train_linear(matrix, targets, TrainConfig.build(**common))
    budget = PrivacyParams.of(1e15, 1e-5)
    private = train_linear(
        matrix, targets, TrainConfig.build(mode=Mode.PRIVATE, privacy=budget, **common),
        PrivacyAccountant(budget), np.random.default_rng(0),
    )
    assert private.weights == pytest.approx(exact.weights, abs=1e-3)
    assert private.intercept == pytest.approx(exact.intercept, abs=1e-3)


# ============================================
# Trees and forests
# ============================================

def test_single_greedy_split_is_exact():
    """One depth-1 tree finds the midpoint threshold and mean leaves."""
    x = np.array([1.0, 2.0, 3.0, 4.0])
    matrix = FeatureMatrix.from_columns([("x", x, ClippingBounds(lower=0.0, upper=5.0))])
    config = TrainConfig.build(n_trees=1, max_depth=1, bootstrap=False)
    forest = train_random_forest(matrix, np.array([0.0, 0.0, 1.0, 1.0]), config)
    tree = forest.trees[0]
    assert tree.n_nodes == 3 and tree.n_leaves == 2 and tree.depth == 1
    assert tree.feature.tolist() == [0, LEAF, LEAF]
    assert tree.threshold[0] == 2.5
    assert predict(forest, matrix).tolist() == [0.0, 0.0, 1.0, 1.0]


def test_random_split_trees_are_complete():
    matrix = _features(100)
    config = TrainConfig.build(n_trees=3, max_depth=3, split_strategy=SplitStrategy.RANDOM, bootstrap=False)
    forest = train_random_forest(matrix, np.zeros(100), config, rng=np.random.default_rng(1))
    for tree in forest.trees:
        assert tree.n_nodes == 15
        assert tree.depth == 3
        internal = tree.feature != LEAF
        assert np.all((tree.threshold[internal] >= 0) & (tree.threshold[internal] <= 10))


def test_forest_constant_target():
    matrix = _features(200)
    forest = train_random_forest(matrix, np.full(200, 0.4), TrainConfig.build(n_trees=5))
    assert predict(forest, matrix) == pytest.approx(np.full(200, 0.4))


def test_forest_is_deterministic_per_seed():
    matrix = _features(200)
    targets = matrix.rows[:, 0] / 10
    config = TrainConfig.build(n_trees=5, max_depth=4)
    a = train_random_forest(matrix, targets, config, rng=np.random.default_rng(3))
    b = train_random_forest(matrix, targets, config, rng=np.random.default_rng(3))
    assert np.array_equal(predict(a, matrix), predict(b, matrix))


def test_forest_fits_signal():
    matrix = _features(500)
    targets = matrix.rows[:, 0] / 10
    forest = train_random_forest(matrix, targets, TrainConfig.build(n_trees=20, max_depth=6, max_features=3))
    error = np.mean((predict(forest, matrix) - targets) ** 2)
    assert error < 0.1 * np.var(targets)


def test_private_forest_debits_pure_epsilon():
    matrix = _features(100)
    budget = PrivacyParams.of(2.0, 1e-5)
    accountant = PrivacyAccountant(budget)
    config = TrainConfig.build(mode=Mode.PRIVATE, privacy=budget, n_trees=4, max_depth=2)
    forest = train_random_forest(matrix, np.full(100, 0.5), config, accountant, np.random.default_rng(0))
    assert isinstance(forest, ForestModel)
    assert [(e.query_id, e.cost.epsilon, e.cost.delta) for e in accountant.ledger] == [("train_random_forest", 2.0, 0.0)]
    assert np.all((predict(forest, matrix) >= 0) & (predict(forest, matrix) <= 1))


def test_private_forest_collapses_to_exact():
    """Same seed: identical structure, leaves within 1e-3."""
    matrix = _features(300)
    targets = matrix.rows[:, 0] / 10
    common = dict(n_trees=4, max_depth=3, split_strategy=SplitStrategy.RANDOM, bootstrap=False)
    exact = train_random_forest(matrix, targets, TrainConfig.build(**common), rng=np.random.default_rng(5))
    private = train_random_forest(
        matrix, targets, TrainConfig.build(mode=Mode.PRIVATE, privacy=HUGE, **common),
        PrivacyAccountant(HUGE), np.random.default_rng(5),
    )
    for e, p in zip(exact.trees, private.trees):
        assert np.array_equal(e.feature, p.feature)
        assert np.array_equal(e.threshold, p.threshold)
        assert p.value == pytest.approx(e.value, abs=1e-3)


def test_private_training_stops_when_budget_is_short():
    accountant = PrivacyAccountant(PrivacyParams.of(0.5))
    config = TrainConfig.build(mode=Mode.PRIVATE, privacy=PrivacyParams.of(1.0), n_trees=2, max_depth=1)
    with pytest.raises(BudgetExhausted):
        train_random_forest(_features(50), np.zeros(50), config, accountant, np.random.default_rng(0))
    assert accountant.ledger == []


# ============================================
# Boosted trees
# ============================================

def test_gbt_training_loss_decreases():
    """On a separable set every added tree lowers the log-loss."""
    x = np.repeat(np.arange(10, dtype=float), 10)
    labels = (x >= 5).astype(float)
    matrix = FeatureMatrix.from_columns([("x", x, ClippingBounds(lower=0.0, upper=10.0))])
    model = train_gbt(matrix, labels, TrainConfig.build(rounds=10, learning_rate=0.3, max_depth=2))
    raw = np.full(x.size, model.base_score)
    losses = [log_loss(labels, raw)]
    for tree in model.trees:
        raw = raw + model.learning_rate * tree.predict_rows(matrix.rows)
        losses.append(log_loss(labels, raw))
    assert all(b < a for a, b in zip(losses, losses[1:]))
    assert model.base_score == pytest.approx(0.0)
    assert np.array_equal(predict(model, matrix) > 0.5, labels == 1)


def test_gbt_single_class():
    with pytest.raises(SingleClass):
        train_gbt(_features(20), np.zeros(20), TrainConfig.build(rounds=2))


def test_gbt_zero_rounds_predicts_base_rate():
    matrix = _features(100)
    labels = np.r_[np.ones(25), np.zeros(75)]
    model = train_gbt(matrix, labels, TrainConfig.build(rounds=0))
    assert isinstance(model, GbtModel)
    assert predict(model, matrix) == pytest.approx(np.full(100, 0.25))


def test_private_gbt_collapses_to_exact():
    matrix = _features(300)
    labels = _labels(matrix)
    common = dict(rounds=5, max_depth=2, learning_rate=0.3, split_strategy=SplitStrategy.RANDOM)
    exact = train_gbt(matrix, labels, TrainConfig.build(**common), rng=np.random.default_rng(9))
    accountant = PrivacyAccountant(HUGE)
    private = train_gbt(
        matrix, labels, TrainConfig.build(mode=Mode.PRIVATE, privacy=HUGE, **common),
        accountant, np.random.default_rng(9), query_id="train_gbt:pd",
    )
    assert private.base_score == pytest.approx(exact.base_score, abs=1e-3)
    for e, p in zip(exact.trees, private.trees):
        assert np.array_equal(e.threshold, p.threshold)
        assert p.value == pytest.approx(e.value, abs=1e-3)
    assert [e.query_id for e in accountant.ledger] == ["train_gbt:pd"]


def test_private_gbt_outputs_probabilities():
    matrix = _features(300)
    budget = PrivacyParams.of(1.0)
    config = TrainConfig.build(mode=Mode.PRIVATE, privacy=budget, rounds=5, max_depth=2)
    model = train_gbt(matrix, _labels(matrix), config, PrivacyAccountant(budget), np.random.default_rng(1))
    p = predict(model, matrix)
    assert np.all((p > 0) & (p < 1))


# ============================================
# predict
# ============================================

def test_predict_checks_width_and_type():
    model = LinearModel(weights=[1.0, 2.0], intercept=0.5)
    assert predict(model, np.array([[1.0, 1.0]])).tolist() == [3.5]
    with pytest.raises(WidthMismatch):
        predict(model, np.ones((2, 3)))
    with pytest.raises(TypeError):
        predict(object(), np.ones((1, 2)))
