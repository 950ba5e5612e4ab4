"""
Linear and logistic regression by full-batch gradient descent.

Training runs on features mapped to [0, 1] by their schema bounds so one
step size fits every column; the fitted weights are mapped back, and
LinearModel always scores raw feature rows.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple
import numpy as np
from core.errors import EmptyInput, InvalidParams, NonFiniteLoss, SingleClass
from core.logging import get_logger
from preprocess.matrix import FeatureMatrix
from privacy import ClippingBounds, Mode, PrivacyAccountant, PrivacyParams, gaussian_vector
from .config import TrainConfig, debit, derive_streams, resolve_rng

logger = get_logger(__name__)

PROBABILITY_EPS = 1e-12


class Link(str, Enum):
    IDENTITY = "IDENTITY"
    LOGIT = "LOGIT"


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function, kept strictly inside (0, 1)."""
    p = np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=float)))
    return np.clip(p, PROBABILITY_EPS, 1.0 - PROBABILITY_EPS)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Weights per feature column, an intercept and a link."""
    weights: np.ndarray
    intercept: float
    link: Link = Link.IDENTITY

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).reshape(-1)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def n_features(self) -> int:
        return self.weights.size

    def decision(self, rows: np.ndarray) -> np.ndarray:
        return rows @ self.weights + self.intercept

    def predict_rows(self, rows: np.ndarray) -> np.ndarray:
        z = self.decision(rows)
        return sigmoid(z) if self.link is Link.LOGIT else z


def squared_loss_and_gradient(
    theta: np.ndarray, rows: np.ndarray, targets: np.ndarray, l2: float
) -> Tuple[float, np.ndarray]:
    """
    Mean half squared error with an L2 penalty on the weights.

    theta is (weights..., intercept); the intercept is not penalized.
    """
    w, b = theta[:-1], theta[-1]
    residual = rows @ w + b - targets
    n = targets.size
    loss = 0.5 * float(residual @ residual) / n + 0.5 * l2 * float(w @ w)
    grad = np.append(rows.T @ residual / n + l2 * w, residual.mean())
    return loss, grad


def logistic_loss_and_gradient(
    theta: np.ndarray, rows: np.ndarray, labels: np.ndarray, l2: float
) -> Tuple[float, np.ndarray]:
    """Mean log-loss with an L2 penalty on the weights."""
    w, b = theta[:-1], theta[-1]
    z = rows @ w + b
    n = labels.size
    loss = float(np.mean(np.logaddexp(0.0, z) - labels * z)) + 0.5 * l2 * float(w @ w)
    error = np.exp(-np.logaddexp(0.0, -z)) - labels
    grad = np.append(rows.T @ error / n + l2 * w, error.mean())
    return loss, grad


def _per_record_gradients(theta: np.ndarray, rows: np.ndarray, targets: np.ndarray, link: Link) -> np.ndarray:
    """Unpenalized loss gradient of each record, shape (n, d + 1)."""
    z = rows @ theta[:-1] + theta[-1]
    fitted = np.exp(-np.logaddexp(0.0, -z)) if link is Link.LOGIT else z
    error = fitted - targets
    return np.column_stack([rows * error[:, None], error])


def _scale(rows: np.ndarray, bounds: Sequence[ClippingBounds]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    lower = np.array([b.lower for b in bounds])
    width = np.array([b.width for b in bounds])
    return (rows - lower) / width, lower, width


def _unscale(theta: np.ndarray, lower: np.ndarray, width: np.ndarray) -> Tuple[np.ndarray, float]:
    w = theta[:-1] / width
    return w, float(theta[-1] - w @ lower)


def _fit(
    matrix: FeatureMatrix,
    targets: np.ndarray,
    config: TrainConfig,
    link: Link,
    accountant: Optional[PrivacyAccountant],
    rng: Optional[np.random.Generator],
    query_id: str,
) -> LinearModel:
    if matrix.n_rows == 0:
        raise EmptyInput("cannot train on an empty matrix")
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (matrix.n_rows,) or not np.isfinite(targets).all():
        raise InvalidParams("targets must be finite with one value per row")

    loss_fn = logistic_loss_and_gradient if link is Link.LOGIT else squared_loss_and_gradient
    rows, lower, width = _scale(matrix.rows, matrix.feature_bounds)
    n, d = rows.shape
    theta = np.zeros(d + 1)

    if config.mode is Mode.EXACT:
        loss = float("nan")
        for iteration in range(config.iterations):
            loss, grad = loss_fn(theta, rows, targets, config.l2)
            if not np.isfinite(loss) or not np.isfinite(grad).all():
                raise NonFiniteLoss(f"loss diverged at iteration {iteration}; lower the step size")
            if np.linalg.norm(grad) < config.tolerance:
                break
            theta = theta - config.step_size * grad
        logger.debug("Fitted GLM", link=link.value, mode="EXACT", iterations=iteration + 1, loss=loss)
    else:
        debit(config, accountant, query_id, pure=False)
        _, noise_rng = derive_streams(resolve_rng(config, rng))
        per_iteration = PrivacyParams(
            epsilon=config.privacy.epsilon / config.iterations,
            delta=config.privacy.delta / config.iterations,
        )
        clip = config.gradient_clip
        for _ in range(config.iterations):
            grads = _per_record_gradients(theta, rows, targets, link)
            norms = np.linalg.norm(grads, axis=1)
            grads = grads * np.minimum(1.0, clip / np.maximum(norms, 1e-300))[:, None]
            noisy = gaussian_vector(grads.sum(axis=0), clip, per_iteration, noise_rng) / n
            noisy[:-1] += config.l2 * theta[:-1]
            theta = theta - config.step_size * noisy
            if not np.isfinite(theta).all():
                raise NonFiniteLoss("private gradient descent diverged; lower the step size")
        logger.debug("Fitted GLM", link=link.value, mode="PRIVATE", iterations=config.iterations)

    weights, intercept = _unscale(theta, lower, width)
    return LinearModel(weights=weights, intercept=intercept, link=link)


def train_linear(
    matrix: FeatureMatrix,
    targets: np.ndarray,
    config: TrainConfig,
    accountant: Optional[PrivacyAccountant] = None,
    rng: Optional[np.random.Generator] = None,
    query_id: str = "train_linear",
) -> LinearModel:
    """
    Fit least-squares regression.

    EXACT runs gradient descent until the gradient norm falls below the
    tolerance or the iteration limit is hit. PRIVATE runs every iteration
    with per-record gradients clipped to L2 norm gradient_clip and Gaussian
    noise on their sum, the budget split evenly over iterations.

    Args:
        matrix: Training features
        targets: One finite target per row
        config: Hyperparameters (and privacy share in PRIVATE mode)
        accountant: Accountant debited once upfront (PRIVATE)
        rng: Random stream (defaults to config.seed)
        query_id: Ledger identifier

    Returns:
        LinearModel with identity link
    """
    return _fit(matrix, targets, config, Link.IDENTITY, accountant, rng, query_id)


def train_logistic(
    matrix: FeatureMatrix,
    labels: np.ndarray,
    config: TrainConfig,
    accountant: Optional[PrivacyAccountant] = None,
    rng: Optional[np.random.Generator] = None,
    query_id: str = "train_logistic",
) -> LinearModel:
    """Fit logistic regression (see train_linear); both classes must be present."""
    labels = np.asarray(labels, dtype=float)
    if len(np.unique(labels)) < 2:
        raise SingleClass("logistic regression needs both classes in the labels")
    return _fit(matrix, labels, config, Link.LOGIT, accountant, rng, query_id)
