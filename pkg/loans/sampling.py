"""Deterministic train/test splits and subsamples."""
from typing import Tuple
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from core.errors import EmptyInput, InvalidFraction
from core.logging import get_logger
from .schema import Dataset

logger = get_logger(__name__)


class SplitSpec(BaseModel):
    """Train fraction and seed of a split."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    train_fraction: float = Field(default=0.8, gt=0, lt=1)
    seed: int = Field(default=0, ge=0, lt=2**64)


def _sample_positions(n: int, k: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Positions of k sampled records and of the rest, each in original order."""
    order = np.random.default_rng(seed).permutation(n)
    return np.sort(order[:k]), np.sort(order[k:])


def split(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset]:
    """
    Partition a dataset into train and test parts.

    Args:
        dataset: Non-empty dataset
        spec: Train fraction and seed

    Returns:
        (train, test) with |train| = round(train_fraction * n)
    """
    n = len(dataset)
    if n == 0:
        raise EmptyInput("cannot split an empty dataset")
    k = int(round(spec.train_fraction * n))
    train_pos, test_pos = _sample_positions(n, k, spec.seed)
    logger.debug("Split dataset", records=n, train=len(train_pos), test=len(test_pos), seed=spec.seed)
    return dataset.select(train_pos), dataset.select(test_pos)


def subsample(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """
    Keep round(fraction * n) records chosen by seed.

    Args:
        dataset: Source dataset
        fraction: In (0, 1]; 1.0 returns the dataset unchanged
        seed: Random seed

    Returns:
        Sampled dataset, original record order preserved
    """
    if not 0 < fraction <= 1:
        raise InvalidFraction(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1:
        return dataset
    n = len(dataset)
    k = int(round(fraction * n))
    sampled, _ = _sample_positions(n, k, seed)
    return dataset.select(sampled)
