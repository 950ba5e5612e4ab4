"""
Differential privacy mechanisms.

Every mechanism is a pure function of its inputs and an explicit
numpy Generator, so identical (inputs, params, seed) give identical output.
None of them touch an accountant; callers consume budget first.
"""
import math
from typing import Sequence
import numpy as np
from core.errors import EmptyInput, InvalidParams
from .params import ClippingBounds, PrivacyParams

MEDIAN_GRID_INTERVALS = 10_000


def _check_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise InvalidParams(f"{name} must be positive and finite, got {value}")


def laplace_scale(sensitivity: float, epsilon: float) -> float:
    """Laplace scale b = sensitivity / epsilon."""
    _check_positive("sensitivity", sensitivity)
    _check_positive("epsilon", epsilon)
    return sensitivity / epsilon


def gaussian_sigma(sensitivity: float, params: PrivacyParams) -> float:
    """
    Classical Gaussian calibration.

    sigma = sensitivity * sqrt(2 ln(1.25 / delta)) / epsilon
    """
    _check_positive("sensitivity", sensitivity)
    if not 0 < params.delta < 1:
        raise InvalidParams(f"gaussian mechanism needs delta in (0, 1), got {params.delta}")
    return sensitivity * math.sqrt(2.0 * math.log(1.25 / params.delta)) / params.epsilon


def laplace(true_value: float, sensitivity: float, epsilon: float, rng: np.random.Generator) -> float:
    """
    Add Laplace noise calibrated to sensitivity / epsilon.

    Args:
        true_value: Exact answer
        sensitivity: L1 sensitivity of the query
        epsilon: Privacy-loss bound for this release
        rng: Random stream

    Returns:
        Noisy answer
    """
    scale = laplace_scale(sensitivity, epsilon)
    return float(true_value + rng.laplace(0.0, scale))


def gaussian(true_value: float, sensitivity: float, params: PrivacyParams, rng: np.random.Generator) -> float:
    """Add N(0, sigma^2) noise with the classical (epsilon, delta) calibration."""
    sigma = gaussian_sigma(sensitivity, params)
    return float(true_value + rng.normal(0.0, sigma))


def gaussian_vector(
    true_value: np.ndarray,
    sensitivity: float,
    params: PrivacyParams,
    rng: np.random.Generator
) -> np.ndarray:
    """Add i.i.d. calibrated Gaussian noise to every coordinate (L2 sensitivity)."""
    sigma = gaussian_sigma(sensitivity, params)
    value = np.asarray(true_value, dtype=float)
    return value + rng.normal(0.0, sigma, size=value.shape)


def dp_sum(
    values: Sequence[float] | np.ndarray,
    bounds: ClippingBounds,
    epsilon: float,
    rng: np.random.Generator
) -> float:
    """
    Clipped sum released with the Laplace mechanism.

    Each value is clipped into bounds; adding or removing one record then
    moves the sum by at most max(|lower|, |upper|).
    """
    clipped = np.clip(np.asarray(values, dtype=float), bounds.lower, bounds.upper)
    total = math.fsum(clipped.tolist()) if clipped.size else 0.0
    return laplace(total, bounds.sum_sensitivity, epsilon, rng)


def dp_count(n: int, epsilon: float, rng: np.random.Generator) -> float:
    """Record count released with the Laplace mechanism (sensitivity 1)."""
    return laplace(float(n), 1.0, epsilon, rng)


def dp_median(
    values: Sequence[float] | np.ndarray,
    bounds: ClippingBounds,
    epsilon: float,
    rng: np.random.Generator,
    grid_intervals: int = MEDIAN_GRID_INTERVALS,
) -> float:
    """
    Median via the exponential mechanism over a fixed grid.

    Candidates are lower + k * width / grid_intervals for k = 0..grid_intervals,
    so the candidate set never depends on the data. A candidate c has
    utility -|#{x < c} - #{x > c}| over the clipped values, which moves by
    at most 1 when one record is added or removed. Sampling uses the
    Gumbel-max form of the mechanism; np.argmax keeps the lowest candidate
    when sampled scores tie.

    Args:
        values: Non-empty sample
        bounds: Clipping bounds from schema metadata
        epsilon: Privacy-loss bound for this release
        rng: Random stream
        grid_intervals: Number of equal grid steps across the bounds (even keeps the midpoint)

    Returns:
        Selected grid point, inside bounds
    """
    _check_positive("epsilon", epsilon)
    if grid_intervals < 1:
        raise InvalidParams(f"grid_intervals must be at least 1, got {grid_intervals}")
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise EmptyInput("dp_median needs at least one value")

    clipped = np.sort(np.clip(data, bounds.lower, bounds.upper))
    # integer numerator first so midpoints and round fractions land exactly
    candidates = bounds.lower + (np.arange(grid_intervals + 1) * bounds.width) / grid_intervals
    below = np.searchsorted(clipped, candidates, side="left")
    above = clipped.size - np.searchsorted(clipped, candidates, side="right")
    utility = -np.abs(below - above).astype(float)
    scores = (epsilon / 2.0) * utility + rng.gumbel(0.0, 1.0, size=candidates.size)
    return float(candidates[int(np.argmax(scores))])
