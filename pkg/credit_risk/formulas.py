"""
Credit-risk arithmetic.

Currency arguments and results are integer cents. Ratios are floats in [0, 1].
"""
from typing import Iterable, Union
import numpy as np
from core.errors import InvalidAmounts, OutOfRange
from loans.schema import LoanRecord


def _round_cents(value: float) -> int:
    """Round a non-negative cent amount half-up."""
    return int(np.floor(value + 0.5))


def ccf(total_funded_amount: int, total_recovered_principal: int) -> float:
    """
    Credit conversion factor: share of the funded amount still owed at default.

    Args:
        total_funded_amount: Funded amount (cents, > 0)
        total_recovered_principal: Principal repaid before default (cents)

    Returns:
        (funded - recovered) / funded
    """
    if total_funded_amount <= 0:
        raise InvalidAmounts(f"total_funded_amount must be positive, got {total_funded_amount}")
    if not 0 <= total_recovered_principal <= total_funded_amount:
        raise InvalidAmounts(
            f"total_recovered_principal ({total_recovered_principal}) must be in "
            f"[0, total_funded_amount ({total_funded_amount})]"
        )
    return (total_funded_amount - total_recovered_principal) / total_funded_amount


def predicted_ead(total_funded_amount: int, predicted_ccf: float) -> int:
    """
    Exposure at default from a (possibly out-of-range) predicted CCF.

    Args:
        total_funded_amount: Funded amount (cents, > 0)
        predicted_ccf: Model output; clipped to [0, 1]

    Returns:
        funded * ccf in cents, never above funded
    """
    if total_funded_amount <= 0:
        raise InvalidAmounts(f"total_funded_amount must be positive, got {total_funded_amount}")
    factor = float(np.clip(predicted_ccf, 0.0, 1.0))
    return min(total_funded_amount, _round_cents(total_funded_amount * factor))


def recovery_rate(recoveries: int, ead: int) -> float:
    """Recoveries over exposure, clipped to [0, 1]; 0 when exposure is 0."""
    if ead <= 0:
        return 0.0
    return float(np.clip(recoveries / ead, 0.0, 1.0))


def lgd(recovery_rate: float) -> float:
    """Loss given default = 1 - recovery rate."""
    if not 0.0 <= recovery_rate <= 1.0:
        raise OutOfRange(f"recovery_rate must be in [0, 1], got {recovery_rate}")
    return 1.0 - recovery_rate


def expected_loss(pd: float, ead: int, lgd_value: float) -> int:
    """pd * ead * lgd, rounded to cents."""
    return _round_cents(pd * ead * lgd_value)


def total_expected_loss(breakdowns: Iterable[Union[int, "object"]]) -> int:
    """
    Sum of per-record expected losses.

    Args:
        breakdowns: LossBreakdown objects or plain cent amounts

    Returns:
        Total in cents (exact integer sum, order-independent)
    """
    return sum(int(getattr(b, "expected_loss", b)) for b in breakdowns)


def actual_loss(record: LoanRecord) -> int:
    """
    Realized loss of one loan in cents.

    Zero unless defaulted; otherwise funded - recovered principal -
    post-default recoveries, floored at zero.
    """
    if not record.defaulted:
        return 0
    return max(0, record.total_funded_amount - record.total_recovered_principal - record.recoveries)


def predicted_ead_array(funded: np.ndarray, predicted_ccf: np.ndarray) -> np.ndarray:
    """Vectorized predicted_ead over cent arrays."""
    funded = np.asarray(funded, dtype=np.int64)
    factor = np.clip(np.asarray(predicted_ccf, dtype=float), 0.0, 1.0)
    ead = np.floor(funded * factor + 0.5).astype(np.int64)
    return np.minimum(ead, funded)


def expected_loss_array(pd: np.ndarray, ead: np.ndarray, lgd_values: np.ndarray) -> np.ndarray:
    """Vectorized expected_loss in cents."""
    return np.floor(np.asarray(pd) * np.asarray(ead, dtype=float) * np.asarray(lgd_values) + 0.5).astype(np.int64)
