"""Schema-compatible synthetic loan portfolio generator."""
from typing import Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from core.config import settings
from core.errors import InvalidConfig
from core.logging import get_logger
from .schema import PURPOSES, Dataset, LoanRecord, LoanStatus, Provenance

logger = get_logger(__name__)

_STATES = (
    "CA", "NY", "TX", "FL", "IL", "NJ", "PA", "OH", "GA", "VA", "NC", "MI", "MA", "MD", "AZ",
    "WA", "CO", "MN", "MO", "CT", "NV", "IN", "TN", "OR", "WI", "AL", "SC", "LA", "KY", "OK",
    "KS", "UT", "AR", "NM", "HI", "NH", "RI", "WV", "MS", "DE", "MT", "DC", "AK", "WY", "VT",
    "SD", "NE", "ME", "ID", "ND", "PR",
)
_HOME_OWNERSHIP = ("MORTGAGE", "RENT", "OWN", "NONE", "OTHER")
_HOME_WEIGHTS = (0.48, 0.40, 0.11, 0.005, 0.005)
_PURPOSE_WEIGHTS = (0.55, 0.22, 0.06, 0.03, 0.02, 0.02, 0.02, 0.01, 0.01, 0.01, 0.01, 0.005, 0.005, 0.035)
# Added to the latent risk score per purpose.
_PURPOSE_RISK = {"small_business": 0.6, "medical": 0.3, "moving": 0.3, "credit_card": -0.2, "car": -0.2}


class GeneratorConfig(BaseModel):
    """Synthetic generator parameters."""
    model_config = ConfigDict(extra="forbid")

    default_rate: float = Field(default_factory=lambda: settings.synthetic_default_rate, ge=0, le=1)
    recovery_probability: float = Field(default_factory=lambda: settings.synthetic_recovery_probability, ge=0, le=1)
    missing_rate: float = Field(default_factory=lambda: settings.synthetic_missing_rate, ge=0, lt=1)

    @classmethod
    def build(cls, **overrides) -> "GeneratorConfig":
        """Build config, raising InvalidConfig on bad values."""
        try:
            return cls(**overrides)
        except ValidationError as e:
            raise InvalidConfig(f"invalid generator config: {e.errors()[0]['msg']}") from e


def _state_weights() -> np.ndarray:
    weights = np.ones(len(_STATES))
    # Population-ish skew toward the large states.
    weights[:10] = [14, 8, 8, 7, 4, 4, 3.5, 3.5, 3.5, 3]
    return weights / weights.sum()


def generate_synthetic(n: int, seed: int, config: Optional[GeneratorConfig] = None) -> Dataset:
    """
    Generate a synthetic portfolio.

    A latent risk score built from interest rate, term, dti, income and
    purpose decides which loans default: the round(default_rate * n)
    highest scores do. Defaulted loans carry partial principal repayment
    and, with probability recovery_probability, positive recoveries.

    Args:
        n: Number of records (>= 1)
        seed: Random seed
        config: Generator parameters (defaults from settings)

    Returns:
        Dataset with provenance SYNTHETIC
    """
    if n < 1:
        raise InvalidConfig(f"n must be >= 1, got {n}")
    config = config or GeneratorConfig()
    rng = np.random.default_rng(seed)

    term = np.where(rng.random(n) < 0.75, 36, 60)
    z = rng.normal(size=n)
    interest = np.clip(13.0 + 3.5 * z + 2.0 * (term == 60) + rng.normal(0, 1.0, n), 5.31, 30.99).round(2)
    income = np.clip(rng.lognormal(np.log(65_000), 0.5, n), 4_000, 300_000).round(0)
    dti = np.clip(18.0 + 6.0 * rng.normal(size=n) + 2.0 * z, 0.0, 45.0).round(2)
    funded = (np.clip(rng.lognormal(np.log(12_000), 0.6, n), 1_000, 40_000) / 25).round() * 25
    top_up = np.where(rng.random(n) < 0.05, (rng.integers(1, 20, n) * 25), 0)
    loan_amount = np.minimum(funded + top_up, 40_000)
    states = rng.choice(len(_STATES), size=n, p=_state_weights())
    zips = rng.integers(10, 999, n)
    homes = rng.choice(len(_HOME_OWNERSHIP), size=n, p=_HOME_WEIGHTS)
    purpose_weights = np.asarray(_PURPOSE_WEIGHTS) / np.sum(_PURPOSE_WEIGHTS)
    purposes = rng.choice(len(PURPOSES), size=n, p=purpose_weights)

    purpose_risk = np.array([_PURPOSE_RISK.get(PURPOSES[p], 0.0) for p in purposes])
    score = (
        0.35 * (interest - 13.0)
        + 0.4 * (term == 60)
        + 0.05 * (dti - 18.0)
        - 0.5 * np.log(income / 65_000)
        + purpose_risk
        + rng.normal(0, 0.8, n)
    )
    n_default = int(round(config.default_rate * n))
    defaulted = np.zeros(n, dtype=bool)
    if n_default:
        defaulted[np.argsort(-score, kind="stable")[:n_default]] = True

    status_draw = rng.random(n)
    repaid_fraction = rng.beta(1.5, 3.5, n)
    current_fraction = rng.beta(2.0, 2.0, n)
    has_recovery = rng.random(n) < config.recovery_probability
    # Homeowners recover more; longer terms recover less.
    recovery_rate = np.clip(rng.beta(2.0, 8.0, n) + 0.06 * (homes == 0) - 0.03 * (term == 60), 0.01, 0.95)
    missing = rng.random((n, 3)) < config.missing_rate

    records = []
    for i in range(n):
        funded_cents = int(funded[i]) * 100
        if defaulted[i]:
            status = LoanStatus.CHARGED_OFF if status_draw[i] < 0.9 else LoanStatus.DEFAULT
            recovered = int(round(funded_cents * repaid_fraction[i]))
            exposure = funded_cents - recovered
            recoveries = max(1, int(round(exposure * recovery_rate[i]))) if has_recovery[i] and exposure > 0 else 0
        else:
            if status_draw[i] < 0.60:
                status = LoanStatus.FULLY_PAID
                recovered = funded_cents
            else:
                status = (
                    LoanStatus.CURRENT if status_draw[i] < 0.95
                    else LoanStatus.LATE if status_draw[i] < 0.98
                    else LoanStatus.IN_GRACE
                )
                recovered = int(round(funded_cents * current_fraction[i]))
            recoveries = 0

        records.append(LoanRecord(
            member_id=f"M{i:07d}",
            loan_amount=int(loan_amount[i]) * 100,
            total_funded_amount=funded_cents,
            term_months=int(term[i]),
            interest_rate=None if missing[i, 0] else float(interest[i]),
            annual_income=None if missing[i, 1] else int(income[i]) * 100,
            dti=None if missing[i, 2] else float(dti[i]),
            state=_STATES[states[i]],
            zip_code=f"{int(zips[i]):03d}xx",
            home_ownership=_HOME_OWNERSHIP[homes[i]],
            purpose=PURPOSES[purposes[i]],
            loan_status=status,
            total_recovered_principal=recovered,
            recoveries=recoveries,
        ))

    logger.info(
        "Generated synthetic portfolio",
        records=n,
        seed=seed,
        defaulted=int(defaulted.sum()),
        default_rate=config.default_rate,
    )
    return Dataset(records=tuple(records), provenance=Provenance.SYNTHETIC)
