"""Credit-risk arithmetic and the PD/EAD/LGD model bundle."""
from .formulas import (
    actual_loss,
    ccf,
    expected_loss,
    lgd,
    predicted_ead,
    recovery_rate,
    total_expected_loss,
)
from .model import (
    CreditRiskConfig,
    CreditRiskModel,
    Hyperparameters,
    LgdLearner,
    LossBreakdown,
    PdLearner,
    loss_frame,
    predict_losses,
    score_matrix,
    train_credit_risk_model,
    write_loss_csv,
)

__all__ = [
    "actual_loss",
    "ccf",
    "expected_loss",
    "lgd",
    "predicted_ead",
    "recovery_rate",
    "total_expected_loss",
    "CreditRiskConfig",
    "CreditRiskModel",
    "Hyperparameters",
    "LgdLearner",
    "LossBreakdown",
    "PdLearner",
    "loss_frame",
    "predict_losses",
    "score_matrix",
    "train_credit_risk_model",
    "write_loss_csv",
]
