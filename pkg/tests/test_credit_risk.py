"""Tests for credit-risk arithmetic and the three-model bundle."""
import math
import numpy as np
import pytest
from core.errors import BudgetExhausted, InvalidAmounts, InvalidParams, OutOfRange
from core.logging import configure_logging, get_logger
from credit_risk import (
    CreditRiskConfig,
    CreditRiskModel,
    Hyperparameters,
    LgdLearner,
    LossBreakdown,
    PdLearner,
    actual_loss,
    ccf,
    expected_loss,
    lgd,
    loss_frame,
    predict_losses,
    predicted_ead,
    recovery_rate,
    total_expected_loss,
    train_credit_risk_model,
    write_loss_csv,
)
from learners import ForestModel, GbtModel, LinearModel, Link
from loans import GeneratorConfig, LoanStatus, generate_synthetic
from preprocess import fit_pipeline
from privacy import Mode, PrivacyAccountant, PrivacyParams
from tests.conftest import make_dataset, make_record

configure_logging()
logger = get_logger(__name__)

SMALL = dict(
    pd=Hyperparameters(rounds=5, max_depth=2),
    ccf=Hyperparameters(n_trees=5, max_depth=3),
    lgd_nonzero=Hyperparameters(rounds=3, max_depth=2),
    lgd_rate=Hyperparameters(n_trees=3, max_depth=2),
)


def _constant(width: int, value: float) -> LinearModel:
    return LinearModel(weights=np.zeros(width), intercept=value, link=Link.IDENTITY)


# ============================================
# Formulas
# ============================================

def test_ccf():
    assert ccf(1_000_000, 250_000) == 0.75
    assert ccf(1_000_000, 0) == 1.0
    assert ccf(1_000_000, 1_000_000) == 0.0
    with pytest.raises(InvalidAmounts):
        ccf(1_000_000, 1_000_001)
    with pytest.raises(InvalidAmounts):
        ccf(0, 0)


def test_predicted_ead_clips_ccf():
    assert predicted_ead(2_000_000, 0.5) == 1_000_000
    assert predicted_ead(2_000_000, 0.0) == 0
    assert predicted_ead(2_000_000, 1.2) == 2_000_000
    assert predicted_ead(2_000_000, -0.3) == 0


def test_recovery_rate():
    assert recovery_rate(50_000, 200_000) == 0.25
    assert recovery_rate(0, 200_000) == 0.0
    assert recovery_rate(300_000, 200_000) == 1.0
    assert recovery_rate(100, 0) == 0.0


def test_lgd():
    assert lgd(0.25) == 0.75
    assert lgd(0.0) == 1.0
    assert lgd(1.0) == 0.0
    with pytest.raises(OutOfRange):
        lgd(1.5)


def test_expected_and_total_loss():
    assert expected_loss(0.5, 100_000, 0.4) == 20_000
    assert total_expected_loss([]) == 0
    assert total_expected_loss([20_000, 30_000, 0]) == 50_000
    assert total_expected_loss([0, 30_000, 20_000]) == 50_000


def test_actual_loss():
    assert actual_loss(make_record()) == 0
    defaulted = make_record(
        loan_status=LoanStatus.CHARGED_OFF, total_recovered_principal=250_000, recoveries=50_000
    )
    assert actual_loss(defaulted) == 700_000
    floored = make_record(loan_status=LoanStatus.DEFAULT, total_recovered_principal=900_000, recoveries=200_000)
    assert actual_loss(floored) == 0


# ============================================
# Composition
# ============================================

def test_predict_losses_with_constant_models(small_portfolio):
    """Constant components reproduce hand arithmetic per record."""
    pipeline = fit_pipeline(small_portfolio)
    width = pipeline.width
    model = CreditRiskModel(
        pipeline=pipeline,
        pd_model=_constant(width, 0.5),
        ccf_model=_constant(width, 0.8),
        lgd_nonzero=_constant(width, 0.5),
        lgd_rate=_constant(width, 0.4),
    )
    records = make_dataset(
        make_record(member_id="A", total_funded_amount=1_000_000),
        make_record(member_id="B", loan_amount=2_000_000, total_funded_amount=2_000_000, total_recovered_principal=2_000_000),
        make_record(member_id="C", loan_amount=500_000, total_funded_amount=500_000, total_recovered_principal=500_000),
    )
    breakdowns = predict_losses(model, records)
    assert [b.member_id for b in breakdowns] == ["A", "B", "C"]
    assert [b.ead for b in breakdowns] == [800_000, 1_600_000, 400_000]
    assert all(b.lgd == pytest.approx(0.8) for b in breakdowns)
    assert [b.expected_loss for b in breakdowns] == [320_000, 640_000, 160_000]
    assert total_expected_loss(breakdowns) == 1_120_000


def test_zero_pd_means_zero_loss(small_portfolio):
    pipeline = fit_pipeline(small_portfolio)
    width = pipeline.width
    model = CreditRiskModel(
        pipeline=pipeline,
        pd_model=_constant(width, 0.0),
        ccf_model=_constant(width, 1.5),
        lgd_nonzero=_constant(width, -1.0),
        lgd_rate=_constant(width, 2.0),
    )
    breakdowns = predict_losses(model, small_portfolio)
    assert total_expected_loss(breakdowns) == 0
    funded = small_portfolio.funded_cents()
    assert all(b.ead == f for b, f in zip(breakdowns, funded))
    assert all(b.lgd == 1.0 for b in breakdowns)


def test_loss_csv(tmp_path):
    breakdowns = [LossBreakdown(member_id="A", pd=0.5, ead=100_000, lgd=0.4, expected_loss=20_000)]
    frame = loss_frame(breakdowns)
    assert frame.loc[0, "ead"] == "1000.00"
    assert frame.loc[0, "expected_loss"] == "200.00"
    path = write_loss_csv(breakdowns, tmp_path / "losses.csv")
    assert path.read_text().splitlines() == ["member_id,pd,ead,lgd,expected_loss", "A,0.5,1000.00,0.4,200.00"]


# ============================================
# Training
# ============================================

def test_train_exact_bundle(small_portfolio):
    accountant = PrivacyAccountant(PrivacyParams.of(1.0))
    model = train_credit_risk_model(small_portfolio, CreditRiskConfig(**SMALL), accountant=accountant, seed=4)
    assert accountant.ledger == []
    assert isinstance(model.pd_model, GbtModel)
    assert isinstance(model.ccf_model, ForestModel)
    assert isinstance(model.lgd_nonzero, GbtModel)
    assert isinstance(model.lgd_rate, ForestModel)
    assert model.mode is Mode.EXACT
    assert model.metadata["trained_mode"] == "EXACT"
    assert model.metadata["records"] == len(small_portfolio)

    breakdowns = predict_losses(model, small_portfolio)
    for b, funded in zip(breakdowns, small_portfolio.funded_cents()):
        assert 0.0 <= b.pd <= 1.0 and 0.0 <= b.lgd <= 1.0
        assert 0 <= b.ead <= funded
        assert 0 <= b.expected_loss <= funded


def test_train_is_deterministic_per_seed(small_portfolio):
    config = CreditRiskConfig(**SMALL)
    a = predict_losses(train_credit_risk_model(small_portfolio, config, seed=2), small_portfolio)
    b = predict_losses(train_credit_risk_model(small_portfolio, config, seed=2), small_portfolio)
    assert a == b


def test_train_linear_families(small_portfolio):
    config = CreditRiskConfig(
        pd_learner=PdLearner.LOGISTIC,
        lgd_learner=LgdLearner.LOGISTIC_LINEAR,
        pd=Hyperparameters(iterations=100),
        ccf=Hyperparameters(iterations=100),
        lgd_nonzero=Hyperparameters(iterations=100),
        lgd_rate=Hyperparameters(iterations=100),
    )
    model = train_credit_risk_model(small_portfolio, config, seed=1)
    assert model.pd_model.link is Link.LOGIT
    assert model.ccf_model.link is Link.IDENTITY
    assert model.metadata["lgd_learner"] == "logistic+linear"


def test_train_private_spends_run_budget(small_portfolio):
    """Every stage debits its share; the total stays within the budget."""
    budget = PrivacyParams.of(8.0, 1e-5)
    accountant = PrivacyAccountant(budget)
    config = CreditRiskConfig(mode=Mode.PRIVATE, budget=budget, **SMALL)
    model = train_credit_risk_model(small_portfolio, config, accountant=accountant, seed=3)

    ids = [e.query_id for e in accountant.ledger]
    for query_id in ("train_gbt:pd", "train_random_forest:ccf", "train_gbt:lgd_nonzero", "train_random_forest:lgd_rate"):
        assert ids.count(query_id) == 1
    by_id = {e.query_id: e.cost.epsilon for e in accountant.ledger}
    assert by_id["train_gbt:pd"] == pytest.approx(2.0)
    assert by_id["train_gbt:lgd_nonzero"] == pytest.approx(1.0)
    assert accountant.spent.epsilon <= 8.0 + 1e-9
    assert math.isclose(accountant.spent.epsilon, 8.0)
    assert model.metadata["privacy"]["spent"]["epsilon"] == pytest.approx(8.0)
    assert model.pipeline.mode is Mode.PRIVATE


def test_train_private_needs_accountant(small_portfolio):
    with pytest.raises(InvalidParams):
        train_credit_risk_model(small_portfolio, CreditRiskConfig(mode=Mode.PRIVATE, **SMALL))


def test_train_private_short_budget(small_portfolio):
    accountant = PrivacyAccountant(PrivacyParams.of(1.0))
    config = CreditRiskConfig(mode=Mode.PRIVATE, budget=PrivacyParams.of(8.0), **SMALL)
    with pytest.raises(BudgetExhausted):
        train_credit_risk_model(small_portfolio, config, accountant=accountant)
    assert accountant.spent.epsilon <= 1.0


def test_private_bundle_collapses_to_exact(small_portfolio):
    """At a huge budget the private bundle predicts the exact random-split totals."""
    random_splits = {
        name: Hyperparameters(**{**params.overrides(), "split_strategy": "RANDOM", "bootstrap": False})
        for name, params in SMALL.items()
    }
    exact = train_credit_risk_model(small_portfolio, CreditRiskConfig(**random_splits), seed=6)
    budget = PrivacyParams.of(1e9, 1e-5)
    private = train_credit_risk_model(
        small_portfolio,
        CreditRiskConfig(mode=Mode.PRIVATE, budget=budget, **random_splits),
        accountant=PrivacyAccountant(budget),
        seed=6,
    )
    exact_total = total_expected_loss(predict_losses(exact, small_portfolio))
    private_total = total_expected_loss(predict_losses(private, small_portfolio))
    assert private_total == pytest.approx(exact_total, rel=0.01)
    assert private.pd_model.base_score == pytest.approx(exact.pd_model.base_score, abs=1e-3)


def test_no_recoveries_fits_constant_lgd_stages():
    """Without any recovered loan both LGD stages become constants and lgd is 1."""
    dataset = generate_synthetic(400, seed=3, config=GeneratorConfig.build(recovery_probability=0.0))
    model = train_credit_risk_model(dataset, CreditRiskConfig(**SMALL), seed=1)
    assert model.metadata["constant_stages"] == ["lgd_nonzero", "lgd_rate"]
    assert isinstance(model.lgd_nonzero, LinearModel) and model.lgd_nonzero.intercept == 0.0
    assert isinstance(model.lgd_rate, LinearModel) and model.lgd_rate.intercept == 0.0
    assert {b.lgd for b in predict_losses(model, dataset)} == {1.0}


def test_no_recoveries_private_keeps_ledger_shape():
    dataset = generate_synthetic(400, seed=3, config=GeneratorConfig.build(recovery_probability=0.0))
    budget = PrivacyParams.of(8.0, 1e-5)
    accountant = PrivacyAccountant(budget)
    config = CreditRiskConfig(mode=Mode.PRIVATE, budget=budget, **SMALL)
    model = train_credit_risk_model(dataset, config, accountant=accountant, seed=1)

    by_id = {e.query_id: e.cost.epsilon for e in accountant.ledger}
    assert by_id["train_gbt:lgd_nonzero"] == pytest.approx(1.0)
    assert by_id["train_random_forest:lgd_rate"] == pytest.approx(1.0)
    assert accountant.spent.epsilon == pytest.approx(8.0)
    assert 0.0 <= model.lgd_nonzero.intercept <= 1.0
    assert model.lgd_rate.intercept == 0.0


def test_all_recoveries_fits_constant_nonzero_stage():
    dataset = generate_synthetic(400, seed=3, config=GeneratorConfig.build(recovery_probability=1.0))
    model = train_credit_risk_model(dataset, CreditRiskConfig(**SMALL), seed=1)
    assert model.metadata["constant_stages"] == ["lgd_nonzero"]
    assert model.lgd_nonzero.intercept == 1.0
    assert isinstance(model.lgd_rate, ForestModel)
    for breakdown in predict_losses(model, dataset):
        assert 0.0 <= breakdown.lgd < 1.0
