"""Tests for report arithmetic, report files and the repeated-run experiment."""
from pathlib import Path
import pandas as pd
import pytest
from core.errors import DivisionByZero, EmptyInput, RunFailed, SchemaMismatch
from core.logging import configure_logging, get_logger
from credit_risk import CreditRiskConfig, Hyperparameters
from evaluation import (
    FIGURE_FILES,
    ExperimentConfig,
    RunReport,
    StageTimings,
    aggregate,
    emit_figure_data,
    format_timing_summary,
    relative_difference,
    replay_reports,
    run_experiment,
    timing_summary,
    truncate,
    whole_dollars,
    write_aggregate_json,
    write_runs_csv,
)
from loans import generate_synthetic
from privacy import Mode, PrivacyAccountant, PrivacyParams

configure_logging()
logger = get_logger(__name__)

PUBLISHED_RUNS = Path(__file__).parent / "fixtures" / "published_runs.csv"

SMALL = dict(
    pd=Hyperparameters(rounds=5, max_depth=2),
    ccf=Hyperparameters(n_trees=5, max_depth=3),
    lgd_nonzero=Hyperparameters(rounds=3, max_depth=2),
    lgd_rate=Hyperparameters(n_trees=3, max_depth=2),
)


def _small_experiment(**overrides) -> ExperimentConfig:
    values = dict(
        n_runs=2,
        subsample_fraction=0.5,
        seed=11,
        ndpm=CreditRiskConfig(**SMALL),
        dpm=CreditRiskConfig(mode=Mode.PRIVATE, budget=PrivacyParams.of(8.0, 1e-5), **SMALL),
    )
    values.update(overrides)
    return ExperimentConfig.build(**values)


def _report(run_id: int, actual: int, predicted: int) -> RunReport:
    return RunReport(
        run_id=run_id,
        actual_total=actual,
        dp_actual_total=actual,
        predicted_total_ndpm=predicted,
        predicted_total_dpm=predicted,
    )


# ============================================
# Arithmetic
# ============================================

def test_relative_difference():
    assert relative_difference(110, 100) == pytest.approx(10.0)
    assert relative_difference(90, 100) == pytest.approx(-10.0)
    with pytest.raises(DivisionByZero):
        relative_difference(100, 0)


def test_display_rounding():
    assert whole_dollars(150) == 2
    assert whole_dollars(149) == 1
    assert whole_dollars(-150) == -2
    assert truncate(17.2199, 2) == 17.21
    assert truncate(19.375, 2) == 19.37
    assert truncate(-1.239, 2) == -1.23


def test_aggregate_requires_runs():
    with pytest.raises(EmptyInput):
        aggregate([])


def test_aggregate_means():
    report = aggregate([_report(1, 11_000, 10_000), _report(2, 9_000, 10_000)])
    assert report.runs == 2
    assert report.ndpm.avg_actual == 100
    assert report.ndpm.avg_predicted == 100
    assert report.ndpm.rel_diff_mean == pytest.approx(0.0)


# ============================================
# Published run totals
# ============================================

def test_replay_reproduces_published_averages():
    """The averaged table follows from the eight per-run dollar totals."""
    reports = replay_reports(PUBLISHED_RUNS)
    assert [r.run_id for r in reports] == list(range(1, 9))
    report = aggregate(reports)
    assert report.ndpm.avg_actual == 8_319_741
    assert report.ndpm.avg_predicted == 7_109_281
    assert report.ndpm.avg_rel_diff == pytest.approx(17.21, abs=0.01)
    assert report.dpm.avg_actual == 8_317_839
    assert report.dpm.avg_predicted == 6_995_703
    assert report.dpm.avg_rel_diff == pytest.approx(19.37, abs=0.01)


@pytest.mark.parametrize("run_id, ndpm, dpm", [
    (1, 11.510, 7.930),
    (2, 14.553, 3.657),
    (3, 15.294, 23.423),
    (4, 17.556, 28.462),
    (5, 11.611, 21.771),
    (6, 25.426, 22.317),
    (7, 18.675, 24.100),
    (8, 23.102, 23.338),
])
def test_replay_reproduces_run_relative_differences(run_id, ndpm, dpm):
    report = {r.run_id: r for r in replay_reports(PUBLISHED_RUNS)}[run_id]
    assert report.rel_diff_ndpm == pytest.approx(ndpm, abs=0.01)
    assert report.rel_diff_dpm == pytest.approx(dpm, abs=0.01)


def test_replay_missing_column(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text("run,actual_total\n1,100\n")
    with pytest.raises(SchemaMismatch):
        replay_reports(path)


# ============================================
# Report files
# ============================================

def test_runs_csv_and_aggregate_json(tmp_path):
    reports = replay_reports(PUBLISHED_RUNS)
    runs = write_runs_csv(reports, tmp_path / "runs.csv")
    lines = runs.read_text().splitlines()
    assert lines[0] == "run,actual_total,dp_actual_total,predicted_total_ndpm,predicted_total_dpm,rel_diff_ndpm,rel_diff_dpm"
    assert lines[1].startswith("1,8428504,8405516,7558465,7787930,")
    assert len(lines) == 9

    path = write_aggregate_json(aggregate(reports), tmp_path / "aggregate.json")
    text = path.read_text()
    assert text.endswith("\n")
    assert '"avg_actual": 8319741' in text


def test_figure_data_reads_back_exactly(tmp_path):
    reports = replay_reports(PUBLISHED_RUNS)
    paths = emit_figure_data(reports, tmp_path)
    assert [p.name for p in paths] == list(FIGURE_FILES)
    relative = pd.read_csv(tmp_path / "relative_difference.csv", float_precision="round_trip")
    assert relative["ndpm"].tolist() == [r.rel_diff_ndpm for r in reports]
    predicted = pd.read_csv(tmp_path / "predicted_loss.csv", dtype=str)
    assert predicted.loc[0, "dpm"] == "7787930.00"
    with pytest.raises(EmptyInput):
        emit_figure_data([], tmp_path)


def test_timing_summary_ratios():
    timed = RunReport(
        run_id=1, actual_total=1, dp_actual_total=1, predicted_total_ndpm=1, predicted_total_dpm=1,
        timings={"ndpm": StageTimings(1.0, 2.0, 0.5), "dpm": StageTimings(3.0, 4.0, 0.5)},
    )
    summary = timing_summary([timed])
    assert summary["preprocess_s"]["ratio"] == pytest.approx(3.0)
    assert summary["train_s"]["ratio"] == pytest.approx(2.0)
    assert "preprocess" in format_timing_summary(summary)
    assert timing_summary([_report(1, 1, 1)])["train_s"]["ratio"] is None


# ============================================
# Experiment
# ============================================

def test_run_experiment_is_deterministic(portfolio):
    config = _small_experiment()
    first = run_experiment(portfolio, config)
    second = run_experiment(portfolio, config)
    assert [r.run_id for r in first] == [1, 2]
    assert first == second
    for r in first:
        assert r.actual_total > 0
        assert r.predicted_total_ndpm > 0 and r.predicted_total_dpm > 0
        assert set(r.timings) == {"ndpm", "dpm"}


def test_run_experiment_ignores_thread_count(portfolio):
    config = _small_experiment()
    assert run_experiment(portfolio, config, threads=2) == run_experiment(portfolio, config, threads=1)


def test_each_run_gets_its_own_accountant(portfolio):
    """Runs never share spend; each accountant holds one run's ledger."""
    config = _small_experiment()
    accountants = []

    def factory() -> PrivacyAccountant:
        accountants.append(PrivacyAccountant(config.run_budget()))
        return accountants[-1]

    run_experiment(portfolio, config, accountant_factory=factory)
    assert len(accountants) == 2
    for accountant in accountants:
        ids = [e.query_id for e in accountant.ledger]
        assert ids[-1] == "evaluation.dp_actual_total"
        assert accountant.spent.epsilon == pytest.approx(9.0)


def test_run_failure_carries_exit_code(portfolio):
    config = _small_experiment(n_runs=1)
    with pytest.raises(RunFailed) as excinfo:
        run_experiment(portfolio, config, accountant_factory=lambda: PrivacyAccountant(PrivacyParams.of(0.1)))
    assert excinfo.value.run_id == 1
    assert excinfo.value.exit_code == 3


def test_holdout_scores_test_part(portfolio):
    config = _small_experiment(n_runs=1, holdout=True, train_fraction=0.75)
    (report,) = run_experiment(portfolio, config)
    assert report.actual_total > 0


@pytest.mark.slow
def test_private_totals_stay_close_to_exact():
    """On 20,000 synthetic loans the averaged DPM total is within 10% of NDPM."""
    dataset = generate_synthetic(20_000, seed=2024)
    reports = run_experiment(dataset, ExperimentConfig.build(n_runs=8, seed=1), threads=4)
    report = aggregate(reports)
    gap = abs(report.dpm.predicted_sum - report.ndpm.predicted_sum) / report.ndpm.predicted_sum
    logger.info("Private vs exact predicted totals", gap=gap, **report.to_dict()["ndpm"])
    assert gap < 0.10
