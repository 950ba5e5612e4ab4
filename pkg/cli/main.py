"""
privrisk command-line entry point.

Commands print a short JSON summary to stdout; logs go to stderr. Engine
errors map to exit codes: 2 usage/config, 3 privacy budget, 4 training,
5 schema.
"""
import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence
from core.config import settings
from core.errors import InvalidConfig, PrivRiskError
from core.files import atomic_write_text
from core.logging import configure_logging, get_logger
from credit_risk import CreditRiskModel, train_credit_risk_model
from evaluation import (
    aggregate,
    emit_figure_data,
    format_timing_summary,
    replay_reports,
    run_experiment,
    timing_summary,
    write_aggregate_json,
    write_runs_csv,
    write_timing_summary,
)
from loans import GeneratorConfig, generate_synthetic, load_csv, split, write_csv
from portable_model import (
    FILE_SUFFIX,
    document_pipeline,
    export_model,
    load_document,
    model_from_document,
    standalone_predict,
)
from portable_model.codec import BUNDLE_COMPONENTS
from privacy import BudgetPlan, Mode, PrivacyAccountant, load_ledger
from .config_file import RunConfigFile

logger = get_logger(__name__)

MODEL_FILE = f"model{FILE_SUFFIX}"
LEDGER_FILE = "ledger.json"


def _emit(summary: Dict[str, Any]) -> None:
    print(json.dumps(summary, indent=2, sort_keys=True))


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _run_config(args: argparse.Namespace) -> RunConfigFile:
    return RunConfigFile.load(args.config).with_overrides(seed=args.seed, out_dir=args.out_dir)


# ============================================
# Commands
# ============================================

def cmd_generate(args: argparse.Namespace) -> int:
    """Write a synthetic loan portfolio."""
    seed = args.seed if args.seed is not None else 0
    overrides = {} if args.default_rate is None else {"default_rate": args.default_rate}
    dataset = generate_synthetic(args.n, seed, GeneratorConfig.build(**overrides))
    out = Path(args.out) if args.out else Path(args.out_dir or settings.output_directory) / "loans.csv"
    write_csv(dataset, out)
    _emit({"records": len(dataset), "path": str(out), "seed": seed})
    return 0


def cmd_ingest_check(args: argparse.Namespace) -> int:
    """Validate a loan CSV and report what would be loaded."""
    dataset = load_csv(args.data, strict=not args.lenient)
    defaulted = sum(1 for record in dataset if record.defaulted)
    _emit({
        "path": str(args.data),
        "records": len(dataset),
        "rejected_rows": dataset.rejected_rows,
        "defaulted": defaulted,
    })
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    """Train the credit-risk bundle; write the model document and ledger."""
    config = _run_config(args)
    dataset = config.load_dataset()
    if config.split.holdout:
        dataset, _ = split(dataset, config.split_spec())

    model_config = config.credit_risk_config()
    accountant = None
    if model_config.mode is Mode.PRIVATE:
        accountant = PrivacyAccountant(model_config.resolved_budget())
    model = train_credit_risk_model(dataset, model_config, accountant=accountant, seed=config.seed)

    out_dir = config.output_directory
    document_path = out_dir / MODEL_FILE
    export_model(model, document_path)
    ledger_text = accountant.ledger_json() if accountant is not None else "[]"
    atomic_write_text(out_dir / LEDGER_FILE, ledger_text + "\n")

    summary: Dict[str, Any] = {
        "mode": model_config.mode.value,
        "records": len(dataset),
        "model": str(document_path),
        "ledger": str(out_dir / LEDGER_FILE),
    }
    if accountant is not None:
        summary["privacy"] = accountant.summary()
    _emit(summary)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Run the NDPM vs DPM protocol, or aggregate supplied totals with --replay."""
    if args.replay:
        reports = replay_reports(args.replay)
        out_dir = Path(args.out_dir or settings.output_directory)
    else:
        config = _run_config(args)
        out_dir = config.output_directory
        reports = run_experiment(config.load_dataset(), config.experiment_config(), threads=args.threads)

    report = aggregate(reports)
    write_runs_csv(reports, out_dir / "runs.csv")
    write_aggregate_json(report, out_dir / "aggregate.json")
    emit_figure_data(reports, out_dir)
    summary = report.to_dict()
    if not args.replay:
        timing = timing_summary(reports)
        write_timing_summary(timing, out_dir / "timing.json")
        logger.info("Stage timings", table="\n" + format_timing_summary(timing))
        summary["timing"] = timing
    _emit(summary)
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    """Score a features CSV with a model document."""
    target = standalone_predict(args.model, args.input, args.output)
    rows = max(0, sum(1 for _ in target.open(encoding="utf-8")) - 1)
    _emit({"output": str(target), "rows": rows})
    return 0


def cmd_budget(args: argparse.Namespace) -> int:
    """Show the planned stage shares, or the spend recorded in a ledger file."""
    config = _run_config(args)
    budget = config.privacy.budget()
    plan = BudgetPlan(config.privacy.budget_plan)
    summary: Dict[str, Any] = {
        "budget": {"epsilon": budget.epsilon, "delta": budget.delta},
        "plan": {
            stage: plan.share(budget, stage).model_dump() for stage in sorted(plan.weights)
        },
    }
    if args.ledger:
        entries = load_ledger(args.ledger)
        spent = math.fsum(entry.epsilon for entry in entries)
        summary["ledger"] = {
            "entries": len(entries),
            "spent_epsilon": spent,
            "spent_delta": math.fsum(entry.delta for entry in entries),
            "remaining_epsilon": max(0.0, budget.epsilon - spent),
        }
    _emit(summary)
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    """Re-export a document canonically, optionally extracting one bundle component."""
    document = load_document(args.model)
    model = model_from_document(document)
    if args.component:
        if not isinstance(model, CreditRiskModel):
            raise InvalidConfig("--component needs a credit-risk bundle document")
        written = export_model(
            getattr(model, BUNDLE_COMPONENTS[args.component]),
            args.out,
            pipeline=model.pipeline,
            metadata={**document.metadata, "component": args.component},
        )
    else:
        written = export_model(
            model,
            args.out,
            pipeline=document_pipeline(document),
            column_names=document.column_names,
            metadata=document.metadata,
        )
    _emit({"output": str(args.out), "kind": written.model_kind.value})
    return 0


# ============================================
# Parser
# ============================================

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON run config file")
    parser.add_argument("--out-dir", dest="out_dir", default=default, help="Output directory")
    parser.add_argument("--seed", type=int, default=default, help="Master seed")
    parser.add_argument(
        "--threads", type=_positive_int, default=argparse.SUPPRESS if suppress else 1, help="Worker threads"
    )
    parser.add_argument(
        "--log-level",
        dest="log_level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=default,
        help="Override the configured log level",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=settings.app_name, description="Differentially private credit-risk engine")
    parser.add_argument("--version", action="version", version=f"{settings.app_name} {settings.app_version}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", parents=[common], help="Generate a synthetic loan CSV")
    generate.add_argument("--n", type=_positive_int, required=True, help="Number of loans")
    generate.add_argument("--out", help="Output CSV (default <out-dir>/loans.csv)")
    generate.add_argument("--default-rate", dest="default_rate", type=float)
    generate.set_defaults(handler=cmd_generate)

    ingest = commands.add_parser("ingest-check", parents=[common], help="Validate a loan CSV")
    ingest.add_argument("--data", required=True, help="Loan CSV")
    ingest.add_argument("--lenient", action="store_true", help="Skip invalid rows instead of failing")
    ingest.set_defaults(handler=cmd_ingest_check)

    train = commands.add_parser("train", parents=[common], help="Train the credit-risk bundle")
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser("evaluate", parents=[common], help="Run the NDPM vs DPM comparison")
    evaluate.add_argument("--replay", help="CSV of supplied run totals (dollars); aggregate only")
    evaluate.set_defaults(handler=cmd_evaluate)

    predict = commands.add_parser("predict", parents=[common], help="Score a CSV with a model document")
    predict.add_argument("--model", required=True, help=f"Model document ({FILE_SUFFIX})")
    predict.add_argument("--input", required=True, help="Features CSV")
    predict.add_argument("--output", required=True, help="Predictions CSV")
    predict.set_defaults(handler=cmd_predict)

    budget = commands.add_parser("budget", parents=[common], help="Report planned or recorded privacy spend")
    budget.add_argument("--ledger", help="ledger.json written by train")
    budget.set_defaults(handler=cmd_budget)

    export = commands.add_parser("export", parents=[common], help="Re-export a model document")
    export.add_argument("--model", required=True, help="Source document")
    export.add_argument("--out", required=True, help="Destination document")
    export.add_argument("--component", choices=sorted(BUNDLE_COMPONENTS), help="Extract one bundle component")
    export.set_defaults(handler=cmd_export)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(list(argv) if argv is not None else None)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except PrivRiskError as e:
        logger.error("Command failed", command=args.command, error=str(e), error_type=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error("Command failed", command=args.command, error=str(e), error_type=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
