"""Rolling-retrain evaluation: schedule, training loop, aggregation, reports and plots."""

from .evaluate import (
    AggregationError,
    Leaf,
    MetricsReport,
    aggregate,
    evaluate_point,
    per_origin_errors,
    relative_change,
    seed_means,
)
from .report import emit_report, load_report, report_from_dict, report_json, report_to_dict, summary_csv
from .runner import BacktestConfig, Dataset, PointData, config_hash, prepare_point, run_backtest
from .schedule import MAX_ORIGINS, STEP_DAYS, BacktestSchedule, RetrainPoint, build_biweekly_schedule
from .svg import emit_forecast_svg, forecast_svg
from .train import TrainConfig, TrainingDivergence, TrainResult, evaluate_mse, objective, run_training

__all__ = [
    "AggregationError", "BacktestConfig", "BacktestSchedule", "Dataset", "Leaf", "MAX_ORIGINS",
    "MetricsReport", "PointData", "RetrainPoint", "STEP_DAYS", "TrainConfig", "TrainResult",
    "TrainingDivergence", "aggregate", "build_biweekly_schedule", "config_hash", "emit_forecast_svg",
    "emit_report", "evaluate_mse", "evaluate_point", "forecast_svg", "load_report", "objective",
    "per_origin_errors", "prepare_point", "relative_change", "report_from_dict", "report_json",
    "report_to_dict", "run_backtest", "run_training", "seed_means", "summary_csv",
]
