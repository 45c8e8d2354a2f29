# flake8: noqa F401
from .cross_validation import (
    EvaluationReport,
    FoldResult,
    SplitMode,
    blocked_kfold,
    run_cross_validation,
    stratified_kfold,
)
from .metrics import (
    ClassificationMetrics,
    ConfusionMatrix,
    average_metrics,
    confusion,
    forecast_rmse,
    metrics_from_confusion,
)
from .report import render_report, write_report_csv, write_report_text
