from typing import Dict, List

import numpy as np
import pandas as pd
from colorama import Style
from tabulate import tabulate

from ..exceptions import DatasetIOException
from ..telemetry.enums import FAULT_LABEL_NAMES, FaultLabel
from ..utils import FLOAT_FORMAT, format_float, percent
from .cross_validation import EvaluationReport
from .metrics import ConfusionMatrix

CLASS_NAMES = [FAULT_LABEL_NAMES[label] for label in FaultLabel]

# (report label, summary key)
PERFORMANCE_ROWS = (
    ("Accuracy", "accuracy"),
    ("F1-Score", "f1"),
    ("Macro Average Precision", "macro_precision"),
    ("Macro Average Recall", "macro_recall"),
    ("Macro Average F1-Score", "macro_f1"),
    ("Weighted Average Precision", "weighted_precision"),
    ("Weighted Average Recall", "weighted_recall"),
    ("Weighted Average F1-Score", "weighted_f1"),
)

REPORT_COLUMNS = (
    "fold",
    "accuracy",
    "f1",
    "macro_precision",
    "macro_recall",
    "macro_f1",
    "weighted_precision",
    "weighted_recall",
    "weighted_f1",
    "adaboost_accuracy",
    "adaboost_weighted_f1",
    "rmse",
    "persistence_rmse",
    "explained_variance_ratio",
    "first_loss",
    "final_loss",
    "n_train_windows",
    "n_test_windows",
)


def report_rows(report: EvaluationReport) -> List[Dict[str, object]]:
    """
    One row per fold and a last ``mean`` row holding the fold averages
    """
    rows = []
    for fold in report.folds:
        row: Dict[str, object] = {"fold": str(fold.index)}
        row.update(fold.forest_metrics.summary())
        row["adaboost_accuracy"] = fold.adaboost_metrics.accuracy
        row["adaboost_weighted_f1"] = fold.adaboost_metrics.weighted_f1
        row["rmse"] = fold.rmse
        row["persistence_rmse"] = fold.persistence_rmse
        row["explained_variance_ratio"] = fold.explained_variance_ratio
        row["first_loss"] = fold.first_loss
        row["final_loss"] = fold.final_loss
        row["n_train_windows"] = float(fold.n_train)
        row["n_test_windows"] = float(fold.n_test)
        rows.append(row)
    mean = {"fold": "mean"}
    for column in REPORT_COLUMNS[1:]:
        mean[column] = float(np.mean([row[column] for row in rows]))
    rows.append(mean)
    return rows


def write_report_csv(report: EvaluationReport, path: str) -> None:
    data_frame = pd.DataFrame(report_rows(report), columns=list(REPORT_COLUMNS))
    try:
        data_frame.to_csv(
            path,
            index=False,
            float_format=FLOAT_FORMAT,
            lineterminator="\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise DatasetIOException(path, str(e))


def confusion_table(matrix: ConfusionMatrix, highlight: bool = False) -> str:
    """
    :param highlight: brighten the diagonal, only for terminals
    """
    rows = []
    for true_class, name in enumerate(CLASS_NAMES):
        row = [name]
        for predicted_class in range(len(CLASS_NAMES)):
            cell = f"{matrix.counts[true_class, predicted_class]:.1f}"
            if highlight and true_class == predicted_class:
                cell = Style.BRIGHT + cell + Style.RESET_ALL
            row.append(cell)
        rows.append(row)
    return tabulate(
        rows, headers=["True \\ Predicted", *CLASS_NAMES], disable_numparse=True
    )


def _performance_table(report: EvaluationReport) -> str:
    aggregates = report.forest_average.aggregates
    rows = [[label, percent(aggregates[key])] for label, key in PERFORMANCE_ROWS]
    return tabulate(rows, headers=["Metric", "Value"], disable_numparse=True)


def _classification_table(report: EvaluationReport) -> str:
    average = report.forest_average
    rows = [
        [
            name,
            f"{average.precision[label]:.4f}",
            f"{average.recall[label]:.4f}",
            f"{average.f1[label]:.4f}",
            f"{average.support[label]:.1f}",
        ]
        for label, name in enumerate(CLASS_NAMES)
    ]
    aggregates = average.aggregates
    for kind in ("macro", "weighted"):
        rows.append(
            [
                f"{kind.capitalize()} Average",
                f"{aggregates[kind + '_precision']:.4f}",
                f"{aggregates[kind + '_recall']:.4f}",
                f"{aggregates[kind + '_f1']:.4f}",
                f"{average.support.sum():.1f}",
            ]
        )
    return tabulate(
        rows,
        headers=["Class", "Precision", "Recall", "F1-Score", "Support"],
        disable_numparse=True,
    )


def _comparison_table(report: EvaluationReport) -> str:
    forest = report.forest_average.aggregates
    adaboost = report.adaboost_average.aggregates
    rows = [
        [label, percent(forest[key]), percent(adaboost[key])]
        for label, key in PERFORMANCE_ROWS
        if key in ("accuracy", "macro_f1", "weighted_f1")
    ]
    return tabulate(
        rows, headers=["Metric", "Random Forest", "AdaBoost"], disable_numparse=True
    )


def _forecast_table(report: EvaluationReport) -> str:
    rows = [
        [
            str(fold.index),
            format_float(fold.rmse),
            format_float(fold.persistence_rmse),
            format_float(fold.explained_variance_ratio),
            format_float(fold.first_loss),
            format_float(fold.final_loss),
        ]
        for fold in report.folds
    ]
    rows.append(
        [
            "mean",
            format_float(report.mean_rmse),
            format_float(report.mean_persistence_rmse),
            format_float(
                np.mean([fold.explained_variance_ratio for fold in report.folds])
            ),
            format_float(np.mean([fold.first_loss for fold in report.folds])),
            format_float(np.mean([fold.final_loss for fold in report.folds])),
        ]
    )
    return tabulate(
        rows,
        headers=[
            "Fold",
            "RMSE",
            "Persistence RMSE",
            "Explained variance",
            "First epoch loss",
            "Final epoch loss",
        ],
        disable_numparse=True,
    )


def _undefined_precision_notes(report: EvaluationReport) -> List[str]:
    notes = []
    for fold in report.folds:
        for label in np.flatnonzero(fold.forest_metrics.undefined_precision):
            notes.append(
                f"Fold {fold.index}: {CLASS_NAMES[label]} was never predicted, "
                f"its precision is reported as 0"
            )
    return notes


def render_report(report: EvaluationReport, highlight: bool = False) -> str:
    sections = [
        ("Averaged performance across all folds", _performance_table(report)),
        (
            "Average confusion matrix across all folds",
            confusion_table(report.forest_confusion, highlight),
        ),
        ("Average classification report", _classification_table(report)),
        ("Classifier comparison", _comparison_table(report)),
        ("Forecast error in normalized feature space", _forecast_table(report)),
        (
            "Data",
            tabulate(
                [
                    ["Ticks", str(report.n_ticks)],
                    ["Windows", str(report.n_windows)],
                    ["Split", report.split.value],
                    ["Folds", str(len(report.folds))],
                    ["Features", str(report.n_features)],
                    ["PCA components", str(report.n_components)],
                    ["Feature reduction", percent(report.reduction_ratio)],
                ],
                disable_numparse=True,
            ),
        ),
    ]
    notes = _undefined_precision_notes(report)
    if notes:
        sections.append(("Notes", "\n".join(notes)))
    return "\n\n".join(f"{title}\n{body}" for title, body in sections) + "\n"


def write_report_text(report: EvaluationReport, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(render_report(report))
    except OSError as e:
        raise DatasetIOException(path, str(e))
