import dataclasses
from typing import List, Sequence

import numpy as np

from ..exceptions import DimensionMismatchException
from ..telemetry.enums import N_CLASSES


@dataclasses.dataclass(frozen=True)
class ConfusionMatrix:
    """
    ``K x K`` counts, rows are the true class and columns the predicted one.
    Averaged matrices hold non integer counts
    """

    counts: np.ndarray

    def __post_init__(self):
        if self.counts.shape != (N_CLASSES, N_CLASSES):
            raise DimensionMismatchException(
                f"Confusion matrix must be {N_CLASSES}x{N_CLASSES}, "
                f"got {self.counts.shape}"
            )
        if (self.counts < 0).any():
            raise ValueError("Confusion matrix entries must be non negative")

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def predicted(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @classmethod
    def mean(cls, matrices: Sequence["ConfusionMatrix"]) -> "ConfusionMatrix":
        return cls(np.mean([matrix.counts for matrix in matrices], axis=0))


def confusion(
    true_labels: Sequence[int], predicted_labels: Sequence[int]
) -> ConfusionMatrix:
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if true_labels.shape != predicted_labels.shape:
        raise DimensionMismatchException(
            f"{true_labels.shape[0]} true labels but "
            f"{predicted_labels.shape[0]} predictions"
        )
    for labels in (true_labels, predicted_labels):
        if labels.size and (labels.min() < 0 or labels.max() >= N_CLASSES):
            raise ValueError(f"Label codes must be in [0, {N_CLASSES - 1}]")
    counts = np.zeros((N_CLASSES, N_CLASSES))
    np.add.at(counts, (true_labels, predicted_labels), 1.0)
    return ConfusionMatrix(counts)


@dataclasses.dataclass(frozen=True)
class ClassificationMetrics:
    """
    :param undefined_precision: classes never predicted, their precision is
        reported as 0
    """

    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    undefined_precision: np.ndarray

    def _macro(self, values: np.ndarray) -> float:
        return float(values.mean())

    def _weighted(self, values: np.ndarray) -> float:
        return float((values * self.support).sum() / self.support.sum())

    @property
    def macro_precision(self) -> float:
        return self._macro(self.precision)

    @property
    def macro_recall(self) -> float:
        return self._macro(self.recall)

    @property
    def macro_f1(self) -> float:
        return self._macro(self.f1)

    @property
    def weighted_precision(self) -> float:
        return self._weighted(self.precision)

    @property
    def weighted_recall(self) -> float:
        return self._weighted(self.recall)

    @property
    def weighted_f1(self) -> float:
        return self._weighted(self.f1)

    def summary(self) -> dict:
        """
        Aggregates in the order they are reported
        """
        return {
            "accuracy": self.accuracy,
            "f1": self.weighted_f1,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
        }


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    safe = np.where(denominator > 0, denominator, 1.0)
    return np.where(denominator > 0, numerator / safe, 0.0)


def metrics_from_confusion(matrix: ConfusionMatrix) -> ClassificationMetrics:
    """
    Per class precision, recall and F1 plus accuracy. Zero denominators give 0

    :raises: ValueError on an empty matrix
    """
    if matrix.total <= 0:
        raise ValueError("Cannot compute metrics of an empty confusion matrix")
    counts = matrix.counts
    hits = np.diag(counts)
    support = matrix.support
    predicted = matrix.predicted
    precision = _safe_divide(hits, predicted)
    recall = _safe_divide(hits, support)
    f1 = _safe_divide(2.0 * precision * recall, precision + recall)
    return ClassificationMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        accuracy=float(hits.sum() / matrix.total),
        undefined_precision=predicted == 0,
    )


@dataclasses.dataclass(frozen=True)
class AveragedMetrics:
    """
    Arithmetic means of fold metrics. Per class values average over every
    fold, aggregates are the mean of every fold's aggregate
    """

    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    aggregates: dict

    @property
    def accuracy(self) -> float:
        return self.aggregates["accuracy"]


def average_metrics(folds: List[ClassificationMetrics]) -> AveragedMetrics:
    if not folds:
        raise ValueError("Cannot average zero folds")
    summaries = [fold.summary() for fold in folds]
    return AveragedMetrics(
        precision=np.mean([fold.precision for fold in folds], axis=0),
        recall=np.mean([fold.recall for fold in folds], axis=0),
        f1=np.mean([fold.f1 for fold in folds], axis=0),
        support=np.mean([fold.support for fold in folds], axis=0),
        aggregates={
            key: float(np.mean([summary[key] for summary in summaries]))
            for key in summaries[0]
        },
    )


def forecast_rmse(predicted: np.ndarray, actual: np.ndarray) -> float:
    """
    Root of the mean squared error over every cell
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise DimensionMismatchException(
            f"Forecast shape {predicted.shape} differs from {actual.shape}"
        )
    if predicted.size == 0:
        raise ValueError("Cannot compute the RMSE of empty matrices")
    return float(np.sqrt(np.mean((predicted - actual) ** 2)))
