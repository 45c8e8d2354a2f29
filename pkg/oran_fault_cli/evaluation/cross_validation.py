import dataclasses
import enum
import logging
from typing import List, Optional, Sequence

import numpy as np

from ..exceptions import StratificationException
from ..pipeline.adaboost import predict_adaboost
from ..pipeline.fault_pipeline import FaultPipeline, PipelineSettings
from ..pipeline.preprocess import make_windows
from ..pipeline.random_forest import predict_proba
from ..telemetry.dataset import DatasetTable
from ..telemetry.enums import N_CLASSES
from ..utils import derive_rng, label_histogram
from .metrics import (
    AveragedMetrics,
    ClassificationMetrics,
    ConfusionMatrix,
    average_metrics,
    confusion,
    forecast_rmse,
    metrics_from_confusion,
)

logger = logging.getLogger(__name__)


class SplitMode(enum.Enum):
    STRATIFIED = "stratified"
    BLOCKED = "blocked"


def stratified_kfold(
    labels: Sequence[int], k: int = 5, seed: int = 0
) -> List[np.ndarray]:
    """
    Shuffle every class with ``derive_rng(seed, "cv.split")`` and deal its
    samples round robin over the folds, continuing where the previous class
    stopped. Per class counts differ by at most one between folds

    :return: `k` sorted, disjoint index arrays covering every sample
    :raises: StratificationException if a present class has fewer than `k`
        samples
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError(f"k={k} folds, at least 2 are required")
    counts = label_histogram(labels, N_CLASSES)
    class_counts = {label: int(count) for label, count in enumerate(counts)}
    for label, count in class_counts.items():
        if 0 < count < k:
            raise StratificationException(label, count, k, class_counts)

    rng = derive_rng(seed, "cv.split")
    assignment = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for label in range(N_CLASSES):
        members = rng.permutation(np.flatnonzero(labels == label))
        assignment[members] = (offset + np.arange(members.shape[0])) % k
        offset = (offset + members.shape[0]) % k
    return [np.flatnonzero(assignment == fold) for fold in range(k)]


def blocked_kfold(n: int, k: int = 5) -> List[np.ndarray]:
    """
    Contiguous time blocks, sizes differ by at most one
    """
    if k < 2 or n < k:
        raise ValueError(f"Cannot split {n} samples into {k} blocks")
    return np.array_split(np.arange(n), k)


@dataclasses.dataclass
class FoldResult:
    index: int
    n_train: int
    n_test: int
    forest_confusion: ConfusionMatrix
    forest_metrics: ClassificationMetrics
    adaboost_confusion: ConfusionMatrix
    adaboost_metrics: ClassificationMetrics
    rmse: float
    persistence_rmse: float
    explained_variance_ratio: float
    first_loss: float
    final_loss: float
    oob_accuracy: Optional[float] = None


@dataclasses.dataclass
class EvaluationReport:
    folds: List[FoldResult]
    n_ticks: int
    n_windows: int
    n_features: int
    n_components: int
    split: SplitMode = SplitMode.STRATIFIED

    @property
    def forest_confusion(self) -> ConfusionMatrix:
        return ConfusionMatrix.mean([fold.forest_confusion for fold in self.folds])

    @property
    def adaboost_confusion(self) -> ConfusionMatrix:
        return ConfusionMatrix.mean([fold.adaboost_confusion for fold in self.folds])

    @property
    def forest_average(self) -> AveragedMetrics:
        return average_metrics([fold.forest_metrics for fold in self.folds])

    @property
    def adaboost_average(self) -> AveragedMetrics:
        return average_metrics([fold.adaboost_metrics for fold in self.folds])

    @property
    def mean_rmse(self) -> float:
        return float(np.mean([fold.rmse for fold in self.folds]))

    @property
    def mean_persistence_rmse(self) -> float:
        return float(np.mean([fold.persistence_rmse for fold in self.folds]))

    @property
    def reduction_ratio(self) -> float:
        return 1.0 - self.n_components / self.n_features


def run_cross_validation(
    table: DatasetTable,
    settings: PipelineSettings,
    seed: int,
    k_folds: int = 5,
    split: SplitMode = SplitMode.STRATIFIED,
) -> EvaluationReport:
    """
    Every fold fits its own normalizer, PCA, LSTM, Random Forest and AdaBoost
    on its training windows, then classifies the forecasts of its test windows

    :raises: StratificationException, PipelineStageException
    """
    windows = make_windows(table, settings.k, settings.m)
    if split == SplitMode.BLOCKED:
        folds = blocked_kfold(len(windows), k_folds)
    else:
        folds = stratified_kfold(windows.target_labels, k_folds, seed)
    logger.info(
        "Cross validating %d windows over %d ticks with %d %s folds",
        len(windows),
        table.n_rows,
        k_folds,
        split.value,
    )

    results = []
    for index, test in enumerate(folds):
        train = np.setdiff1d(np.arange(len(windows)), test, assume_unique=True)
        train_windows = windows.subset(train)
        test_windows = windows.subset(test)
        pipeline = FaultPipeline.fit(
            table, train_windows, settings, seed, fold=index, with_adaboost=True
        )

        forecasts = pipeline.forecast(test_windows)
        actual = pipeline.actual(test_windows)
        truth = test_windows.target_labels
        forest_confusion = confusion(
            truth, predict_proba(pipeline.forest, forecasts).argmax(axis=1)
        )
        adaboost_confusion = confusion(
            truth, predict_adaboost(pipeline.adaboost, forecasts)
        )
        result = FoldResult(
            index=index,
            n_train=len(train_windows),
            n_test=len(test_windows),
            forest_confusion=forest_confusion,
            forest_metrics=metrics_from_confusion(forest_confusion),
            adaboost_confusion=adaboost_confusion,
            adaboost_metrics=metrics_from_confusion(adaboost_confusion),
            rmse=forecast_rmse(forecasts, actual),
            persistence_rmse=forecast_rmse(pipeline.persistence(test_windows), actual),
            explained_variance_ratio=float(
                pipeline.pca.explained_variance_ratio.sum()
            ),
            first_loss=pipeline.loss_history[0],
            final_loss=pipeline.loss_history[-1],
            oob_accuracy=pipeline.forest.oob_accuracy,
        )
        logger.info(
            "Fold %d/%d: forest accuracy %.4f, AdaBoost accuracy %.4f, "
            "forecast RMSE %.6g (persistence %.6g)",
            index + 1,
            k_folds,
            result.forest_metrics.accuracy,
            result.adaboost_metrics.accuracy,
            result.rmse,
            result.persistence_rmse,
        )
        results.append(result)

    return EvaluationReport(
        results,
        n_ticks=table.n_rows,
        n_windows=len(windows),
        n_features=table.n_features,
        n_components=settings.pca_components,
        split=split,
    )
