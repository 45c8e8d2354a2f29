import dataclasses
import logging
import math
from typing import List, Tuple

import numpy as np

from ..exceptions import DimensionMismatchException, SingleClassException
from ..telemetry.enums import N_CLASSES
from .decision_tree import SPLIT_TOLERANCE

logger = logging.getLogger(__name__)

ERROR_FLOOR = 1e-10


@dataclasses.dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    left_class: int
    right_class: int

    def predict(self, data: np.ndarray) -> np.ndarray:
        return np.where(
            data[:, self.feature] <= self.threshold, self.left_class, self.right_class
        )


@dataclasses.dataclass
class AdaBoostModel:
    stumps: List[Stump]
    weights: List[float]
    n_features: int
    n_classes: int = N_CLASSES

    @property
    def n_rounds(self) -> int:
        return len(self.stumps)


def learner_weight(error: float, n_classes: int = N_CLASSES) -> float:
    """
    SAMME weight ``ln((1 - err) / err) + ln(K - 1)`` with ``err`` floored at
    1e-10
    """
    error = max(error, ERROR_FLOOR)
    return math.log((1.0 - error) / error) + math.log(n_classes - 1)


def fit_stump(
    data: np.ndarray,
    labels: np.ndarray,
    sample_weight: np.ndarray,
    order: np.ndarray = None,
) -> Tuple[Stump, float]:
    """
    Depth one tree minimising the weighted error. Each side predicts its
    heaviest class; ties go to the lowest feature, then the lowest threshold

    :param order: per column argsort of `data`, computed when not given
    :return: stump and its weighted error (weights are assumed to sum to 1)
    """
    n, d = data.shape
    if order is None:
        order = np.argsort(data, axis=0, kind="stable")
    weighted = np.eye(N_CLASSES)[labels] * sample_weight[:, None]
    total = weighted.sum(axis=0)

    best_error = 1.0 - total.max()
    majority = int(total.argmax())
    best = Stump(0, math.inf, majority, majority)
    for feature in range(d):
        column_order = order[:, feature]
        sorted_values = data[column_order, feature]
        boundaries = np.flatnonzero(sorted_values[1:] > sorted_values[:-1])
        if boundaries.shape[0] == 0:
            continue
        left = np.cumsum(weighted[column_order], axis=0)[boundaries]
        right = total - left
        errors = total.sum() - left.max(axis=1) - right.max(axis=1)
        position = int(np.flatnonzero(errors <= errors.min() + SPLIT_TOLERANCE)[0])
        if errors[position] < best_error - SPLIT_TOLERANCE:
            low = sorted_values[boundaries[position]]
            high = sorted_values[boundaries[position] + 1]
            threshold = (low + high) / 2.0
            if not low <= threshold < high:
                threshold = low
            best_error = float(errors[position])
            best = Stump(
                feature,
                float(threshold),
                int(left[position].argmax()),
                int(right[position].argmax()),
            )
    return best, max(best_error, 0.0)


def fit_adaboost(
    data: np.ndarray, labels: np.ndarray, n_rounds: int = 50
) -> AdaBoostModel:
    """
    Multi class AdaBoost (SAMME) over decision stumps. Boosting stops once a
    stump is no better than chance, ``err >= 1 - 1/K``, or fits perfectly

    :raises: SingleClassException
    """
    data = np.asarray(data, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if data.ndim != 2 or labels.shape != (data.shape[0],):
        raise DimensionMismatchException("AdaBoost needs an n x d matrix and n labels")
    if np.unique(labels).shape[0] < 2:
        raise SingleClassException("AdaBoost needs at least 2 classes")

    n = data.shape[0]
    chance = 1.0 - 1.0 / N_CLASSES
    sample_weight = np.full(n, 1.0 / n)
    order = np.argsort(data, axis=0, kind="stable")
    model = AdaBoostModel([], [], data.shape[1])
    for round_index in range(n_rounds):
        stump, error = fit_stump(data, labels, sample_weight, order)
        if error >= chance:
            if not model.stumps:
                # Keep one learner so the model can still predict
                model.stumps.append(stump)
                model.weights.append(1.0)
            logger.debug(
                "AdaBoost stopped at round %d, error %.4f", round_index, error
            )
            break
        alpha = learner_weight(error)
        model.stumps.append(stump)
        model.weights.append(alpha)
        if error <= 0.0:
            break
        missed = stump.predict(data) != labels
        sample_weight = sample_weight * np.exp(alpha * missed)
        sample_weight /= sample_weight.sum()
    logger.info("Fitted AdaBoost with %d stumps", model.n_rounds)
    return model


def predict_adaboost(model: AdaBoostModel, data: np.ndarray) -> np.ndarray:
    """
    Weighted vote of the stumps, ties go to the lowest class code
    """
    data = np.asarray(data, dtype=np.float64)
    single = data.ndim == 1
    if single:
        data = data[None]
    if data.shape[1] != model.n_features:
        raise DimensionMismatchException(
            f"AdaBoost expects {model.n_features} features, got {data.shape[1]}"
        )
    scores = np.zeros((data.shape[0], model.n_classes))
    rows = np.arange(data.shape[0])
    for stump, weight in zip(model.stumps, model.weights):
        scores[rows, stump.predict(data)] += weight
    predicted = scores.argmax(axis=1)
    return predicted[0] if single else predicted
