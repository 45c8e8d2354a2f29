import dataclasses
import math
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import DimensionMismatchException
from ..telemetry.enums import N_CLASSES

LEAF = -1
SPLIT_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True)
class TreeParams:
    """
    :param features_per_split: features evaluated per node, ``ceil(sqrt(d))``
        when None
    """

    max_depth: int = 12
    min_samples_split: int = 2
    features_per_split: Optional[int] = None

    def __post_init__(self):
        if self.max_depth < 0 or self.min_samples_split < 2:
            raise ValueError("max_depth must be >= 0 and min_samples_split >= 2")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")

    def n_split_features(self, n_features: int) -> int:
        if self.features_per_split is None:
            return min(n_features, math.ceil(math.sqrt(n_features)))
        return min(n_features, self.features_per_split)


@dataclasses.dataclass
class DecisionTree:
    """
    Array backed binary tree in preorder. Node ``i`` is a leaf when
    ``feature[i] == -1``, otherwise samples with ``x[feature] <= threshold``
    go to ``left[i]``. Every node keeps the class histogram of its samples
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def leaf_class(self) -> np.ndarray:
        """
        Majority class per node, lowest class code on ties
        """
        return self.counts.argmax(axis=1)

    def apply(self, data: np.ndarray) -> np.ndarray:
        """
        :return: leaf index reached by every row
        """
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.n_features:
            raise DimensionMismatchException(
                f"Tree expects {self.n_features} features, got {data.shape}"
            )
        nodes = np.zeros(data.shape[0], dtype=np.int64)
        rows = np.arange(data.shape[0])
        internal = self.feature[nodes] != LEAF
        while internal.any():
            active = rows[internal]
            current = nodes[active]
            go_left = (
                data[active, self.feature[current]] <= self.threshold[current]
            )
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            internal = self.feature[nodes] != LEAF
        return nodes

    def predict(self, data: np.ndarray) -> np.ndarray:
        return self.leaf_class()[self.apply(data)]


def gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p**2).sum())


def _best_split_on_feature(
    values: np.ndarray, one_hot: np.ndarray
) -> Optional[Tuple[float, float]]:
    """
    :return: (score, threshold) of the best midpoint split, the score is
        ``sum(left^2)/n_left + sum(right^2)/n_right`` which grows as the
        weighted Gini impurity drops. None when all values are equal
    """
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    boundaries = np.flatnonzero(sorted_values[1:] > sorted_values[:-1])
    if boundaries.shape[0] == 0:
        return None
    cumulative = np.cumsum(one_hot[order], axis=0)
    total = cumulative[-1]
    left = cumulative[boundaries]
    right = total - left
    n_left = (boundaries + 1).astype(np.float64)
    n_right = values.shape[0] - n_left
    scores = (left**2).sum(axis=1) / n_left + (right**2).sum(axis=1) / n_right
    best = int(np.flatnonzero(scores >= scores.max() - SPLIT_TOLERANCE)[0])
    low = sorted_values[boundaries[best]]
    high = sorted_values[boundaries[best] + 1]
    threshold = (low + high) / 2.0
    if not low <= threshold < high:
        threshold = low
    return float(scores[best]), float(threshold)


class _TreeBuilder:
    def __init__(
        self,
        data: np.ndarray,
        labels: np.ndarray,
        params: TreeParams,
        rng: np.random.Generator,
    ):
        self.data = data
        self.labels = labels
        self.one_hot = np.eye(N_CLASSES)[labels]
        self.params = params
        self.rng = rng
        self.n_features = data.shape[1]
        self.n_split = params.n_split_features(self.n_features)
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.counts: List[np.ndarray] = []

    def _features(self) -> np.ndarray:
        if self.n_split >= self.n_features:
            return np.arange(self.n_features)
        return np.sort(
            self.rng.choice(self.n_features, size=self.n_split, replace=False)
        )

    def _split(self, rows: np.ndarray) -> Optional[Tuple[int, float]]:
        one_hot = self.one_hot[rows]
        n = rows.shape[0]
        parent_score = (one_hot.sum(axis=0) ** 2).sum() / n
        best: Optional[Tuple[float, int, float]] = None
        for feature in self._features():
            candidate = _best_split_on_feature(self.data[rows, feature], one_hot)
            if candidate is None:
                continue
            score, threshold = candidate
            if best is None or score > best[0] + SPLIT_TOLERANCE:
                best = (score, int(feature), threshold)
        # Gini decrease is (score - parent_score) / n
        if best is None or (best[0] - parent_score) / n <= SPLIT_TOLERANCE:
            return None
        return best[1], best[2]

    def grow(self, rows: np.ndarray, depth: int) -> int:
        node = len(self.feature)
        counts = np.bincount(self.labels[rows], minlength=N_CLASSES)
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.counts.append(counts)

        pure = np.count_nonzero(counts) <= 1
        if pure or depth >= self.params.max_depth:
            return node
        if rows.shape[0] < self.params.min_samples_split:
            return node
        split = self._split(rows)
        if split is None:
            return node

        feature, threshold = split
        goes_left = self.data[rows, feature] <= threshold
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = self.grow(rows[goes_left], depth + 1)
        self.right[node] = self.grow(rows[~goes_left], depth + 1)
        return node

    def build(self) -> DecisionTree:
        self.grow(np.arange(self.data.shape[0]), 0)
        return DecisionTree(
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold, dtype=np.float64),
            np.array(self.left, dtype=np.int64),
            np.array(self.right, dtype=np.int64),
            np.array(self.counts, dtype=np.int64).reshape(-1, N_CLASSES),
            self.n_features,
        )


def fit_tree(
    data: np.ndarray,
    labels: np.ndarray,
    params: TreeParams,
    rng: np.random.Generator,
) -> DecisionTree:
    """
    Greedy CART on Gini impurity. Each node evaluates ``ceil(sqrt(d))`` sampled
    features, thresholds are midpoints of consecutive distinct values, ties go
    to the lowest feature and then the lowest threshold
    """
    data = np.asarray(data, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("Cannot fit a tree on empty data")
    if labels.shape != (data.shape[0],):
        raise DimensionMismatchException(
            f"{data.shape[0]} rows but {labels.shape[0]} labels"
        )
    if labels.min() < 0 or labels.max() >= N_CLASSES:
        raise ValueError(f"Labels must be in [0, {N_CLASSES - 1}]")
    return _TreeBuilder(data, labels, params, rng).build()
