import dataclasses
import logging
from typing import List, Optional

import numpy as np

from ..exceptions import (
    DatasetIOException,
    DimensionMismatchException,
    SingleClassException,
)
from ..telemetry.enums import N_CLASSES
from ..utils import derive_rng
from .decision_tree import LEAF, DecisionTree, TreeParams, fit_tree

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_split: int = 2
    features_per_split: Optional[int] = None
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees={self.n_trees} must be >= 1")

    @property
    def tree_params(self) -> TreeParams:
        return TreeParams(
            self.max_depth, self.min_samples_split, self.features_per_split
        )


@dataclasses.dataclass
class ForestModel:
    trees: List[DecisionTree]
    n_features: int
    seed: int = 0
    oob_accuracy: Optional[float] = None

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def fit_forest(
    data: np.ndarray, labels: np.ndarray, params: ForestParams, seed: int
) -> ForestModel:
    """
    Tree ``i`` draws its bootstrap sample and split features from
    ``derive_rng(seed, "forest.tree", i)``, so the first trees do not depend on
    `n_trees`

    :raises: SingleClassException
    """
    data = np.asarray(data, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = data.shape[0]
    if n < 2 or np.unique(labels).shape[0] < 2:
        raise SingleClassException(
            f"A forest needs at least 2 rows of 2 classes, got {n} rows of classes "
            f"{np.unique(labels).tolist()}"
        )

    trees: List[DecisionTree] = []
    oob_votes = np.zeros((n, N_CLASSES))
    for index in range(params.n_trees):
        rng = derive_rng(seed, "forest.tree", index)
        if params.bootstrap:
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        tree = fit_tree(data[rows], labels[rows], params.tree_params, rng)
        trees.append(tree)

        out_of_bag = np.ones(n, dtype=bool)
        out_of_bag[rows] = False
        if out_of_bag.any():
            predicted = tree.predict(data[out_of_bag])
            oob_votes[np.flatnonzero(out_of_bag), predicted] += 1

    voted = oob_votes.sum(axis=1) > 0
    oob_accuracy = None
    if voted.any():
        oob_accuracy = float(
            (oob_votes[voted].argmax(axis=1) == labels[voted]).mean()
        )
    logger.info(
        "Fitted forest of %d trees on %d rows, out-of-bag accuracy %s",
        params.n_trees,
        n,
        "n/a" if oob_accuracy is None else f"{oob_accuracy:.4f}",
    )
    return ForestModel(trees, data.shape[1], seed, oob_accuracy)


def predict_proba(model: ForestModel, data: np.ndarray) -> np.ndarray:
    """
    :return: ``n x 4`` fraction of trees voting for every class
    """
    data = np.asarray(data, dtype=np.float64)
    single = data.ndim == 1
    if single:
        data = data[None]
    if data.shape[1] != model.n_features:
        raise DimensionMismatchException(
            f"Forest expects {model.n_features} features, got {data.shape[1]}"
        )
    votes = np.zeros((data.shape[0], N_CLASSES))
    rows = np.arange(data.shape[0])
    for tree in model.trees:
        votes[rows, tree.predict(data)] += 1.0
    probabilities = votes / model.n_trees
    return probabilities[0] if single else probabilities


def predict(model: ForestModel, data: np.ndarray) -> np.ndarray:
    """
    Majority vote, ties go to the lowest class code
    """
    return predict_proba(model, data).argmax(axis=-1)


def write_forest(model: ForestModel, path: str) -> None:
    """
    ``[forest <n_features> <n_trees>]`` then one ``[tree <i>]`` section per
    tree holding ``I,<feature>,<threshold>`` and ``L,<c0>,<c1>,<c2>,<c3>``
    lines in preorder
    """
    lines = [f"[forest {model.n_features} {model.n_trees}]"]
    for index, tree in enumerate(model.trees):
        lines.append(f"[tree {index}]")
        for node in range(tree.n_nodes):
            if tree.feature[node] == LEAF:
                lines.append("L," + ",".join(str(int(c)) for c in tree.counts[node]))
            else:
                lines.append(
                    f"I,{int(tree.feature[node])},{float(tree.threshold[node])!r}"
                )
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise DatasetIOException(path, str(e))


class _PreorderReader:
    def __init__(self, lines: List[str], path: str):
        self.lines = lines
        self.position = 0
        self.path = path
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.counts: List[List[int]] = []

    def read_node(self) -> int:
        if self.position >= len(self.lines):
            raise DatasetIOException(self.path, "tree section ends early")
        kind, *fields = self.lines[self.position].split(",")
        self.position += 1
        node = len(self.feature)
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.counts.append([0] * N_CLASSES)
        if kind == "L" and len(fields) == N_CLASSES:
            self.counts[node] = [int(c) for c in fields]
        elif kind == "I" and len(fields) == 2:
            self.feature[node] = int(fields[0])
            self.threshold[node] = float(fields[1])
            self.left[node] = self.read_node()
            self.right[node] = self.read_node()
            self.counts[node] = [
                a + b
                for a, b in zip(
                    self.counts[self.left[node]], self.counts[self.right[node]]
                )
            ]
        else:
            raise DatasetIOException(
                self.path, f"invalid node line {self.lines[self.position - 1]!r}"
            )
        return node

    def tree(self, n_features: int) -> DecisionTree:
        self.read_node()
        if self.position != len(self.lines):
            raise DatasetIOException(self.path, "tree section has trailing lines")
        return DecisionTree(
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold, dtype=np.float64),
            np.array(self.left, dtype=np.int64),
            np.array(self.right, dtype=np.int64),
            np.array(self.counts, dtype=np.int64),
            n_features,
        )


def read_forest(path: str) -> ForestModel:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().splitlines() if line]
    except OSError as e:
        raise DatasetIOException(path, str(e))
    if not lines or not lines[0].startswith("[forest "):
        raise DatasetIOException(path, "missing [forest ...] header")

    try:
        n_features, n_trees = (int(v) for v in lines[0][1:-1].split()[1:])
        sections: List[List[str]] = []
        for line in lines[1:]:
            if line.startswith("[tree "):
                sections.append([])
            elif sections:
                sections[-1].append(line)
            else:
                raise DatasetIOException(path, "node line before any [tree] header")
        if len(sections) != n_trees:
            raise DatasetIOException(
                path, f"header announces {n_trees} trees, found {len(sections)}"
            )
        trees = [
            _PreorderReader(section, path).tree(n_features) for section in sections
        ]
    except ValueError as e:
        raise DatasetIOException(path, f"malformed forest file: {e}")
    return ForestModel(trees, n_features)
