import dataclasses
import logging
from typing import Dict, List

import numpy as np

from ..exceptions import (
    DatasetIOException,
    DimensionMismatchException,
    PcaModelException,
)
from ..utils import format_row

logger = logging.getLogger(__name__)

ORTHONORMALITY_TOLERANCE = 1e-8


@dataclasses.dataclass(frozen=True)
class PcaModel:
    """
    :param mean: ``d`` feature means of the fitted data
    :param components: ``r x d`` orthonormal principal axes, strongest first
    :param explained_variance: ``r`` eigenvalues, non increasing
    :param total_variance: trace of the fitted covariance
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    total_variance: float

    def __post_init__(self):
        r, d = self.components.shape
        if self.mean.shape != (d,) or self.explained_variance.shape != (r,):
            raise PcaModelException(
                f"Inconsistent PCA shapes: mean {self.mean.shape}, components "
                f"{self.components.shape}, variance {self.explained_variance.shape}"
            )
        gram = self.components @ self.components.T
        deviation = np.abs(gram - np.eye(r)).max() if r else 0.0
        if deviation > ORTHONORMALITY_TOLERANCE:
            raise PcaModelException(
                f"Components are not orthonormal (max deviation {deviation:.3g})"
            )
        if (np.diff(self.explained_variance) > 0).any():
            raise PcaModelException("Explained variance must be non increasing")

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance <= 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance

    @property
    def reduction_ratio(self) -> float:
        return 1.0 - self.n_components / self.n_features


def _orient(components: np.ndarray) -> np.ndarray:
    """
    Flip every axis so its largest magnitude entry is positive
    """
    strongest = np.abs(components).argmax(axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), strongest])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def fit_pca(data: np.ndarray, r: int) -> PcaModel:
    """
    Top `r` eigenpairs of the sample covariance (divisor ``n - 1``)

    :raises: PcaModelException if ``n < 2`` or `r` is not in ``[1, min(n - 1, d)]``
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionMismatchException("PCA needs a 2-D data matrix")
    n, d = data.shape
    if n < 2:
        raise PcaModelException(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= r <= min(n - 1, d):
        raise PcaModelException(
            f"Number of components {r} must be in [1, {min(n - 1, d)}]"
        )

    mean = data.mean(axis=0)
    centered = data - mean
    covariance = centered.T @ centered / (n - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    # eigh sorts ascending
    top = np.arange(d - 1, d - 1 - r, -1)
    components = _orient(eigenvectors[:, top].T)
    explained = np.maximum(eigenvalues[top], 0.0)
    model = PcaModel(mean, components, explained, float(np.trace(covariance)))
    logger.info(
        "PCA kept %d of %d features, explained variance ratio %.4f",
        r,
        d,
        float(model.explained_variance_ratio.sum()),
    )
    return model


def _check_dimension(actual: int, expected: int, what: str):
    if actual != expected:
        raise DimensionMismatchException(
            f"{what} has dimension {actual}, the PCA model expects {expected}"
        )


def transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """
    Project one vector or the rows of a matrix, ``components (x - mean)``
    """
    x = np.asarray(x, dtype=np.float64)
    _check_dimension(x.shape[-1], model.n_features, "Input")
    return (x - model.mean) @ model.components.T


def inverse_transform(model: PcaModel, z: np.ndarray) -> np.ndarray:
    """
    Reconstruct one reduced vector or the rows of a matrix,
    ``mean + components^T z``
    """
    z = np.asarray(z, dtype=np.float64)
    _check_dimension(z.shape[-1], model.n_components, "Reduced input")
    return z @ model.components + model.mean


def reconstruction_error(model: PcaModel, data: np.ndarray) -> float:
    """
    Residual energy after projection, squared residual norms summed over rows
    divided by ``n - 1``. On the fitted data this equals the sum of the
    discarded eigenvalues
    """
    data = np.asarray(data, dtype=np.float64)
    residual = data - inverse_transform(model, transform(model, data))
    return float((residual**2).sum() / max(data.shape[0] - 1, 1))


def write_pca_csv(model: PcaModel, path: str) -> None:
    """
    One block per line: ``mean``, one ``component`` line per axis,
    ``explained_variance`` and ``total_variance``
    """
    lines = [format_row("mean", model.mean)]
    lines += [format_row("component", row) for row in model.components]
    lines.append(format_row("explained_variance", model.explained_variance))
    lines.append(format_row("total_variance", [model.total_variance]))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise DatasetIOException(path, str(e))


def read_pca_csv(path: str) -> PcaModel:
    """
    :raises: DatasetIOException, PcaModelException if the stored axes are not
        orthonormal
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().splitlines() if line]
    except OSError as e:
        raise DatasetIOException(path, str(e))

    blocks: Dict[str, List[List[float]]] = {
        "mean": [],
        "component": [],
        "explained_variance": [],
        "total_variance": [],
    }
    for number, line in enumerate(lines, start=1):
        name, *values = line.split(",")
        if name not in blocks:
            raise DatasetIOException(path, f"line {number} has unknown block {name}")
        try:
            blocks[name].append([float(value) for value in values])
        except ValueError:
            raise DatasetIOException(path, f"line {number} holds a non numeric value")

    for name in ("mean", "explained_variance", "total_variance"):
        if len(blocks[name]) != 1:
            raise DatasetIOException(path, f"expected exactly one {name} line")
    mean = np.array(blocks["mean"][0])
    try:
        components = np.array(blocks["component"], dtype=np.float64).reshape(
            len(blocks["component"]), mean.shape[0]
        )
    except ValueError:
        raise DatasetIOException(path, "component lines do not match the mean")
    return PcaModel(
        mean,
        components,
        np.array(blocks["explained_variance"][0]),
        blocks["total_variance"][0][0],
    )
