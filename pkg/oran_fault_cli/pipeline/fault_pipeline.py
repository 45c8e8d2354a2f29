import dataclasses
import logging
import os
from typing import Callable, Dict, List, Optional, Sequence, TypeVar

import numpy as np

from ..exceptions import (
    DimensionMismatchException,
    ModelBundleException,
    OranFaultException,
    PipelineStageException,
    TickOutOfRangeException,
)
from ..telemetry.dataset import DatasetTable
from ..utils import derive_rng, derive_seed, file_sha256
from .adaboost import AdaBoostModel, fit_adaboost, predict_adaboost
from .lstm_forecaster import (
    DEFAULT_HIDDEN_SIZE,
    DEFAULT_LAYERS,
    LstmParams,
    TrainConfig,
    predict_windows,
    read_lstm,
    train,
    write_lstm,
)
from .pca import (
    PcaModel,
    fit_pca,
    inverse_transform,
    read_pca_csv,
    transform,
    write_pca_csv,
)
from .preprocess import (
    DEFAULT_BACK_STEPS,
    DEFAULT_HORIZON,
    Normalizer,
    WindowSet,
    apply_normalizer,
    fit_normalizer,
    make_windows,
    read_normalizer_csv,
    training_rows,
    write_normalizer_csv,
)
from .random_forest import (
    ForestModel,
    ForestParams,
    fit_forest,
    predict_proba,
    read_forest,
    write_forest,
)

logger = logging.getLogger(__name__)

NORMALIZER_FILE = "normalizer.csv"
PCA_FILE = "pca.csv"
LSTM_FILE = "lstm.txt"
FOREST_FILE = "forest.txt"
MANIFEST_FILE = "manifest.txt"
BUNDLE_ARTIFACTS = (NORMALIZER_FILE, PCA_FILE, LSTM_FILE, FOREST_FILE)

T = TypeVar("T")


@dataclasses.dataclass(frozen=True)
class PipelineSettings:
    k: int = DEFAULT_BACK_STEPS
    m: int = DEFAULT_HORIZON
    pca_components: int = 10
    hidden_size: int = DEFAULT_HIDDEN_SIZE
    n_layers: int = DEFAULT_LAYERS
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    forest: ForestParams = dataclasses.field(default_factory=ForestParams)
    adaboost_rounds: int = 50


def _stage(name: str, fold: Optional[int], function: Callable[[], T]) -> T:
    try:
        return function()
    except (OranFaultException, ValueError, np.linalg.LinAlgError) as e:
        raise PipelineStageException(name, e, fold) from e


@dataclasses.dataclass
class FaultPipeline:
    """
    Normalizer, PCA, LSTM forecaster and Random Forest chained together. The
    forest classifies the inverse PCA reconstruction of the LSTM forecast, so
    the label predicted for a window ending at ``t`` is the one of ``t + m``
    """

    normalizer: Normalizer
    pca: PcaModel
    lstm: LstmParams
    forest: ForestModel
    k: int
    m: int
    adaboost: Optional[AdaBoostModel] = None
    loss_history: List[float] = dataclasses.field(default_factory=list)

    @classmethod
    def fit(
        cls,
        table: DatasetTable,
        windows: WindowSet,
        settings: PipelineSettings,
        seed: int,
        fold: Optional[int] = None,
        with_adaboost: bool = False,
        feature_ids: Optional[Sequence[str]] = None,
    ) -> "FaultPipeline":
        """
        Fit every stage on `windows` only. The normalizer and PCA see the
        training target rows, held out targets never leak into any stage

        :param windows: training windows over `table`
        :param fold: fold index, seeds the LSTM and the forest and tags errors
        :param feature_ids: column ids stored in the normalizer
        :raises: PipelineStageException
        """
        index = 0 if fold is None else fold
        rows = training_rows(windows)
        normalizer = _stage(
            "normalizer", fold, lambda: fit_normalizer(table, rows, feature_ids)
        )
        normalized = apply_normalizer(normalizer, table.features)
        pca = _stage(
            "pca", fold, lambda: fit_pca(normalized[rows], settings.pca_components)
        )
        reduced = windows.map_source(
            lambda source: transform(pca, apply_normalizer(normalizer, source))
        )
        lstm, history = _stage(
            "lstm",
            fold,
            lambda: train(
                reduced,
                settings.train,
                settings.hidden_size,
                settings.n_layers,
                derive_rng(seed, "pipeline.lstm", index),
            ),
        )

        reconstructions = inverse_transform(pca, predict_windows(lstm, reduced))
        labels = windows.target_labels
        forest = _stage(
            "forest",
            fold,
            lambda: fit_forest(
                reconstructions,
                labels,
                settings.forest,
                derive_seed(seed, "pipeline.forest", index),
            ),
        )
        adaboost = None
        if with_adaboost:
            adaboost = _stage(
                "adaboost",
                fold,
                lambda: fit_adaboost(reconstructions, labels, settings.adaboost_rounds),
            )
        return cls(
            normalizer, pca, lstm, forest, windows.k, windows.m, adaboost, history
        )

    def reduce(self, features: np.ndarray) -> np.ndarray:
        return transform(self.pca, apply_normalizer(self.normalizer, features))

    def forecast(self, windows: WindowSet) -> np.ndarray:
        """
        :return: inverse PCA reconstruction of the forecast of every window,
            in normalized feature space
        """
        if windows.k != self.k or windows.m != self.m:
            raise DimensionMismatchException(
                f"Pipeline was fitted with k={self.k} m={self.m}, got windows "
                f"with k={windows.k} m={windows.m}"
            )
        forecasts = predict_windows(self.lstm, windows.map_source(self.reduce))
        return inverse_transform(self.pca, forecasts)

    def actual(self, windows: WindowSet) -> np.ndarray:
        """
        Normalized targets, what `forecast` is compared against
        """
        return apply_normalizer(self.normalizer, windows.targets)

    def persistence(self, windows: WindowSet) -> np.ndarray:
        """
        Forecast that repeats the last observed row of every window
        """
        return apply_normalizer(self.normalizer, windows.source[windows.ends])

    def predict_proba(self, windows: WindowSet) -> np.ndarray:
        return predict_proba(self.forest, self.forecast(windows))

    def predict(self, windows: WindowSet) -> np.ndarray:
        return self.predict_proba(windows).argmax(axis=1)

    def predict_adaboost(self, windows: WindowSet) -> np.ndarray:
        if self.adaboost is None:
            raise ValueError("Pipeline was fitted without AdaBoost")
        return predict_adaboost(self.adaboost, self.forecast(windows))

    def window_at(self, table: DatasetTable, tick: int) -> WindowSet:
        """
        Single window ending at `tick`

        :raises: TickOutOfRangeException unless ``k <= tick <= rows - m - 1``
        """
        maximum = table.n_rows - self.m - 1
        if not self.k <= tick <= maximum:
            raise TickOutOfRangeException(tick, self.k, maximum)
        windows = make_windows(table, self.k, self.m)
        return windows.subset([tick - self.k])

    def predict_at(self, table: DatasetTable, tick: int) -> np.ndarray:
        """
        :return: class probabilities for ``tick + m``
        """
        return self.predict_proba(self.window_at(table, tick))[0]

    def save(self, directory: str, extra: Optional[Dict[str, str]] = None) -> None:
        """
        Write the four artifacts and ``manifest.txt``, ``key=value`` lines with
        the window and model sizes, `extra` entries and every artifact SHA-256
        """
        write_normalizer_csv(self.normalizer, os.path.join(directory, NORMALIZER_FILE))
        write_pca_csv(self.pca, os.path.join(directory, PCA_FILE))
        write_lstm(self.lstm, os.path.join(directory, LSTM_FILE))
        write_forest(self.forest, os.path.join(directory, FOREST_FILE))
        manifest = dict(extra or {})
        manifest.update(
            {
                "k": str(self.k),
                "m": str(self.m),
                "r": str(self.pca.n_components),
                "h": str(self.lstm.hidden_size),
                "layers": str(self.lstm.n_layers),
            }
        )
        for name in BUNDLE_ARTIFACTS:
            manifest[f"sha256.{name}"] = file_sha256(os.path.join(directory, name))
        write_manifest(manifest, os.path.join(directory, MANIFEST_FILE))

    @classmethod
    def load(cls, directory: str) -> "FaultPipeline":
        """
        :raises: ModelBundleException if a file is missing or was modified
        """
        manifest = read_manifest(os.path.join(directory, MANIFEST_FILE))
        for name in BUNDLE_ARTIFACTS:
            path = os.path.join(directory, name)
            if not os.path.isfile(path):
                raise ModelBundleException(f"Bundle file {path} is missing")
            if file_sha256(path) != manifest.get(f"sha256.{name}"):
                raise ModelBundleException(
                    f"Bundle file {path} does not match the manifest"
                )
        try:
            k, m = int(manifest["k"]), int(manifest["m"])
        except (KeyError, ValueError):
            raise ModelBundleException("Manifest lacks valid k and m entries")
        pipeline = cls(
            read_normalizer_csv(os.path.join(directory, NORMALIZER_FILE)),
            read_pca_csv(os.path.join(directory, PCA_FILE)),
            read_lstm(os.path.join(directory, LSTM_FILE)),
            read_forest(os.path.join(directory, FOREST_FILE)),
            k,
            m,
        )
        if pipeline.pca.n_features != pipeline.normalizer.n_features:
            raise ModelBundleException("PCA and normalizer disagree on the features")
        if pipeline.lstm.input_size != pipeline.pca.n_components:
            raise ModelBundleException("LSTM input size does not match the PCA")
        if pipeline.forest.n_features != pipeline.pca.n_features:
            raise ModelBundleException("Forest features do not match the PCA")
        return pipeline


def write_manifest(manifest: Dict[str, str], path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for key in sorted(manifest):
                f.write(f"{key}={manifest[key]}\n")
    except OSError as e:
        raise ModelBundleException(f"Cannot write manifest {path}: {e}")


def read_manifest(path: str) -> Dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().splitlines() if line]
    except OSError as e:
        raise ModelBundleException(f"Cannot read manifest {path}: {e}")
    manifest = {}
    for line in lines:
        key, separator, value = line.partition("=")
        if not separator:
            raise ModelBundleException(f"Invalid manifest line {line!r} in {path}")
        manifest[key] = value
    return manifest
