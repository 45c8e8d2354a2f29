import dataclasses
import logging
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import (
    DatasetIOException,
    DimensionMismatchException,
    FrameOutOfRangeException,
    TooFewRowsException,
)
from ..telemetry.dataset import DatasetTable
from ..telemetry.frames import TelemetryFrame, TelemetryStream
from ..telemetry.schema import Schema
from ..utils import format_row

logger = logging.getLogger(__name__)

DEFAULT_BACK_STEPS = 60
DEFAULT_HORIZON = 5


def _default_labels(duration_s: int, labels: Optional[np.ndarray]) -> np.ndarray:
    if labels is None:
        return np.zeros(duration_s, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (duration_s,):
        raise DimensionMismatchException(
            f"{labels.shape[0]} labels for a duration of {duration_s}s"
        )
    return labels


def _check_ticks(column_id: str, timestamps_ms: np.ndarray, duration_s: int):
    outside = np.flatnonzero((timestamps_ms < 0) | (timestamps_ms >= duration_s * 1000))
    if outside.shape[0]:
        raise FrameOutOfRangeException(
            f"Frame of {column_id} at {int(timestamps_ms[outside[0]])} ms is outside "
            f"[0, {duration_s * 1000}) ms"
        )


def align(
    frames: Union[TelemetryStream, Iterable[TelemetryFrame]],
    schema: Schema,
    duration_s: int,
    labels: Optional[np.ndarray] = None,
) -> DatasetTable:
    """
    Integrate frames of every level onto the 1 second grid. Sub second samples
    are averaged per tick, ticks without any observation are left as NaN

    :param frames: a `TelemetryStream` or any iterable of `TelemetryFrame`
    :param labels: per second label codes, all Normal if not given
    :raises: FrameOutOfRangeException, UnknownMetricException
    """
    sums = np.zeros((duration_s, schema.n_features))
    counts = np.zeros((duration_s, schema.n_features))

    if isinstance(frames, TelemetryStream):
        for column, column_id in enumerate(schema.feature_order):
            series = frames.series(column_id)
            _check_ticks(column_id, series.timestamps_ms, duration_s)
            ticks = series.timestamps_ms // 1000
            sums[:, column] = np.bincount(
                ticks, weights=series.values, minlength=duration_s
            )
            counts[:, column] = np.bincount(ticks, minlength=duration_s)
    else:
        rows, columns, values = [], [], []
        for frame in frames:
            column_id = frame.column_id
            column = schema.index_of(column_id)
            _check_ticks(column_id, np.array([frame.timestamp_ms]), duration_s)
            rows.append(frame.timestamp_ms // 1000)
            columns.append(column)
            values.append(frame.value)
        if rows:
            index = (np.asarray(rows, np.int64), np.asarray(columns, np.int64))
            np.add.at(sums, index, np.asarray(values, np.float64))
            np.add.at(counts, index, 1.0)

    with np.errstate(invalid="ignore", divide="ignore"):
        features = np.where(counts > 0, sums / counts, np.nan)
    return DatasetTable(
        np.arange(duration_s, dtype=np.int64),
        features,
        _default_labels(duration_s, labels),
    )


def impute(table: DatasetTable) -> DatasetTable:
    """
    Forward fill, then backward fill, then zero for columns without any value
    """
    filled = pd.DataFrame(table.features).ffill().bfill().fillna(0.0)
    return table.with_features(filled.to_numpy(dtype=np.float64))


@dataclasses.dataclass(frozen=True)
class Normalizer:
    feature_ids: Tuple[str, ...]
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        if self.minimum.shape != self.maximum.shape or self.minimum.shape != (
            len(self.feature_ids),
        ):
            raise DimensionMismatchException(
                f"Normalizer holds {len(self.feature_ids)} ids, "
                f"{self.minimum.shape[0]} minimums and {self.maximum.shape[0]} maximums"
            )
        if (self.maximum < self.minimum).any():
            raise ValueError("Normalizer maximum is lower than minimum")

    @property
    def n_features(self) -> int:
        return len(self.feature_ids)

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def _check(self, data: np.ndarray):
        if data.shape[-1] != self.n_features:
            raise DimensionMismatchException(
                f"Expected {self.n_features} features, got {data.shape[-1]}"
            )


def fit_normalizer(
    table: DatasetTable,
    rows: Optional[Sequence[int]] = None,
    feature_ids: Optional[Sequence[str]] = None,
) -> Normalizer:
    """
    Min/max per column over `rows` only (all rows if not given)
    """
    data = table.features
    if rows is not None:
        data = data[np.asarray(rows, dtype=np.int64)]
    if data.shape[0] == 0:
        raise ValueError("Cannot fit a normalizer on zero rows")
    if feature_ids is None:
        feature_ids = [f"f{i}" for i in range(table.n_features)]
    return Normalizer(tuple(feature_ids), data.min(axis=0), data.max(axis=0))


def apply_normalizer(normalizer: Normalizer, data: np.ndarray) -> np.ndarray:
    """
    Scale to [0, 1] on the fitted range. Constant columns map to 0
    """
    data = np.asarray(data, dtype=np.float64)
    normalizer._check(data)
    span = normalizer.span
    constant = span == 0
    safe_span = np.where(constant, 1.0, span)
    return np.where(constant, 0.0, (data - normalizer.minimum) / safe_span)


def invert_normalizer(normalizer: Normalizer, data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    normalizer._check(data)
    return data * normalizer.span + normalizer.minimum


def write_normalizer_csv(normalizer: Normalizer, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("feature_id,min,max\n")
            for feature_id, low, high in zip(
                normalizer.feature_ids, normalizer.minimum, normalizer.maximum
            ):
                f.write(format_row(feature_id, (low, high)) + "\n")
    except OSError as e:
        raise DatasetIOException(path, str(e))


def read_normalizer_csv(path: str) -> Normalizer:
    try:
        data_frame = pd.read_csv(
            path,
            dtype={"feature_id": str},
            float_precision="round_trip",
            encoding="utf-8",
        )
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DatasetIOException(path, str(e))
    if list(data_frame.columns) != ["feature_id", "min", "max"]:
        raise DatasetIOException(path, "header must be feature_id,min,max")
    return Normalizer(
        tuple(data_frame["feature_id"]),
        data_frame["min"].to_numpy(dtype=np.float64),
        data_frame["max"].to_numpy(dtype=np.float64),
    )


@dataclasses.dataclass(frozen=True)
class WindowSet:
    """
    Windows over a source matrix. Window ``j`` ends at row ``ends[j] = t``, its
    inputs are rows ``t - k .. t`` and its target is row ``t + m``
    """

    source: np.ndarray
    labels: np.ndarray
    k: int
    m: int
    ends: np.ndarray

    def __len__(self) -> int:
        return self.ends.shape[0]

    @property
    def n_features(self) -> int:
        return self.source.shape[1]

    @property
    def inputs(self) -> np.ndarray:
        """
        ``len x (k+1) x d`` read only view, nothing is copied
        """
        view = sliding_window_view(self.source, self.k + 1, axis=0)
        # sliding_window_view puts the window axis last
        return view[self.ends - self.k].transpose(0, 2, 1)

    def input_at(self, index: int) -> np.ndarray:
        end = int(self.ends[index])
        return self.source[end - self.k : end + 1]

    @property
    def targets(self) -> np.ndarray:
        return self.source[self.ends + self.m]

    @property
    def target_rows(self) -> np.ndarray:
        return self.ends + self.m

    @property
    def target_labels(self) -> np.ndarray:
        return self.labels[self.ends + self.m]

    def subset(self, indices: Sequence[int]) -> "WindowSet":
        return dataclasses.replace(self, ends=self.ends[np.asarray(indices, np.int64)])

    def map_source(self, transform: Callable[[np.ndarray], np.ndarray]) -> "WindowSet":
        """
        :return: same windows over ``transform(source)``, a row wise map
        """
        mapped = np.asarray(transform(self.source), dtype=np.float64)
        if mapped.shape[0] != self.source.shape[0]:
            raise DimensionMismatchException(
                "A source transform must keep one row per tick"
            )
        return dataclasses.replace(self, source=mapped)


def minimum_rows(k: int, m: int) -> int:
    return k + m + 1


def make_windows(
    table: DatasetTable,
    k: int = DEFAULT_BACK_STEPS,
    m: int = DEFAULT_HORIZON,
    stride: int = 1,
) -> WindowSet:
    """
    :return: windows ending at ``t = k, k + stride, ...`` while ``t + m`` is
        still a row. With stride 1 there are ``rows - k - m`` windows
    :raises: TooFewRowsException
    """
    if k < 0 or m < 1 or stride < 1:
        raise ValueError(f"Invalid window parameters k={k} m={m} stride={stride}")
    if table.n_rows < minimum_rows(k, m):
        raise TooFewRowsException(table.n_rows, minimum_rows(k, m))
    ends = np.arange(k, table.n_rows - m, stride, dtype=np.int64)
    return WindowSet(table.features, table.labels, k, m, ends)


def training_rows(windows: WindowSet) -> np.ndarray:
    """
    Sorted target rows of the given windows. Every row is the target of at most
    one window, so statistics fitted on these rows ignore held out targets
    """
    return np.unique(windows.target_rows)
