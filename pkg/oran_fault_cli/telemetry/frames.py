import dataclasses
from typing import Dict, Iterable, Iterator, Mapping

import numpy as np
import pandas as pd

from ..exceptions import DatasetIOException, DimensionMismatchException
from ..utils import FLOAT_FORMAT
from .schema import Schema


@dataclasses.dataclass(frozen=True)
class TelemetryFrame:
    timestamp_ms: int
    node_id: str
    metric_id: str
    value: float

    @property
    def column_id(self) -> str:
        return f"{self.node_id}.{self.metric_id}"


@dataclasses.dataclass(frozen=True)
class MetricSeries:
    timestamps_ms: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.timestamps_ms.shape != self.values.shape:
            raise DimensionMismatchException(
                f"{self.timestamps_ms.shape[0]} timestamps for "
                f"{self.values.shape[0]} values"
            )


class TelemetryStream:
    """
    Columnar stream of frames: one `MetricSeries` per schema column, sampled at
    the column's native cadence over ``[0, duration_s)``. Iterating yields
    `TelemetryFrame` in timestamp order, schema order within a timestamp
    """

    def __init__(
        self, schema: Schema, duration_s: int, series: Mapping[str, MetricSeries]
    ):
        self.schema = schema
        self.duration_s = duration_s
        self._series: Dict[str, MetricSeries] = dict(series)
        missing = [c for c in schema.feature_order if c not in self._series]
        if missing:
            raise DimensionMismatchException(
                f"Stream is missing series for {len(missing)} columns: {missing[:3]}"
            )

    @classmethod
    def from_values(
        cls, schema: Schema, duration_s: int, values: Mapping[str, np.ndarray]
    ) -> "TelemetryStream":
        series = {}
        for metric in schema.metrics:
            column_values = np.asarray(values[metric.id], dtype=np.float64)
            timestamps = np.arange(column_values.shape[0], dtype=np.int64) * (
                metric.cadence_ms
            )
            series[metric.id] = MetricSeries(timestamps, column_values)
        return cls(schema, duration_s, series)

    def series(self, column_id: str) -> MetricSeries:
        return self._series[column_id]

    def values(self, column_id: str) -> np.ndarray:
        return self._series[column_id].values

    def replace(self, updates: Mapping[str, np.ndarray]) -> "TelemetryStream":
        """
        :return: new stream where the given columns hold new values on the same
            timestamps
        """
        series = dict(self._series)
        for column_id, values in updates.items():
            timestamps = self._series[column_id].timestamps_ms
            series[column_id] = MetricSeries(
                timestamps, np.asarray(values, dtype=np.float64)
            )
        return TelemetryStream(self.schema, self.duration_s, series)

    @property
    def n_frames(self) -> int:
        return sum(series.values.shape[0] for series in self._series.values())

    def __iter__(self) -> Iterator[TelemetryFrame]:
        step_ms = min(metric.cadence_ms for metric in self.schema.metrics)
        for timestamp in range(0, self.duration_s * 1000, step_ms):
            for metric in self.schema.metrics:
                if timestamp % metric.cadence_ms:
                    continue
                series = self._series[metric.id]
                position = timestamp // metric.cadence_ms
                if position < series.values.shape[0]:
                    yield TelemetryFrame(
                        int(series.timestamps_ms[position]),
                        metric.node_id,
                        metric.metric,
                        float(series.values[position]),
                    )


def write_frames_csv(frames: Iterable[TelemetryFrame], path: str) -> None:
    """
    Raw dump with header ``timestamp_ms,node_id,metric_id,value``
    """
    rows = [
        (frame.timestamp_ms, frame.node_id, frame.metric_id, frame.value)
        for frame in frames
    ]
    data_frame = pd.DataFrame(
        rows, columns=["timestamp_ms", "node_id", "metric_id", "value"]
    )
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
