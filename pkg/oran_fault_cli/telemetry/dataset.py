import dataclasses
from typing import List, Optional

import numpy as np
import pandas as pd

from ..exceptions import (
    DatasetFormatException,
    DatasetIOException,
    DimensionMismatchException,
    HeaderMismatchException,
    NonNumericCellException,
    UnknownLabelException,
)
from ..utils import FLOAT_FORMAT
from .enums import N_CLASSES
from .schema import Schema

TICK_COLUMN = "tick_s"
LABEL_COLUMN = "label"


@dataclasses.dataclass(frozen=True)
class DatasetTable:
    """
    Features on a 1 second grid, one row per tick, columns in schema feature
    order. Gaps are NaN and only allowed before imputation
    """

    ticks: np.ndarray
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2:
            raise DimensionMismatchException("Features must be a 2-D matrix")
        n_rows = self.features.shape[0]
        if self.ticks.shape != (n_rows,) or self.labels.shape != (n_rows,):
            raise DimensionMismatchException(
                f"{n_rows} feature rows but {self.ticks.shape[0]} ticks and "
                f"{self.labels.shape[0]} labels"
            )

    @classmethod
    def from_arrays(
        cls, features: np.ndarray, labels: Optional[np.ndarray] = None
    ) -> "DatasetTable":
        features = np.asarray(features, dtype=np.float64)
        n_rows = features.shape[0]
        if labels is None:
            labels = np.zeros(n_rows, dtype=np.int64)
        return cls(
            np.arange(n_rows, dtype=np.int64),
            features,
            np.asarray(labels, dtype=np.int64),
        )

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def is_complete(self) -> bool:
        return bool(np.isfinite(self.features).all())

    def with_features(self, features: np.ndarray) -> "DatasetTable":
        return DatasetTable(self.ticks, np.asarray(features, np.float64), self.labels)

    def with_labels(self, labels: np.ndarray) -> "DatasetTable":
        return DatasetTable(self.ticks, self.features, np.asarray(labels, np.int64))


def expected_header(schema: Schema) -> List[str]:
    return [TICK_COLUMN, *schema.feature_order, LABEL_COLUMN]


def write_dataset_csv(table: DatasetTable, schema: Schema, path: str) -> None:
    """
    Header ``tick_s,<feature ids...>,label``, values with 9 significant digits,
    labels as integer codes
    """
    if table.n_features != schema.n_features:
        raise DimensionMismatchException(
            f"Table has {table.n_features} columns, schema has {schema.n_features}"
        )
    data_frame = pd.DataFrame(table.features, columns=list(schema.feature_order))
    data_frame.insert(0, TICK_COLUMN, table.ticks.astype(np.int64))
    data_frame[LABEL_COLUMN] = table.labels.astype(np.int64)
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


def _first_invalid(values: np.ndarray) -> Optional[tuple]:
    invalid = np.argwhere(~np.isfinite(values))
    if invalid.shape[0]:
        return tuple(int(i) for i in invalid[0])
    return None


def read_dataset_csv(path: str, schema: Schema) -> DatasetTable:
    """
    :raises: DatasetIOException, DatasetFormatException, HeaderMismatchException,
        NonNumericCellException, UnknownLabelException. Rows are numbered from 1
        (first data row)
    """
    try:
        data_frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise DatasetIOException(path, "file is empty")
    except pd.errors.ParserError as e:
        raise DatasetIOException(path, f"malformed CSV: {e}")
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetIOException(path, str(e))
    except ValueError as e:
        raise DatasetFormatException(path, f"cannot parse CSV: {e}")

    header = [str(column) for column in data_frame.columns]
    expected = expected_header(schema)
    for position in range(max(len(header), len(expected))):
        found = header[position] if position < len(header) else "<missing>"
        wanted = expected[position] if position < len(expected) else "<none>"
        if found != wanted:
            raise HeaderMismatchException(path, position, wanted, found)

    raw = data_frame.to_numpy(dtype=object)
    numeric = data_frame.apply(pd.to_numeric, errors="coerce").to_numpy(
        dtype=np.float64
    )

    invalid = _first_invalid(numeric[:, :-1])
    if invalid is not None:
        row, column = invalid
        raise NonNumericCellException(path, row + 1, header[column], raw[row, column])

    ticks = numeric[:, 0]
    fractional_ticks = np.flatnonzero(ticks != np.floor(ticks))
    if fractional_ticks.shape[0]:
        row = int(fractional_ticks[0])
        raise NonNumericCellException(path, row + 1, TICK_COLUMN, raw[row, 0])
    misplaced = np.flatnonzero(ticks != np.arange(ticks.shape[0]))
    if misplaced.shape[0]:
        row = int(misplaced[0])
        raise DatasetFormatException(
            path, f"row {row + 1} has tick {raw[row, 0]}, ticks must run 0, 1, 2, ..."
        )

    labels = numeric[:, -1]
    for row in range(labels.shape[0]):
        label = labels[row]
        if np.isnan(label):
            raise NonNumericCellException(path, row + 1, LABEL_COLUMN, raw[row, -1])
        if label != np.floor(label) or not 0 <= label < N_CLASSES:
            raise UnknownLabelException(path, row + 1, raw[row, -1])

    return DatasetTable(
        ticks.astype(np.int64),
        numeric[:, 1:-1].copy(),
        labels.astype(np.int64),
    )
