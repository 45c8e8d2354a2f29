# flake8: noqa F401
from .dataset import DatasetTable, read_dataset_csv, write_dataset_csv
from .enums import FaultLabel, NodeKind, TelemetryLevel
from .frames import MetricSeries, TelemetryFrame, TelemetryStream, write_frames_csv
from .schema import (
    MetricDescriptor,
    Schema,
    build_default_schema,
    read_schema,
    schema_from_preset,
    write_schema,
)
