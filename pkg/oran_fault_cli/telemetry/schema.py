import dataclasses
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

from ..exceptions import DatasetIOException, UnknownMetricException
from .enums import NodeKind, TelemetryLevel

RAN_CADENCE_MS = 100
SCRAPE_CADENCE_MS = 1000

HOST_ID = "host"

# Metric Server KPIs reported by every DU
RAN_METRICS: Tuple[Tuple[str, str], ...] = (
    ("n_active_ues", "count"),
    ("cur_total_dl_bitrate", "Mbps"),
    ("max_total_dl_bitrate", "Mbps"),
    ("dl_bitrate", "Mbps"),
    ("ul_bitrate", "Mbps"),
    ("ul_mcs", "index"),
    ("dl_mcs", "index"),
    ("ul_sinr", "dB"),
    ("cqi", "index"),
)

# cAdvisor style container series
PLATFORM_METRICS: Tuple[Tuple[str, str], ...] = (
    ("cpu_usage", "fraction"),
    ("cpu_user", "fraction"),
    ("cpu_system", "fraction"),
    ("cpu_throttled_periods", "count/s"),
    ("cpu_load_avg", "cores"),
    ("mem_usage", "fraction"),
    ("mem_working_set", "GB"),
    ("mem_rss", "GB"),
    ("mem_cache", "GB"),
    ("mem_swap", "GB"),
    ("mem_failcnt", "count/s"),
    ("net_rx_bytes", "B/s"),
    ("net_tx_bytes", "B/s"),
    ("net_rx_packets", "pkt/s"),
    ("net_tx_packets", "pkt/s"),
    ("net_rx_errors", "count/s"),
    ("net_tx_errors", "count/s"),
    ("net_rx_dropped", "count/s"),
    ("net_tx_dropped", "count/s"),
    ("fs_usage", "GB"),
    ("fs_reads", "ops/s"),
    ("fs_writes", "ops/s"),
    ("fs_read_bytes", "B/s"),
    ("fs_write_bytes", "B/s"),
)

# node-exporter style host series
HOST_METRICS: Tuple[Tuple[str, str], ...] = (
    ("cpu_usage", "fraction"),
    ("cpu_user", "fraction"),
    ("cpu_system", "fraction"),
    ("cpu_iowait", "fraction"),
    ("cpu_freq", "GHz"),
    ("load1", "load"),
    ("load5", "load"),
    ("load15", "load"),
    ("mem_used", "GB"),
    ("mem_available", "GB"),
    ("mem_cached", "GB"),
    ("mem_buffers", "GB"),
    ("swap_used", "GB"),
    ("disk_read_bytes", "B/s"),
    ("disk_write_bytes", "B/s"),
    ("disk_reads", "ops/s"),
    ("disk_writes", "ops/s"),
    ("disk_io_time", "fraction"),
    ("fs_used", "GB"),
    ("fs_avail", "GB"),
    ("fs_files", "count"),
    ("net_rx_bytes", "B/s"),
    ("net_tx_bytes", "B/s"),
    ("net_rx_packets", "pkt/s"),
    ("net_tx_packets", "pkt/s"),
    ("net_rx_errs", "count/s"),
    ("net_tx_errs", "count/s"),
    ("net_rx_drop", "count/s"),
    ("net_tx_drop", "count/s"),
    ("temperature", "celsius"),
    ("power", "W"),
    ("context_switches", "count/s"),
    ("interrupts", "count/s"),
    ("procs_running", "count"),
    ("procs_blocked", "count"),
    ("tcp_retrans", "count/s"),
    ("tcp_timeouts", "count/s"),
    ("udp_errors", "count/s"),
    ("fan_rpm", "rpm"),
    ("entropy_avail", "bits"),
)


@dataclasses.dataclass(frozen=True)
class MetricDescriptor:
    id: str
    level: TelemetryLevel
    node_kind: NodeKind
    unit: str
    cadence_ms: int

    def __post_init__(self):
        if "." not in self.id:
            raise ValueError(f"Metric id {self.id} must be <node_id>.<metric>")
        if self.cadence_ms <= 0:
            raise ValueError(f"Metric {self.id} cadence must be positive")
        expected_cadence = (
            RAN_CADENCE_MS if self.level == TelemetryLevel.RAN else SCRAPE_CADENCE_MS
        )
        if self.cadence_ms != expected_cadence:
            raise ValueError(
                f"Metric {self.id} of level {self.level.value} must have cadence "
                f"{expected_cadence} ms"
            )

    @property
    def node_id(self) -> str:
        return self.id.split(".", 1)[0]

    @property
    def metric(self) -> str:
        return self.id.split(".", 1)[1]

    def to_line(self) -> str:
        return (
            f"{self.id},{self.level.value},{self.node_kind.value},"
            f"{self.unit},{self.cadence_ms}"
        )

    @classmethod
    def from_line(cls, line: str) -> "MetricDescriptor":
        metric_id, level, node_kind, unit, cadence_ms = line.strip().split(",")
        return cls(
            metric_id,
            TelemetryLevel(level),
            NodeKind(node_kind),
            unit,
            int(cadence_ms),
        )


@dataclasses.dataclass(frozen=True)
class Schema:
    metrics: Tuple[MetricDescriptor, ...]

    def __post_init__(self):
        ids = [metric.id for metric in self.metrics]
        if len(set(ids)) != len(ids):
            raise ValueError("Metric ids must be unique within a schema")

    @cached_property
    def feature_order(self) -> Tuple[str, ...]:
        return tuple(metric.id for metric in self.metrics)

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {metric_id: i for i, metric_id in enumerate(self.feature_order)}

    @property
    def n_features(self) -> int:
        return len(self.metrics)

    def index_of(self, column_id: str) -> int:
        try:
            return self._index[column_id]
        except KeyError:
            raise UnknownMetricException(f"Metric {column_id} is not in the schema")

    def column_index(self, node_id: str, metric: str) -> int:
        return self.index_of(f"{node_id}.{metric}")

    def has_column(self, node_id: str, metric: str) -> bool:
        return f"{node_id}.{metric}" in self._index

    def descriptor(self, column_id: str) -> MetricDescriptor:
        return self.metrics[self.index_of(column_id)]

    def columns_for_level(self, level: TelemetryLevel) -> List[int]:
        return [i for i, metric in enumerate(self.metrics) if metric.level == level]

    def _nodes_of_kind(self, node_kind: NodeKind) -> Tuple[str, ...]:
        nodes: List[str] = []
        for metric in self.metrics:
            if metric.node_kind == node_kind and metric.node_id not in nodes:
                nodes.append(metric.node_id)
        return tuple(nodes)

    @cached_property
    def du_ids(self) -> Tuple[str, ...]:
        return self._nodes_of_kind(NodeKind.DU)

    @cached_property
    def cu_ids(self) -> Tuple[str, ...]:
        return self._nodes_of_kind(NodeKind.CU)

    @cached_property
    def containers(self) -> Tuple[str, ...]:
        """
        Canonical container order: containers with platform metrics in the
        order they appear, DUs first
        """
        containers: List[str] = []
        for metric in self.metrics:
            if (
                metric.level == TelemetryLevel.PLATFORM
                and metric.node_id not in containers
            ):
                containers.append(metric.node_id)
        return tuple(containers)


def _metric_names(
    base: Sequence[Tuple[str, str]], count: int, padding_prefix: str
) -> List[Tuple[str, str]]:
    names = list(base[:count])
    for i in range(count - len(names)):
        names.append((f"{padding_prefix}_{i:02d}", "value"))
    return names


def du_id(index: int) -> str:
    return f"du{index}"


def cu_id(index: int) -> str:
    return f"cu{index}"


def build_default_schema(
    n_du: int, n_cu: int, platform_metrics_per_container: int, infra_metrics: int
) -> Schema:
    """
    RAN columns for every DU, then platform columns for every DU and CU
    container, then host columns

    :return: Schema with ``9*n_du + (n_du+n_cu)*platform + infra`` columns
    """
    for name, count in (
        ("n_du", n_du),
        ("n_cu", n_cu),
        ("platform_metrics_per_container", platform_metrics_per_container),
        ("infra_metrics", infra_metrics),
    ):
        if count < 1:
            raise ValueError(f"{name}={count} must be >= 1")

    metrics: List[MetricDescriptor] = []
    for i in range(n_du):
        for name, unit in RAN_METRICS:
            metrics.append(
                MetricDescriptor(
                    f"{du_id(i)}.{name}",
                    TelemetryLevel.RAN,
                    NodeKind.DU,
                    unit,
                    RAN_CADENCE_MS,
                )
            )

    platform_names = _metric_names(
        PLATFORM_METRICS, platform_metrics_per_container, "cadvisor_extra"
    )
    containers = [(du_id(i), NodeKind.DU) for i in range(n_du)] + [
        (cu_id(i), NodeKind.CU) for i in range(n_cu)
    ]
    for container, node_kind in containers:
        for name, unit in platform_names:
            metrics.append(
                MetricDescriptor(
                    f"{container}.{name}",
                    TelemetryLevel.PLATFORM,
                    node_kind,
                    unit,
                    SCRAPE_CADENCE_MS,
                )
            )

    for name, unit in _metric_names(HOST_METRICS, infra_metrics, "node_extra"):
        metrics.append(
            MetricDescriptor(
                f"{HOST_ID}.{name}",
                TelemetryLevel.INFRASTRUCTURE,
                NodeKind.HOST,
                unit,
                SCRAPE_CADENCE_MS,
            )
        )
    try:
        return Schema(tuple(metrics))
    except ValueError as e:
        raise DatasetIOException(path, str(e))


SCHEMA_PRESETS = {
    "default": (24, 40),
    "testbed": (41, 39),
}


def schema_from_preset(
    preset: str,
    topology_size: int,
    platform_metrics_per_container: int = 24,
    infra_metrics: int = 40,
) -> Schema:
    """
    :param preset: ``default`` (268 columns for 4 pairs), ``testbed`` (403 columns
        for 4 pairs) or ``custom`` (use the given counts)
    """
    if preset == "custom":
        platform, infra = platform_metrics_per_container, infra_metrics
    elif preset in SCHEMA_PRESETS:
        platform, infra = SCHEMA_PRESETS[preset]
    else:
        raise ValueError(f"Unknown schema preset {preset}")
    return build_default_schema(topology_size, topology_size, platform, infra)


def write_schema(schema: Schema, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for metric in schema.metrics:
                f.write(metric.to_line() + "\n")
    except OSError as e:
        raise DatasetIOException(path, str(e))


def read_schema(path: str) -> Schema:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().splitlines() if line.strip()]
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetIOException(path, str(e))

    metrics = []
    for number, line in enumerate(lines, start=1):
        try:
            metrics.append(MetricDescriptor.from_line(line))
        except ValueError as e:
            raise DatasetIOException(path, f"line {number} is not valid: {e}")
    try:
        return Schema(tuple(metrics))
    except ValueError as e:
        raise DatasetIOException(path, str(e))
