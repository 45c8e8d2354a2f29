import logging
import math
from typing import Dict, List, Tuple

import numpy as np
from scipy.signal import lfilter

from ..exceptions import ScheduleMismatchException
from ..injection.fault_injector import InjectionSchedule
from ..telemetry.enums import FaultLabel, NodeKind, TelemetryLevel
from ..telemetry.frames import TelemetryStream
from ..telemetry.schema import RAN_CADENCE_MS, SCRAPE_CADENCE_MS, MetricDescriptor
from ..utils import derive_rng
from .sim_config import SimConfig
from .traffic import TrafficProfile

logger = logging.getLogger(__name__)

RAN_SAMPLES_PER_S = SCRAPE_CADENCE_MS // RAN_CADENCE_MS

# (cores, memory GB) limits of the containers
CONTAINER_CAPS = {NodeKind.CU: (3.0, 2.0), NodeKind.DU: (3.0, 3.0)}
# (idle, slope) of container CPU usage against served load
CONTAINER_CPU = {NodeKind.CU: (0.08, 0.25), NodeKind.DU: (0.15, 0.45)}
CONTAINER_MEMORY = {NodeKind.CU: 0.30, NodeKind.DU: 0.35}
HOST_CORES = 32.0
HOST_MEMORY_GB = 64.0
HOST_BASE_MEMORY_GB = 8.0

DL_PEAK_MBPS = 40.0
DL_CAPACITY_MBPS = 50.0
UL_FLOOR_MBPS = 5.0
UL_PEAK_MBPS = 10.0
BYTES_PER_MBIT = 125000.0
PACKET_BYTES = 1200.0

RAN_PHI = 0.95
SCRAPE_PHI = 0.8
TEMPERATURE_ALPHA = 1.0 / 60.0

BITRATE_METRICS = ("cur_total_dl_bitrate", "dl_bitrate", "ul_bitrate")
MCS_METRICS = ("dl_mcs", "ul_mcs")


def mean_reverting_noise(rng: np.random.Generator, n: int, phi: float) -> np.ndarray:
    """
    Stationary unit variance AR(1) series
    """
    eps = rng.standard_normal(n)
    if n < 2:
        return eps
    tail, _ = lfilter(
        [math.sqrt(1.0 - phi * phi)], [1.0, -phi], eps[1:], zi=[phi * eps[0]]
    )
    return np.concatenate((eps[:1], tail))


def low_pass(values: np.ndarray, alpha: float) -> np.ndarray:
    """
    First order exponential smoothing started at the first value
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] == 0:
        return values
    smoothed, _ = lfilter(
        [alpha], [1.0, alpha - 1.0], values, zi=[(1.0 - alpha) * values[0]]
    )
    return smoothed


class _Baseline:
    """
    Operating points of every column before noise. Per pair loads are kept at
    100 ms and 1 s resolution
    """

    def __init__(
        self,
        config: SimConfig,
        profile: TrafficProfile,
        rng: np.random.Generator,
    ):
        self.config = config
        self.duration_s = config.duration_s
        n_ran = self.duration_s * RAN_SAMPLES_PER_S
        t_ran = np.arange(n_ran, dtype=np.float64) * (RAN_CADENCE_MS / 1000.0)
        diurnal = profile.load_at(t_ran)
        block = (t_ran // profile.packet_size_resample_s).astype(np.int64)

        self.ran_load: List[np.ndarray] = []
        self.load: List[np.ndarray] = []
        for _ in range(config.topology.size):
            multipliers = profile.packet_size_multipliers(
                rng, self.duration_s, config.noise_scale
            )
            ran_load = diurnal * multipliers[block]
            self.ran_load.append(ran_load)
            self.load.append(ran_load.reshape(-1, RAN_SAMPLES_PER_S).mean(axis=1))

        self.containers: List[Tuple[str, NodeKind, int]] = []
        for index, (cu, du, _) in enumerate(config.topology.pairs):
            self.containers.append((du, NodeKind.DU, index))
        for index, (cu, du, _) in enumerate(config.topology.pairs):
            self.containers.append((cu, NodeKind.CU, index))

    def container_cpu(self, node_kind: NodeKind, pair: int) -> np.ndarray:
        idle, slope = CONTAINER_CPU[node_kind]
        return idle + slope * self.load[pair]

    def container_memory(self, node_kind: NodeKind, pair: int) -> np.ndarray:
        return CONTAINER_MEMORY[node_kind] + 0.05 * self.load[pair]

    def host_cpu(self) -> np.ndarray:
        used_cores = np.zeros(self.duration_s)
        for _, node_kind, pair in self.containers:
            used_cores += self.container_cpu(node_kind, pair) * (
                CONTAINER_CAPS[node_kind][0]
            )
        return 0.05 + used_cores / HOST_CORES

    def host_memory(self) -> np.ndarray:
        used = np.full(self.duration_s, HOST_BASE_MEMORY_GB)
        for _, node_kind, pair in self.containers:
            used += self.container_memory(node_kind, pair) * (
                CONTAINER_CAPS[node_kind][1]
            )
        return used

    def container_net(self, pair: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        :return: received and transmitted bytes per second of a pair container
        """
        rx = (UL_FLOOR_MBPS + UL_PEAK_MBPS * self.load[pair]) * BYTES_PER_MBIT
        tx = DL_PEAK_MBPS * self.load[pair] * BYTES_PER_MBIT
        return rx, tx

    def host_net(self) -> Tuple[np.ndarray, np.ndarray]:
        rx = np.zeros(self.duration_s)
        tx = np.zeros(self.duration_s)
        for _, _, pair in self.containers:
            container_rx, container_tx = self.container_net(pair)
            rx += container_rx
            tx += container_tx
        return rx, tx

    def ran_target(self, metric: str, pair: int) -> Tuple[np.ndarray, float]:
        load = self.ran_load[pair]
        ones = np.ones_like(load)
        targets: Dict[str, Tuple[np.ndarray, float]] = {
            "n_active_ues": (ones, 0.0),
            "cur_total_dl_bitrate": (DL_PEAK_MBPS * load, 0.05),
            "max_total_dl_bitrate": (DL_CAPACITY_MBPS * ones, 0.01),
            "dl_bitrate": (DL_PEAK_MBPS * load, 0.08),
            "ul_bitrate": (UL_FLOOR_MBPS + UL_PEAK_MBPS * load, 0.08),
            "ul_mcs": (20.0 * ones, 0.05),
            "dl_mcs": (24.0 * ones, 0.05),
            "ul_sinr": (25.0 * ones, 0.04),
            "cqi": (12.0 * ones, 0.05),
        }
        return targets.get(metric, (ones, 0.05))

    def platform_target(
        self, metric: str, node_kind: NodeKind, pair: int
    ) -> Tuple[np.ndarray, float]:
        cores, memory_gb = CONTAINER_CAPS[node_kind]
        ones = np.ones(self.duration_s)
        zeros = np.zeros(self.duration_s)
        cpu = self.container_cpu(node_kind, pair)
        memory = self.container_memory(node_kind, pair)
        rx, tx = self.container_net(pair)
        writes = 20.0 * (1.0 + self.load[pair])
        targets: Dict[str, Tuple[np.ndarray, float]] = {
            "cpu_usage": (cpu, 0.05),
            "cpu_user": (0.75 * cpu, 0.05),
            "cpu_system": (0.25 * cpu, 0.05),
            "cpu_throttled_periods": (zeros, 0.0),
            "cpu_load_avg": (cores * cpu, 0.05),
            "mem_usage": (memory, 0.02),
            "mem_working_set": (memory_gb * memory, 0.02),
            "mem_rss": (0.8 * memory_gb * memory, 0.02),
            "mem_cache": (0.1 * memory_gb * ones, 0.02),
            "mem_swap": (zeros, 0.0),
            "mem_failcnt": (zeros, 0.0),
            "net_rx_bytes": (rx, 0.05),
            "net_tx_bytes": (tx, 0.05),
            "net_rx_packets": (rx / PACKET_BYTES, 0.05),
            "net_tx_packets": (tx / PACKET_BYTES, 0.05),
            "fs_usage": (1.5 * ones, 0.001),
            "fs_reads": (5.0 * ones, 0.1),
            "fs_writes": (writes, 0.1),
            "fs_read_bytes": (4096.0 * 5.0 * ones, 0.1),
            "fs_write_bytes": (4096.0 * writes, 0.1),
        }
        if metric in (
            "net_rx_errors",
            "net_tx_errors",
            "net_rx_dropped",
            "net_tx_dropped",
        ):
            return zeros, 0.0
        return targets.get(metric, (ones, 0.05))

    def host_target(self, metric: str) -> Tuple[np.ndarray, float]:
        ones = np.ones(self.duration_s)
        zeros = np.zeros(self.duration_s)
        cpu = self.host_cpu()
        smoothed_cpu = low_pass(cpu, TEMPERATURE_ALPHA)
        load1 = cpu * HOST_CORES
        memory = self.host_memory()
        rx, tx = self.host_net()
        targets: Dict[str, Tuple[np.ndarray, float]] = {
            "cpu_usage": (cpu, 0.03),
            "cpu_user": (0.7 * cpu, 0.03),
            "cpu_system": (0.25 * cpu, 0.03),
            "cpu_iowait": (0.01 * ones, 0.1),
            "cpu_freq": (2.4 * ones, 0.005),
            "load1": (load1, 0.05),
            "load5": (low_pass(load1, 1.0 / 300.0), 0.02),
            "load15": (low_pass(load1, 1.0 / 900.0), 0.01),
            "mem_used": (memory, 0.01),
            "mem_available": (HOST_MEMORY_GB - memory, 0.01),
            "mem_cached": (12.0 * ones, 0.01),
            "mem_buffers": (2.0 * ones, 0.01),
            "disk_read_bytes": (2.0e6 * ones, 0.1),
            "disk_write_bytes": (8.0e6 * (0.5 + cpu), 0.1),
            "disk_reads": (50.0 * ones, 0.1),
            "disk_writes": (200.0 * ones, 0.1),
            "disk_io_time": (0.05 * ones, 0.1),
            "fs_used": (120.0 * ones, 0.001),
            "fs_avail": (380.0 * ones, 0.001),
            "fs_files": (1.2e6 * ones, 0.001),
            "net_rx_bytes": (rx, 0.04),
            "net_tx_bytes": (tx, 0.04),
            "net_rx_packets": (rx / PACKET_BYTES, 0.04),
            "net_tx_packets": (tx / PACKET_BYTES, 0.04),
            "temperature": (38.0 + 30.0 * smoothed_cpu, 0.01),
            "power": (90.0 + 160.0 * cpu, 0.02),
            "context_switches": (15000.0 + 60000.0 * cpu, 0.05),
            "interrupts": (8000.0 + 30000.0 * cpu, 0.05),
            "procs_running": (2.0 + 0.5 * load1, 0.1),
            "tcp_retrans": (0.5 * ones, 0.2),
            "fan_rpm": (1800.0 + 2400.0 * smoothed_cpu, 0.01),
            "entropy_avail": (3800.0 * ones, 0.01),
        }
        if metric in (
            "swap_used",
            "net_rx_errs",
            "net_tx_errs",
            "net_rx_drop",
            "net_tx_drop",
            "procs_blocked",
            "tcp_timeouts",
            "udp_errors",
        ):
            return zeros, 0.0
        return targets.get(metric, (ones, 0.05))

    def target(self, metric: MetricDescriptor) -> Tuple[np.ndarray, float, float]:
        """
        :return: operating point, relative noise level and AR coefficient
        """
        if metric.level == TelemetryLevel.RAN:
            pair = self.config.topology.du_ids.index(metric.node_id)
            values, sigma = self.ran_target(metric.metric, pair)
            return values, sigma, RAN_PHI
        if metric.level == TelemetryLevel.PLATFORM:
            pair = self.config.topology.pair_index(metric.node_id)
            values, sigma = self.platform_target(
                metric.metric, metric.node_kind, pair
            )
            return values, sigma, SCRAPE_PHI
        values, sigma = self.host_target(metric.metric)
        return values, sigma, SCRAPE_PHI


def _clip(metric: MetricDescriptor, values: np.ndarray) -> np.ndarray:
    values = np.maximum(values, 0.0)
    if metric.unit == "fraction":
        values = np.minimum(values, 1.0)
    return values


def generate_baseline(
    config: SimConfig, profile: TrafficProfile, rng: np.random.Generator
) -> TelemetryStream:
    """
    Fault free telemetry at native cadences. Every column is its operating
    point times ``1 + noise_scale * sigma * x`` where ``x`` is a unit AR(1)
    process, so values revert to the load driven operating point
    """
    baseline = _Baseline(config, profile, rng)
    values: Dict[str, np.ndarray] = {}
    for metric in config.schema.metrics:
        target, sigma, phi = baseline.target(metric)
        noise = mean_reverting_noise(rng, target.shape[0], phi)
        values[metric.id] = _clip(
            metric, target * (1.0 + config.noise_scale * sigma * noise)
        )

    logger.debug(
        "Generated baseline of %d columns over %ds", len(values), config.duration_s
    )
    return TelemetryStream.from_values(config.schema, config.duration_s, values)


class _FaultEditor:
    """
    Copy on write view of a stream. Edits only land on seconds where a fault
    is active, other seconds keep the baseline bits
    """

    def __init__(self, stream: TelemetryStream, active: np.ndarray):
        self.stream = stream
        self.schema = stream.schema
        self.active = active
        self.active_ran = np.repeat(active, RAN_SAMPLES_PER_S)
        self._edited: Dict[str, np.ndarray] = {}

    def has(self, node_id: str, metric: str) -> bool:
        return self.schema.has_column(node_id, metric)

    def current(self, node_id: str, metric: str) -> np.ndarray:
        column_id = f"{node_id}.{metric}"
        if column_id not in self._edited:
            self._edited[column_id] = self.stream.values(column_id).copy()
        return self._edited[column_id]

    def add(self, node_id: str, metric: str, delta: np.ndarray) -> None:
        if self.has(node_id, metric):
            self.current(node_id, metric)[:] += delta

    def scale(self, node_id: str, metric: str, factor: np.ndarray) -> None:
        if self.has(node_id, metric):
            self.current(node_id, metric)[:] *= factor

    def result(self) -> TelemetryStream:
        updates = {}
        for column_id, edited in self._edited.items():
            metric = self.schema.descriptor(column_id)
            if metric.level == TelemetryLevel.RAN:
                mask = self.active_ran
            else:
                mask = self.active
            updates[column_id] = np.where(
                mask, _clip(metric, edited), self.stream.values(column_id)
            )
        return self.stream.replace(updates)


def _ramp_to_ran(per_second: np.ndarray) -> np.ndarray:
    return np.repeat(per_second, RAN_SAMPLES_PER_S)


def _degrade_pair_ran(
    editor: _FaultEditor, du: str, severity: np.ndarray, penalty: float
) -> None:
    severity_ran = _ramp_to_ran(severity)
    for metric in BITRATE_METRICS:
        editor.scale(du, metric, 1.0 - penalty * severity_ran)
    for metric in MCS_METRICS:
        editor.scale(du, metric, 1.0 - 0.5 * penalty * severity_ran)
    editor.scale(du, "cqi", 1.0 - 0.3 * penalty * severity_ran)


def apply_faults(
    baseline: TelemetryStream, schedule: InjectionSchedule, config: SimConfig
) -> TelemetryStream:
    """
    Perturb the baseline with the effects of every active stress assignment.
    Seconds whose label is Normal are returned unchanged

    :raises: ScheduleMismatchException if durations differ
    """
    if schedule.total_duration_s != baseline.duration_s:
        raise ScheduleMismatchException(
            f"Schedule covers {schedule.total_duration_s}s but the stream lasts "
            f"{baseline.duration_s}s"
        )
    if config.duration_s != baseline.duration_s:
        raise ScheduleMismatchException(
            f"Config duration {config.duration_s}s differs from the stream "
            f"duration {baseline.duration_s}s"
        )

    effects = config.effects
    topology = config.topology
    host = topology.host_id
    duration_s = baseline.duration_s
    containers = list(topology.du_ids) + list(topology.cu_ids)
    cpu_stress = schedule.stress_matrix(containers, FaultLabel.CPU_STRESS)
    memory_stress = schedule.stress_matrix(containers, FaultLabel.MEMORY_STRESS)
    loss_stress = schedule.stress_matrix(containers, FaultLabel.PACKET_LOSS)

    editor = _FaultEditor(baseline, schedule.labels() != FaultLabel.NORMAL)
    n_pairs = topology.size
    throttle = np.zeros((n_pairs, duration_s))
    pressure = np.zeros((n_pairs, duration_s))
    loss = np.zeros((n_pairs, duration_s))
    host_cpu_delta = np.zeros(duration_s)
    host_memory_delta = np.zeros(duration_s)
    host_pressure = np.zeros(duration_s)

    for row, container in enumerate(containers):
        pair = topology.pair_index(container)
        node_kind = NodeKind.DU if container in topology.du_ids else NodeKind.CU
        cores, memory_gb = CONTAINER_CAPS[node_kind]

        cpu = np.minimum(cpu_stress[row] * effects.cpu_gain, 1.0)
        if cpu.any():
            if editor.has(container, "cpu_usage"):
                base_cpu = baseline.values(f"{container}.cpu_usage")
            else:
                base_cpu = np.full(duration_s, CONTAINER_CPU[node_kind][0])
            delta = (1.0 - np.minimum(base_cpu, 1.0)) * cpu
            container_throttle = np.clip(
                (cpu - effects.throttle_threshold)
                / (1.0 - effects.throttle_threshold),
                0.0,
                1.0,
            )
            editor.add(container, "cpu_usage", delta)
            editor.add(container, "cpu_user", 0.8 * delta)
            editor.add(container, "cpu_system", 0.2 * delta)
            editor.add(container, "cpu_load_avg", cores * delta)
            editor.add(
                container,
                "cpu_throttled_periods",
                20.0 * cpu + 80.0 * container_throttle,
            )
            throttle[pair] = np.maximum(throttle[pair], container_throttle)
            host_cpu_delta += delta * cores / HOST_CORES

        memory = memory_stress[row] * effects.memory_gain
        if memory.any():
            if editor.has(container, "mem_usage"):
                base_memory = baseline.values(f"{container}.mem_usage")
            else:
                base_memory = np.full(duration_s, CONTAINER_MEMORY[node_kind])
            stressed = np.minimum(base_memory + memory, 1.0)
            delta = stressed - base_memory
            container_pressure = np.clip(
                (stressed - effects.pressure_threshold)
                / (1.0 - effects.pressure_threshold),
                0.0,
                1.0,
            )
            editor.add(container, "mem_usage", delta)
            editor.add(container, "mem_working_set", memory_gb * delta)
            editor.add(container, "mem_rss", 0.95 * memory_gb * delta)
            editor.scale(container, "mem_cache", 1.0 - 0.5 * np.minimum(memory, 1.0))
            editor.add(container, "mem_failcnt", 200.0 * container_pressure)
            editor.add(container, "mem_swap", 0.5 * memory_gb * container_pressure)
            editor.add(container, "cpu_system", 0.05 * np.minimum(memory, 1.0))
            pressure[pair] = np.maximum(pressure[pair], container_pressure)
            host_memory_delta += memory_gb * delta
            host_pressure = np.maximum(host_pressure, container_pressure)

        container_loss = loss_stress[row]
        if container_loss.any():
            drop = np.minimum(effects.loss_gain * container_loss, 1.0)
            for direction in ("rx", "tx"):
                if editor.has(container, f"net_{direction}_packets"):
                    packets = baseline.values(f"{container}.net_{direction}_packets")
                else:
                    packets = np.full(duration_s, 1000.0)
                editor.add(container, f"net_{direction}_dropped", packets * drop)
                editor.add(container, f"net_{direction}_errors", 0.2 * packets * drop)
                delivered = 1.0 - container_loss
                editor.scale(container, f"net_{direction}_bytes", delivered)
                editor.scale(container, f"net_{direction}_packets", delivered)
            loss[pair] = np.maximum(loss[pair], container_loss)

    fault_rng = derive_rng(config.seed, "sim.faults")
    jitter = fault_rng.standard_normal((n_pairs, duration_s * RAN_SAMPLES_PER_S))
    for pair, du in enumerate(topology.du_ids):
        if throttle[pair].any():
            _degrade_pair_ran(editor, du, throttle[pair], effects.throttle_penalty)
        if pressure[pair].any():
            _degrade_pair_ran(editor, du, pressure[pair], effects.pressure_penalty)
        if loss[pair].any():
            loss_ran = _ramp_to_ran(loss[pair])
            # zero mean jitter, the delivered share averages 1 - s(t)
            spread = 1.0 + effects.loss_jitter * loss_ran * jitter[pair]
            delivered = np.maximum((1.0 - loss_ran) * spread, 0.0)
            for metric in BITRATE_METRICS:
                editor.scale(du, metric, delivered)
            quality = np.clip(1.0 - 0.5 * effects.loss_gain * loss_ran, 0.0, 1.0)
            editor.scale(du, "cqi", quality)
            editor.scale(du, "ul_sinr", quality)
            link = np.clip(1.0 - 0.25 * effects.loss_gain * loss_ran, 0.0, 1.0)
            editor.scale(du, "dl_mcs", link)

    if host_cpu_delta.any():
        smoothed = low_pass(host_cpu_delta, TEMPERATURE_ALPHA)
        editor.add(host, "cpu_usage", host_cpu_delta)
        editor.add(host, "cpu_user", 0.8 * host_cpu_delta)
        editor.add(host, "load1", HOST_CORES * host_cpu_delta)
        editor.add(host, "load5", HOST_CORES * low_pass(host_cpu_delta, 1.0 / 300.0))
        editor.add(host, "load15", HOST_CORES * low_pass(host_cpu_delta, 1.0 / 900.0))
        editor.add(host, "context_switches", 60000.0 * host_cpu_delta)
        editor.add(host, "procs_running", 0.5 * HOST_CORES * host_cpu_delta)
        editor.add(host, "power", 160.0 * host_cpu_delta)
        editor.add(host, "temperature", effects.temperature_gain * smoothed)
        editor.add(host, "fan_rpm", 2400.0 * smoothed)
    if host_memory_delta.any():
        editor.add(host, "mem_used", host_memory_delta)
        editor.add(host, "mem_available", -host_memory_delta)
        editor.add(host, "swap_used", 2.0 * host_pressure)
        editor.add(host, "procs_blocked", 2.0 * host_pressure)
    total_loss = loss.sum(axis=0)
    if total_loss.any():
        editor.add(host, "tcp_retrans", 400.0 * effects.loss_gain * total_loss)
        editor.add(host, "tcp_timeouts", 40.0 * effects.loss_gain * total_loss)
        editor.add(host, "udp_errors", 100.0 * effects.loss_gain * total_loss)
        editor.add(host, "net_rx_drop", 1000.0 * effects.loss_gain * total_loss)
        editor.add(host, "net_tx_drop", 1000.0 * effects.loss_gain * total_loss)

    return editor.result()


def run_simulation(
    config: SimConfig, profile: TrafficProfile, schedule: InjectionSchedule
) -> Tuple[TelemetryStream, np.ndarray]:
    """
    :return: faulted stream and the ground truth label code of every second
    """
    baseline = generate_baseline(
        config, profile, derive_rng(config.seed, "sim.baseline")
    )
    stream = apply_faults(baseline, schedule, config)
    labels = schedule.labels()
    logger.info(
        "Simulated %ds of telemetry, %d frames, label histogram %s",
        config.duration_s,
        stream.n_frames,
        np.bincount(labels, minlength=4).tolist(),
    )
    return stream, labels
