import dataclasses

from ..telemetry.schema import Schema
from .topology import Topology


@dataclasses.dataclass(frozen=True)
class FaultEffects:
    """
    Coefficients of the fault effect models. Packet loss always scales the
    delivered bitrates by 1 - s(t), `loss_jitter` spreads them around that mean
    and `loss_gain` only scales the secondary symptoms (drop and retransmission
    counters, CQI, SINR and MCS)
    """

    cpu_gain: float = 1.0
    memory_gain: float = 1.0
    loss_gain: float = 8.0
    loss_jitter: float = 0.5
    throttle_threshold: float = 0.85
    pressure_threshold: float = 0.85
    throttle_penalty: float = 0.5
    pressure_penalty: float = 0.5
    temperature_gain: float = 25.0

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if value < 0:
                raise ValueError(f"{field.name}={value} must be >= 0")
        for name in ("throttle_threshold", "pressure_threshold"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")


@dataclasses.dataclass(frozen=True)
class SimConfig:
    seed: int
    duration_s: int
    topology: Topology
    schema: Schema
    noise_scale: float = 1.0
    effects: FaultEffects = dataclasses.field(default_factory=FaultEffects)

    def __post_init__(self):
        if self.duration_s < 1:
            raise ValueError(f"duration_s={self.duration_s} must be >= 1")
        if self.noise_scale < 0:
            raise ValueError(f"noise_scale={self.noise_scale} must be >= 0")
        if (
            self.schema.du_ids != self.topology.du_ids
            or self.schema.cu_ids != self.topology.cu_ids
        ):
            raise ValueError(
                f"Schema nodes {self.schema.du_ids + self.schema.cu_ids} do not "
                f"match the topology of size {self.topology.size}"
            )
