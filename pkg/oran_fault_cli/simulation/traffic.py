import dataclasses
from typing import Tuple

import numpy as np

# Smooth diurnal curve, low 02:00-06:00 and peak 18:00-22:00. An approximation
# of measured ping traffic, not measured data
DEFAULT_HOURLY_LOAD: Tuple[float, ...] = (
    0.42, 0.33, 0.25, 0.21, 0.20, 0.22, 0.30, 0.44,
    0.58, 0.68, 0.74, 0.77, 0.79, 0.77, 0.75, 0.77,
    0.82, 0.90, 0.97, 1.00, 1.00, 0.96, 0.79, 0.58,
)  # fmt: skip

# Half width of the packet size multiplier at noise_scale 1
PACKET_SIZE_SPREAD = 0.2


@dataclasses.dataclass(frozen=True)
class TrafficProfile:
    ping_interval_ms: int = 100
    packet_size_resample_s: int = 5
    hourly_load: Tuple[float, ...] = DEFAULT_HOURLY_LOAD
    start_hour: float = 0.0

    def __post_init__(self):
        if len(self.hourly_load) != 24:
            raise ValueError(
                f"hourly_load needs 24 entries, got {len(self.hourly_load)}"
            )
        if min(self.hourly_load) < 0 or max(self.hourly_load) <= 0:
            raise ValueError("hourly_load must be non-negative and not all zero")
        if self.ping_interval_ms <= 0 or self.packet_size_resample_s <= 0:
            raise ValueError("Ping interval and packet size period must be positive")
        peak = max(self.hourly_load)
        object.__setattr__(
            self, "hourly_load", tuple(float(v) / peak for v in self.hourly_load)
        )

    @classmethod
    def constant(cls, level: float = 1.0) -> "TrafficProfile":
        return cls(hourly_load=(level,) * 24)

    def load_at(self, t_s: np.ndarray) -> np.ndarray:
        """
        Relative load in [0, 1], linearly interpolated between hour marks and
        wrapping around midnight
        """
        hours = (self.start_hour + np.asarray(t_s, dtype=np.float64) / 3600.0) % 24.0
        marks = np.arange(25, dtype=np.float64)
        return np.interp(hours, marks, self.hourly_load + self.hourly_load[:1])

    def packet_size_multipliers(
        self, rng: np.random.Generator, duration_s: int, noise_scale: float
    ) -> np.ndarray:
        """
        :return: one multiplier per resample block covering ``duration_s``
        """
        n_blocks = -(-duration_s // self.packet_size_resample_s)
        u = rng.random(n_blocks)
        return 1.0 + noise_scale * PACKET_SIZE_SPREAD * (2.0 * u - 1.0)
