import bisect
import dataclasses
import logging
import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import (
    DatasetIOException,
    InvalidRampException,
    ScheduleMismatchException,
    StressOutOfEpisodeException,
)
from ..telemetry.enums import N_CLASSES, FaultLabel

logger = logging.getLogger(__name__)

MIN_DURATION_MIN = 30.0
MAX_DURATION_MIN = 90.0
DEFAULT_LAMBDA_PER_MIN = 1.0 / 45.0

# Upper bounds of the half-open cumulative intervals, in label code order
FAULT_TYPE_PROBABILITIES = (0.3, 0.5, 0.1, 0.1)
FAULT_TYPE_CUMULATIVE = (0.3, 0.8, 0.9, 1.0)
STRESS_PROBABILITY = 0.4

# (start low, start high, end high)
STRESS_RANGES: Dict[FaultLabel, Tuple[float, float, float]] = {
    FaultLabel.CPU_STRESS: (0.4, 0.9, 1.0),
    FaultLabel.MEMORY_STRESS: (0.25, 0.35, 0.6),
    FaultLabel.PACKET_LOSS: (0.01, 0.03, 0.05),
}


@dataclasses.dataclass(frozen=True)
class StressRamp:
    start_level: float
    end_level: float

    def __post_init__(self):
        if not 0.0 <= self.start_level <= 1.0 or not 0.0 <= self.end_level <= 1.0:
            raise InvalidRampException(
                f"Stress levels ({self.start_level}, {self.end_level}) "
                "must be in [0, 1]"
            )
        if self.end_level < self.start_level:
            raise InvalidRampException(
                f"End stress {self.end_level} is lower than start stress "
                f"{self.start_level}"
            )


@dataclasses.dataclass(frozen=True)
class FaultEpisode:
    fault_type: FaultLabel
    start_s: int
    duration_s: int
    assignments: Mapping[str, StressRamp] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.duration_s < 1 or self.start_s < 0:
            raise InvalidRampException(
                f"Episode [{self.start_s}, +{self.duration_s}) is not a valid interval"
            )
        if self.fault_type == FaultLabel.NORMAL and self.assignments:
            raise InvalidRampException("Normal episodes cannot stress containers")

    @property
    def end_s(self) -> int:
        return self.start_s + self.duration_s

    @property
    def label(self) -> FaultLabel:
        """
        Ground truth: an episode with no stressed container looks normal
        """
        return self.fault_type if self.assignments else FaultLabel.NORMAL

    def stress_at(self, container: str, t_s: int) -> float:
        return stress_at(self, container, t_s)

    def stress_profile(self, container: str) -> np.ndarray:
        """
        :return: stress level of `container` for every second of the episode
        """
        ramp = self.assignments.get(container)
        if ramp is None:
            return np.zeros(self.duration_s)
        elapsed = np.arange(self.duration_s, dtype=np.float64)
        return ramp.start_level + (ramp.end_level - ramp.start_level) * (
            elapsed / self.duration_s
        )


@dataclasses.dataclass(frozen=True)
class InjectionSchedule:
    episodes: Tuple[FaultEpisode, ...]

    def __post_init__(self):
        expected_start = 0
        for index, episode in enumerate(self.episodes):
            if episode.start_s != expected_start:
                raise ScheduleMismatchException(
                    f"Episode {index} starts at {episode.start_s}s, "
                    f"expected {expected_start}s (episodes must be contiguous)"
                )
            expected_start = episode.end_s

    @property
    def total_duration_s(self) -> int:
        return self.episodes[-1].end_s if self.episodes else 0

    def episode_at(self, t_s: int) -> FaultEpisode:
        if not 0 <= t_s < self.total_duration_s:
            raise ScheduleMismatchException(
                f"{t_s}s is outside the schedule [0, {self.total_duration_s})"
            )
        starts = [episode.start_s for episode in self.episodes]
        return self.episodes[bisect.bisect_right(starts, t_s) - 1]

    def label_at(self, t_s: int) -> FaultLabel:
        return self.episode_at(t_s).label

    def labels(self) -> np.ndarray:
        """
        :return: ground truth label code for every second of the schedule
        """
        labels = np.zeros(self.total_duration_s, dtype=np.int64)
        for episode in self.episodes:
            labels[episode.start_s : episode.end_s] = int(episode.label)
        return labels

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.labels(), minlength=N_CLASSES)

    def stress_matrix(
        self, containers: Sequence[str], fault_type: FaultLabel
    ) -> np.ndarray:
        """
        :return: ``len(containers) x total_duration_s`` stress levels of the given
            fault type, 0 where that fault is not injected
        """
        stress = np.zeros((len(containers), self.total_duration_s))
        for episode in self.episodes:
            if episode.fault_type != fault_type:
                continue
            for row, container in enumerate(containers):
                if container in episode.assignments:
                    stress[row, episode.start_s : episode.end_s] = (
                        episode.stress_profile(container)
                    )
        return stress


def truncated_mean_minutes(lambda_per_min: float) -> float:
    """
    Closed form E[T | 30 <= T <= 90] for the shifted truncated exponential used
    by `sample_duration`
    """
    width = MAX_DURATION_MIN - MIN_DURATION_MIN
    tail = math.exp(-lambda_per_min * width)
    return MIN_DURATION_MIN + 1.0 / lambda_per_min - width * tail / (1.0 - tail)


def duration_from_uniform(u: float, lambda_per_min: float) -> int:
    """
    Inverse CDF of the exponential conditioned on ``[0, 60]`` minutes, shifted
    by 30 minutes

    :return: duration in whole seconds in [1800, 5400]
    """
    width = MAX_DURATION_MIN - MIN_DURATION_MIN
    minutes = (
        -math.log1p(-u * (1.0 - math.exp(-lambda_per_min * width))) / lambda_per_min
        + MIN_DURATION_MIN
    )
    seconds = int(math.floor(minutes * 60.0))
    return min(max(seconds, int(MIN_DURATION_MIN * 60)), int(MAX_DURATION_MIN * 60))


def sample_duration(rng: np.random.Generator, lambda_per_min: float) -> int:
    if lambda_per_min <= 0:
        raise ValueError(f"lambda_per_min={lambda_per_min} must be > 0")
    return duration_from_uniform(float(rng.random()), lambda_per_min)


def fault_type_from_uniform(u: float) -> FaultLabel:
    return FaultLabel(min(bisect.bisect_right(FAULT_TYPE_CUMULATIVE, u), 3))


def sample_fault_type(rng: np.random.Generator) -> FaultLabel:
    return fault_type_from_uniform(float(rng.random()))


def ramp_from_uniforms(
    fault_type: FaultLabel, u_start: float, u_end: float
) -> StressRamp:
    start_low, start_high, end_high = STRESS_RANGES[fault_type]
    start = start_low + (start_high - start_low) * u_start
    end = start + (end_high - start) * u_end
    return StressRamp(start, end)


def sample_assignments(
    rng: np.random.Generator, containers: Sequence[str], fault_type: FaultLabel
) -> Dict[str, StressRamp]:
    """
    Normal episodes consume no randomness. Otherwise every container, in the
    given order, gets one Bernoulli draw and, if stressed, two more for its ramp
    """
    assignments: Dict[str, StressRamp] = {}
    if fault_type == FaultLabel.NORMAL:
        return assignments
    for container in containers:
        if rng.random() < STRESS_PROBABILITY:
            u_start = float(rng.random())
            u_end = float(rng.random())
            assignments[container] = ramp_from_uniforms(fault_type, u_start, u_end)
    return assignments


def build_schedule(
    rng: np.random.Generator,
    containers: Sequence[str],
    total_duration_s: int,
    lambda_per_min: float = DEFAULT_LAMBDA_PER_MIN,
) -> InjectionSchedule:
    if total_duration_s <= 0:
        raise ValueError(f"total_duration_s={total_duration_s} must be > 0")
    episodes: List[FaultEpisode] = []
    start_s = 0
    while start_s < total_duration_s:
        duration_s = sample_duration(rng, lambda_per_min)
        fault_type = sample_fault_type(rng)
        assignments = sample_assignments(rng, containers, fault_type)
        duration_s = min(duration_s, total_duration_s - start_s)
        episodes.append(FaultEpisode(fault_type, start_s, duration_s, assignments))
        start_s += duration_s

    schedule = InjectionSchedule(tuple(episodes))
    logger.info(
        "Built schedule with %d episodes over %ds, label histogram %s",
        len(episodes),
        total_duration_s,
        schedule.label_histogram().tolist(),
    )
    return schedule


def stress_at(episode: FaultEpisode, container: str, t_s: int) -> float:
    if not episode.start_s <= t_s < episode.end_s:
        raise StressOutOfEpisodeException(
            f"{t_s}s is outside the episode [{episode.start_s}, {episode.end_s})"
        )
    ramp: Optional[StressRamp] = episode.assignments.get(container)
    if ramp is None:
        return 0.0
    return ramp.start_level + (ramp.end_level - ramp.start_level) * (
        (t_s - episode.start_s) / episode.duration_s
    )


SCHEDULE_COLUMNS = [
    "episode_idx",
    "fault_type",
    "start_s",
    "duration_s",
    "container_id",
    "start_level",
    "end_level",
]


def write_schedule_csv(schedule: InjectionSchedule, path: str) -> None:
    rows = []
    for index, episode in enumerate(schedule.episodes):
        head = [index, int(episode.fault_type), episode.start_s, episode.duration_s]
        if not episode.assignments:
            rows.append(head + ["", "", ""])
        for container, ramp in episode.assignments.items():
            rows.append(
                head + [container, repr(ramp.start_level), repr(ramp.end_level)]
            )
    try:
        pd.DataFrame(rows, columns=SCHEDULE_COLUMNS).to_csv(
            path, index=False, lineterminator="\n", encoding="utf-8"
        )
    except OSError as e:
        raise DatasetIOException(path, str(e))


def read_schedule_csv(path: str) -> InjectionSchedule:
    try:
        data_frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8"
        )
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DatasetIOException(path, str(e))
    if list(data_frame.columns) != SCHEDULE_COLUMNS:
        raise DatasetIOException(path, f"header must be {','.join(SCHEDULE_COLUMNS)}")

    episodes: List[FaultEpisode] = []
    current: Optional[list] = None
    try:
        for row in data_frame.itertuples(index=False):
            index = int(row.episode_idx)
            if current is None or current[0] != index:
                if current is not None:
                    episodes.append(FaultEpisode(*current[1:]))
                current = [
                    index,
                    FaultLabel(int(row.fault_type)),
                    int(row.start_s),
                    int(row.duration_s),
                    {},
                ]
            if row.container_id:
                current[4][row.container_id] = StressRamp(
                    float(row.start_level), float(row.end_level)
                )
    except ValueError as e:
        raise DatasetIOException(path, f"invalid schedule row: {e}")
    if current is not None:
        episodes.append(FaultEpisode(*current[1:]))
    return InjectionSchedule(tuple(episodes))
