# flake8: noqa F401
from .fault_injector import (
    FaultEpisode,
    InjectionSchedule,
    StressRamp,
    build_schedule,
    read_schedule_csv,
    sample_assignments,
    sample_duration,
    sample_fault_type,
    stress_at,
    write_schedule_csv,
)
