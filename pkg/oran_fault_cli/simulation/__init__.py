# flake8: noqa F401
from .sim_config import FaultEffects, SimConfig
from .simulator import apply_faults, generate_baseline, run_simulation
from .topology import Topology
from .traffic import TrafficProfile
