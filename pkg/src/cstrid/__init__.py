"""On-line estimation of the CSTR parameters: LS+DREM for th1..th4, I&I for th5."""

from .config import ScenarioConfig, load_config
from .plant import REFERENCE_PARAMS, PhysicalParams, Theta, theta_from_physical
from .sim import RunRecord, run_scenario, sweep, write_csv, read_csv

__all__ = [
    "ScenarioConfig",
    "load_config",
    "REFERENCE_PARAMS",
    "PhysicalParams",
    "Theta",
    "theta_from_physical",
    "RunRecord",
    "run_scenario",
    "sweep",
    "write_csv",
    "read_csv",
]
