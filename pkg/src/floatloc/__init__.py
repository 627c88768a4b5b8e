"""Acoustic time-of-flight localization of drifting underwater floats."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .geo import GeodeticPoint, NedPoint, ReferenceOrigin, geodetic_to_ned, ned_to_geodetic
from .ingest import DeploymentLogs, load_logs
from .pipeline import Mode, RunConfig, evaluate_slb_mode, localize_float, localize_tdoa, run
from .ranging import RangingConfig
from .simulator import ScenarioConfig, evaluate, simulate
from .solver import SolverConfig
from .uncertainty import CrlbConfig

__version__ = "0.1.0"

__all__ = [
    "CrlbConfig", "DeploymentLogs", "GeodeticPoint", "KERNEL_BACKEND", "Mode", "NedPoint",
    "RangingConfig", "ReferenceOrigin", "RunConfig", "ScenarioConfig", "SolverConfig",
    "evaluate", "evaluate_slb_mode", "geodetic_to_ned", "load_logs", "localize_float",
    "localize_tdoa", "ned_to_geodetic", "run", "simulate",
]
