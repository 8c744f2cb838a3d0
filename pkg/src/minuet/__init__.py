"""Deterministic simulator of cooperative event monitoring in vehicular networks."""

from .clustering import ClusteringConfig, DcaLike, PcttLike, make_strategy
from .metrics import MetricSeries, MetricSummary, series, summarize
from .mobility import Scenario, VehicleTrace, load_traces
from .model import BaseStation, EventKind, EventSpec, Packet, PacketKind, Position, Role
from .protocol import ProtocolConfig, Simulation
from .radio import RadioConfig
from .scenario import ScenarioConfig, ScenarioError, builtin, resolve, validate
from .simlog import SimLog

__version__ = "0.1.0"

__all__ = [
    "BaseStation", "ClusteringConfig", "DcaLike", "EventKind", "EventSpec", "MetricSeries",
    "MetricSummary", "Packet", "PacketKind", "PcttLike", "Position", "ProtocolConfig", "RadioConfig",
    "Role", "Scenario", "ScenarioConfig", "ScenarioError", "SimLog", "Simulation", "VehicleTrace",
    "builtin", "load_traces", "make_strategy", "resolve", "series", "summarize", "validate",
    "__version__",
]
